#include "mqn/verification.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "mqn/stats.hpp"

namespace mqn {

std::string to_string(Basis b) {
  switch (b) {
    case Basis::ZZ: return "ZZ";
    case Basis::XX: return "XX";
    case Basis::YY: return "YY";
  }
  return "?";
}

Basis basis_from_string(const std::string& s) {
  if (s == "ZZ" || s == "Z") return Basis::ZZ;
  if (s == "XX" || s == "X") return Basis::XX;
  if (s == "YY" || s == "Y") return Basis::YY;
  throw std::invalid_argument("unknown basis: " + s);
}

namespace {

void check_inputs(const FockDensityTwoMode& rho, double n) {
  if (!(n > 0.0 && n <= 0.2)) throw std::invalid_argument("EP mean photon number outside (0, 0.2]");
  const auto issues = validate_density(rho);
  if (!issues.empty()) throw std::invalid_argument("invalid read-out state: " + issues.front());
}

double ep_phase(double theta, Basis basis) { return basis == Basis::YY ? theta - kPi / 2.0 : theta; }

// click on a mode with coherent amplitude g, read-out photon amplitude u into
// that mode; the other detector sees amplitude g2 and must stay dark
NodePovm single_click(cplx g, cplx u, cplx g2, double overlap) {
  const double dark = std::exp(-std::norm(g2));
  NodePovm m;
  m.m00 = dark * (1.0 - std::exp(-std::norm(g)));
  m.m01 = dark * std::sqrt(overlap) * u * std::conj(g);
  m.m11 = dark * std::norm(u) * (1.0 + overlap * std::norm(g));
  return m;
}

}  // namespace

NodePovm node_povm(double n, double theta, Basis basis, int detector, double mode_overlap) {
  if (detector != 0 && detector != 1) throw std::invalid_argument("node_povm: detector must be 0 or 1");
  if (!(mode_overlap >= 0.0 && mode_overlap <= 1.0)) throw std::invalid_argument("node_povm: overlap outside [0,1]");
  const cplx alpha = std::polar(std::sqrt(n), ep_phase(theta, basis));
  if (basis == Basis::ZZ) {
    // H carries the read-out photon, V the EP
    if (detector == 0) return single_click(0.0, 1.0, alpha, mode_overlap);
    return single_click(alpha, 0.0, 0.0, mode_overlap);
  }
  const cplx g = alpha / std::sqrt(2.0);
  const double u = 1.0 / std::sqrt(2.0);
  if (detector == 0) return single_click(g, u, -g, mode_overlap);
  return single_click(-g, u, g, mode_overlap);
}

PatternProbs mix_and_measure(const FockDensityTwoMode& rho, double n, double theta_a, double theta_b, Basis basis,
                             double overlap_a, double overlap_b) {
  check_inputs(rho, n);
  PatternProbs out;
  const cplx coh = std::polar(rho.d, rho.phi);
  for (int a = 0; a < 2; ++a) {
    const NodePovm ma = node_povm(n, theta_a, basis, a, overlap_a);
    for (int b = 0; b < 2; ++b) {
      const NodePovm mb = node_povm(n, theta_b, basis, b, overlap_b);
      double p = rho.p00 * ma.m00 * mb.m00 + rho.p01 * ma.m00 * mb.m11 + rho.p10 * ma.m11 * mb.m00 +
                 rho.p11 * ma.m11 * mb.m11;
      p += 2.0 * std::real(coh * std::conj(ma.m01) * mb.m01);
      out.p[a][b] = p;
    }
  }
  return out;
}

TruncatedState ep_mixed_state(const FockDensityTwoMode& rho, double n, double theta_a, double theta_b, Basis basis,
                              int cutoff) {
  check_inputs(rho, n);
  TruncatedState s = embed_two_mode(rho, "A_H", "B_H", cutoff);
  s = tensor(s, coherent_state(std::sqrt(n), ep_phase(theta_a, basis), cutoff, "A_V"));
  s = tensor(s, coherent_state(std::sqrt(n), ep_phase(theta_b, basis), cutoff, "B_V"));
  if (basis != Basis::ZZ) {
    s = mix_modes(s, "A_H", "A_V");
    s = mix_modes(s, "B_H", "B_V");
  }
  return s;
}

PatternProbs measure_patterns(const TruncatedState& mixed) {
  const std::size_t det[2][2] = {{mixed.mode_index("A_H"), mixed.mode_index("A_V")},
                                 {mixed.mode_index("B_H"), mixed.mode_index("B_V")}};
  PatternProbs out;
  for (std::size_t i = 0; i < mixed.dim(); ++i) {
    const auto occ = mixed.occupations(i);
    int click[2] = {-1, -1};
    bool single = true;
    for (int node = 0; node < 2 && single; ++node) {
      const bool c0 = occ[det[node][0]] > 0, c1 = occ[det[node][1]] > 0;
      if (c0 == c1) single = false;
      else click[node] = c0 ? 0 : 1;
    }
    if (single) out.p[click[0]][click[1]] += mixed.rho(i, i).real();
  }
  return out;
}

PatternProbs mix_and_measure_oracle(const FockDensityTwoMode& rho, double n, double theta_a, double theta_b,
                                    Basis basis, int cutoff) {
  return measure_patterns(ep_mixed_state(rho, n, theta_a, theta_b, basis, cutoff));
}

FockDensityTwoMode apply_detection_loss(const FockDensityTwoMode& rho, double eta_a, double eta_b) {
  if (!(eta_a >= 0.0 && eta_a <= 1.0 && eta_b >= 0.0 && eta_b <= 1.0))
    throw std::invalid_argument("apply_detection_loss: efficiency outside [0,1]");
  FockDensityTwoMode r;
  r.p11 = rho.p11 * eta_a * eta_b;
  r.p10 = rho.p10 * eta_a + rho.p11 * eta_a * (1.0 - eta_b);
  r.p01 = rho.p01 * eta_b + rho.p11 * (1.0 - eta_a) * eta_b;
  r.p00 = 1.0 - r.p11 - r.p10 - r.p01;
  r.d = rho.d * std::sqrt(eta_a * eta_b);
  r.phi = rho.phi;
  return r;
}

int sample_pattern(const PatternProbs& probs, Rng& rng) {
  double u = rng.uniform();
  for (int k = 0; k < 4; ++k) {
    u -= probs.p[k / 2][k % 2];
    if (u < 0.0) return k;
  }
  return -1;
}

Estimate correlator_E(const CoincidenceCounts& c) {
  const long tot = c.total();
  if (tot <= 0) throw std::domain_error("correlator_E: no coincidences");
  const double e = double(c.n[0][0] + c.n[1][1] - c.n[0][1] - c.n[1][0]) / double(tot);
  return {e, std::sqrt(std::max(0.0, 1.0 - e * e) / double(tot))};
}

double correlator_zz(double p00, double p01, double p10, double p11, double n) {
  const double en = std::exp(-n);
  const double odd = (p01 + p10) * (1.0 - en) * en;
  const double even = p00 * (1.0 - en) * (1.0 - en) + p11 * en * en;
  return -(odd - even) / (odd + even);
}

double correlator_xx(double p00, double p01, double p10, double p11, double d, double phase_total, double n) {
  const double h = 1.0 - std::exp(-n / 2.0);
  const double den = 4.0 * p00 * h * h + 2.0 * (p01 + p10) * (1.0 + n / 2.0) * h + p11 * (1.0 + n / 2.0) * (1.0 + n / 2.0);
  return 2.0 * d * n * std::cos(phase_total) / den;
}

PijEstimate reconstruct_pij(const ZCounts& counts, double eff_a, double eff_b) {
  const long total = counts.total();
  if (total <= 0) throw std::domain_error("reconstruct_pij: empty dataset");
  if (!(eff_a > 0.0 && eff_a <= 1.0 && eff_b > 0.0 && eff_b <= 1.0))
    throw std::invalid_argument("reconstruct_pij: efficiency outside (0,1]");
  // T(k, j): probability of click pattern k given photon pattern j (index 2i + j)
  Eigen::Matrix4d T = Eigen::Matrix4d::Zero();
  const double ea[2] = {1.0 - eff_a, eff_a}, eb[2] = {1.0 - eff_b, eff_b};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int ci = 0; ci <= i; ++ci)
        for (int cj = 0; cj <= j; ++cj) {
          const double pa = i == 0 ? 1.0 : ea[ci];
          const double pb = j == 0 ? 1.0 : eb[cj];
          T(2 * ci + cj, 2 * i + j) = pa * pb;
        }
  Eigen::Vector4d f;
  for (int k = 0; k < 4; ++k) f(k) = double(counts.n[k / 2][k % 2]) / double(total);

  Eigen::Vector4d p = Eigen::Vector4d::Constant(0.25);
  PijEstimate out;
  for (int it = 1; it <= 100000; ++it) {
    const Eigen::Vector4d q = T * p;
    Eigen::Vector4d next = Eigen::Vector4d::Zero();
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        if (f(k) > 0.0 && q(k) > 0.0) next(j) += f(k) * T(k, j) * p(j) / q(k);
    next /= next.sum();
    const double change = (next - p).cwiseAbs().maxCoeff();
    p = next;
    out.iterations = it;
    if (change < 1e-13) break;
  }
  // delta-method covariance from the multinomial click frequencies
  Eigen::Matrix4d cov_f = (Eigen::Matrix4d(f.asDiagonal()) - f * f.transpose()) / double(total);
  const Eigen::Matrix4d Ti = T.inverse();
  const Eigen::Matrix4d cov = Ti * cov_f * Ti.transpose();
  out.p00 = p(0);
  out.p01 = p(1);
  out.p10 = p(2);
  out.p11 = p(3);
  out.e00 = std::sqrt(std::max(0.0, cov(0, 0)));
  out.e01 = std::sqrt(std::max(0.0, cov(1, 1)));
  out.e10 = std::sqrt(std::max(0.0, cov(2, 2)));
  out.e11 = std::sqrt(std::max(0.0, cov(3, 3)));
  return out;
}

double concurrence(double d, double p00, double p11) {
  return std::max(0.0, 2.0 * std::abs(d) - 2.0 * std::sqrt(p00 * p11));
}

double concurrence_lower_bound(double e_xy, double p00, double p01, double p10, double p11) {
  const double g = 2.0 * std::sqrt(p00 * p11);
  return std::max(0.0, std::abs(e_xy) * (p01 + p10 + g) - g);
}

AtomicState rescale_to_atoms(double p00, double p01, double p10, double p11, double d, double eta_a, double eta_b) {
  if (!(eta_a > 0.0 && eta_a <= 1.0 && eta_b > 0.0 && eta_b <= 1.0))
    throw std::invalid_argument("rescale_to_atoms: eta_r outside (0,1]");
  AtomicState s;
  s.d10 = p10 / eta_a;
  s.d01 = p01 / eta_b;
  s.d11 = p11 / (eta_a * eta_b);
  s.d00 = p00 - p10 * (1.0 - eta_a) - p01 * (1.0 - eta_b);
  if (s.d00 < 0.0) {
    s.d00 = 0.0;
    s.clamped = true;
  }
  s.d_tilde = d / std::sqrt(eta_a * eta_b);
  s.c_tilde = std::min(1.0, concurrence(s.d_tilde, s.d00, s.d11));
  return s;
}

double pme_fidelity(double e_x, double e_y, double zz, int sign) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("pme_fidelity: sign must be +1 or -1");
  return (sign * e_x + sign * e_y - zz + 1.0) / 4.0;
}

double fidelity_approx(double v, double beta) { return (1.0 + v) / (2.0 * (1.0 + beta)); }

}  // namespace mqn
