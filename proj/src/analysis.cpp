#include "mqn/analysis.hpp"

#include <cmath>
#include <random>

namespace mqn {

LinkCounts::LinkCounts() {
  for (auto& per_sign : coinc)
    for (int b = 0; b < 3; ++b) per_sign[b].basis = static_cast<Basis>(b);
}

void LinkCounts::add(const TrialRecord& r) {
  if (r.herald != HeraldOutcome::PsiPlus && r.herald != HeraldOutcome::PsiMinus) return;
  const int s = r.herald == HeraldOutcome::PsiPlus ? 0 : 1;
  ++heralds[s];
  if (!r.measured) return;
  const int b = static_cast<int>(r.basis);
  auto& cc = coinc[s][b];
  ++cc.trials;
  if (r.basis == Basis::ZZ) ++z[s].n[r.h_clicks[0]][r.h_clicks[1]];
  if (r.pattern < 0) return;
  const int pa = r.pattern / 2, pb = r.pattern % 2;
  ++cc.n[pa][pb];
  if (r.basis == Basis::XX) {
    auto& t = xx_by_theta[r.theta_c];
    t.basis = Basis::XX;
    ++t.trials;
    ++t.n[s == 0 ? pa : 1 - pa][pb];
  }
}

void LinkCounts::merge(const LinkCounts& o) {
  for (int s = 0; s < 2; ++s) {
    heralds[s] += o.heralds[s];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) z[s].n[i][j] += o.z[s].n[i][j];
    for (int b = 0; b < 3; ++b) {
      coinc[s][b].trials += o.coinc[s][b].trials;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) coinc[s][b].n[i][j] += o.coinc[s][b].n[i][j];
    }
  }
  for (const auto& [theta, cc] : o.xx_by_theta) {
    auto& t = xx_by_theta[theta];
    t.basis = Basis::XX;
    t.trials += cc.trials;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) t.n[i][j] += cc.n[i][j];
  }
}

void CountsByLink::merge(const CountsByLink& o) {
  for (int i = 0; i < 3; ++i) links[i].merge(o.links[i]);
}

namespace {

struct Point {
  bool valid = false;
  PijEstimate pij;
  double e_x = 0, e_y = 0, zz = 0, c = 0, c_tilde = 0, f = 0, d = 0;
  bool clamped = false;
};

double corr(const std::array<std::array<long, 2>, 2>& n) {
  const double tot = double(n[0][0] + n[0][1] + n[1][0] + n[1][1]);
  return (n[0][0] + n[1][1] - n[0][1] - n[1][0]) / tot;
}

Point evaluate(const ZCounts& z, const std::array<CoincidenceCounts, 3>& cc, int sign,
               const std::array<double, 2>& eta) {
  Point p;
  if (z.total() == 0) return p;
  for (const auto& c : cc)
    if (c.total() == 0) return p;
  p.pij = reconstruct_pij(z);
  p.zz = corr(cc[0].n);
  p.e_x = corr(cc[1].n);
  p.e_y = corr(cc[2].n);
  const double e_xy = std::max(0.0, sign * 0.5 * (p.e_x + p.e_y));
  const auto& q = p.pij;
  p.c = concurrence_lower_bound(e_xy, q.p00, q.p01, q.p10, q.p11);
  const double g = 2.0 * std::sqrt(q.p00 * q.p11);
  p.d = 0.5 * e_xy * (q.p01 + q.p10 + g);
  const AtomicState at = rescale_to_atoms(q.p00, q.p01, q.p10, q.p11, p.d, eta[0], eta[1]);
  p.c_tilde = at.c_tilde;
  p.clamped = at.clamped;
  p.f = pme_fidelity(p.e_x, p.e_y, p.zz, sign);
  p.valid = true;
  return p;
}

// multinomial draw with the observed cell frequencies; total fixed
void resample(const std::array<std::array<long, 2>, 2>& in, std::array<std::array<long, 2>, 2>& out, Rng& rng) {
  const long total = in[0][0] + in[0][1] + in[1][0] + in[1][1];
  std::array<std::array<long, 2>, 2> r{};
  long left = total, rest = total;
  for (int k = 0; k < 4 && left > 0; ++k) {
    const long c = in[k / 2][k % 2];
    if (k == 3 || rest == c) {
      r[k / 2][k % 2] = left;
      break;
    }
    std::binomial_distribution<long> b(left, double(c) / double(rest));
    r[k / 2][k % 2] = b(rng);
    left -= r[k / 2][k % 2];
    rest -= c;
  }
  out = r;
}

Estimate est(double value, const std::vector<double>& reps) {
  Estimate e{value, 0.0};
  if (reps.size() > 1) e.error = stddev(reps);
  return e;
}

}  // namespace

SignReport analyze_sign(const LinkCounts& lc, int s, const std::array<double, 2>& eta) {
  SignReport r;
  r.sign = s == 0 ? 1 : -1;
  r.heralds = lc.heralds[s];
  const Point p = evaluate(lc.z[s], lc.coinc[s], r.sign, eta);
  if (!p.valid) return r;
  r.valid = true;
  r.pij = p.pij;
  r.e_x = correlator_E(lc.coinc[s][1]);
  r.e_y = correlator_E(lc.coinc[s][2]);
  r.zz = correlator_E(lc.coinc[s][0]);
  r.concurrence = {p.c, 0.0};
  r.c_tilde = {p.c_tilde, 0.0};
  r.fidelity = {p.f, 0.0};
  r.d = p.d;
  r.clamped = p.clamped;
  return r;
}

EntanglementReport analyze(const CountsByLink& counts, const RunConfig& c, StorageMode mode, int bootstrap,
                           std::uint64_t seed) {
  EntanglementReport rep;
  std::array<SinusoidFit, 3> fits{};
  std::array<bool, 3> fit_ok{};
  for (LinkId l : kAllLinks) {
    const LinkCounts& lc = counts.links[index(l)];
    if (lc.heralds[0] + lc.heralds[1] == 0) continue;
    LinkReport lr;
    lr.link = l;
    lr.readout_eta = herald_model(c, l, mode).readout_eta;
    for (int s = 0; s < 2; ++s) {
      SignReport sr = analyze_sign(lc, s, lr.readout_eta);
      if (sr.valid && bootstrap > 0) {
        Rng rng(derive_seed(seed, Stream::Analysis, std::uint64_t(index(l)) * 2 + s));
        std::vector<double> c_reps, ct_reps, f_reps;
        for (int b = 0; b < bootstrap; ++b) {
          ZCounts z;
          resample(lc.z[s].n, z.n, rng);
          std::array<CoincidenceCounts, 3> cc = lc.coinc[s];
          for (auto& x : cc) resample(x.n, x.n, rng);
          const Point p = evaluate(z, cc, sr.sign, lr.readout_eta);
          if (!p.valid) continue;
          c_reps.push_back(p.c);
          ct_reps.push_back(p.c_tilde);
          f_reps.push_back(p.f);
        }
        sr.concurrence = est(sr.concurrence.value, c_reps);
        sr.c_tilde = est(sr.c_tilde.value, ct_reps);
        sr.fidelity = est(sr.fidelity.value, f_reps);
      }
      lr.sign[s] = sr;
    }
    std::vector<double> th, e, sd;
    for (const auto& [theta, cc] : lc.xx_by_theta) {
      if (cc.total() == 0) continue;
      const Estimate x = correlator_E(cc);
      lr.xx_theta.push_back({theta, x});
      th.push_back(theta);
      e.push_back(x.value);
      sd.push_back(std::max(x.error, 1.0 / std::sqrt(double(cc.total()))));
    }
    if (th.size() >= 4) {
      lr.fit = fit_sinusoid(th, e, sd);
      lr.fit_valid = std::isfinite(lr.fit.phase_err);
      fits[index(l)] = lr.fit;
      fit_ok[index(l)] = lr.fit_valid;
    }
    rep.links.push_back(lr);
  }
  if (fit_ok[index(LinkId::AC)] && fit_ok[index(LinkId::CB)]) {
    const auto& a = fits[index(LinkId::AC)];
    const auto& b = fits[index(LinkId::CB)];
    rep.delay_valid = true;
    rep.delay = wrap_phase(a.phase - b.phase);
    rep.delay_err = std::hypot(a.phase_err, b.phase_err);
  }
  return rep;
}

}  // namespace mqn
