#include "mqn/fockstate.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>
#include <algorithm>
#include <initializer_list>
#include <cmath>
#include <stdexcept>

namespace mqn {

namespace {

std::size_t ipow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  while (e--) r *= b;
  return r;
}

double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

double factorial(int n) { return std::exp(std::lgamma(n + 1.0)); }

void check_cutoff(int cutoff) {
  if (cutoff < 1) throw std::invalid_argument("cutoff must be >= 1");
}

// full index <-> (rest, local) tables for an operator acting on a set of modes
struct LocalIndex {
  std::size_t local_dim = 0;
  std::size_t rest_dim = 0;
  std::vector<std::size_t> full;  // full[r * local_dim + l]
};

LocalIndex make_local_index(const TruncatedState& s, const std::vector<std::size_t>& targets) {
  const std::size_t m = s.modes.size();
  const std::size_t d = static_cast<std::size_t>(s.local_dim());
  LocalIndex li;
  li.local_dim = ipow(d, targets.size());
  li.rest_dim = s.dim() / li.local_dim;
  li.full.resize(s.dim());
  std::vector<std::size_t> others;
  for (std::size_t k = 0; k < m; ++k)
    if (std::find(targets.begin(), targets.end(), k) == targets.end()) others.push_back(k);
  std::vector<std::size_t> stride(m);
  for (std::size_t k = 0; k < m; ++k) stride[k] = ipow(d, m - 1 - k);
  for (std::size_t r = 0; r < li.rest_dim; ++r) {
    std::size_t base = 0, rr = r;
    for (std::size_t q = others.size(); q-- > 0;) {
      base += (rr % d) * stride[others[q]];
      rr /= d;
    }
    for (std::size_t l = 0; l < li.local_dim; ++l) {
      std::size_t off = 0, ll = l;
      for (std::size_t q = targets.size(); q-- > 0;) {
        off += (ll % d) * stride[targets[q]];
        ll /= d;
      }
      li.full[r * li.local_dim + l] = base + off;
    }
  }
  return li;
}

// Rows/cols reordered so the targeted modes run fastest; a left
// multiplication by (I x op) is then one product on an L x (D*D/L) view.
Eigen::MatrixXcd gather(const Eigen::MatrixXcd& rho, const LocalIndex& li, bool cols) {
  const auto D = rho.rows();
  Eigen::MatrixXcd out(D, rho.cols());
  for (Eigen::Index j = 0; j < rho.cols(); ++j) {
    const auto src = cols ? static_cast<Eigen::Index>(li.full[j]) : j;
    for (Eigen::Index i = 0; i < D; ++i) out(i, j) = rho(static_cast<Eigen::Index>(li.full[i]), src);
  }
  return out;
}

Eigen::MatrixXcd scatter(const Eigen::MatrixXcd& m, const LocalIndex& li, bool cols) {
  const auto D = m.rows();
  Eigen::MatrixXcd out(D, m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const auto dst = cols ? static_cast<Eigen::Index>(li.full[j]) : j;
    for (Eigen::Index i = 0; i < D; ++i) out(static_cast<Eigen::Index>(li.full[i]), dst) = m(i, j);
  }
  return out;
}

struct Nz {
  Eigen::Index i, k;
  cplx v;
};

// beamsplitters and Kraus operators are mostly zeros
std::vector<Nz> nonzeros(const Eigen::MatrixXcd& op) {
  std::vector<Nz> nz;
  for (Eigen::Index k = 0; k < op.cols(); ++k)
    for (Eigen::Index i = 0; i < op.rows(); ++i)
      if (op(i, k) != cplx(0.0, 0.0)) nz.push_back({i, k, op(i, k)});
  return nz;
}

// m <- (I x op) m, rows already ordered with the local index fastest
void apply_left(const std::vector<Nz>& nz, Eigen::MatrixXcd& m, Eigen::Index L) {
  std::vector<cplx> col(static_cast<std::size_t>(L));
  cplx* data = m.data();
  for (Eigen::Index c = 0; c < m.size() / L; ++c) {
    cplx* x = data + c * L;
    std::fill(col.begin(), col.end(), cplx(0.0, 0.0));
    for (const Nz& e : nz) col[e.i] += e.v * x[e.k];
    std::copy(col.begin(), col.end(), x);
  }
}

// m <- m (I x op)^dagger, columns ordered with the local index fastest
void apply_right_adjoint(const std::vector<Nz>& nz, Eigen::MatrixXcd& m, Eigen::Index L) {
  const Eigen::Index D = m.rows();
  Eigen::MatrixXcd blk(D, L);
  for (Eigen::Index r = 0; r < m.cols() / L; ++r) {
    blk.setZero();
    for (const Nz& e : nz) blk.col(e.i) += std::conj(e.v) * m.col(r * L + e.k);
    m.middleCols(r * L, L) = blk;
  }
}

// op * rho * op^dagger
Eigen::MatrixXcd sandwich(const Eigen::MatrixXcd& op, const Eigen::MatrixXcd& rho, const LocalIndex& li) {
  Eigen::MatrixXcd m = gather(rho, li, true);
  const auto nz = nonzeros(op);
  const auto L = static_cast<Eigen::Index>(li.local_dim);
  apply_left(nz, m, L);
  apply_right_adjoint(nz, m, L);
  return scatter(m, li, true);
}

std::vector<std::size_t> targets_of(const TruncatedState& s, std::initializer_list<std::string> labels) {
  std::vector<std::size_t> t;
  for (const auto& l : labels) t.push_back(s.mode_index(l));
  return t;
}

}  // namespace

std::size_t TruncatedState::mode_index(const std::string& label) const {
  auto it = std::find(modes.begin(), modes.end(), label);
  if (it == modes.end()) throw std::invalid_argument("unknown mode label: " + label);
  return static_cast<std::size_t>(it - modes.begin());
}

std::vector<int> TruncatedState::occupations(std::size_t index) const {
  std::vector<int> occ(modes.size());
  for (std::size_t k = modes.size(); k-- > 0;) {
    occ[k] = static_cast<int>(index % local_dim());
    index /= local_dim();
  }
  return occ;
}

std::size_t TruncatedState::index_of(const std::vector<int>& occ) const {
  if (occ.size() != modes.size()) throw std::invalid_argument("occupation vector size mismatch");
  std::size_t idx = 0;
  for (int n : occ) {
    if (n < 0 || n > cutoff) throw std::invalid_argument("occupation exceeds cutoff");
    idx = idx * local_dim() + static_cast<std::size_t>(n);
  }
  return idx;
}

TruncatedState vacuum_state(std::vector<std::string> modes, int cutoff) {
  std::vector<int> occ(modes.size(), 0);
  return fock_state(std::move(modes), occ, cutoff);
}

TruncatedState fock_state(std::vector<std::string> modes, const std::vector<int>& occupations, int cutoff) {
  check_cutoff(cutoff);
  TruncatedState s;
  const std::size_t dim = ipow(cutoff + 1, modes.size());
  s.modes = std::move(modes);
  s.cutoff = cutoff;
  s.rho = Eigen::MatrixXcd::Zero(dim, dim);
  const std::size_t i = s.index_of(occupations);
  s.rho(i, i) = 1.0;
  return s;
}

TruncatedState pure_state(std::vector<std::string> modes, int cutoff, const Eigen::VectorXcd& amplitudes) {
  check_cutoff(cutoff);
  const std::size_t dim = ipow(cutoff + 1, modes.size());
  if (static_cast<std::size_t>(amplitudes.size()) != dim) throw std::invalid_argument("amplitude vector size mismatch");
  const double norm = amplitudes.norm();
  if (norm < 1e-15) throw std::invalid_argument("zero amplitude vector");
  TruncatedState s;
  s.modes = std::move(modes);
  s.cutoff = cutoff;
  const Eigen::VectorXcd psi = amplitudes / norm;
  s.rho = psi * psi.adjoint();
  return s;
}

TruncatedState coherent_state(double alpha, double theta, int cutoff, const std::string& label) {
  check_cutoff(cutoff);
  if (alpha < 0.0) throw std::invalid_argument("coherent_state: alpha must be >= 0");
  Eigen::VectorXcd amp(cutoff + 1);
  double kept = 0.0;
  for (int n = 0; n <= cutoff; ++n) {
    const double mag = std::exp(-alpha * alpha / 2.0) * std::pow(alpha, n) / std::sqrt(factorial(n));
    amp(n) = std::polar(mag, n * theta);
    kept += mag * mag;
  }
  if (1.0 - kept >= 1e-8)
    throw std::invalid_argument("coherent_state: cutoff " + std::to_string(cutoff) + " truncates weight " +
                                std::to_string(1.0 - kept));
  return pure_state({label}, cutoff, amp);
}

TruncatedState tensor(const TruncatedState& a, const TruncatedState& b) {
  if (a.cutoff != b.cutoff) throw std::invalid_argument("tensor: cutoff mismatch");
  TruncatedState s;
  s.modes = a.modes;
  for (const auto& m : b.modes) {
    if (std::find(s.modes.begin(), s.modes.end(), m) != s.modes.end())
      throw std::invalid_argument("tensor: duplicate mode label " + m);
    s.modes.push_back(m);
  }
  s.cutoff = a.cutoff;
  s.rho = Eigen::kroneckerProduct(a.rho, b.rho).eval();
  s.is_pure = a.is_pure && b.is_pure;
  s.truncation_loss = a.truncation_loss + b.truncation_loss;
  return s;
}

Eigen::MatrixXcd beamsplitter_matrix(int cutoff) {
  // a^dag -> (a^dag - b^dag)/sqrt2, b^dag -> (a^dag + b^dag)/sqrt2
  const int d = cutoff + 1;
  const double c = std::sqrt(0.5), s = std::sqrt(0.5);
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(d * d, d * d);
  for (int k = 0; k <= cutoff; ++k) {
    for (int l = 0; l <= cutoff; ++l) {
      const double norm_in = 1.0 / std::sqrt(factorial(k) * factorial(l));
      // expand (c a - s b)^k (s a + c b)^l
      for (int i = 0; i <= k; ++i) {
        for (int j = 0; j <= l; ++j) {
          const int p = i + j;          // power of a^dag
          const int q = (k - i) + (l - j);  // power of b^dag
          if (p > cutoff || q > cutoff) continue;
          const double coeff = binom(k, i) * std::pow(c, i) * std::pow(-s, k - i) * binom(l, j) * std::pow(s, j) *
                               std::pow(c, l - j);
          u(p * d + q, k * d + l) += coeff * norm_in * std::sqrt(factorial(p) * factorial(q));
        }
      }
    }
  }
  return u;
}

TruncatedState mix_modes(const TruncatedState& state, const std::string& a, const std::string& b) {
  if (a == b) throw std::invalid_argument("mix_modes: modes must differ");
  const auto li = make_local_index(state, targets_of(state, {a, b}));
  TruncatedState out;
  out.modes = state.modes;
  out.cutoff = state.cutoff;
  out.is_pure = state.is_pure;
  out.truncation_loss = state.truncation_loss;
  const double before = state.trace();
  out.rho = sandwich(beamsplitter_matrix(state.cutoff), state.rho, li);
  const double lost = before - out.trace();
  if (lost > 1e-14) out.truncation_loss += lost;
  return out;
}

TruncatedState phase_shift(const TruncatedState& state, const std::string& mode, double phi) {
  const auto li = make_local_index(state, targets_of(state, {mode}));
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(state.local_dim(), state.local_dim());
  for (int n = 0; n <= state.cutoff; ++n) u(n, n) = std::polar(1.0, n * phi);
  TruncatedState out = state;
  out.rho = sandwich(u, state.rho, li);
  return out;
}

TruncatedState apply_loss(const TruncatedState& state, const std::string& mode, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("apply_loss: eta outside [0,1]");
  const auto li = make_local_index(state, targets_of(state, {mode}));
  const int c = state.cutoff;
  TruncatedState out = state;
  out.rho = Eigen::MatrixXcd::Zero(state.rho.rows(), state.rho.cols());
  // Kraus form of mixing with a vacuum ancilla at transmission eta and tracing it out
  for (int k = 0; k <= c; ++k) {
    Eigen::MatrixXcd kk = Eigen::MatrixXcd::Zero(c + 1, c + 1);
    bool any = false;
    for (int n = k; n <= c; ++n) {
      const double amp = std::sqrt(binom(n, k) * std::pow(eta, n - k) * std::pow(1.0 - eta, k));
      if (amp != 0.0) any = true;
      kk(n - k, n) = amp;
    }
    if (any) out.rho += sandwich(kk, state.rho, li);
  }
  if (eta < 1.0) out.is_pure = state.is_pure && std::abs(out.purity() - 1.0) < 1e-12;
  return out;
}

double outcome_probability(const TruncatedState& state, const std::string& mode, ClickOutcome outcome) {
  const std::size_t k = state.mode_index(mode);
  double p0 = 0.0;
  for (std::size_t i = 0; i < state.dim(); ++i)
    if (state.occupations(i)[k] == 0) p0 += state.rho(i, i).real();
  const double total = state.trace();
  return outcome == ClickOutcome::NoClick ? p0 / total : (total - p0) / total;
}

std::pair<TruncatedState, double> herald_project(const TruncatedState& state, const std::string& mode,
                                                 ClickOutcome outcome) {
  const std::size_t k = state.mode_index(mode);
  const double total = state.trace();
  TruncatedState out = state;
  for (std::size_t i = 0; i < state.dim(); ++i) {
    const bool vac_i = state.occupations(i)[k] == 0;
    const bool keep_i = (outcome == ClickOutcome::NoClick) == vac_i;
    for (std::size_t j = 0; j < state.dim(); ++j) {
      const bool vac_j = state.occupations(j)[k] == 0;
      const bool keep_j = (outcome == ClickOutcome::NoClick) == vac_j;
      if (!(keep_i && keep_j)) out.rho(i, j) = 0.0;
    }
  }
  const double p = out.trace() / total;
  if (p < 1e-15) throw std::domain_error("herald_project: degenerate conditioning (probability < 1e-15)");
  out.rho /= out.trace();
  return {out, p};
}

TruncatedState partial_trace(const TruncatedState& state, const std::vector<std::string>& keep) {
  std::vector<std::size_t> kept_idx;
  for (const auto& l : keep) kept_idx.push_back(state.mode_index(l));
  const auto li = make_local_index(state, kept_idx);
  TruncatedState out;
  out.modes = keep;
  out.cutoff = state.cutoff;
  out.truncation_loss = state.truncation_loss;
  out.rho = Eigen::MatrixXcd::Zero(li.local_dim, li.local_dim);
  for (std::size_t r = 0; r < li.rest_dim; ++r)
    for (std::size_t a = 0; a < li.local_dim; ++a)
      for (std::size_t b = 0; b < li.local_dim; ++b)
        out.rho(a, b) += state.rho(li.full[r * li.local_dim + a], li.full[r * li.local_dim + b]);
  out.is_pure = std::abs(out.purity() / (out.trace() * out.trace()) - 1.0) < 1e-12;
  return out;
}

std::vector<double> photon_distribution(const TruncatedState& state, const std::string& mode) {
  const std::size_t k = state.mode_index(mode);
  std::vector<double> p(state.cutoff + 1, 0.0);
  for (std::size_t i = 0; i < state.dim(); ++i) p[state.occupations(i)[k]] += state.rho(i, i).real();
  return p;
}

double mean_photon_number(const TruncatedState& state, const std::string& mode) {
  const auto p = photon_distribution(state, mode);
  double m = 0.0;
  for (std::size_t n = 0; n < p.size(); ++n) m += n * p[n];
  return m;
}

double trace_distance(const TruncatedState& a, const TruncatedState& b) {
  if (a.rho.rows() != b.rho.rows()) throw std::invalid_argument("trace_distance: dimension mismatch");
  const Eigen::MatrixXcd diff = a.rho - b.rho;
  const Eigen::MatrixXcd h = 0.5 * (diff + diff.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

bool is_physical(const TruncatedState& s, const Tolerances& tol) {
  if (std::abs(s.trace() - 1.0) > tol.normalization) return false;
  if ((s.rho - s.rho.adjoint()).cwiseAbs().maxCoeff() > tol.positivity) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (s.rho + s.rho.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol.positivity;
}

Eigen::Matrix4cd FockDensityTwoMode::matrix() const {
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
  m(0, 0) = p00;
  m(1, 1) = p01;
  m(2, 2) = p10;
  m(3, 3) = p11;
  m(1, 2) = std::polar(d, phi);
  m(2, 1) = std::polar(d, -phi);
  return m;
}

double FockDensityTwoMode::beta() const { return 2.0 * std::sqrt(p00 * p11) / (p01 + p10); }

std::vector<std::string> validate_density(const FockDensityTwoMode& r, const Tolerances& tol) {
  std::vector<std::string> v;
  const double ps[4] = {r.p00, r.p01, r.p10, r.p11};
  const char* names[4] = {"p00", "p01", "p10", "p11"};
  for (int i = 0; i < 4; ++i)
    if (!(ps[i] >= -tol.positivity)) v.push_back(std::string(names[i]) + " < 0");
  if (std::abs(r.p00 + r.p01 + r.p10 + r.p11 - 1.0) > tol.normalization) v.push_back("probabilities do not sum to 1");
  if (!(r.d >= 0.0)) v.push_back("d < 0");
  const double bound = std::sqrt(std::max(0.0, r.p01) * std::max(0.0, r.p10));
  if (r.d > bound + tol.positivity) v.push_back("d > sqrt(p01*p10)");
  if (!std::isfinite(r.phi)) v.push_back("phi not finite");
  return v;
}

FockDensityTwoMode to_two_mode(const TruncatedState& state, const std::string& a, const std::string& b) {
  const TruncatedState red = partial_trace(state, {a, b});
  const double tr = red.trace();
  FockDensityTwoMode out;
  out.p00 = out.p01 = out.p10 = out.p11 = 0.0;
  for (std::size_t i = 0; i < red.dim(); ++i) {
    const auto occ = red.occupations(i);
    const double p = red.rho(i, i).real() / tr;
    const int ia = occ[0] > 0, ib = occ[1] > 0;
    (ia ? (ib ? out.p11 : out.p10) : (ib ? out.p01 : out.p00)) += p;
  }
  const cplx coh = red.rho(red.index_of({0, 1}), red.index_of({1, 0})) / tr;
  out.d = std::abs(coh);
  out.phi = std::arg(coh);
  return out;
}

TruncatedState embed_two_mode(const FockDensityTwoMode& r, const std::string& a, const std::string& b, int cutoff) {
  TruncatedState s = vacuum_state({a, b}, cutoff);
  s.rho.setZero();
  const Eigen::Matrix4cd m = r.matrix();
  const std::size_t idx[4] = {s.index_of({0, 0}), s.index_of({0, 1}), s.index_of({1, 0}), s.index_of({1, 1})};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) s.rho(idx[i], idx[j]) = m(i, j);
  s.is_pure = false;
  return s;
}

}  // namespace mqn
