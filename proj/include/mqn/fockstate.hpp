#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <utility>
#include <vector>

namespace mqn {

using cplx = std::complex<double>;

struct Tolerances {
  double normalization = 1e-9;
  double positivity = 1e-9;
};

// Dense multi-mode Fock state. Basis index runs with mode 0 most significant;
// each mode holds 0..cutoff photons. Always stored as a density matrix.
struct TruncatedState {
  std::vector<std::string> modes;
  int cutoff = 1;
  Eigen::MatrixXcd rho;
  bool is_pure = true;
  // probability mass pushed past the cutoff by operations (0 when exact)
  double truncation_loss = 0.0;

  int local_dim() const { return cutoff + 1; }
  std::size_t dim() const { return static_cast<std::size_t>(rho.rows()); }
  std::size_t mode_index(const std::string& label) const;
  double trace() const { return rho.trace().real(); }
  double purity() const { return (rho * rho).trace().real(); }
  // occupation numbers of a basis index
  std::vector<int> occupations(std::size_t index) const;
  std::size_t index_of(const std::vector<int>& occ) const;
};

TruncatedState vacuum_state(std::vector<std::string> modes, int cutoff);
TruncatedState fock_state(std::vector<std::string> modes, const std::vector<int>& occupations, int cutoff);
TruncatedState pure_state(std::vector<std::string> modes, int cutoff, const Eigen::VectorXcd& amplitudes);
TruncatedState coherent_state(double alpha, double theta, int cutoff, const std::string& label = "a");
TruncatedState tensor(const TruncatedState& a, const TruncatedState& b);

// 50:50 beamsplitter exp(pi/4 (a^dag b - b^dag a))
TruncatedState mix_modes(const TruncatedState& state, const std::string& a, const std::string& b);
TruncatedState phase_shift(const TruncatedState& state, const std::string& mode, double phi);
TruncatedState apply_loss(const TruncatedState& state, const std::string& mode, double eta);

enum class ClickOutcome { Click, NoClick };
std::pair<TruncatedState, double> herald_project(const TruncatedState& state, const std::string& mode,
                                                 ClickOutcome outcome);
// probability of an outcome without conditioning
double outcome_probability(const TruncatedState& state, const std::string& mode, ClickOutcome outcome);

TruncatedState partial_trace(const TruncatedState& state, const std::vector<std::string>& keep);
std::vector<double> photon_distribution(const TruncatedState& state, const std::string& mode);
double mean_photon_number(const TruncatedState& state, const std::string& mode);
double trace_distance(const TruncatedState& a, const TruncatedState& b);
// Hermitian, PSD and unit trace within tolerances
bool is_physical(const TruncatedState& s, const Tolerances& tol = {});

// single-mode and two-mode unitaries in the truncated basis
Eigen::MatrixXcd beamsplitter_matrix(int cutoff);

// Two-mode threshold-detection state: |ij> with i photons at A, j at B.
// rho_{01,10} = d e^{i phi}.
struct FockDensityTwoMode {
  double p00 = 1.0, p01 = 0.0, p10 = 0.0, p11 = 0.0;
  double d = 0.0;
  double phi = 0.0;

  // 4x4 in basis {00, 01, 10, 11}
  Eigen::Matrix4cd matrix() const;
  double visibility() const { return 2.0 * d / (p01 + p10); }
  double beta() const;
};

std::vector<std::string> validate_density(const FockDensityTwoMode& rho, const Tolerances& tol = {});

// collapse photon numbers >= 1 to 1 on the two named modes; other modes traced out
FockDensityTwoMode to_two_mode(const TruncatedState& state, const std::string& a, const std::string& b);
// embed into a Fock state with the given labels (each mode 0/1 photon)
TruncatedState embed_two_mode(const FockDensityTwoMode& rho, const std::string& a, const std::string& b, int cutoff);

}  // namespace mqn
