#pragma once

#include <array>
#include <string>
#include <vector>

#include "mqn/fockstate.hpp"
#include "mqn/rng.hpp"

namespace mqn {

// ZZ: H/V detectors. XX: +/- after mixing H and V. YY: XX with both EP
// phases shifted by -pi/2.
enum class Basis { ZZ, XX, YY };
std::string to_string(Basis b);
Basis basis_from_string(const std::string& s);

// Probability of each single-click-per-node pattern for one trial.
// p[a][b]: detector a at node A (0 = H or +, 1 = V or -), detector b at B.
// The remainder 1 - total() covers every other outcome.
struct PatternProbs {
  std::array<std::array<double, 2>, 2> p{};
  double total() const { return p[0][0] + p[0][1] + p[1][0] + p[1][1]; }
  double correlator() const { return (p[0][0] + p[1][1] - p[0][1] - p[1][0]) / total(); }
};

// Single-click POVM element of one node restricted to 0/1 read-out photons
// (basis |0>, |1>). m10 = conj(m01).
struct NodePovm {
  double m00 = 0.0;
  cplx m01{0.0, 0.0};
  double m11 = 0.0;
};
// n is the EP mean photon number, mode_overlap the read-out/EP overlap.
NodePovm node_povm(double n, double theta, Basis basis, int detector, double mode_overlap = 1.0);

// Closed form from the per-node POVMs. Throws std::invalid_argument on an
// invalid rho or n outside (0, 0.2].
PatternProbs mix_and_measure(const FockDensityTwoMode& rho, double n, double theta_a, double theta_b, Basis basis,
                             double overlap_a = 1.0, double overlap_b = 1.0);

// Same probabilities from the truncated Fock-space computation on modes
// A_H, A_V, B_H, B_V.
TruncatedState ep_mixed_state(const FockDensityTwoMode& rho, double n, double theta_a, double theta_b, Basis basis,
                              int cutoff = 4);
PatternProbs measure_patterns(const TruncatedState& mixed);
PatternProbs mix_and_measure_oracle(const FockDensityTwoMode& rho, double n, double theta_a, double theta_b,
                                    Basis basis, int cutoff = 4);

// Threshold loss on the two read-out modes (exact for 0/1 photons per mode)
FockDensityTwoMode apply_detection_loss(const FockDensityTwoMode& rho, double eta_a, double eta_b);

// Draw one pattern; returns -1 for "not a single click at each node",
// otherwise 2*a + b.
int sample_pattern(const PatternProbs& probs, Rng& rng);

struct CoincidenceCounts {
  Basis basis = Basis::XX;
  std::array<std::array<long, 2>, 2> n{};
  long trials = 0;  // heralded trials measured in this basis

  long total() const { return n[0][0] + n[0][1] + n[1][0] + n[1][1]; }
};

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

// (N++ + N-- - N+- - N-+) / sum; binomial error
Estimate correlator_E(const CoincidenceCounts& c);

double correlator_zz(double p00, double p01, double p10, double p11, double n);
// phase_total = phi + theta_A - theta_B
double correlator_xx(double p00, double p01, double p10, double p11, double d, double phase_total, double n);

// Z-basis click patterns on the H detectors with the EP blocked:
// counts[i][j], i clicks at A, j clicks at B.
struct ZCounts {
  std::array<std::array<long, 2>, 2> n{};
  long total() const { return n[0][0] + n[0][1] + n[1][0] + n[1][1]; }
};

struct PijEstimate {
  double p00 = 0.0, p01 = 0.0, p10 = 0.0, p11 = 0.0;
  double e00 = 0.0, e01 = 0.0, e10 = 0.0, e11 = 0.0;
  int iterations = 0;
};
// Maximum likelihood (EM on the simplex) with detection efficiencies
// eff_a, eff_b folded into the click model.
PijEstimate reconstruct_pij(const ZCounts& counts, double eff_a = 1.0, double eff_b = 1.0);

double concurrence(double d, double p00, double p11);
double concurrence_lower_bound(double e_xy, double p00, double p01, double p10, double p11);

struct AtomicState {
  double d00 = 0.0, d01 = 0.0, d10 = 0.0, d11 = 0.0;
  double d_tilde = 0.0;
  double c_tilde = 0.0;
  bool clamped = false;  // inferred d00 was negative and set to 0
};
AtomicState rescale_to_atoms(double p00, double p01, double p10, double p11, double d, double eta_a, double eta_b);

// sign = +1 for Psi+, -1 for Psi-
double pme_fidelity(double e_x, double e_y, double zz, int sign);
double fidelity_approx(double v, double beta);

}  // namespace mqn
