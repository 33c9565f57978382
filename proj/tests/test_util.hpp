#pragma once

#include <cmath>
#include <random>

#include "mqn/fockstate.hpp"
#include "mqn/rng.hpp"

namespace mqn::testutil {

// random pure state on two modes whose total photon number stays <= cutoff,
// so a beamsplitter never pushes weight past the cutoff
inline TruncatedState random_pair_state(Rng& rng, int cutoff, const std::string& a = "a", const std::string& b = "b") {
  TruncatedState s = vacuum_state({a, b}, cutoff);
  std::normal_distribution<double> g;
  Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(s.dim());
  for (int n = 0; n <= cutoff; ++n)
    for (int m = 0; n + m <= cutoff; ++m) amp(s.index_of({n, m})) = cplx(g(rng), g(rng));
  return pure_state({a, b}, cutoff, amp);
}

inline TruncatedState random_mixed_pair_state(Rng& rng, int cutoff, int components = 3) {
  TruncatedState s = random_pair_state(rng, cutoff);
  s.rho *= 0.0;
  std::uniform_real_distribution<double> u(0.1, 1.0);
  double wsum = 0.0;
  for (int k = 0; k < components; ++k) {
    const double w = u(rng);
    s.rho += w * random_pair_state(rng, cutoff).rho;
    wsum += w;
  }
  s.rho /= wsum;
  s.is_pure = false;
  return s;
}

// random valid two-mode threshold state
inline FockDensityTwoMode random_valid_two_mode(Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  double w[4];
  double sum = 0.0;
  for (double& x : w) {
    x = e(rng);
    sum += x;
  }
  FockDensityTwoMode r;
  r.p00 = w[0] / sum;
  r.p01 = w[1] / sum;
  r.p10 = w[2] / sum;
  r.p11 = 1.0 - r.p00 - r.p01 - r.p10;
  r.d = rng.uniform() * std::sqrt(r.p01 * r.p10);
  r.phi = (rng.uniform() * 2.0 - 1.0) * 3.141592653589793;
  return r;
}

}  // namespace mqn::testutil
