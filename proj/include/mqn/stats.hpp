#pragma once

#include <cstddef>
#include <numbers>
#include <vector>

namespace mqn {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// wrap to (-pi, pi]
double wrap_phase(double x);

double mean(const std::vector<double>& x);
double stddev(const std::vector<double>& x);  // sample SD (n-1)
// circular mean / SD for phases
double circular_mean(const std::vector<double>& x);
double circular_stddev(const std::vector<double>& x);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_err = 0.0;
  double residual_sd = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};
// one-sample KS test against a normal with the given mean/sd
KsResult ks_test_normal(std::vector<double> x, double mu, double sigma);
// asymptotic Kolmogorov survival function Q_KS(lambda)
double kolmogorov_q(double lambda);

// A*cos(x + phase) + c fitted by linear least squares; errors from the
// residual-scaled covariance
struct SinusoidFit {
  double amplitude = 0.0;
  double phase = 0.0;
  double offset = 0.0;
  double amplitude_err = 0.0;
  double phase_err = 0.0;
};
SinusoidFit fit_sinusoid(const std::vector<double>& x, const std::vector<double>& y,
                         const std::vector<double>& sigma);

}  // namespace mqn
