#include "mqn/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace mqn {

double wrap_phase(double x) {
  double y = std::remainder(x, kTwoPi);
  if (y <= -kPi) y += kTwoPi;
  return y;
}

double mean(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("mean of empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double stddev(const std::vector<double>& x) {
  if (x.size() < 2) throw std::invalid_argument("stddev needs at least two samples");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

double circular_mean(const std::vector<double>& x) {
  double c = 0.0, s = 0.0;
  for (double v : x) {
    c += std::cos(v);
    s += std::sin(v);
  }
  return std::atan2(s, c);
}

double circular_stddev(const std::vector<double>& x) {
  const double m = circular_mean(x);
  std::vector<double> d;
  d.reserve(x.size());
  for (double v : x) d.push_back(wrap_phase(v - m));
  return stddev(d);
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) throw std::invalid_argument("linear_fit needs >= 3 paired points");
  const double n = static_cast<double>(x.size());
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("linear_fit: degenerate abscissa");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    ss += r * r;
  }
  f.residual_sd = std::sqrt(ss / (n - 2.0));
  f.slope_err = f.residual_sd / std::sqrt(sxx);
  return f;
}

double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test_normal(std::vector<double> x, double mu, double sigma) {
  if (x.empty() || !(sigma > 0.0)) throw std::invalid_argument("ks_test_normal: bad input");
  std::sort(x.begin(), x.end());
  const boost::math::normal_distribution<double> nd(mu, sigma);
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = boost::math::cdf(nd, x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)};
}

SinusoidFit fit_sinusoid(const std::vector<double>& x, const std::vector<double>& y,
                         const std::vector<double>& sigma) {
  const auto n = x.size();
  if (n < 3 || y.size() != n || sigma.size() != n) throw std::invalid_argument("fit_sinusoid: need >= 3 points");
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(sigma[i] > 0.0)) throw std::invalid_argument("fit_sinusoid: non-positive sigma");
    const double w = 1.0 / sigma[i];
    a(i, 0) = w * std::cos(x[i]);
    a(i, 1) = w * std::sin(x[i]);
    a(i, 2) = w;
    b(i) = w * y[i];
  }
  const Eigen::Matrix3d cov = (a.transpose() * a).inverse();
  const Eigen::Vector3d p = cov * a.transpose() * b;
  SinusoidFit f;
  const double ca = p(0), sb = p(1);
  f.amplitude = std::hypot(ca, sb);
  f.phase = std::atan2(-sb, ca);
  f.offset = p(2);
  const double a2 = f.amplitude * f.amplitude;
  if (a2 > 0.0) {
    // phase = atan2(-sb, ca)
    const double dpa = sb / a2, dpb = -ca / a2;
    f.phase_err = std::sqrt(std::max(0.0, dpa * dpa * cov(0, 0) + dpb * dpb * cov(1, 1) + 2 * dpa * dpb * cov(0, 1)));
    const double daa = ca / f.amplitude, dab = sb / f.amplitude;
    f.amplitude_err = std::sqrt(std::max(0.0, daa * daa * cov(0, 0) + dab * dab * cov(1, 1) + 2 * daa * dab * cov(0, 1)));
  }
  return f;
}

}  // namespace mqn
