#include "mqn/photonics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace mqn {

void DetectorParams::validate() const {
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw std::invalid_argument("detector efficiency outside [0,1]");
  if (!(dark_rate >= 0.0) || !(dead_time >= 0.0) || !(latch_flux_threshold >= 0.0) || !(latch_recovery >= 0.0))
    throw std::invalid_argument("detector rates and times must be >= 0");
}

std::string to_string(ClickOrigin o) {
  switch (o) {
    case ClickOrigin::Signal: return "signal";
    case ClickOrigin::Dark: return "dark";
    case ClickOrigin::Noise: return "noise";
  }
  return "signal";
}

ClickOrigin click_origin_from_string(const std::string& s) {
  if (s == "signal") return ClickOrigin::Signal;
  if (s == "dark") return ClickOrigin::Dark;
  if (s == "noise") return ClickOrigin::Noise;
  throw std::invalid_argument("unknown click origin: " + s);
}

namespace {

int poisson(double mean, Rng& rng) {
  return poisson_draw(mean, rng);
}

}  // namespace

int snspd_detect(double mean_photons, const DetectorParams& p, double gate, Rng& rng) {
  if (mean_photons < 0.0) throw std::invalid_argument("snspd_detect: negative mean");
  if (!(gate > 0.0)) throw std::invalid_argument("snspd_detect: gate must be > 0");
  if (mean_photons / gate > p.latch_flux_threshold) return 0;
  int n = poisson(p.efficiency * mean_photons + p.dark_rate * gate, rng);
  if (p.dead_time > 0.0) n = std::min(n, static_cast<int>(gate / p.dead_time) + 1);
  return n;
}

std::vector<ClickRecord> snspd_detect_tagged(int detector, double signal_photons, double noise_photons,
                                             const DetectorParams& p, double gate_start, double gate, Rng& rng) {
  if (signal_photons < 0.0 || noise_photons < 0.0) throw std::invalid_argument("snspd_detect_tagged: negative mean");
  if (!(gate > 0.0)) throw std::invalid_argument("snspd_detect_tagged: gate must be > 0");
  std::vector<ClickRecord> out;
  if ((signal_photons + noise_photons) / gate > p.latch_flux_threshold) return out;
  const int ns = poisson(p.efficiency * signal_photons, rng);
  const int nn = poisson(p.efficiency * noise_photons, rng);
  const int nd = poisson(p.dark_rate * gate, rng);
  auto emit = [&](int n, ClickOrigin o) {
    for (int i = 0; i < n; ++i) out.push_back({detector, gate_start + rng.uniform() * gate, o});
  };
  emit(ns, ClickOrigin::Signal);
  emit(nn, ClickOrigin::Noise);
  emit(nd, ClickOrigin::Dark);
  if (out.size() > 1) {
    std::sort(out.begin(), out.end(), [](const ClickRecord& a, const ClickRecord& b) { return a.timestamp < b.timestamp; });
    std::vector<ClickRecord> kept{out.front()};
    for (std::size_t i = 1; i < out.size(); ++i)
      if (out[i].timestamp - kept.back().timestamp >= p.dead_time) kept.push_back(out[i]);
    out.swap(kept);
  }
  return out;
}

int Snspd::detect(double t, double mean_photons, double gate, Rng& rng) {
  if (latched_at(t)) return 0;
  if (mean_photons / gate > params_.latch_flux_threshold) {
    latched_until_ = t + gate + params_.latch_recovery;
    return 0;
  }
  return snspd_detect(mean_photons, params_, gate, rng);
}

std::pair<double, double> interfere_fields(double n_a, double n_b, double dphi, double visibility) {
  if (n_a < 0.0 || n_b < 0.0) throw std::invalid_argument("interfere_fields: negative photon number");
  const double n = n_a + n_b;
  if (n == 0.0) return {0.0, 0.0};
  const double v = visibility * 2.0 * std::sqrt(n_a * n_b) / n;
  const double c = v * std::cos(dphi);
  const double d1 = 0.5 * n * (1.0 + c);
  return {d1, n - d1};
}

double hom_g2(double p_ro, double p_ep, double eta) {
  if (!(p_ro > 0.0 && p_ro <= 0.2 && p_ep > 0.0 && p_ep <= 0.2))
    throw std::invalid_argument("hom_g2: intensities must lie in (0, 0.2]");
  const double mean = 0.5 * (p_ro + p_ep);
  const double num = p_ro * p_ro / 2.0 + p_ep * p_ep / 4.0 + p_ro * p_ep * (1.0 - eta) / 2.0;
  return num / (mean * mean);
}

double invert_g2(double g2, double p_ro, double p_ep) {
  const double lo = hom_g2(p_ro, p_ep, 1.0), hi = hom_g2(p_ro, p_ep, 0.0);
  constexpr double tol = 1e-12;
  if (!(g2 >= lo - tol && g2 <= hi + tol))
    throw std::invalid_argument("invert_g2: g2 outside attainable range [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "]");
  // g2 is affine in eta
  const double mean = 0.5 * (p_ro + p_ep);
  const double a = p_ro * p_ro / 2.0 + p_ep * p_ep / 4.0;
  const double b = p_ro * p_ep / 2.0;
  return std::clamp(1.0 - (g2 * mean * mean - a) / b, 0.0, 1.0);
}

}  // namespace mqn
