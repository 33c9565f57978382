#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mqn/rng.hpp"

namespace mqn {

struct DetectorParams {
  double efficiency = 0.8;
  double dark_rate = 100.0;            // Hz
  double dead_time = 20e-9;            // s
  double latch_flux_threshold = 1e8;   // incident photons/s
  double latch_recovery = 1e-3;        // s

  void validate() const;
};

enum class ClickOrigin { Signal, Dark, Noise };
std::string to_string(ClickOrigin o);
ClickOrigin click_origin_from_string(const std::string& s);

struct ClickRecord {
  int detector = 0;
  double timestamp = 0.0;
  ClickOrigin origin = ClickOrigin::Signal;
};

// Count-only detection: Poisson(eff*mean + dark*gate), capped at one click per
// dead time; an incident flux above the latch threshold yields no clicks.
int snspd_detect(double mean_photons, const DetectorParams& p, double gate, Rng& rng);

// Time-resolved detection with origin tags. Signal and noise photons are
// incident means; clicks closer than the dead time to an earlier kept click
// are dropped.
std::vector<ClickRecord> snspd_detect_tagged(int detector, double signal_photons, double noise_photons,
                                             const DetectorParams& p, double gate_start, double gate, Rng& rng);

// Stateful wrapper that remembers a latch until recovery
class Snspd {
public:
  explicit Snspd(DetectorParams p = {}) : params_(p) {}
  int detect(double t, double mean_photons, double gate, Rng& rng);
  bool latched_at(double t) const { return t < latched_until_; }
  const DetectorParams& params() const { return params_; }

private:
  DetectorParams params_;
  double latched_until_ = -1.0;
};

// mean counts at the two output ports of a 50:50 beamsplitter
std::pair<double, double> interfere_fields(double n_a, double n_b, double dphi, double visibility);

double hom_g2(double p_ro, double p_ep, double eta);
double invert_g2(double g2, double p_ro, double p_ep);

}  // namespace mqn
