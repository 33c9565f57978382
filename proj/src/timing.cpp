#include "mqn/timing.hpp"

#include <cmath>
#include <stdexcept>

namespace mqn {

std::string to_string(StorageMode m) { return m == StorageMode::Delayed ? "delayed" : "stored"; }

StorageMode storage_mode_from_string(const std::string& s) {
  if (s == "delayed") return StorageMode::Delayed;
  if (s == "stored") return StorageMode::Stored;
  throw std::invalid_argument("unknown mode: " + s + " (expected delayed|stored)");
}

TimingConfig TimingConfig::delayed() { return TimingConfig{}; }

TimingConfig TimingConfig::stored() {
  TimingConfig t;
  t.mode = StorageMode::Stored;
  t.mot_cool = 24e-3;
  t.mot_period = 28.99e-3;
  t.trial_length = 131e-6;
  t.storage_time = 107e-6;
  return t;
}

int TimingConfig::trials_per_cycle() const {
  // small epsilon so that exact multiples are not lost to rounding
  return static_cast<int>(std::floor(window() / trial_length + 1e-9));
}

void TimingConfig::validate() const {
  auto pos = [](double v, const char* f) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string("timing: ") + f + " must be > 0");
  };
  pos(mot_cool, "mot_cool");
  pos(pump, "pump");
  pos(mot_period, "mot_period");
  pos(trial_length, "trial_length");
  pos(storage_time, "storage_time");
  pos(fiber_delay_per_km, "fiber_delay_per_km");
  if (trials_per_cycle() < 1) throw std::invalid_argument("timing: mot_period leaves no room for a trial");
}

}  // namespace mqn
