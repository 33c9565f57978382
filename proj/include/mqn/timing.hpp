#pragma once

#include <string>

namespace mqn {

// delayed: read 5 us after the write, before the herald returns.
// stored: spin wave moved to the clock transition, read after 107 us.
enum class StorageMode { Delayed, Stored };
std::string to_string(StorageMode m);
StorageMode storage_mode_from_string(const std::string& s);

struct TimingConfig {
  StorageMode mode = StorageMode::Delayed;
  double mot_cool = 25e-3;
  double pump = 1e-3;
  double mot_period = 28.62e-3;
  double trial_length = 33e-6;
  double storage_time = 5e-6;
  double fiber_delay_per_km = 5e-6;

  static TimingConfig delayed();
  static TimingConfig stored();

  bool clock_transition() const { return mode == StorageMode::Stored; }
  double window() const { return mot_period - mot_cool - pump; }
  // trials that fit in the measurement window after cooling and pumping
  int trials_per_cycle() const;
  double repetition_rate() const { return trials_per_cycle() / mot_period; }
  void validate() const;
};

}  // namespace mqn
