#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mqn/ids.hpp"
#include "mqn/imperfections.hpp"
#include "mqn/node.hpp"
#include "mqn/photonics.hpp"
#include "mqn/server.hpp"
#include "mqn/timing.hpp"

namespace mqn {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Node -> server arms of one link. Arm 0 belongs to the link's first node.
struct LinkParams {
  std::array<double, 2> arm_km{10.0, 10.0};
  double loss_db_per_km = 0.3;
  std::array<double, 2> pol_filter_eff{0.9, 0.9};
  DetectorParams detector;      // server SNSPDs
  double herald_gate = 200e-9;  // write-out detection window, s
  bool correct_second = true;   // which node's pump takes frequency corrections

  void validate(const std::string& name) const;
};

struct SchedulerConfig {
  double slot_length = 5.8;          // s
  std::vector<LinkId> links{LinkId::AB};  // one entry: fixed link; several: QRNG switching
};

struct CalibrationConfig {
  bool enabled = true;
  double window = 10.0;  // s
  double gain = 1.0;
};

struct AnalysisConfig {
  double ep_mean_photons = 0.03;
  std::array<double, 3> basis_weights{1.0, 1.0, 1.0};  // ZZ, XX, YY
  int bootstrap = 200;
  // EP phase settings applied at node C (rad); empty: no sweep
  std::vector<double> theta_sweep;
  double theta_dwell = 5.8;  // s per setting
  // "link": each link's EP phases null its static PME phase (node knows the
  // active link). "AB": one node-local setting that nulls A-B only, as used
  // for the three-link phase relation.
  std::string ep_reference = "link";
};

struct RunConfig {
  std::array<NodeParams, 3> nodes;
  std::array<LinkParams, 3> links;
  StabilizationConfig server;
  SchedulerConfig scheduler;
  CalibrationConfig calibration;
  TimingConfig delayed = TimingConfig::delayed();
  TimingConfig stored = TimingConfig::stored();
  AnalysisConfig analysis;
  std::array<ImperfectionBudget, 5> budgets;  // ST5, ST107, A-B, A-C, B-C
  std::uint64_t seed = 1;

  static RunConfig defaults();
  const NodeParams& node(NodeId n) const { return nodes[index(n)]; }
  const LinkParams& link(LinkId l) const { return links[index(l)]; }
  const TimingConfig& timing(StorageMode m) const { return m == StorageMode::Delayed ? delayed : stored; }
  void validate() const;  // throws ConfigError
};

// Partial documents override the defaults; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);
RunConfig load_config(const std::string& path);
// $MQN_CONFIG if set, otherwise the built-in defaults
RunConfig load_default_config();

inline constexpr int kConfigSchemaVersion = 1;

}  // namespace mqn
