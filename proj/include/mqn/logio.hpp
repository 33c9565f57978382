#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mqn/analysis.hpp"
#include "mqn/config.hpp"
#include "mqn/simkernel.hpp"

namespace mqn {

// Log files are line-delimited JSON. Line 1 is a header; then one record per
// line with "type" trial | switch | calibration. Every file carries
// schema_version so analyze can reject logs it does not understand.
inline constexpr int kLogSchemaVersion = 1;

class LogError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

nlohmann::json record_to_json(const TrialRecord& r);
TrialRecord record_from_json(const nlohmann::json& j);  // ledger is not restored
nlohmann::json summary_to_json(const ExperimentSummary& s);
ExperimentSummary summary_from_json(const nlohmann::json& j);
nlohmann::json report_to_json(const EntanglementReport& r);

struct LogHeader {
  RunConfig config;
  std::uint64_t seed = 0;
  StorageMode mode = StorageMode::Delayed;
  long trials = 0;
  bool log_all = false;
  int job = 0;
};

class TrialLogWriter {
public:
  TrialLogWriter(std::ostream& out, const LogHeader& h);
  // heralded trials always; the rest only with log_all
  void trial(const TrialRecord& r);
  void on_switch(const SwitchLog& s);
  void calibration(const CalibrationLog& c);
  ExperimentSinks sinks();

private:
  void line(const nlohmann::json& j);
  std::ostream& out_;
  bool log_all_;
};

struct LoadedLog {
  LogHeader header;
  CountsByLink counts;
  long records = 0;
};

// Reads one trial log and accumulates the coincidence counts; `link`
// restricts to one link when set.
LoadedLog read_trial_log(const std::filesystem::path& file, const std::optional<LinkId>& link = {});
// trials*.jsonl in a directory, sorted by name
std::vector<std::filesystem::path> trial_logs_in(const std::filesystem::path& dir);

}  // namespace mqn
