#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "mqn/ids.hpp"
#include "mqn/node.hpp"
#include "mqn/photonics.hpp"
#include "mqn/rng.hpp"
#include "mqn/stats.hpp"
#include "mqn/timing.hpp"

namespace mqn {

struct StabilizationConfig {
  double tau_pp = 4e-6;            // one PP pulse
  double tau_delta = 5e-6;         // gap between the last probe and the write
  double pp_photons = 100.0;       // per node pulse at the beamsplitter
  double feedback_latency = 2e-6;
  int probes_per_trial = 2;        // 2: I and Q quadratures; 1: single cosine probe
  double target_phase = kPi / 2.0;
  double pp_visibility = 0.98;     // intrinsic PP interference visibility
  bool lock = true;                // false: probes measured, no feedback

  double probe_end() const { return probes_per_trial * tau_pp; }
  // write time relative to trial start
  double write_offset() const { return probe_end() + tau_delta; }
  void validate() const;
};

struct ProbeCounts {
  long d1 = 0, d2 = 0;
  long total() const { return d1 + d2; }
};

// atan2(s, c) from the I probe and the Q probe (EOM offset -pi/2); nullopt
// when either probe has no counts.
std::optional<double> estimate_phase(const ProbeCounts& probe1, const ProbeCounts& probe2);
// single cosine probe; assumes the lock keeps the phase in [0, pi]
std::optional<double> estimate_phase_single(const ProbeCounts& probe);

struct LinkSavedState {
  double eom_setpoint = 0.0;
  std::array<double, 2> pol_filter_eff{1.0, 1.0};  // first arm, second arm
  double freq_offset_estimate = 0.0;                // Hz, last calibration
  bool operator==(const LinkSavedState&) const = default;
};

struct CalibrationPoint {
  double t = 0.0;
  double phase = 0.0;  // open-loop PP phase difference (estimate minus EOM)
};

struct SwitchEvent {
  double time = 0.0;
  LinkId from = LinkId::AB;
  LinkId to = LinkId::AB;
  bool initial = false;
};

struct ServerState {
  LinkId active_link = LinkId::AB;
  bool started = false;
  double slot_started_at = 0.0;
  double eom_phase = 0.0;
  std::array<LinkSavedState, 3> saved{};
  std::array<std::deque<CalibrationPoint>, 3> history{};
  std::size_t history_capacity = 1u << 16;
  std::vector<SwitchEvent> switches;

  void push_history(LinkId link, CalibrationPoint p);
  // copy the live EOM value into the active link's saved state
  void save_active();
};

bool slot_elapsed(const ServerState& s, double now, double slot_length);
// Draws the next link uniformly from the QRNG stream, saves the outgoing
// link's state and loads the incoming one. Throws std::logic_error if called
// before the current slot has elapsed.
LinkId schedule_next_pair(ServerState& s, Rng& qrng, double now, double slot_length = 5.8);
// fixed assignment (no randomness), same save/load semantics
void activate_link(ServerState& s, LinkId link, double now);

// eom += target - estimate, wrapped; returns the new EOM phase
double apply_feedback(ServerState& s, double estimate, double target = kPi / 2.0);

struct FeedbackResult {
  bool applied = false;
  double eom_before = 0.0;
  double eom_after = 0.0;
  double effective_at = 0.0;
};
// Timing-aware form: the correction lands feedback_latency after `now` and
// must do so before the write; otherwise it is skipped.
FeedbackResult apply_feedback(ServerState& s, double estimate, const StabilizationConfig& cfg, double now,
                              double write_time);

struct FrequencyEstimate {
  double delta_f = 0.0;  // Hz
  double error = 0.0;    // Hz, from the fit residuals
  int points = 0;
  int segments = 0;
};
// Least-squares slope of the unwrapped phase, pooled over segments separated
// by gaps longer than max_gap (MOT cooling). Consecutive points are unwrapped
// by the smallest step. Throws std::invalid_argument with fewer than two
// usable points.
FrequencyEstimate calibrate_frequency(const std::vector<CalibrationPoint>& window, double max_gap = 1e-3);

// The PP beat is (read + pump)_first - (read + pump)_second; the correction
// goes to one node's pump laser.
void apply_frequency_correction(Node& first, Node& second, bool correct_second, double delta_f);

enum class HeraldOutcome { PsiPlus, PsiMinus, None, Reject };
std::string to_string(HeraldOutcome h);
HeraldOutcome herald_outcome_from_string(const std::string& s);
HeraldOutcome herald(int clicks_d1, int clicks_d2);

// |sinc(pi df tau_pp)| * cos(2 pi df tau_delta), clipped at 0
double visibility_vs_detuning(double delta_f, const StabilizationConfig& cfg);

// PP phase difference as seen at the beamsplitter right now:
// eom + PP(first) - PP(second)
double pp_phase_difference(double eom, const Node& first, const Node& second, double t);
// (read + pump) frequency difference first - second at time t
double pp_detuning(const Node& first, const Node& second, double t);

struct LockStep {
  ProbeCounts probe[2];
  std::optional<double> estimate;
  FeedbackResult feedback;
  double raw_phase = 0.0;   // estimate - eom before feedback
  double t_estimate = 0.0;
  bool flagged = false;     // no estimate or feedback skipped
};
// Runs the probes of one trial starting at t0 and applies the feedback.
// Nodes are advanced to the probe midpoints with their own streams.
LockStep probe_and_lock(ServerState& s, LinkId link, Node& first, Node& second, double t0,
                        const StabilizationConfig& cfg, const DetectorParams& det, Rng& rng_first, Rng& rng_second,
                        Rng& rng_det);

// Stabilization-only run of one link (no write/herald physics): used for
// phase-lock statistics and the frequency-calibration loop.
struct StabilizationSim {
  NodeParams first, second;
  StabilizationConfig stab;
  DetectorParams detector;
  TimingConfig timing;
  long trials = 100000;
  std::uint64_t seed = 1;
  bool calibrate = false;
  double calibration_window = 10.0;  // s of simulated time per estimate
  double calibration_gain = 1.0;
  bool correct_second = true;
  bool keep_residuals = true;
};

struct StabilizationTrace {
  std::vector<double> t;
  std::vector<double> residual;        // phi_rm(t_w) - target, wrapped
  std::vector<double> cal_t;           // calibration instants
  std::vector<double> cal_estimate;    // Hz
  std::vector<double> cal_true_before; // true detuning before the correction, Hz
  std::vector<double> detuning_t;      // once per MOT cycle
  std::vector<double> detuning;        // true detuning, Hz
  long flagged = 0;
  double max_abs_detuning = 0.0;
};
StabilizationTrace simulate_stabilization(const StabilizationSim& sim);

}  // namespace mqn
