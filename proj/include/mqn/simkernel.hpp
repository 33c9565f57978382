#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mqn/config.hpp"
#include "mqn/fockstate.hpp"
#include "mqn/phase_ledger.hpp"
#include "mqn/server.hpp"
#include "mqn/verification.hpp"

namespace mqn {

double entangling_rate(double herald_prob, double rep_rate);

// qfc x fiber x polarization filter x detector
double channel_efficiency(double qfc_efficiency, double fiber_km, double loss_db_per_km, double pol_filter_eff,
                          double detector_eff);
// one arm of a link (arm 0: first node); includes the node's write-out efficiency
double arm_efficiency(const RunConfig& c, LinkId link, int arm);

// Herald-side photon statistics of one link, shared by the trial sampler,
// the analytic herald probability and the conditional state.
struct HeraldChannel {
  std::array<double, 2> chi{};         // excitation parameter per node
  std::array<double, 2> eta{};         // write-out photon -> click efficiency
  std::array<double, 2> source_noise{};// incoherent photons per trial at the ensemble output
  std::array<double, 2> qfc_noise{};   // converter noise photons per gate reaching a detector
  double dark = 0.0;                   // dark counts per detector per gate
  // mean noise photons per detector per gate (all incoherent sources, split 50:50)
  double noise_per_detector() const;
};
HeraldChannel herald_channel(const RunConfig& c, LinkId link);

// P(exactly one of D1, D2 clicks) per trial
double predicted_herald_probability(const HeraldChannel& h);
double predicted_herald_probability(const RunConfig& c, LinkId link);
// common write-out efficiency that makes the link's herald probability hit target
double calibrate_writeout_efficiency(const RunConfig& c, LinkId link, double target);

// Conditional read-out state after a herald, computed on the Fock oracle
// (spin waves and write-out photons at cutoff 2). phi of each state is the
// phase convention of the respective detector; the trial adds the ledger
// phase on top.
struct HeraldModel {
  std::array<FockDensityTwoMode, 2> rho;  // herald on D1, D2
  std::array<double, 2> readout_eta{};    // retrieval x read-out detection per node
  double signal_fraction = 0.0;           // share of heralds carrying a write-out photon
};
HeraldModel herald_model(const RunConfig& c, LinkId link, StorageMode mode);

// EP phase offsets (first node, per link) that null the static part of the
// PME phase. Static parts are the fixed path phases and the lock target.
std::array<double, 3> ep_compensation(const RunConfig& c);

enum class MeasSetting { ZZ, XX, YY };

struct NodeSnapshot {
  NodeState state;
  bool operator==(const NodeSnapshot& o) const {
    const auto& a = state;
    const auto& b = o.state;
    return a.read_phase == b.read_phase && a.read_freq == b.read_freq && a.pump_phase == b.pump_phase &&
           a.pump_freq == b.pump_freq && a.eps == b.eps && a.clock == b.clock && a.bfield_phase == b.bfield_phase;
  }
};

struct TrialRecord {
  std::uint64_t id = 0;
  long cycle = 0;
  LinkId link = LinkId::AB;
  StorageMode mode = StorageMode::Delayed;
  // event times, s
  double t_start = 0.0, t_estimate = 0.0, t_feedback = 0.0, t_write = 0.0, t_read = 0.0, t_herald = 0.0;
  ProbeCounts probe[2];
  double eom_before = 0.0, eom_after = 0.0;
  bool feedback_applied = false;
  bool flagged = false;
  double residual = 0.0;  // phi_rm(t_w) - target
  std::array<int, 2> excitations{};
  std::array<int, 2> herald_clicks{};
  HeraldOutcome herald = HeraldOutcome::None;
  // heralded trials only
  bool measured = false;
  Basis basis = Basis::ZZ;
  double theta_c = 0.0;     // EP setting at node C
  double phi_pme = 0.0;
  int pattern = -1;         // sample_pattern convention
  std::array<int, 2> h_clicks{};  // H-detector (read-out) clicks, ZZ only
  std::optional<PhaseLedger> ledger;
  // replay cursor: master seed, trial id and the carried state at trial start
  std::uint64_t seed = 0;
  NodeSnapshot start_first, start_second;
  double eom_start = 0.0;
};

struct ExperimentOptions {
  StorageMode mode = StorageMode::Delayed;
  long trials = 100000;
  std::optional<std::uint64_t> seed;  // overrides config.seed
  bool keep_ledger = false;           // copy the ledger into heralded records
};

struct LinkStats {
  long trials = 0;
  long heralds[4] = {0, 0, 0, 0};  // indexed by HeraldOutcome
  long flagged = 0;
  double residual_sum = 0.0, residual_sumsq = 0.0;
  double max_abs_detuning = 0.0;
  long calibrations = 0;

  long heralded() const { return heralds[0] + heralds[1]; }
  double residual_sd() const;
  void merge(const LinkStats& o);
};

struct ExperimentSummary {
  long trials = 0;
  long cycles = 0;
  double sim_time = 0.0;  // s of simulated time
  std::array<LinkStats, 3> links{};
  long switches = 0;

  long heralded() const;
  double herald_probability() const;
  double repetition_rate() const;
  double entangling_rate() const { return mqn::entangling_rate(herald_probability(), repetition_rate()); }
  double residual_sd() const;
  // associative, for merging independent seeds
  void merge(const ExperimentSummary& o);
};

struct SwitchLog {
  double time;
  LinkId from, to;
};
struct CalibrationLog {
  double time;
  LinkId link;
  double estimate;      // Hz
  double true_before;   // Hz
  int points;
};

// Event sinks; any may be empty. Trial records are produced for every trial.
struct ExperimentSinks {
  std::function<void(const TrialRecord&)> trial;
  std::function<void(const SwitchLog&)> on_switch;
  std::function<void(const CalibrationLog&)> calibration;
};

ExperimentSummary run_experiment(const RunConfig& c, const ExperimentOptions& opt, const ExperimentSinks& sinks = {});

// Recomputes one trial from its replay cursor. The result matches the
// original record exactly (the ledger is always filled for heralded trials).
TrialRecord replay_trial(const RunConfig& c, const TrialRecord& rec);

}  // namespace mqn
