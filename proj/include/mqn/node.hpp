#pragma once

#include <string>
#include <vector>

#include "mqn/phase_ledger.hpp"
#include "mqn/rng.hpp"

namespace mqn {

// Bohr magneton over h, Hz per gauss, and the ground-state Lande factor used
inline constexpr double kMuBOverH = 1.3996e6;
inline constexpr double kGF = 0.5;

struct LaserModel {
  double linewidth = 0.0;         // Hz (Wiener phase diffusion)
  double drift_rate = 0.0;        // Hz per hour
  double frequency_offset = 0.0;  // Hz at t = 0
  double phase = 0.0;             // rad, kept wrapped

  double frequency_at(double t) const { return frequency_offset + drift_rate * t / 3600.0; }
};

// Advances the laser from time t to t + dt; returns the unwrapped increment.
double evolve_laser_phase(LaserModel& laser, double t, double dt, Rng& rng);

// Write laser slaved to the Read laser with a fixed offset and an
// Ornstein-Uhlenbeck jitter: varphi_w = varphi_r + theta + eps.
struct OpllModel {
  double theta = 0.0;
  double jitter_sd = 0.0;   // stationary SD of eps, rad
  double jitter_tau = 5e-6; // correlation time, s

  // SD of eps(t + dt) - eps(t)
  double increment_sd(double dt) const;
};

struct PathPhases {
  double phi_w = 0.0;
  double phi_wo_in = 0.0;
  double phi_wo_out = 0.0;
  double phi_r_in = 0.0;
  double phi_r_out = 0.0;
  double phi_ro = 0.0;
  double phi_ep = 0.0;
};

struct NodeParams {
  std::string name = "A";
  double chi = 0.01;
  double eta_r = 0.45;              // retrieval efficiency at zero storage
  double snr = 20.0;                // intrinsic write-out signal to noise
  double qfc_efficiency = 0.46;
  double qfc_noise_rate = 100.0;    // Hz at the converter output
  double b_field_sd = 1.9e-3;       // G
  double b_field_freq = 50.0;       // Hz
  double b_field_jitter_fraction = 0.1;  // share of the B variance that is white
  double clock_reduction = 1e-3;
  LaserModel read;
  LaserModel pump;
  OpllModel opll;
  double interferometer_phase_sd = 0.0;
  double max_storage = 560e-6;
  double retrieval_tau = 600e-6;    // Gaussian decay time of eta_r
  double writeout_efficiency = 0.12;  // escape and coupling before the converter
  double readout_efficiency = 0.5;    // local read-out detection path
  double mode_overlap = 0.9;          // read-out / EP indistinguishability
  PathPhases paths;

  void validate() const;
  double eta_r_at(double storage) const;
};

struct MemorySlot {
  bool occupied = false;
  double created_at = 0.0;
  double accumulated_phase = 0.0;
  double eta0 = 1.0;
  double tau = 1.0;
  double max_storage = 1.0;

  double retrieval_eta_at(double t) const;
};

// State carried between trials (what a replay needs)
struct NodeState {
  double read_phase = 0.0;
  double read_freq = 0.0;
  double pump_phase = 0.0;
  double pump_freq = 0.0;
  double eps = 0.0;
  double clock = 0.0;
  double bfield_phase = 0.0;
};

class Node {
public:
  explicit Node(NodeParams p);

  const NodeParams& params() const { return p_; }
  NodeParams& mutable_params() { return p_; }

  void advance_to(double t, Rng& rng);
  // new MOT cycle: fresh B-field phase
  void start_cycle(Rng& rng);

  double read_phase() const { return read_.phase; }
  double pump_phase() const { return pump_.phase; }
  double write_phase() const;
  double clock() const { return clock_; }
  const LaserModel& read_laser() const { return read_; }
  const LaserModel& pump_laser() const { return pump_; }
  // frequency corrections land on the pump laser
  void adjust_pump_frequency(double delta_hz) { pump_.frequency_offset += delta_hz; }
  void set_read_linewidth(double hz) { read_.linewidth = hz; }

  // B-field samples over [t0, t0 + dt]; jitter is the per-trial white part
  std::vector<double> b_trace(double t0, double dt, double jitter, int samples = 5) const;
  double b_jitter_sd() const;

  NodeState state() const;
  void restore(const NodeState& s);

private:
  NodeParams p_;
  LaserModel read_;
  LaserModel pump_;
  double eps_ = 0.0;
  double clock_ = 0.0;
  double bfield_phase_ = 0.0;
};

struct WriteResult {
  int excitations = 0;
  bool writeout_present = false;
};

// Thermal pair statistics truncated at two excitations: P(n) = (1 - chi) chi^n.
WriteResult write_trial(const NodeParams& p, Rng& rng);
// Same draw plus ledger entries for the write at t_w (node advanced to t_w).
WriteResult write_trial(const Node& node, double t_w, NodeEntries& entries, Rng& rng);

struct QfcResult {
  int signal = 0;
  int noise = 0;
};
QfcResult qfc_convert(int photons, const NodeParams& p, double gate, Rng& rng);

struct ReadResult {
  bool readout_present = false;
  double phase = 0.0;
};
// node must be advanced to t
ReadResult read_retrieve(const Node& node, MemorySlot& slot, double t, Rng& rng);

double memory_phase(const std::vector<double>& b_trace, double dt, bool clock, double clock_reduction = 1e-3);

enum class PulseKind { PP, EP };
struct CoherentField {
  double mean_photons = 0.0;
  double phase = 0.0;
  double frequency_offset = 0.0;  // Hz relative to nominal
  double duration = 0.0;
};
CoherentField make_probe_pulse(const Node& node, PulseKind kind, double t, double mean_photons, double duration);

}  // namespace mqn
