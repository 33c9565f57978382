#include "mqn/node.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "mqn/stats.hpp"

namespace mqn {

double evolve_laser_phase(LaserModel& laser, double t, double dt, Rng& rng) {
  if (dt < 0.0) throw std::invalid_argument("evolve_laser_phase: dt < 0");
  if (dt == 0.0) return 0.0;
  // integral of 2 pi f(s) over [t, t+dt] with f linear in time
  double inc = kTwoPi * (laser.frequency_offset * dt + laser.drift_rate / 3600.0 * (t * dt + 0.5 * dt * dt));
  if (laser.linewidth > 0.0) {
    inc += std::sqrt(kTwoPi * laser.linewidth * dt) * rng.normal();
  }
  laser.phase = wrap_phase(laser.phase + inc);
  return inc;
}

double OpllModel::increment_sd(double dt) const {
  if (jitter_tau <= 0.0) return 0.0;
  return std::sqrt(2.0 * jitter_sd * jitter_sd * (1.0 - std::exp(-dt / jitter_tau)));
}

void NodeParams::validate() const {
  auto unit = [&](double v, const char* f) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("node " + name + ": " + f + " outside [0,1]");
  };
  if (!(chi > 0.0 && chi <= 0.1)) throw std::invalid_argument("node " + name + ": chi outside (0, 0.1]");
  unit(eta_r, "eta_r");
  unit(qfc_efficiency, "qfc_efficiency");
  unit(writeout_efficiency, "writeout_efficiency");
  unit(readout_efficiency, "readout_efficiency");
  unit(mode_overlap, "mode_overlap");
  unit(b_field_jitter_fraction, "b_field_jitter_fraction");
  if (!(snr > 0.0)) throw std::invalid_argument("node " + name + ": snr must be > 0");
  if (!(clock_reduction > 0.0 && clock_reduction <= 1.0))
    throw std::invalid_argument("node " + name + ": clock_reduction outside (0, 1]");
  if (qfc_noise_rate < 0.0 || b_field_sd < 0.0 || b_field_freq < 0.0 || interferometer_phase_sd < 0.0 ||
      read.linewidth < 0.0 || pump.linewidth < 0.0 || opll.jitter_sd < 0.0)
    throw std::invalid_argument("node " + name + ": rates and SDs must be >= 0");
  if (!(opll.jitter_tau > 0.0)) throw std::invalid_argument("node " + name + ": opll jitter_tau must be > 0");
  if (!(max_storage > 0.0) || !(retrieval_tau > 0.0))
    throw std::invalid_argument("node " + name + ": storage times must be > 0");
}

double NodeParams::eta_r_at(double storage) const {
  const double x = storage / retrieval_tau;
  return eta_r * std::exp(-x * x);
}

double MemorySlot::retrieval_eta_at(double t) const {
  const double x = (t - created_at) / tau;
  return eta0 * std::exp(-x * x);
}

Node::Node(NodeParams p) : p_(std::move(p)), read_(p_.read), pump_(p_.pump) {}

double Node::write_phase() const { return wrap_phase(read_.phase + p_.opll.theta + eps_); }

void Node::advance_to(double t, Rng& rng) {
  const double dt = t - clock_;
  if (dt < 0.0) throw std::logic_error("Node::advance_to: time went backwards");
  if (dt == 0.0) return;
  evolve_laser_phase(read_, clock_, dt, rng);
  evolve_laser_phase(pump_, clock_, dt, rng);
  if (p_.opll.jitter_sd > 0.0) {
    const double a = std::exp(-dt / p_.opll.jitter_tau);
    eps_ = eps_ * a + p_.opll.jitter_sd * std::sqrt(1.0 - a * a) * rng.normal();
  }
  clock_ = t;
}

void Node::start_cycle(Rng& rng) { bfield_phase_ = kTwoPi * rng.uniform(); }

double Node::b_jitter_sd() const { return p_.b_field_sd * std::sqrt(p_.b_field_jitter_fraction); }

std::vector<double> Node::b_trace(double t0, double dt, double jitter, int samples) const {
  const double amp = std::sqrt(2.0 * (1.0 - p_.b_field_jitter_fraction)) * p_.b_field_sd;
  std::vector<double> b(samples);
  for (int i = 0; i < samples; ++i) {
    const double t = t0 + (samples > 1 ? dt * i / (samples - 1) : 0.0);
    b[i] = amp * std::sin(kTwoPi * p_.b_field_freq * t + bfield_phase_) + jitter;
  }
  return b;
}

NodeState Node::state() const {
  return {read_.phase, read_.frequency_offset, pump_.phase, pump_.frequency_offset, eps_, clock_, bfield_phase_};
}

void Node::restore(const NodeState& s) {
  read_.phase = s.read_phase;
  read_.frequency_offset = s.read_freq;
  pump_.phase = s.pump_phase;
  pump_.frequency_offset = s.pump_freq;
  eps_ = s.eps;
  clock_ = s.clock;
  bfield_phase_ = s.bfield_phase;
}

WriteResult write_trial(const NodeParams& p, Rng& rng) {
  const double u = rng.uniform();
  const double p0 = 1.0 - p.chi;
  const double p1 = p0 * p.chi;
  WriteResult r;
  if (u < p0) r.excitations = 0;
  else if (u < p0 + p1) r.excitations = 1;
  else r.excitations = 2;
  r.writeout_present = r.excitations > 0;
  return r;
}

WriteResult write_trial(const Node& node, double t_w, NodeEntries& e, Rng& rng) {
  if (std::abs(node.clock() - t_w) > 1e-15) throw std::logic_error("write_trial: node not advanced to t_w");
  const auto& p = node.params();
  e.t_w = t_w;
  e.record(Sym::VarphiW_tw, node.write_phase());
  e.record(Sym::VarphiP_tw, node.pump_phase());
  e.record(Sym::VarphiR_tw, node.read_phase());
  e.record(Sym::PhiW, p.paths.phi_w);
  double jitter = 0.0;
  if (p.interferometer_phase_sd > 0.0) jitter = p.interferometer_phase_sd * rng.normal();
  e.record(Sym::PhiWoIn, p.paths.phi_wo_in + jitter);
  e.record(Sym::PhiWoOut, p.paths.phi_wo_out);
  return write_trial(p, rng);
}

QfcResult qfc_convert(int photons, const NodeParams& p, double gate, Rng& rng) {
  if (!(gate > 0.0)) throw std::invalid_argument("qfc_convert: gate must be > 0");
  QfcResult r;
  if (photons > 0 && p.qfc_efficiency > 0.0) {
    std::binomial_distribution<int> b(photons, p.qfc_efficiency);
    r.signal = b(rng);
  }
  const double mean_noise = p.qfc_noise_rate * gate;
  if (mean_noise > 0.0) {
    r.noise = poisson_draw(mean_noise, rng);
  }
  return r;
}

ReadResult read_retrieve(const Node& node, MemorySlot& slot, double t, Rng& rng) {
  if (!slot.occupied) throw std::logic_error("read_retrieve: slot not occupied");
  if (t - slot.created_at > slot.max_storage) throw std::out_of_range("read_retrieve: storage expired");
  ReadResult r;
  r.readout_present = rng.uniform() < slot.retrieval_eta_at(t);
  r.phase = wrap_phase(slot.accumulated_phase + node.read_phase());
  slot.occupied = false;
  return r;
}

double memory_phase(const std::vector<double>& b, double dt, bool clock, double clock_reduction) {
  if (dt < 0.0) throw std::invalid_argument("memory_phase: dt < 0");
  if (b.empty() || dt == 0.0) return 0.0;
  double avg = b.front();
  if (b.size() > 1) {
    double s = 0.5 * (b.front() + b.back());
    for (std::size_t i = 1; i + 1 < b.size(); ++i) s += b[i];
    avg = s / static_cast<double>(b.size() - 1);
  }
  const double phase = 2.0 * kTwoPi * kMuBOverH * kGF * avg * dt;
  return clock ? phase * clock_reduction : phase;
}

CoherentField make_probe_pulse(const Node& node, PulseKind kind, double t, double mean_photons, double duration) {
  const auto& p = node.params();
  CoherentField f;
  f.mean_photons = mean_photons;
  f.duration = duration;
  if (kind == PulseKind::PP) {
    f.phase = wrap_phase(node.read_phase() + node.pump_phase() + p.paths.phi_r_out + p.paths.phi_wo_out);
    f.frequency_offset = node.read_laser().frequency_at(t) + node.pump_laser().frequency_at(t);
  } else {
    f.phase = wrap_phase(node.write_phase() + p.paths.phi_ep);
    f.frequency_offset = node.read_laser().frequency_at(t);
  }
  return f;
}

}  // namespace mqn
