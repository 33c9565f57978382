#include "mqn/server.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mqn {

void StabilizationConfig::validate() const {
  if (!(tau_pp > 0.0 && tau_delta > 0.0)) throw std::invalid_argument("stabilization: tau_pp and tau_delta must be > 0");
  if (!(pp_photons > 0.0)) throw std::invalid_argument("stabilization: pp_photons must be > 0");
  if (!(feedback_latency >= 0.0)) throw std::invalid_argument("stabilization: feedback_latency must be >= 0");
  if (probes_per_trial != 1 && probes_per_trial != 2)
    throw std::invalid_argument("stabilization: probes_per_trial must be 1 or 2");
  if (!(pp_visibility > 0.0 && pp_visibility <= 1.0))
    throw std::invalid_argument("stabilization: pp_visibility outside (0, 1]");
}

std::optional<double> estimate_phase(const ProbeCounts& p1, const ProbeCounts& p2) {
  if (p1.total() <= 0 || p2.total() <= 0) return std::nullopt;
  const double c = double(p1.d1 - p1.d2) / double(p1.total());
  const double s = double(p2.d1 - p2.d2) / double(p2.total());
  return std::atan2(s, c);
}

std::optional<double> estimate_phase_single(const ProbeCounts& p) {
  if (p.total() <= 0) return std::nullopt;
  const double c = double(p.d1 - p.d2) / double(p.total());
  return std::acos(std::clamp(c, -1.0, 1.0));
}

void ServerState::push_history(LinkId link, CalibrationPoint p) {
  auto& h = history[index(link)];
  h.push_back(p);
  while (h.size() > history_capacity) h.pop_front();
}

void ServerState::save_active() {
  if (started) saved[index(active_link)].eom_setpoint = eom_phase;
}

bool slot_elapsed(const ServerState& s, double now, double slot_length) {
  // 1 ns slack so that slot boundaries computed as k * slot_length count as elapsed
  return !s.started || now - s.slot_started_at >= slot_length - 1e-9;
}

void activate_link(ServerState& s, LinkId link, double now) {
  s.save_active();
  s.switches.push_back({now, s.started ? s.active_link : link, link, !s.started});
  s.active_link = link;
  s.eom_phase = s.saved[index(link)].eom_setpoint;
  s.slot_started_at = now;
  s.started = true;
}

LinkId schedule_next_pair(ServerState& s, Rng& qrng, double now, double slot_length) {
  if (!slot_elapsed(s, now, slot_length)) throw std::logic_error("schedule_next_pair: slot has not elapsed");
  const int k = std::min(2, static_cast<int>(qrng.uniform() * 3.0));
  activate_link(s, kAllLinks[k], now);
  return s.active_link;
}

double apply_feedback(ServerState& s, double estimate, double target) {
  s.eom_phase = wrap_phase(s.eom_phase + target - estimate);
  return s.eom_phase;
}

FeedbackResult apply_feedback(ServerState& s, double estimate, const StabilizationConfig& cfg, double now,
                              double write_time) {
  FeedbackResult r;
  r.eom_before = r.eom_after = s.eom_phase;
  r.effective_at = now + cfg.feedback_latency;
  if (r.effective_at > write_time) return r;
  r.eom_after = apply_feedback(s, estimate, cfg.target_phase);
  r.applied = true;
  return r;
}

FrequencyEstimate calibrate_frequency(const std::vector<CalibrationPoint>& w, double max_gap) {
  // split into segments, unwrap within each
  std::vector<std::vector<CalibrationPoint>> segs;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i == 0 || w[i].t - w[i - 1].t > max_gap || w[i].t < w[i - 1].t) segs.emplace_back();
    CalibrationPoint p = w[i];
    if (segs.back().empty()) {
      segs.back().push_back(p);
      continue;
    }
    const auto& prev = segs.back().back();
    p.phase = prev.phase + wrap_phase(p.phase - prev.phase);
    segs.back().push_back(p);
  }
  double sxx = 0.0, sxy = 0.0;
  int n = 0, used = 0;
  for (const auto& s : segs) {
    if (s.size() < 2) continue;
    double mt = 0.0, mp = 0.0;
    for (const auto& p : s) {
      mt += p.t;
      mp += p.phase;
    }
    mt /= double(s.size());
    mp /= double(s.size());
    for (const auto& p : s) {
      sxx += (p.t - mt) * (p.t - mt);
      sxy += (p.t - mt) * (p.phase - mp);
    }
    n += int(s.size());
    ++used;
  }
  if (n < 2 || !(sxx > 0.0)) throw std::invalid_argument("calibrate_frequency: fewer than two usable points");
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (const auto& s : segs) {
    if (s.size() < 2) continue;
    double mt = 0.0, mp = 0.0;
    for (const auto& p : s) {
      mt += p.t;
      mp += p.phase;
    }
    mt /= double(s.size());
    mp /= double(s.size());
    for (const auto& p : s) {
      const double r = p.phase - mp - slope * (p.t - mt);
      rss += r * r;
    }
  }
  FrequencyEstimate e;
  e.delta_f = slope / kTwoPi;
  const int dof = n - used - 1;
  e.error = dof > 0 ? std::sqrt(rss / dof / sxx) / kTwoPi : 0.0;
  e.points = n;
  e.segments = used;
  return e;
}

void apply_frequency_correction(Node& first, Node& second, bool correct_second, double delta_f) {
  if (correct_second) second.adjust_pump_frequency(delta_f);
  else first.adjust_pump_frequency(-delta_f);
}

std::string to_string(HeraldOutcome h) {
  switch (h) {
    case HeraldOutcome::PsiPlus: return "psi+";
    case HeraldOutcome::PsiMinus: return "psi-";
    case HeraldOutcome::None: return "none";
    case HeraldOutcome::Reject: return "reject";
  }
  return "?";
}

HeraldOutcome herald_outcome_from_string(const std::string& s) {
  if (s == "psi+") return HeraldOutcome::PsiPlus;
  if (s == "psi-") return HeraldOutcome::PsiMinus;
  if (s == "none") return HeraldOutcome::None;
  if (s == "reject") return HeraldOutcome::Reject;
  throw std::invalid_argument("unknown herald outcome: " + s);
}

HeraldOutcome herald(int d1, int d2) {
  if (d1 < 0 || d2 < 0) throw std::invalid_argument("herald: negative click count");
  if (d1 == 0 && d2 == 0) return HeraldOutcome::None;
  if (d1 == 1 && d2 == 0) return HeraldOutcome::PsiPlus;
  if (d1 == 0 && d2 == 1) return HeraldOutcome::PsiMinus;
  return HeraldOutcome::Reject;
}

namespace {
double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }
}  // namespace

double visibility_vs_detuning(double df, const StabilizationConfig& cfg) {
  if (!(std::abs(df) <= 100e3)) throw std::invalid_argument("visibility_vs_detuning: |delta_f| > 100 kHz");
  const double v = std::abs(sinc(kPi * df * cfg.tau_pp)) * std::cos(kTwoPi * df * cfg.tau_delta);
  return std::max(0.0, v);
}

namespace {
double pp_phase(const Node& n) {
  const auto& p = n.params().paths;
  return n.read_phase() + n.pump_phase() + p.phi_r_out + p.phi_wo_out;
}
}  // namespace

double pp_phase_difference(double eom, const Node& first, const Node& second, double) {
  return wrap_phase(eom + pp_phase(first) - pp_phase(second));
}

double pp_detuning(const Node& first, const Node& second, double t) {
  return first.read_laser().frequency_at(t) + first.pump_laser().frequency_at(t) -
         second.read_laser().frequency_at(t) - second.pump_laser().frequency_at(t);
}

LockStep probe_and_lock(ServerState& s, LinkId, Node& first, Node& second, double t0, const StabilizationConfig& cfg,
                        const DetectorParams& det, Rng& rf, Rng& rs, Rng& rd) {
  LockStep out;
  const double eom_before = s.eom_phase;
  for (int k = 0; k < cfg.probes_per_trial; ++k) {
    const double tm = t0 + (k + 0.5) * cfg.tau_pp;
    first.advance_to(tm, rf);
    second.advance_to(tm, rs);
    const double offset = k == 1 ? -kPi / 2.0 : 0.0;
    const double dphi = pp_phase_difference(eom_before + offset, first, second, tm);
    const double v = cfg.pp_visibility * std::abs(sinc(kPi * pp_detuning(first, second, tm) * cfg.tau_pp));
    const auto [m1, m2] = interfere_fields(cfg.pp_photons, cfg.pp_photons, dphi, v);
    out.probe[k].d1 = snspd_detect(m1, det, cfg.tau_pp, rd);
    out.probe[k].d2 = snspd_detect(m2, det, cfg.tau_pp, rd);
  }
  out.estimate = cfg.probes_per_trial == 2 ? estimate_phase(out.probe[0], out.probe[1])
                                           : estimate_phase_single(out.probe[0]);
  out.t_estimate = t0 + cfg.probe_end();
  out.feedback.eom_before = out.feedback.eom_after = eom_before;
  out.feedback.effective_at = out.t_estimate;
  if (out.estimate) {
    out.raw_phase = wrap_phase(*out.estimate - eom_before);
    if (cfg.lock) out.feedback = apply_feedback(s, *out.estimate, cfg, out.t_estimate, t0 + cfg.write_offset());
  }
  out.flagged = !out.estimate || (cfg.lock && !out.feedback.applied);
  return out;
}

StabilizationTrace simulate_stabilization(const StabilizationSim& sim) {
  sim.first.validate();
  sim.second.validate();
  sim.stab.validate();
  sim.detector.validate();
  sim.timing.validate();
  if (sim.trials <= 0) throw std::invalid_argument("simulate_stabilization: trials must be > 0");
  if (sim.calibrate && !(sim.calibration_window > 0.0))
    throw std::invalid_argument("simulate_stabilization: calibration_window must be > 0");

  Node a(sim.first), b(sim.second);
  ServerState s;
  activate_link(s, LinkId::AB, 0.0);
  StabilizationTrace tr;
  if (sim.keep_residuals) {
    tr.t.reserve(sim.trials);
    tr.residual.reserve(sim.trials);
  }
  const int per_cycle = sim.timing.trials_per_cycle();
  const double start = sim.timing.mot_cool + sim.timing.pump;
  std::vector<CalibrationPoint> window;
  double next_cal = sim.calibration_window;
  long trial = 0;
  for (long cycle = 0; trial < sim.trials; ++cycle) {
    const double t_cycle = cycle * sim.timing.mot_period;
    const double det_now = pp_detuning(a, b, t_cycle);
    tr.detuning_t.push_back(t_cycle);
    tr.detuning.push_back(det_now);
    tr.max_abs_detuning = std::max(tr.max_abs_detuning, std::abs(det_now));
    for (int k = 0; k < per_cycle && trial < sim.trials; ++k, ++trial) {
      const double t0 = t_cycle + start + k * sim.timing.trial_length;
      Rng ra(derive_seed(sim.seed, Stream::NodeA, trial));
      Rng rb(derive_seed(sim.seed, Stream::NodeB, trial));
      Rng rd(derive_seed(sim.seed, Stream::Detectors, trial));
      const LockStep step = probe_and_lock(s, LinkId::AB, a, b, t0, sim.stab, sim.detector, ra, rb, rd);
      if (step.flagged) ++tr.flagged;
      if (step.estimate && sim.calibrate) window.push_back({step.t_estimate, step.raw_phase});
      const double tw = t0 + sim.stab.write_offset();
      a.advance_to(tw, ra);
      b.advance_to(tw, rb);
      if (sim.keep_residuals) {
        tr.t.push_back(tw);
        tr.residual.push_back(wrap_phase(pp_phase_difference(s.eom_phase, a, b, tw) - sim.stab.target_phase));
      }
    }
    const double t_end = t_cycle + sim.timing.mot_period;
    if (sim.calibrate && t_end >= next_cal) {
      next_cal += sim.calibration_window;
      if (window.size() >= 2) {
        const FrequencyEstimate e = calibrate_frequency(window);
        tr.cal_t.push_back(t_end);
        tr.cal_estimate.push_back(e.delta_f);
        tr.cal_true_before.push_back(pp_detuning(a, b, t_end));
        apply_frequency_correction(a, b, sim.correct_second, sim.calibration_gain * e.delta_f);
        s.saved[index(LinkId::AB)].freq_offset_estimate = e.delta_f;
      }
      window.clear();
    }
  }
  return tr;
}

}  // namespace mqn
