#include "mqn/simkernel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "mqn/stats.hpp"

namespace mqn {

double entangling_rate(double herald_prob, double rep_rate) {
  if (herald_prob < 0.0 || rep_rate < 0.0) throw std::invalid_argument("entangling_rate: negative input");
  return herald_prob * rep_rate;
}

double channel_efficiency(double qfc, double km, double db_per_km, double pol, double det) {
  if (km < 0.0) throw std::invalid_argument("channel_efficiency: fiber length < 0");
  return qfc * std::pow(10.0, -db_per_km * km / 10.0) * pol * det;
}

namespace {

NodeId arm_node(LinkId l, int arm) { return arm == 0 ? first_node(l) : second_node(l); }

// fiber x filter x detector, i.e. everything after the converter
double after_qfc(const RunConfig& c, LinkId l, int arm) {
  const auto& lp = c.link(l);
  return channel_efficiency(1.0, lp.arm_km[arm], lp.loss_db_per_km, lp.pol_filter_eff[arm], lp.detector.efficiency);
}

}  // namespace

double arm_efficiency(const RunConfig& c, LinkId l, int arm) {
  const auto& n = c.node(arm_node(l, arm));
  return n.writeout_efficiency * n.qfc_efficiency * after_qfc(c, l, arm);
}

double HeraldChannel::noise_per_detector() const {
  return 0.5 * (source_noise[0] * eta[0] + source_noise[1] * eta[1] + qfc_noise[0] + qfc_noise[1]) + dark;
}

HeraldChannel herald_channel(const RunConfig& c, LinkId l) {
  HeraldChannel h;
  const auto& lp = c.link(l);
  for (int k = 0; k < 2; ++k) {
    const auto& n = c.node(arm_node(l, k));
    h.chi[k] = n.chi;
    h.eta[k] = arm_efficiency(c, l, k);
    h.source_noise[k] = n.chi / n.snr;
    h.qfc_noise[k] = n.qfc_noise_rate * lp.herald_gate * after_qfc(c, l, k);
  }
  h.dark = lp.detector.dark_rate * lp.herald_gate;
  return h;
}

namespace {

// excitation statistics of write_trial: 1 - chi, (1 - chi) chi, chi^2
std::array<double, 3> excitation_probs(double chi) { return {1.0 - chi, (1.0 - chi) * chi, chi * chi}; }

// arriving photon number distribution of one arm (0..2)
std::array<double, 3> arriving(double chi, double eta) {
  const auto p = excitation_probs(chi);
  return {p[0] + p[1] * (1 - eta) + p[2] * (1 - eta) * (1 - eta), p[1] * eta + p[2] * 2 * eta * (1 - eta),
          p[2] * eta * eta};
}

}  // namespace

double predicted_herald_probability(const HeraldChannel& h) {
  const auto a = arriving(h.chi[0], h.eta[0]);
  const auto b = arriving(h.chi[1], h.eta[1]);
  const double q0 = std::exp(-h.noise_per_detector());  // no noise on one detector
  double p = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int n = i + j;
      const double all_d1 = std::pow(0.5, n);
      p += a[i] * b[j] * all_d1 * q0 * (n == 0 ? 1.0 - q0 : 1.0);
    }
  return 2.0 * p;
}

double predicted_herald_probability(const RunConfig& c, LinkId l) {
  return predicted_herald_probability(herald_channel(c, l));
}

double calibrate_writeout_efficiency(const RunConfig& c, LinkId l, double target) {
  RunConfig w = c;
  auto at = [&](double eff) {
    for (auto& n : w.nodes) n.writeout_efficiency = eff;
    return predicted_herald_probability(w, l);
  };
  double lo = 0.0, hi = 1.0;
  if (at(hi) < target || at(lo) > target)
    throw std::invalid_argument("calibrate_writeout_efficiency: target out of reach");
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (at(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

HeraldModel herald_model(const RunConfig& c, LinkId l, StorageMode mode) {
  const HeraldChannel h = herald_channel(c, l);
  const int cutoff = 2;
  auto node_state = [&](double chi, const std::string& a, const std::string& p) {
    const auto w = excitation_probs(chi);
    TruncatedState s = vacuum_state({a, p}, cutoff);
    Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(s.dim());
    for (int k = 0; k <= 2; ++k) amp(s.index_of({k, k})) = std::sqrt(w[k]);
    return pure_state({a, p}, cutoff, amp);
  };
  TruncatedState s = tensor(node_state(h.chi[0], "aA", "pA"), node_state(h.chi[1], "aB", "pB"));
  s = apply_loss(s, "pA", h.eta[0]);
  s = apply_loss(s, "pB", h.eta[1]);
  s = mix_modes(s, "pA", "pB");  // pA -> D1, pB -> D2

  const double q0 = std::exp(-h.noise_per_detector());
  const double storage = c.timing(mode).storage_time;
  HeraldModel m;
  for (int k = 0; k < 2; ++k) {
    const auto& n = c.node(arm_node(l, k));
    m.readout_eta[k] = n.eta_r_at(storage) * n.readout_efficiency;
  }
  for (int d = 0; d < 2; ++d) {
    const std::string hit = d == 0 ? "pA" : "pB", other = d == 0 ? "pB" : "pA";
    auto [dark_other, p_other] = herald_project(s, other, ClickOutcome::NoClick);
    auto [sig, p_sig] = herald_project(dark_other, hit, ClickOutcome::Click);
    auto [vac, p_vac] = herald_project(dark_other, hit, ClickOutcome::NoClick);
    // noise on the other detector would turn the event into a reject
    const double w_sig = p_other * p_sig * q0;
    const double w_vac = p_other * p_vac * q0 * (1.0 - q0);
    TruncatedState mix = sig;
    mix.rho = (w_sig * sig.rho + w_vac * vac.rho) / (w_sig + w_vac);
    mix.is_pure = false;
    if (d == 0) m.signal_fraction = w_sig / (w_sig + w_vac);
    TruncatedState atoms = partial_trace(mix, {"aA", "aB"});
    atoms = apply_loss(atoms, "aA", m.readout_eta[0]);
    atoms = apply_loss(atoms, "aB", m.readout_eta[1]);
    m.rho[d] = to_two_mode(atoms, "aA", "aB");
  }
  return m;
}

namespace {

double static_local(const NodeParams& n) {
  const auto& p = n.paths;
  return p.phi_w + p.phi_wo_in + p.phi_r_in + p.phi_ro - p.phi_ep;
}

}  // namespace

std::array<double, 3> ep_compensation(const RunConfig& c) {
  std::array<double, 3> out{};
  for (LinkId l : kAllLinks)
    out[index(l)] =
        wrap_phase(static_local(c.node(first_node(l))) - static_local(c.node(second_node(l))) + c.server.target_phase);
  return out;
}

double LinkStats::residual_sd() const {
  if (trials < 2) return 0.0;
  const double m = residual_sum / trials;
  return std::sqrt(std::max(0.0, (residual_sumsq - trials * m * m) / (trials - 1)));
}

void LinkStats::merge(const LinkStats& o) {
  trials += o.trials;
  for (int i = 0; i < 4; ++i) heralds[i] += o.heralds[i];
  flagged += o.flagged;
  residual_sum += o.residual_sum;
  residual_sumsq += o.residual_sumsq;
  max_abs_detuning = std::max(max_abs_detuning, o.max_abs_detuning);
  calibrations += o.calibrations;
}

long ExperimentSummary::heralded() const {
  long n = 0;
  for (const auto& l : links) n += l.heralded();
  return n;
}

double ExperimentSummary::herald_probability() const { return trials > 0 ? double(heralded()) / trials : 0.0; }

double ExperimentSummary::repetition_rate() const { return sim_time > 0.0 ? trials / sim_time : 0.0; }

double ExperimentSummary::residual_sd() const {
  LinkStats all;
  for (const auto& l : links) all.merge(l);
  return all.residual_sd();
}

void ExperimentSummary::merge(const ExperimentSummary& o) {
  trials += o.trials;
  cycles += o.cycles;
  sim_time += o.sim_time;
  for (int i = 0; i < 3; ++i) links[i].merge(o.links[i]);
  switches += o.switches;
}

// ---------------------------------------------------------------- trial

namespace {

Stream node_stream(NodeId n) { return static_cast<Stream>(static_cast<std::uint64_t>(Stream::NodeA) + index(n)); }

struct Kernel {
  const RunConfig& c;
  StorageMode mode;
  std::uint64_t seed;
  const TimingConfig& timing;
  std::array<HeraldChannel, 3> channel;
  std::array<HeraldModel, 3> model;
  std::array<double, 3> comp;
  std::array<double, 3> basis_cdf;

  Kernel(const RunConfig& cfg, StorageMode m, std::uint64_t s)
      : c(cfg), mode(m), seed(s), timing(cfg.timing(m)), comp(ep_compensation(cfg)) {
    for (LinkId l : kAllLinks) {
      channel[index(l)] = herald_channel(c, l);
      model[index(l)] = herald_model(c, l, mode);
    }
    const auto& w = c.analysis.basis_weights;
    const double sum = w[0] + w[1] + w[2];
    basis_cdf = {w[0] / sum, (w[0] + w[1]) / sum, 1.0};
  }

  double theta_c(double t) const {
    const auto& sw = c.analysis.theta_sweep;
    if (sw.empty()) return 0.0;
    const auto k = static_cast<std::size_t>(std::floor(t / c.analysis.theta_dwell));
    return sw[k % sw.size()];
  }

  // EP phase setting of a node while `link` is active
  double ep_setting(NodeId n, LinkId link, double t) const {
    double v = 0.0;
    if (c.analysis.ep_reference == "AB") {
      if (n == NodeId::A) v += comp[index(LinkId::AB)];
    } else if (n == first_node(link)) {
      v += comp[index(link)];
    }
    if (n == NodeId::C) v += theta_c(t);
    return v;
  }

  void record_read(const Node& node, NodeEntries& e, double t_w, double t_r, double ep, Rng& rng) const {
    const auto& p = node.params();
    const double storage = t_r - t_w;
    double jitter = 0.0;
    if (p.b_field_sd > 0.0) jitter = node.b_jitter_sd() * rng.normal();
    const auto trace = node.b_trace(t_w, storage, jitter);
    e.t_r = t_r;
    e.record(Sym::PhiA, memory_phase(trace, storage, mode == StorageMode::Stored, p.clock_reduction));
    e.record(Sym::VarphiW_tr, node.write_phase());
    e.record(Sym::VarphiR_tr, node.read_phase());
    e.record(Sym::PhiRIn, p.paths.phi_r_in);
    e.record(Sym::PhiROut, p.paths.phi_r_out);
    e.record(Sym::PhiRo, p.paths.phi_ro);
    e.record(Sym::PhiEP, p.paths.phi_ep + ep);
  }

  // one trial of `link` starting at t0; the nodes and server carry state
  TrialRecord trial(std::uint64_t id, long cycle, LinkId link, double t0, Node& first, Node& second, ServerState& s,
                    bool keep_ledger, double* raw_phase) const {
    TrialRecord r;
    r.id = id;
    r.cycle = cycle;
    r.link = link;
    r.mode = mode;
    r.seed = seed;
    r.start_first.state = first.state();
    r.start_second.state = second.state();
    r.eom_start = s.eom_phase;
    r.t_start = t0;

    const NodeId nf = first_node(link), ns = second_node(link);
    Rng rf(derive_seed(seed, node_stream(nf), id));
    Rng rs(derive_seed(seed, node_stream(ns), id));
    Rng rd(derive_seed(seed, Stream::Detectors, id));
    const auto& lp = c.link(link);
    const auto& stab = c.server;

    const LockStep step = probe_and_lock(s, link, first, second, t0, stab, lp.detector, rf, rs, rd);
    r.probe[0] = step.probe[0];
    r.probe[1] = step.probe[1];
    r.t_estimate = step.t_estimate;
    r.t_feedback = step.feedback.effective_at;
    r.eom_before = step.feedback.eom_before;
    r.eom_after = s.eom_phase;
    r.feedback_applied = step.feedback.applied;
    r.flagged = step.flagged;
    if (raw_phase) *raw_phase = step.estimate ? step.raw_phase : std::nan("");

    // write
    const double tw = t0 + stab.write_offset();
    r.t_write = tw;
    first.advance_to(tw, rf);
    second.advance_to(tw, rs);
    PhaseLedger L;
    L.record_eom(s.eom_phase);
    const WriteResult wf = write_trial(first, tw, L.first, rf);
    const WriteResult ws = write_trial(second, tw, L.second, rs);
    r.excitations = {wf.excitations, ws.excitations};
    r.residual = wrap_phase(pp_phase_difference(s.eom_phase, first, second, tw) - stab.target_phase);

    // write-out photons to the server beamsplitter
    const HeraldChannel& h = channel[index(link)];
    int det[2] = {0, 0};
    for (int k = 0; k < 2; ++k)
      for (int e = 0; e < r.excitations[k]; ++e)
        if (rd.uniform() < h.eta[k]) ++det[rd.uniform() < 0.5 ? 0 : 1];
    const int noise = poisson_draw(2.0 * h.noise_per_detector(), rd);
    for (int i = 0; i < noise; ++i) ++det[rd.uniform() < 0.5 ? 0 : 1];
    r.herald_clicks = {det[0] > 0, det[1] > 0};
    r.herald = herald(r.herald_clicks[0], r.herald_clicks[1]);
    const double delay = timing.fiber_delay_per_km * std::max(lp.arm_km[0], lp.arm_km[1]);
    r.t_herald = tw + delay + lp.herald_gate;

    // retrieval happens in every trial
    const double tr = tw + timing.storage_time;
    r.t_read = tr;
    first.advance_to(tr, rf);
    second.advance_to(tr, rs);

    if (r.herald != HeraldOutcome::PsiPlus && r.herald != HeraldOutcome::PsiMinus) return r;

    record_read(first, L.first, tw, tr, ep_setting(nf, link, tr), rf);
    record_read(second, L.second, tw, tr, ep_setting(ns, link, tr), rs);
    r.theta_c = theta_c(tr);
    r.phi_pme = pme_phase(L);

    Rng rv(derive_seed(seed, Stream::Verification, id));
    const double u = rv.uniform();
    r.basis = u < basis_cdf[0] ? Basis::ZZ : (u < basis_cdf[1] ? Basis::XX : Basis::YY);
    const HeraldModel& m = model[index(link)];
    FockDensityTwoMode rho = m.rho[r.herald == HeraldOutcome::PsiPlus ? 0 : 1];
    rho.phi = wrap_phase(rho.phi + r.phi_pme);
    const double n = c.analysis.ep_mean_photons;
    r.measured = true;
    if (r.basis == Basis::ZZ) {
      // H detectors see only the read-out, V only the EP
      const double v = rv.uniform();
      int i = 0, j = 0;
      if (v < rho.p00) {
      } else if (v < rho.p00 + rho.p01) {
        j = 1;
      } else if (v < rho.p00 + rho.p01 + rho.p10) {
        i = 1;
      } else {
        i = j = 1;
      }
      r.h_clicks = {i, j};
      const double p_ep = 1.0 - std::exp(-n);
      const int va = rv.uniform() < p_ep, vb = rv.uniform() < p_ep;
      const bool single_a = (i + va) == 1, single_b = (j + vb) == 1;
      r.pattern = single_a && single_b ? 2 * va + vb : -1;
    } else {
      const auto probs = mix_and_measure(rho, n, 0.0, 0.0, r.basis, c.node(nf).mode_overlap, c.node(ns).mode_overlap);
      r.pattern = sample_pattern(probs, rv);
    }
    if (keep_ledger) r.ledger = L;
    return r;
  }
};

}  // namespace

ExperimentSummary run_experiment(const RunConfig& c, const ExperimentOptions& opt, const ExperimentSinks& sinks) {
  c.validate();
  if (opt.trials <= 0) throw std::invalid_argument("run_experiment: trials must be > 0");
  const std::uint64_t seed = opt.seed.value_or(c.seed);
  const Kernel k(c, opt.mode, seed);
  const TimingConfig& tc = k.timing;

  std::array<Node, 3> nodes{Node(c.node(NodeId::A)), Node(c.node(NodeId::B)), Node(c.node(NodeId::C))};
  ServerState s;
  ExperimentSummary sum;
  const auto& sched = c.scheduler;
  std::array<double, 3> next_cal{};
  std::array<double, 3> last_cal{};
  for (LinkId l : kAllLinks) {
    next_cal[index(l)] = c.calibration.window;
    last_cal[index(l)] = -1.0;
  }
  long slot = 0;
  const int per_cycle = tc.trials_per_cycle();
  const double start = tc.mot_cool + tc.pump;
  std::uint64_t id = 0;

  for (long cycle = 0; long(id) < opt.trials; ++cycle) {
    const double t_cycle = cycle * tc.mot_period;
    Rng rc(derive_seed(seed, Stream::Cycle, cycle));
    for (auto& n : nodes) {
      n.advance_to(t_cycle, rc);
      n.start_cycle(rc);
    }
    // scheduling happens between MOT cycles
    if (!s.started || (sched.links.size() > 1 && slot_elapsed(s, t_cycle, sched.slot_length))) {
      const LinkId from = s.active_link;
      const bool first_call = !s.started;
      if (sched.links.size() == 1) {
        activate_link(s, sched.links[0], t_cycle);
      } else {
        Rng q(derive_seed(seed, Stream::Scheduler, slot));
        if (sched.links.size() == 3 && std::is_permutation(sched.links.begin(), sched.links.end(), kAllLinks.begin()))
          schedule_next_pair(s, q, t_cycle, sched.slot_length);
        else
          activate_link(s, sched.links[std::min<std::size_t>(sched.links.size() - 1,
                                                            std::size_t(q.uniform() * sched.links.size()))],
                        t_cycle);
      }
      ++slot;
      if (!first_call) ++sum.switches;
      if (sinks.on_switch) sinks.on_switch({t_cycle, first_call ? s.active_link : from, s.active_link});
    }
    const LinkId link = s.active_link;
    Node& first = nodes[index(first_node(link))];
    Node& second = nodes[index(second_node(link))];
    LinkStats& ls = sum.links[index(link)];
    ls.max_abs_detuning = std::max(ls.max_abs_detuning, std::abs(pp_detuning(first, second, t_cycle)));

    for (int i = 0; i < per_cycle && long(id) < opt.trials; ++i, ++id) {
      const double t0 = t_cycle + start + i * tc.trial_length;
      double raw = 0.0;
      const TrialRecord r = k.trial(id, cycle, link, t0, first, second, s, opt.keep_ledger, &raw);
      ++ls.trials;
      ++ls.heralds[static_cast<int>(r.herald)];
      ls.flagged += r.flagged;
      ls.residual_sum += r.residual;
      ls.residual_sumsq += r.residual * r.residual;
      if (c.calibration.enabled && !std::isnan(raw)) s.push_history(link, {r.t_estimate, raw});
      if (sinks.trial) sinks.trial(r);
    }
    ++sum.cycles;

    const double t_end = t_cycle + tc.mot_period;
    if (c.calibration.enabled && t_end >= next_cal[index(link)]) {
      next_cal[index(link)] = t_end + c.calibration.window;
      std::vector<CalibrationPoint> w;
      for (const auto& p : s.history[index(link)])
        if (p.t > last_cal[index(link)]) w.push_back(p);
      last_cal[index(link)] = t_end;
      try {
        const FrequencyEstimate e = calibrate_frequency(w);
        const double before = pp_detuning(first, second, t_end);
        apply_frequency_correction(first, second, c.link(link).correct_second, c.calibration.gain * e.delta_f);
        s.saved[index(link)].freq_offset_estimate = e.delta_f;
        ++ls.calibrations;
        if (sinks.calibration) sinks.calibration({t_end, link, e.delta_f, before, e.points});
      } catch (const std::invalid_argument&) {
        // not enough points in this window
      }
    }
  }
  sum.trials = long(id);
  sum.sim_time = sum.cycles * tc.mot_period;
  s.save_active();
  return sum;
}

TrialRecord replay_trial(const RunConfig& c, const TrialRecord& rec) {
  const Kernel k(c, rec.mode, rec.seed);
  Node first(c.node(first_node(rec.link))), second(c.node(second_node(rec.link)));
  first.restore(rec.start_first.state);
  second.restore(rec.start_second.state);
  ServerState s;
  activate_link(s, rec.link, rec.t_start);
  s.eom_phase = rec.eom_start;
  return k.trial(rec.id, rec.cycle, rec.link, rec.t_start, first, second, s, true, nullptr);
}

}  // namespace mqn
