#include "mqn/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

namespace mqn {

using nlohmann::json;

namespace {

NodeParams default_node(NodeId id) {
  NodeParams p;
  p.name = to_string(id);
  p.chi = 0.01;
  p.eta_r = 0.45;
  p.snr = 5.0;
  p.qfc_efficiency = 0.46;
  p.qfc_noise_rate = 100.0;
  p.writeout_efficiency = 0.1595;  // gives 6.9e-4 heralds per trial on A-B
  p.readout_efficiency = 0.5;
  switch (id) {
    case NodeId::A:
      p.b_field_sd = 1.9e-3;
      p.read.linewidth = 200.0;
      p.pump.linewidth = 200.0;
      p.opll = {0.0, std::sqrt(0.02), 7.5e-6};
      p.interferometer_phase_sd = 0.029;
      p.mode_overlap = 0.90;
      p.paths = {0.41, -0.27, 1.13, 0.52, -0.88, 0.35, 0.0};
      break;
    case NodeId::B:
      p.b_field_sd = 0.8e-3;
      p.read.linewidth = 500.0;
      p.pump.linewidth = 450.0;
      p.opll = {0.0, std::sqrt(0.05445), 2.33e-6};
      p.interferometer_phase_sd = 0.135;
      p.mode_overlap = 0.90;
      p.paths = {-0.63, 0.18, 2.05, -0.14, 0.71, -1.02, 0.0};
      break;
    case NodeId::C:
      p.b_field_sd = 0.4e-3;
      p.read.linewidth = 200.0;
      p.pump.linewidth = 200.0;
      p.opll = {0.0, std::sqrt(0.01445), 4.41e-6};
      p.interferometer_phase_sd = 0.063;
      p.mode_overlap = 0.95;
      p.paths = {0.92, 0.44, -1.37, 0.29, -0.35, 0.76, 0.0};
      break;
  }
  return p;
}

// arm lengths node -> server, km
constexpr double kArmKm[3] = {10.2, 10.0, 14.0};

LinkParams default_link(LinkId l) {
  LinkParams p;
  p.arm_km = {kArmKm[index(first_node(l))], kArmKm[index(second_node(l))]};
  return p;
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig c;
  for (NodeId n : kAllNodes) c.nodes[index(n)] = default_node(n);
  for (LinkId l : kAllLinks) c.links[index(l)] = default_link(l);
  const auto& rows = reference_rows();
  for (std::size_t i = 0; i < rows.size() && i < c.budgets.size(); ++i) c.budgets[i] = rows[i].budget;
  return c;
}

void LinkParams::validate(const std::string& name) const {
  for (int k = 0; k < 2; ++k) {
    if (!(arm_km[k] >= 0.0)) throw ConfigError("link " + name + ": arm_km must be >= 0");
    if (!(pol_filter_eff[k] > 0.0 && pol_filter_eff[k] <= 1.0))
      throw ConfigError("link " + name + ": pol_filter_eff outside (0, 1]");
  }
  if (!(loss_db_per_km >= 0.0)) throw ConfigError("link " + name + ": loss_db_per_km must be >= 0");
  if (!(herald_gate > 0.0)) throw ConfigError("link " + name + ": herald_gate must be > 0");
  try {
    detector.validate();
  } catch (const std::exception& e) {
    throw ConfigError("link " + name + ": " + e.what());
  }
}

void RunConfig::validate() const {
  try {
    for (const auto& n : nodes) n.validate();
    server.validate();
    delayed.validate();
    stored.validate();
    for (const auto& b : budgets) b.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  for (LinkId l : kAllLinks) link(l).validate(to_string(l));
  if (!(scheduler.slot_length > 0.0)) throw ConfigError("scheduler: slot_length must be > 0");
  if (scheduler.links.empty()) throw ConfigError("scheduler: links must not be empty");
  if (!(calibration.window > 0.0 && calibration.gain > 0.0 && calibration.gain <= 1.0))
    throw ConfigError("calibration: window must be > 0 and gain in (0, 1]");
  if (!(analysis.ep_mean_photons > 0.0 && analysis.ep_mean_photons <= 0.2))
    throw ConfigError("analysis: ep_mean_photons outside (0, 0.2]");
  double wsum = 0.0;
  for (double w : analysis.basis_weights) {
    if (w < 0.0) throw ConfigError("analysis: basis_weights must be >= 0");
    wsum += w;
  }
  if (!(wsum > 0.0)) throw ConfigError("analysis: basis_weights sum to 0");
  if (analysis.bootstrap < 0) throw ConfigError("analysis: bootstrap must be >= 0");
  if (analysis.ep_reference != "link" && analysis.ep_reference != "AB")
    throw ConfigError("analysis: ep_reference must be \"link\" or \"AB\"");
  if (!analysis.theta_sweep.empty() && !(analysis.theta_dwell > 0.0))
    throw ConfigError("analysis: theta_dwell must be > 0");
}

// ---------------------------------------------------------------- reading

namespace {

class Reader {
public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <class T>
  void opt(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  template <class T>
  void req(const char* key, T& out) {
    if (!j_.contains(key)) throw ConfigError(path_ + ": missing field '" + key + "'");
    opt(key, out);
  }

  Reader sub(const char* key) {
    seen_.insert(key);
    return Reader(j_.at(key), path_ + "." + key);
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
  }

  const std::string& path() const { return path_; }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_laser(Reader r, LaserModel& l) {
  r.opt("linewidth", l.linewidth);
  r.opt("drift_rate", l.drift_rate);
  r.opt("frequency_offset", l.frequency_offset);
  r.finish();
}

void read_node(Reader r, NodeParams& p) {
  r.opt("chi", p.chi);
  r.opt("eta_r", p.eta_r);
  r.opt("snr", p.snr);
  r.opt("qfc_efficiency", p.qfc_efficiency);
  r.opt("qfc_noise_rate", p.qfc_noise_rate);
  r.opt("b_field_sd", p.b_field_sd);
  r.opt("b_field_freq", p.b_field_freq);
  r.opt("b_field_jitter_fraction", p.b_field_jitter_fraction);
  r.opt("clock_reduction", p.clock_reduction);
  r.opt("interferometer_phase_sd", p.interferometer_phase_sd);
  r.opt("max_storage", p.max_storage);
  r.opt("retrieval_tau", p.retrieval_tau);
  r.opt("writeout_efficiency", p.writeout_efficiency);
  r.opt("readout_efficiency", p.readout_efficiency);
  r.opt("mode_overlap", p.mode_overlap);
  if (r.has("read")) read_laser(r.sub("read"), p.read);
  if (r.has("pump")) read_laser(r.sub("pump"), p.pump);
  if (r.has("opll")) {
    Reader o = r.sub("opll");
    o.opt("theta", p.opll.theta);
    o.opt("jitter_sd", p.opll.jitter_sd);
    o.opt("jitter_tau", p.opll.jitter_tau);
    o.finish();
  }
  if (r.has("paths")) {
    Reader o = r.sub("paths");
    o.opt("phi_w", p.paths.phi_w);
    o.opt("phi_wo_in", p.paths.phi_wo_in);
    o.opt("phi_wo_out", p.paths.phi_wo_out);
    o.opt("phi_r_in", p.paths.phi_r_in);
    o.opt("phi_r_out", p.paths.phi_r_out);
    o.opt("phi_ro", p.paths.phi_ro);
    o.opt("phi_ep", p.paths.phi_ep);
    o.finish();
  }
  r.finish();
}

void read_detector(Reader r, DetectorParams& d) {
  r.opt("efficiency", d.efficiency);
  r.opt("dark_rate", d.dark_rate);
  r.opt("dead_time", d.dead_time);
  r.opt("latch_flux_threshold", d.latch_flux_threshold);
  r.opt("latch_recovery", d.latch_recovery);
  r.finish();
}

void read_link(Reader r, LinkParams& l) {
  r.opt("arm_km", l.arm_km);
  r.opt("loss_db_per_km", l.loss_db_per_km);
  r.opt("pol_filter_eff", l.pol_filter_eff);
  r.opt("herald_gate", l.herald_gate);
  r.opt("correct_second", l.correct_second);
  if (r.has("detector")) read_detector(r.sub("detector"), l.detector);
  r.finish();
}

void read_timing(Reader r, TimingConfig& t) {
  r.opt("mot_cool", t.mot_cool);
  r.opt("pump", t.pump);
  r.opt("mot_period", t.mot_period);
  r.opt("trial_length", t.trial_length);
  r.opt("storage_time", t.storage_time);
  r.opt("fiber_delay_per_km", t.fiber_delay_per_km);
  r.finish();
}

// budget rows are all-or-nothing so that a missing value is reported by name
void read_budget(Reader r, ImperfectionBudget& b) {
  r.req("chi", b.chi);
  r.req("eta_r", b.eta_r);
  r.req("snr", b.snr);
  r.req("p01", b.p01);
  r.req("p10", b.p10);
  r.req("sd_remote", b.sd_remote);
  const json& nodes = r.raw("nodes");
  if (!nodes.is_array() || nodes.size() != 2) throw ConfigError(r.path() + ".nodes: expected two node entries");
  NodeBudget* nb[2] = {&b.a, &b.b};
  for (int k = 0; k < 2; ++k) {
    Reader n(nodes[k], r.path() + ".nodes[" + std::to_string(k) + "]");
    n.req("name", nb[k]->name);
    n.req("sd_memory", nb[k]->sd_memory);
    n.req("sd_interferometer", nb[k]->sd_interferometer);
    n.req("sd_laser", nb[k]->sd_laser);
    n.req("eta_mode", nb[k]->eta_mode);
    n.finish();
  }
  r.finish();
}

const char* kBudgetNames[5] = {"ST5", "ST107", "A-B", "A-C", "B-C"};

}  // namespace

RunConfig config_from_json(const json& j) {
  RunConfig c = RunConfig::defaults();
  Reader r(j, "config");
  int version = kConfigSchemaVersion;
  r.opt("schema_version", version);
  if (version != kConfigSchemaVersion)
    throw ConfigError("config: unsupported schema_version " + std::to_string(version));
  r.opt("seed", c.seed);
  if (r.has("nodes")) {
    Reader n = r.sub("nodes");
    for (NodeId id : kAllNodes)
      if (n.has(to_string(id).c_str())) read_node(n.sub(to_string(id).c_str()), c.nodes[index(id)]);
    n.finish();
  }
  if (r.has("links")) {
    Reader n = r.sub("links");
    for (const char* name : {"AB", "AC", "BC", "CB"})
      if (n.has(name)) read_link(n.sub(name), c.links[index(link_from_string(name))]);
    n.finish();
  }
  if (r.has("server")) {
    Reader s = r.sub("server");
    s.opt("tau_pp", c.server.tau_pp);
    s.opt("tau_delta", c.server.tau_delta);
    s.opt("pp_photons", c.server.pp_photons);
    s.opt("feedback_latency", c.server.feedback_latency);
    s.opt("probes_per_trial", c.server.probes_per_trial);
    s.opt("target_phase", c.server.target_phase);
    s.opt("pp_visibility", c.server.pp_visibility);
    s.opt("lock", c.server.lock);
    s.finish();
  }
  if (r.has("scheduler")) {
    Reader s = r.sub("scheduler");
    s.opt("slot_length", c.scheduler.slot_length);
    if (s.has("links")) {
      std::vector<std::string> names;
      s.opt("links", names);
      c.scheduler.links.clear();
      try {
        for (const auto& n : names) c.scheduler.links.push_back(link_from_string(n));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config.scheduler.links: ") + e.what());
      }
    }
    s.finish();
  }
  if (r.has("calibration")) {
    Reader s = r.sub("calibration");
    s.opt("enabled", c.calibration.enabled);
    s.opt("window", c.calibration.window);
    s.opt("gain", c.calibration.gain);
    s.finish();
  }
  if (r.has("timing")) {
    Reader s = r.sub("timing");
    if (s.has("delayed")) read_timing(s.sub("delayed"), c.delayed);
    if (s.has("stored")) read_timing(s.sub("stored"), c.stored);
    s.finish();
  }
  if (r.has("analysis")) {
    Reader s = r.sub("analysis");
    s.opt("ep_mean_photons", c.analysis.ep_mean_photons);
    s.opt("basis_weights", c.analysis.basis_weights);
    s.opt("bootstrap", c.analysis.bootstrap);
    s.opt("theta_sweep", c.analysis.theta_sweep);
    s.opt("theta_dwell", c.analysis.theta_dwell);
    s.opt("ep_reference", c.analysis.ep_reference);
    s.finish();
  }
  if (r.has("budgets")) {
    Reader s = r.sub("budgets");
    for (int i = 0; i < 5; ++i)
      if (s.has(kBudgetNames[i])) {
        c.budgets[i].name = kBudgetNames[i];
        read_budget(s.sub(kBudgetNames[i]), c.budgets[i]);
      }
    s.finish();
  }
  r.finish();
  c.validate();
  return c;
}

// ---------------------------------------------------------------- writing

namespace {

json laser_json(const LaserModel& l) {
  return {{"linewidth", l.linewidth}, {"drift_rate", l.drift_rate}, {"frequency_offset", l.frequency_offset}};
}

json node_json(const NodeParams& p) {
  return {{"chi", p.chi},
          {"eta_r", p.eta_r},
          {"snr", p.snr},
          {"qfc_efficiency", p.qfc_efficiency},
          {"qfc_noise_rate", p.qfc_noise_rate},
          {"b_field_sd", p.b_field_sd},
          {"b_field_freq", p.b_field_freq},
          {"b_field_jitter_fraction", p.b_field_jitter_fraction},
          {"clock_reduction", p.clock_reduction},
          {"interferometer_phase_sd", p.interferometer_phase_sd},
          {"max_storage", p.max_storage},
          {"retrieval_tau", p.retrieval_tau},
          {"writeout_efficiency", p.writeout_efficiency},
          {"readout_efficiency", p.readout_efficiency},
          {"mode_overlap", p.mode_overlap},
          {"read", laser_json(p.read)},
          {"pump", laser_json(p.pump)},
          {"opll", {{"theta", p.opll.theta}, {"jitter_sd", p.opll.jitter_sd}, {"jitter_tau", p.opll.jitter_tau}}},
          {"paths",
           {{"phi_w", p.paths.phi_w},
            {"phi_wo_in", p.paths.phi_wo_in},
            {"phi_wo_out", p.paths.phi_wo_out},
            {"phi_r_in", p.paths.phi_r_in},
            {"phi_r_out", p.paths.phi_r_out},
            {"phi_ro", p.paths.phi_ro},
            {"phi_ep", p.paths.phi_ep}}}};
}

json timing_json(const TimingConfig& t) {
  return {{"mot_cool", t.mot_cool},         {"pump", t.pump},
          {"mot_period", t.mot_period},     {"trial_length", t.trial_length},
          {"storage_time", t.storage_time}, {"fiber_delay_per_km", t.fiber_delay_per_km}};
}

}  // namespace

json config_to_json(const RunConfig& c) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["seed"] = c.seed;
  for (NodeId n : kAllNodes) j["nodes"][to_string(n)] = node_json(c.node(n));
  for (LinkId l : kAllLinks) {
    const auto& p = c.link(l);
    j["links"][l == LinkId::CB ? "BC" : to_string(l)] = {
        {"arm_km", p.arm_km},
        {"loss_db_per_km", p.loss_db_per_km},
        {"pol_filter_eff", p.pol_filter_eff},
        {"herald_gate", p.herald_gate},
        {"correct_second", p.correct_second},
        {"detector",
         {{"efficiency", p.detector.efficiency},
          {"dark_rate", p.detector.dark_rate},
          {"dead_time", p.detector.dead_time},
          {"latch_flux_threshold", p.detector.latch_flux_threshold},
          {"latch_recovery", p.detector.latch_recovery}}}};
  }
  const auto& s = c.server;
  j["server"] = {{"tau_pp", s.tau_pp},
                 {"tau_delta", s.tau_delta},
                 {"pp_photons", s.pp_photons},
                 {"feedback_latency", s.feedback_latency},
                 {"probes_per_trial", s.probes_per_trial},
                 {"target_phase", s.target_phase},
                 {"pp_visibility", s.pp_visibility},
                 {"lock", s.lock}};
  std::vector<std::string> links;
  for (LinkId l : c.scheduler.links) links.push_back(l == LinkId::CB ? "BC" : to_string(l));
  j["scheduler"] = {{"slot_length", c.scheduler.slot_length}, {"links", links}};
  j["calibration"] = {
      {"enabled", c.calibration.enabled}, {"window", c.calibration.window}, {"gain", c.calibration.gain}};
  j["timing"] = {{"delayed", timing_json(c.delayed)}, {"stored", timing_json(c.stored)}};
  j["analysis"] = {{"ep_mean_photons", c.analysis.ep_mean_photons},
                   {"basis_weights", c.analysis.basis_weights},
                   {"bootstrap", c.analysis.bootstrap},
                   {"theta_sweep", c.analysis.theta_sweep},
                   {"theta_dwell", c.analysis.theta_dwell},
                   {"ep_reference", c.analysis.ep_reference}};
  for (int i = 0; i < 5; ++i) {
    const auto& b = c.budgets[i];
    json nodes = json::array();
    for (const NodeBudget* n : {&b.a, &b.b})
      nodes.push_back({{"name", n->name},
                       {"sd_memory", n->sd_memory},
                       {"sd_interferometer", n->sd_interferometer},
                       {"sd_laser", n->sd_laser},
                       {"eta_mode", n->eta_mode}});
    j["budgets"][kBudgetNames[i]] = {{"chi", b.chi}, {"eta_r", b.eta_r},         {"snr", b.snr}, {"p01", b.p01},
                                     {"p10", b.p10}, {"sd_remote", b.sd_remote}, {"nodes", nodes}};
  }
  return j;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + ": parse error: " + e.what());
  }
  return config_from_json(j);
}

RunConfig load_default_config() {
  if (const char* p = std::getenv("MQN_CONFIG"); p && *p) return load_config(p);
  RunConfig c = RunConfig::defaults();
  c.validate();
  return c;
}

}  // namespace mqn
