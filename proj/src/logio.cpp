#include "mqn/logio.hpp"

#include <algorithm>
#include <fstream>

namespace mqn {

using nlohmann::json;

namespace {

json state_json(const NodeState& s) {
  return {{"read_phase", s.read_phase}, {"read_freq", s.read_freq}, {"pump_phase", s.pump_phase},
          {"pump_freq", s.pump_freq},   {"eps", s.eps},             {"clock", s.clock},
          {"bfield_phase", s.bfield_phase}};
}

NodeState state_from(const json& j) {
  NodeState s;
  s.read_phase = j.at("read_phase").get<double>();
  s.read_freq = j.at("read_freq").get<double>();
  s.pump_phase = j.at("pump_phase").get<double>();
  s.pump_freq = j.at("pump_freq").get<double>();
  s.eps = j.at("eps").get<double>();
  s.clock = j.at("clock").get<double>();
  s.bfield_phase = j.at("bfield_phase").get<double>();
  return s;
}

json entries_json(const NodeEntries& e) {
  json j = {{"t_w", e.t_w}, {"t_r", e.t_r}};
  for (std::size_t i = 0; i < kSymCount; ++i) {
    const Sym s = static_cast<Sym>(i);
    if (e.has(s)) j[sym_name(s)] = e.value_unchecked(s);
  }
  return j;
}

json est_json(const Estimate& e) { return {{"value", e.value}, {"error", e.error}}; }

void count_link(json& j, const LinkStats& s) {
  j = {{"trials", s.trials},
       {"heralds", {s.heralds[0], s.heralds[1], s.heralds[2], s.heralds[3]}},
       {"flagged", s.flagged},
       {"residual_sum", s.residual_sum},
       {"residual_sumsq", s.residual_sumsq},
       {"residual_sd", s.residual_sd()},
       {"max_abs_detuning", s.max_abs_detuning},
       {"calibrations", s.calibrations}};
}

}  // namespace

json record_to_json(const TrialRecord& r) {
  json j = {{"type", "trial"},
            {"id", r.id},
            {"cycle", r.cycle},
            {"link", to_string(r.link)},
            {"mode", to_string(r.mode)},
            {"t", {r.t_start, r.t_estimate, r.t_feedback, r.t_write, r.t_read, r.t_herald}},
            {"probe", {r.probe[0].d1, r.probe[0].d2, r.probe[1].d1, r.probe[1].d2}},
            {"eom", {r.eom_before, r.eom_after}},
            {"feedback", r.feedback_applied},
            {"flagged", r.flagged},
            {"residual", r.residual},
            {"excitations", r.excitations},
            {"herald_clicks", r.herald_clicks},
            {"herald", to_string(r.herald)},
            {"measured", r.measured},
            {"seed", r.seed},
            {"cursor", {{"first", state_json(r.start_first.state)},
                        {"second", state_json(r.start_second.state)},
                        {"eom", r.eom_start}}}};
  if (r.measured) {
    j["basis"] = to_string(r.basis);
    j["theta_c"] = r.theta_c;
    j["phi_pme"] = r.phi_pme;
    j["pattern"] = r.pattern;
    j["h_clicks"] = r.h_clicks;
  }
  if (r.ledger) {
    j["ledger"] = {{"first", entries_json(r.ledger->first)},
                   {"second", entries_json(r.ledger->second)},
                   {"phi_eom", r.ledger->phi_eom}};
  }
  return j;
}

TrialRecord record_from_json(const json& j) {
  try {
    TrialRecord r;
    r.id = j.at("id").get<std::uint64_t>();
    r.cycle = j.at("cycle").get<long>();
    r.link = link_from_string(j.at("link").get<std::string>());
    r.mode = storage_mode_from_string(j.at("mode").get<std::string>());
    const auto& t = j.at("t");
    r.t_start = t.at(0).get<double>();
    r.t_estimate = t.at(1).get<double>();
    r.t_feedback = t.at(2).get<double>();
    r.t_write = t.at(3).get<double>();
    r.t_read = t.at(4).get<double>();
    r.t_herald = t.at(5).get<double>();
    const auto& p = j.at("probe");
    r.probe[0] = {p.at(0).get<long>(), p.at(1).get<long>()};
    r.probe[1] = {p.at(2).get<long>(), p.at(3).get<long>()};
    r.eom_before = j.at("eom").at(0).get<double>();
    r.eom_after = j.at("eom").at(1).get<double>();
    r.feedback_applied = j.at("feedback").get<bool>();
    r.flagged = j.at("flagged").get<bool>();
    r.residual = j.at("residual").get<double>();
    r.excitations = j.at("excitations").get<std::array<int, 2>>();
    r.herald_clicks = j.at("herald_clicks").get<std::array<int, 2>>();
    r.herald = herald_outcome_from_string(j.at("herald").get<std::string>());
    r.measured = j.at("measured").get<bool>();
    r.seed = j.at("seed").get<std::uint64_t>();
    const auto& c = j.at("cursor");
    r.start_first.state = state_from(c.at("first"));
    r.start_second.state = state_from(c.at("second"));
    r.eom_start = c.at("eom").get<double>();
    if (r.measured) {
      r.basis = basis_from_string(j.at("basis").get<std::string>());
      r.theta_c = j.at("theta_c").get<double>();
      r.phi_pme = j.at("phi_pme").get<double>();
      r.pattern = j.at("pattern").get<int>();
      r.h_clicks = j.at("h_clicks").get<std::array<int, 2>>();
    }
    return r;
  } catch (const json::exception& e) {
    throw LogError(std::string("malformed trial record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw LogError(std::string("malformed trial record: ") + e.what());
  }
}

json summary_to_json(const ExperimentSummary& s) {
  json links = json::object();
  for (LinkId l : kAllLinks) count_link(links[to_string(l)], s.links[index(l)]);
  return {{"schema_version", kLogSchemaVersion},
          {"trials", s.trials},
          {"cycles", s.cycles},
          {"sim_time", s.sim_time},
          {"switches", s.switches},
          {"heralded", s.heralded()},
          {"herald_probability", s.herald_probability()},
          {"repetition_rate", s.repetition_rate()},
          {"entangling_rate", s.entangling_rate()},
          {"residual_sd_rad", s.residual_sd()},
          {"residual_sd_deg", s.residual_sd() * 180.0 / 3.14159265358979323846},
          {"links", links}};
}

ExperimentSummary summary_from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kLogSchemaVersion) throw LogError("summary: unsupported schema_version");
    ExperimentSummary s;
    s.trials = j.at("trials").get<long>();
    s.cycles = j.at("cycles").get<long>();
    s.sim_time = j.at("sim_time").get<double>();
    s.switches = j.at("switches").get<long>();
    for (LinkId l : kAllLinks) {
      const auto& k = j.at("links").at(to_string(l));
      auto& d = s.links[index(l)];
      d.trials = k.at("trials").get<long>();
      for (int i = 0; i < 4; ++i) d.heralds[i] = k.at("heralds").at(i).get<long>();
      d.flagged = k.at("flagged").get<long>();
      d.residual_sum = k.at("residual_sum").get<double>();
      d.residual_sumsq = k.at("residual_sumsq").get<double>();
      d.max_abs_detuning = k.at("max_abs_detuning").get<double>();
      d.calibrations = k.at("calibrations").get<long>();
    }
    return s;
  } catch (const json::exception& e) {
    throw LogError(std::string("malformed summary: ") + e.what());
  }
}

json report_to_json(const EntanglementReport& r) {
  json links = json::array();
  for (const auto& l : r.links) {
    json signs = json::array();
    for (const auto& s : l.sign) {
      json js = {{"sign", s.sign > 0 ? "psi+" : "psi-"}, {"heralds", s.heralds}, {"valid", s.valid}};
      if (s.valid) {
        js["p_ij"] = {{"p00", s.pij.p00}, {"p01", s.pij.p01}, {"p10", s.pij.p10}, {"p11", s.pij.p11},
                      {"e00", s.pij.e00}, {"e01", s.pij.e01}, {"e10", s.pij.e10}, {"e11", s.pij.e11}};
        js["E_X"] = est_json(s.e_x);
        js["E_Y"] = est_json(s.e_y);
        js["ZZ"] = est_json(s.zz);
        js["C"] = est_json(s.concurrence);
        js["C_tilde"] = est_json(s.c_tilde);
        js["F"] = est_json(s.fidelity);
        js["d"] = s.d;
        js["clamped"] = s.clamped;
      }
      signs.push_back(js);
    }
    json jl = {{"link", to_string(l.link)}, {"readout_eta", l.readout_eta}, {"signs", signs}};
    json th = json::array();
    for (const auto& p : l.xx_theta) th.push_back({{"theta", p.theta}, {"XX", p.xx.value}, {"error", p.xx.error}});
    jl["xx_theta"] = th;
    if (l.fit_valid)
      jl["xx_fit"] = {{"amplitude", l.fit.amplitude}, {"phase", l.fit.phase},   {"offset", l.fit.offset},
                      {"amplitude_err", l.fit.amplitude_err}, {"phase_err", l.fit.phase_err}};
    links.push_back(jl);
  }
  json j = {{"schema_version", kLogSchemaVersion}, {"links", links}};
  if (r.delay_valid) j["xx_phase_delay"] = {{"value", r.delay}, {"error", r.delay_err}};
  return j;
}

TrialLogWriter::TrialLogWriter(std::ostream& out, const LogHeader& h) : out_(out), log_all_(h.log_all) {
  line({{"type", "header"},
        {"schema_version", kLogSchemaVersion},
        {"seed", h.seed},
        {"mode", to_string(h.mode)},
        {"trials", h.trials},
        {"log_all", h.log_all},
        {"job", h.job},
        {"config", config_to_json(h.config)}});
}

void TrialLogWriter::line(const json& j) { out_ << j.dump() << '\n'; }

void TrialLogWriter::trial(const TrialRecord& r) {
  const bool heralded = r.herald == HeraldOutcome::PsiPlus || r.herald == HeraldOutcome::PsiMinus;
  if (heralded || log_all_) line(record_to_json(r));
}

void TrialLogWriter::on_switch(const SwitchLog& s) {
  line({{"type", "switch"}, {"time", s.time}, {"from", to_string(s.from)}, {"to", to_string(s.to)}});
}

void TrialLogWriter::calibration(const CalibrationLog& c) {
  line({{"type", "calibration"},
        {"time", c.time},
        {"link", to_string(c.link)},
        {"estimate_hz", c.estimate},
        {"true_before_hz", c.true_before},
        {"points", c.points}});
}

ExperimentSinks TrialLogWriter::sinks() {
  ExperimentSinks s;
  s.trial = [this](const TrialRecord& r) { trial(r); };
  s.on_switch = [this](const SwitchLog& x) { on_switch(x); };
  s.calibration = [this](const CalibrationLog& x) { calibration(x); };
  return s;
}

LoadedLog read_trial_log(const std::filesystem::path& file, const std::optional<LinkId>& link) {
  std::ifstream in(file);
  if (!in) throw LogError("cannot open " + file.string());
  LoadedLog out;
  std::string text;
  long lineno = 0;
  while (std::getline(in, text)) {
    ++lineno;
    if (text.empty()) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw LogError(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (lineno == 1) {
      if (j.value("type", "") != "header") throw LogError(file.string() + ": missing header");
      if (j.value("schema_version", -1) != kLogSchemaVersion)
        throw LogError(file.string() + ": unsupported schema_version");
      try {
        out.header.config = config_from_json(j.at("config"));
      } catch (const ConfigError& e) {
        throw LogError(file.string() + ": embedded config: " + e.what());
      }
      out.header.seed = j.at("seed").get<std::uint64_t>();
      out.header.mode = storage_mode_from_string(j.at("mode").get<std::string>());
      out.header.trials = j.at("trials").get<long>();
      out.header.log_all = j.at("log_all").get<bool>();
      out.header.job = j.value("job", 0);
      continue;
    }
    if (j.value("type", "") != "trial") continue;
    const TrialRecord r = record_from_json(j);
    if (link && r.link != *link) continue;
    out.counts.add(r);
    ++out.records;
  }
  if (lineno == 0) throw LogError(file.string() + ": empty log");
  return out;
}

std::vector<std::filesystem::path> trial_logs_in(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(dir)) throw LogError("not a directory: " + dir.string());
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("trials", 0) == 0 && e.path().extension() == ".jsonl")
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace mqn
