// mqn: simulate / analyze / theory / stabilize-demo
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "mqn/analysis.hpp"
#include "mqn/config.hpp"
#include "mqn/logio.hpp"
#include "mqn/report.hpp"
#include "mqn/server.hpp"
#include "mqn/simkernel.hpp"
#include "mqn/stats.hpp"

namespace fs = std::filesystem;
using namespace mqn;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct ConfigFail : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataFail : std::runtime_error {
  using std::runtime_error::runtime_error;
};

RunConfig get_config(const std::string& path) {
  try {
    return path.empty() ? load_default_config() : load_config(path);
  } catch (const ConfigError& e) {
    throw ConfigFail(e.what());
  }
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw DataFail("cannot create output directory " + p.string());
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw DataFail("cannot write " + p.string());
  return f;
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string config, out = "run", mode = "delayed", links;
  std::optional<std::uint64_t> seed;
  long trials = 100000;
  int jobs = 1;
  bool log_all = false;
};

int cmd_simulate(const SimulateArgs& a) {
  RunConfig c = get_config(a.config);
  if (a.trials <= 0) throw ConfigFail("--trials must be positive");
  if (a.jobs < 1) throw ConfigFail("--jobs must be at least 1");
  StorageMode mode;
  try {
    mode = storage_mode_from_string(a.mode);
  } catch (const std::exception&) {
    throw ConfigFail("--mode must be delayed or stored");
  }
  if (!a.links.empty()) {
    c.scheduler.links.clear();
    std::stringstream ss(a.links);
    std::string item;
    try {
      while (std::getline(ss, item, ',')) c.scheduler.links.push_back(link_from_string(item));
    } catch (const std::exception&) {
      throw ConfigFail("--links: unknown link '" + item + "'");
    }
    try {
      c.validate();
    } catch (const ConfigError& e) {
      throw ConfigFail(e.what());
    }
  }
  const std::uint64_t seed = a.seed.value_or(c.seed);
  const fs::path out(a.out);
  ensure_dir(out);

  // one kernel per job; jobs > 1 use derived seeds and separate log files
  std::vector<ExperimentSummary> parts(a.jobs);
  std::vector<std::string> errors(a.jobs);
  auto run_job = [&](int k) {
    try {
      const long n = a.trials / a.jobs + (k < a.trials % a.jobs ? 1 : 0);
      const std::uint64_t s = a.jobs == 1 ? seed : derive_seed(seed, Stream::Jobs, std::uint64_t(k));
      const fs::path file = out / (a.jobs == 1 ? std::string("trials.jsonl") : "trials." + std::to_string(k) + ".jsonl");
      std::ofstream f = open_out(file);
      TrialLogWriter w(f, LogHeader{c, s, mode, n, a.log_all, k});
      ExperimentOptions opt;
      opt.mode = mode;
      opt.trials = n;
      opt.seed = s;
      if (n > 0) parts[k] = run_experiment(c, opt, w.sinks());
      if (!f) throw DataFail("write failed: " + file.string());
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  };
  if (a.jobs == 1) {
    run_job(0);
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < a.jobs; ++k) pool.emplace_back(run_job, k);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (!e.empty()) throw DataFail(e);

  ExperimentSummary total;
  for (const auto& p : parts) total.merge(p);
  auto f = open_out(out / "summary.json");
  nlohmann::json js = summary_to_json(total);
  js["seed"] = seed;
  js["mode"] = to_string(mode);
  js["jobs"] = a.jobs;
  f << js.dump(2) << '\n';

  std::printf("trials             %ld\n", total.trials);
  std::printf("heralds            %ld\n", total.heralded());
  std::printf("herald probability %.3e\n", total.herald_probability());
  std::printf("repetition rate    %.1f Hz\n", total.repetition_rate());
  std::printf("entangling rate    %.3f Hz\n", total.entangling_rate());
  std::printf("residual phase SD  %.1f deg\n", total.residual_sd() * 180.0 / kPi);
  std::printf("written to         %s\n", out.string().c_str());
  return 0;
}

// --- analyze ----------------------------------------------------------------

struct AnalyzeArgs {
  std::string dir, link, out;
  std::optional<int> bootstrap;
};

void print_report(const EntanglementReport& r) {
  std::printf("%-4s %-5s %7s %8s %8s %8s %17s %17s %17s\n", "link", "state", "heralds", "E_X", "E_Y", "ZZ", "C",
              "C_tilde", "F");
  for (const auto& l : r.links)
    for (const auto& s : l.sign) {
      if (!s.valid) {
        std::printf("%-4s %-5s %7ld  (insufficient coincidences)\n", to_string(l.link).c_str(),
                    s.sign > 0 ? "psi+" : "psi-", s.heralds);
        continue;
      }
      std::printf("%-4s %-5s %7ld %8.3f %8.3f %8.3f %8.4f+-%-7.4f %8.3f+-%-7.3f %8.3f+-%-7.3f\n",
                  to_string(l.link).c_str(), s.sign > 0 ? "psi+" : "psi-", s.heralds, s.e_x.value, s.e_y.value,
                  s.zz.value, s.concurrence.value, s.concurrence.error, s.c_tilde.value, s.c_tilde.error,
                  s.fidelity.value, s.fidelity.error);
    }
  for (const auto& l : r.links)
    if (l.fit_valid)
      std::printf("%s: XX(theta) = %.3f cos(theta %+.3f) %+.3f  (phase +- %.3f)\n", to_string(l.link).c_str(),
                  l.fit.amplitude, l.fit.phase, l.fit.offset, l.fit.phase_err);
  if (r.delay_valid) std::printf("phase delay AC - CB: %.3f +- %.3f rad\n", r.delay, r.delay_err);
}

int cmd_analyze(const AnalyzeArgs& a) {
  std::optional<LinkId> link;
  if (!a.link.empty()) {
    try {
      link = link_from_string(a.link);
    } catch (const std::exception&) {
      throw ConfigFail("--link: unknown link '" + a.link + "'");
    }
  }
  std::vector<fs::path> files;
  try {
    files = trial_logs_in(a.dir);
  } catch (const LogError& e) {
    throw DataFail(e.what());
  }
  if (files.empty()) throw DataFail("no trial logs in " + a.dir);
  CountsByLink counts;
  LogHeader header;
  for (std::size_t i = 0; i < files.size(); ++i) {
    LoadedLog log;
    try {
      log = read_trial_log(files[i], link);
    } catch (const LogError& e) {
      throw DataFail(e.what());
    }
    if (i == 0) header = log.header;
    counts.merge(log.counts);
  }
  long heralds = 0;
  for (LinkId l : kAllLinks) {
    if (link && l != *link) continue;
    heralds += counts.links[index(l)].heralds[0] + counts.links[index(l)].heralds[1];
  }
  if (heralds == 0) throw DataFail("no heralded trials for the requested link(s)");
  const int boot = a.bootstrap.value_or(header.config.analysis.bootstrap);
  const EntanglementReport rep = analyze(counts, header.config, header.mode, boot, header.seed);
  print_report(rep);
  const fs::path out = a.out.empty() ? fs::path(a.dir) / "report.json" : fs::path(a.out);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  auto f = open_out(out);
  f << report_to_json(rep).dump(2) << '\n';
  return 0;
}

// --- theory -----------------------------------------------------------------

int cmd_theory(const std::string& config, const std::string& table, const std::string& out) {
  const RunConfig c = get_config(config);
  std::vector<Table> tables;
  try {
    tables = theory_tables(c, table);
  } catch (const std::invalid_argument& e) {
    throw ConfigFail(e.what());
  }
  for (std::size_t i = 0; i < tables.size(); ++i) {
    std::printf("%s\n", tables[i].text().c_str());
    if (!out.empty()) {
      fs::path p(out);
      if (tables.size() > 1) p.replace_filename(p.stem().string() + "_" + std::to_string(i + 1) + p.extension().string());
      if (p.has_parent_path()) ensure_dir(p.parent_path());
      auto f = open_out(p);
      f << tables[i].csv();
    }
  }
  return 0;
}

// --- stabilize-demo ---------------------------------------------------------

struct DemoArgs {
  std::string config, out = "stabilize";
  double detuning = 0.0;
  long trials = 100000;
  std::optional<std::uint64_t> seed;
};

void write_histogram(std::ostream& f, const std::vector<double>& locked, const std::vector<double>& open) {
  constexpr int bins = 72;
  std::vector<long> h[2] = {std::vector<long>(bins), std::vector<long>(bins)};
  const std::vector<double>* src[2] = {&locked, &open};
  for (int k = 0; k < 2; ++k)
    for (double x : *src[k]) {
      int b = int(std::floor((wrap_phase(x) + kPi) / (2 * kPi) * bins));
      h[k][std::clamp(b, 0, bins - 1)]++;
    }
  f << "phase_deg,locked,unlocked\n";
  for (int b = 0; b < bins; ++b)
    f << (-180.0 + (b + 0.5) * 360.0 / bins) << ',' << h[0][b] << ',' << h[1][b] << '\n';
}

int cmd_stabilize_demo(const DemoArgs& a) {
  const RunConfig c = get_config(a.config);
  if (a.trials <= 0) throw ConfigFail("--trials must be positive");
  const fs::path out(a.out);
  ensure_dir(out);
  StabilizationSim s;
  s.first = c.node(NodeId::A);
  s.second = c.node(NodeId::B);
  s.second.pump.frequency_offset += a.detuning;
  s.stab = c.server;
  s.detector = c.link(LinkId::AB).detector;
  s.timing = c.delayed;
  s.trials = a.trials;
  s.seed = a.seed.value_or(c.seed);
  s.correct_second = c.link(LinkId::AB).correct_second;
  const StabilizationTrace locked = simulate_stabilization(s);
  s.stab.lock = false;
  const StabilizationTrace open = simulate_stabilization(s);

  {
    auto f = open_out(out / "phase_trace.csv");
    f << "t_s,locked_rad,unlocked_rad\n";
    f.precision(10);
    for (std::size_t i = 0; i < locked.t.size(); ++i)
      f << locked.t[i] << ',' << locked.residual[i] << ',' << open.residual[i] << '\n';
  }
  {
    auto f = open_out(out / "phase_histogram.csv");
    write_histogram(f, locked.residual, open.residual);
  }
  {
    auto f = open_out(out / "visibility_vs_detuning.csv");
    f << "detuning_hz,visibility\n";
    for (int k = -50; k <= 50; ++k) {
      const double df = k * 200.0;
      f << df << ',' << visibility_vs_detuning(df, c.server) << '\n';
    }
  }
  const double sd_locked = circular_stddev(locked.residual) * 180.0 / kPi;
  const double sd_open = circular_stddev(open.residual) * 180.0 / kPi;
  std::printf("detuning           %.1f Hz\n", a.detuning);
  std::printf("locked SD          %.1f deg\n", sd_locked);
  std::printf("unlocked SD        %.1f deg\n", sd_open);
  std::printf("flagged (locked)   %ld\n", locked.flagged);
  std::printf("visibility at df   %.4f\n", visibility_vs_detuning(a.detuning, c.server));
  std::printf("written to         %s\n", out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metropolitan quantum-network simulator"};
  app.require_subcommand(1);
  std::string config;
  app.add_option("--config", config, "config JSON (default: $MQN_CONFIG, else built-in)");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "run the trial kernel and write logs");
  s->add_option("--config", sim.config, "config JSON");
  s->add_option("--seed", sim.seed, "master seed (default: config seed)");
  s->add_option("--trials", sim.trials, "number of trials")->capture_default_str();
  s->add_option("--mode", sim.mode, "delayed | stored")->capture_default_str();
  s->add_option("--out", sim.out, "output directory")->capture_default_str();
  s->add_option("--jobs", sim.jobs, "independent seeds, merged in the summary")->capture_default_str();
  s->add_option("--links", sim.links, "comma list overriding the scheduled links, e.g. AB,AC,BC");
  s->add_flag("--log-all", sim.log_all, "log every trial, not only heralded ones");

  AnalyzeArgs an;
  auto* a = app.add_subcommand("analyze", "entanglement report from simulate logs");
  a->add_option("dir", an.dir, "simulate output directory")->required();
  a->add_option("--link", an.link, "restrict to one link (AB, AC, BC)");
  a->add_option("--out", an.out, "report file (default: <dir>/report.json)");
  a->add_option("--bootstrap", an.bootstrap, "bootstrap resamples (default: config)");

  std::string table, table_out;
  auto* t = app.add_subcommand("theory", "visibility-budget tables beside the reference values");
  t->add_option("--config", config, "config JSON");
  t->add_option("--table", table, "s2 | s4 | s5 | s6 | s7 | s8 | s9")->required();
  t->add_option("--out", table_out, "CSV file");

  DemoArgs demo;
  auto* d = app.add_subcommand("stabilize-demo", "phase-lock traces, histograms and visibility sweep");
  d->add_option("--config", demo.config, "config JSON");
  d->add_option("--detuning", demo.detuning, "extra pump detuning of node B, Hz")->capture_default_str();
  d->add_option("--trials", demo.trials, "trials")->capture_default_str();
  d->add_option("--seed", demo.seed, "seed");
  d->add_option("--out", demo.out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  if (sim.config.empty()) sim.config = config;
  if (demo.config.empty()) demo.config = config;
  try {
    if (*s) return cmd_simulate(sim);
    if (*a) return cmd_analyze(an);
    if (*t) return cmd_theory(config, table, table_out);
    if (*d) return cmd_stabilize_demo(demo);
  } catch (const ConfigFail& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const DataFail& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return 0;
}
