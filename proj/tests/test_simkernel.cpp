#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "mqn/analysis.hpp"
#include "mqn/config.hpp"
#include "mqn/logio.hpp"
#include "mqn/simkernel.hpp"
#include "mqn/stats.hpp"

using namespace mqn;

namespace {

bool heralded(const TrialRecord& r) { return r.herald == HeraldOutcome::PsiPlus || r.herald == HeraldOutcome::PsiMinus; }

std::vector<TrialRecord> run_records(const RunConfig& c, long trials, std::uint64_t seed, bool keep_ledger = false,
                                     StorageMode mode = StorageMode::Delayed) {
  std::vector<TrialRecord> out;
  ExperimentOptions o;
  o.trials = trials;
  o.seed = seed;
  o.keep_ledger = keep_ledger;
  o.mode = mode;
  ExperimentSinks s;
  s.trial = [&](const TrialRecord& r) { out.push_back(r); };
  run_experiment(c, o, s);
  return out;
}

std::string dump_no_ledger(const TrialRecord& r) {
  auto j = record_to_json(r);
  j.erase("ledger");
  return j.dump();
}

RunConfig three_links() {
  RunConfig c = RunConfig::defaults();
  c.scheduler.links = {LinkId::AB, LinkId::AC, LinkId::CB};
  return c;
}

}  // namespace

TEST_CASE("entangling_rate examples") {
  CHECK(entangling_rate(6.9e-4, 2760.0) == doctest::Approx(1.93).epsilon(0.02));
  CHECK(entangling_rate(8.0e-4, 1030.0) == doctest::Approx(0.83).epsilon(0.02));
  CHECK(entangling_rate(0.0, 2760.0) == 0.0);
}

TEST_CASE("channel_efficiency examples") {
  CHECK(channel_efficiency(0.46, 0.0, 0.3, 1.0, 1.0) == doctest::Approx(0.46));
  CHECK(channel_efficiency(1.0, 10.0, 0.3, 1.0, 1.0) == doctest::Approx(std::pow(10.0, -0.3)));
  CHECK(channel_efficiency(1.0, 10.0, 0.3, 1.0, 1.0) == doctest::Approx(0.501).epsilon(1e-3));
  CHECK(channel_efficiency(1.0, 10.0, 3.5, 1.0, 1.0) == doctest::Approx(3.16e-4).epsilon(0.01));
  CHECK(channel_efficiency(0.5, 0.0, 0.3, 0.8, 0.9) == doctest::Approx(0.36));
}

TEST_CASE("realized repetition rates from the timing config") {
  const auto c = RunConfig::defaults();
  CHECK(c.delayed.repetition_rate() == doctest::Approx(2760.0).epsilon(0.02));
  CHECK(c.stored.repetition_rate() == doctest::Approx(1030.0).epsilon(0.02));
  for (StorageMode m : {StorageMode::Delayed, StorageMode::Stored}) {
    ExperimentOptions o;
    o.mode = m;
    o.trials = 200L * c.timing(m).trials_per_cycle();
    const auto s = run_experiment(c, o);
    CHECK(s.repetition_rate() == doctest::Approx(c.timing(m).repetition_rate()).epsilon(1e-9));
    CHECK(s.cycles == 200);
  }
}

TEST_CASE("same seed gives identical records, different seed does not") {
  const auto c = three_links();
  const auto a = run_records(c, 30000, 11), b = run_records(c, 30000, 11), d = run_records(c, 30000, 12);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(dump_no_ledger(a[i]) == dump_no_ledger(b[i]));
  bool differs = false;
  for (std::size_t i = 0; i < a.size() && !differs; ++i) differs = dump_no_ledger(a[i]) != dump_no_ledger(d[i]);
  CHECK(differs);
}

TEST_CASE("replay from the record cursor is bit-exact") {
  const auto c = three_links();
  const auto recs = run_records(c, 60000, 21, true);
  int checked = 0, checked_heralded = 0;
  for (std::size_t i = 0; i < recs.size(); i += 997) {
    CHECK(dump_no_ledger(replay_trial(c, recs[i])) == dump_no_ledger(recs[i]));
    ++checked;
  }
  for (const auto& r : recs) {
    if (!heralded(r)) continue;
    const TrialRecord again = replay_trial(c, r);
    CHECK(record_to_json(again).dump() == record_to_json(r).dump());
    if (++checked_heralded == 10) break;
  }
  CHECK(checked > 50);
  CHECK(checked_heralded == 10);
}

TEST_CASE("replay through the JSON log line") {
  const auto c = RunConfig::defaults();
  const auto recs = run_records(c, 20000, 5);
  for (std::size_t i = 0; i < recs.size(); i += 1999) {
    const std::string line = record_to_json(recs[i]).dump();
    const TrialRecord parsed = record_from_json(nlohmann::json::parse(line));
    CHECK(record_to_json(parsed).dump() == line);
    CHECK(dump_no_ledger(replay_trial(c, parsed)) == dump_no_ledger(recs[i]));
  }
}

TEST_CASE("event timestamps are monotone and respect latencies") {
  const auto c = RunConfig::defaults();
  for (StorageMode m : {StorageMode::Delayed, StorageMode::Stored}) {
    const auto& tc = c.timing(m);
    const auto recs = run_records(c, 5000, 3, false, m);
    double prev_start = -1.0;
    for (const auto& r : recs) {
      REQUIRE(r.t_start > prev_start);
      prev_start = r.t_start;
      CHECK(r.t_estimate > r.t_start);
      CHECK(r.t_feedback - r.t_estimate >= c.server.feedback_latency - 1e-12);
      CHECK(r.t_write == doctest::Approx(r.t_start + c.server.write_offset()).epsilon(1e-12));
      CHECK(r.t_feedback <= r.t_write);
      CHECK(r.t_herald > r.t_write);
      CHECK(r.t_read - r.t_write == doctest::Approx(tc.storage_time).epsilon(1e-6));
      CHECK(r.t_read < r.t_start + tc.trial_length);
      if (m == StorageMode::Delayed) CHECK(r.t_read < r.t_herald);  // read before the herald is known
      else CHECK(r.t_read > r.t_herald);                            // storage exceeds the round trip
    }
  }
}

TEST_CASE("herald probability matches the analytic channel and the calibrated value") {
  const auto c = RunConfig::defaults();
  ExperimentOptions o;
  o.trials = 1000000;
  o.seed = 8;
  const auto s = run_experiment(c, o);
  const double p = predicted_herald_probability(c, LinkId::AB);
  const double sigma = std::sqrt(p * (1 - p) / o.trials);
  CHECK(std::abs(s.herald_probability() - p) < 3.5 * sigma);
  CHECK(p == doctest::Approx(6.9e-4).epsilon(0.02));
  CHECK(s.herald_probability() == doctest::Approx(6.9e-4).epsilon(0.15));
  CHECK(s.links[0].heralds[0] + s.links[0].heralds[1] == s.heralded());
}

TEST_CASE("calibrate_writeout_efficiency inverts the herald probability") {
  auto c = RunConfig::defaults();
  const double w = calibrate_writeout_efficiency(c, LinkId::AB, 6.9e-4);
  for (auto& n : c.nodes) n.writeout_efficiency = w;
  CHECK(predicted_herald_probability(c, LinkId::AB) == doctest::Approx(6.9e-4).epsilon(1e-6));
}

TEST_CASE("herald probability grows with chi and with channel efficiency") {
  auto c = RunConfig::defaults();
  const double p0 = predicted_herald_probability(c, LinkId::AB);
  auto c2 = c;
  for (auto& n : c2.nodes) n.chi *= 2;
  CHECK(predicted_herald_probability(c2, LinkId::AB) > 1.9 * p0);
  auto c3 = c;
  c3.links[0].arm_km = {20.0, 20.0};
  CHECK(predicted_herald_probability(c3, LinkId::AB) < p0);
}

TEST_CASE("herald model: noise-free limit and D1/D2 symmetry") {
  auto c = RunConfig::defaults();
  for (auto& n : c.nodes) {
    n.snr = 1e12;
    n.qfc_noise_rate = 0.0;
    n.chi = 1e-4;  // multi-excitation terms vanish as chi -> 0
  }
  for (auto& l : c.links) l.detector.dark_rate = 0.0;
  for (LinkId l : kAllLinks) {
    const HeraldModel m = herald_model(c, l, StorageMode::Delayed);
    CHECK(m.signal_fraction == doctest::Approx(1.0).epsilon(1e-9));
    const auto& r = m.rho[0];
    // single excitation shared between the ensembles, coherence at the bound
    CHECK(r.d == doctest::Approx(std::sqrt(r.p01 * r.p10)).epsilon(1e-3));
    CHECK(r.p11 < 0.01 * (r.p01 + r.p10));
    CHECK(m.rho[1].p01 == doctest::Approx(r.p01));
    CHECK(m.rho[1].d == doctest::Approx(r.d));
    CHECK(std::abs(wrap_phase(m.rho[1].phi - r.phi)) == doctest::Approx(kPi));
  }
  // double excitations erode the coherence at larger chi
  auto c_chi = c;
  for (auto& n : c_chi.nodes) n.chi = 0.01;
  const auto r2 = herald_model(c_chi, LinkId::AB, StorageMode::Delayed).rho[0];
  const auto r1 = herald_model(c, LinkId::AB, StorageMode::Delayed).rho[0];
  CHECK(r2.d / std::sqrt(r2.p01 * r2.p10) < r1.d / std::sqrt(r1.p01 * r1.p10));
  const HeraldModel noisy = herald_model(RunConfig::defaults(), LinkId::AB, StorageMode::Delayed);
  CHECK(noisy.signal_fraction < 1.0);
  CHECK(noisy.rho[0].visibility() < herald_model(c, LinkId::AB, StorageMode::Delayed).rho[0].visibility());
}

TEST_CASE("heralded records carry a fully covered ledger") {
  const auto c = three_links();
  const auto recs = run_records(c, 100000, 4, true);
  int n = 0;
  for (const auto& r : recs) {
    if (!heralded(r)) {
      CHECK_FALSE(r.ledger.has_value());
      continue;
    }
    REQUIRE(r.ledger.has_value());
    CHECK(r.ledger->fully_covered());
    CHECK(r.phi_pme == doctest::Approx(pme_phase(*r.ledger)).epsilon(1e-12));
    ++n;
  }
  CHECK(n > 20);
}

TEST_CASE("scheduler covers all links and summaries merge associatively") {
  const auto c = three_links();
  ExperimentSummary parts[3];
  for (int k = 0; k < 3; ++k) {
    ExperimentOptions o;
    o.trials = 150000;
    o.seed = 100 + k;
    parts[k] = run_experiment(c, o);
    CHECK(parts[k].switches > 0);
  }
  ExperimentSummary left = parts[0], right = parts[1];
  left.merge(parts[1]);
  left.merge(parts[2]);
  right.merge(parts[2]);
  ExperimentSummary right_total = parts[0];
  right_total.merge(right);
  CHECK(summary_to_json(left).dump() == summary_to_json(right_total).dump());
  long seen = 0;
  for (const auto& l : left.links) {
    CHECK(l.trials > 0);
    seen += l.trials;
  }
  CHECK(seen == left.trials);
}

TEST_CASE("poisson_draw moments and zero probability") {
  for (double mean : {0.02, 0.7, 4.0, 9.9, 10.5, 37.0, 400.0}) {
    Rng rng(std::uint64_t(mean * 1000));
    const int n = 200000;
    double s = 0, s2 = 0;
    long zeros = 0;
    for (int i = 0; i < n; ++i) {
      const double k = poisson_draw(mean, rng);
      s += k;
      s2 += k * k;
      zeros += k == 0;
    }
    const double m = s / n, v = s2 / n - m * m;
    CHECK(std::abs(m - mean) < 5 * std::sqrt(mean / n));
    // variance of the sample variance for Poisson: (mu + 2 mu^2) / n
    CHECK(std::abs(v - mean) < 5 * std::sqrt((mean + 2 * mean * mean) / n));
    const double p0 = std::exp(-mean);
    CHECK(std::abs(zeros / double(n) - p0) < 5 * std::sqrt(p0 * (1 - p0) / n) + 1e-12);
  }
  Rng rng(1);
  CHECK(poisson_draw(0.0, rng) == 0);
}

TEST_CASE("Rng::normal is standard normal") {
  Rng rng(99);
  std::vector<double> x(100000);
  for (auto& v : x) v = rng.normal();
  CHECK(std::abs(mean(x)) < 5.0 / std::sqrt(double(x.size())));
  CHECK(stddev(x) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(ks_test_normal(x, 0.0, 1.0).p_value > 0.001);
}

TEST_CASE("config JSON round trip, partial documents and rejection") {
  const auto c = RunConfig::defaults();
  const auto j = config_to_json(c);
  CHECK(config_to_json(config_from_json(j)).dump() == j.dump());

  const auto partial = config_from_json(nlohmann::json::parse(
      R"({"schema_version":1,"seed":42,"scheduler":{"links":["AB","BC"]}})"));
  CHECK(partial.seed == 42);
  REQUIRE(partial.scheduler.links.size() == 2);
  CHECK(partial.scheduler.links[1] == LinkId::CB);
  CHECK(partial.node(NodeId::B).b_field_sd == c.node(NodeId::B).b_field_sd);

  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"schema_version":1,"bogus":1})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"schema_version":1,"analysis":{"ep_mean":1}})")),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"schema_version":99})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"schema_version":1,"scheduler":{"links":["AD"]}})")),
                  ConfigError);
}

TEST_CASE("log writer emits heralded trials and events; reader rebuilds the counts") {
  const auto c = three_links();
  std::stringstream buf;
  TrialLogWriter w(buf, LogHeader{c, 9, StorageMode::Delayed, 100000, false, 0});
  CountsByLink direct;
  ExperimentSinks sinks = w.sinks();
  auto inner = sinks.trial;
  sinks.trial = [&](const TrialRecord& r) {
    direct.add(r);
    inner(r);
  };
  ExperimentOptions o;
  o.trials = 100000;
  o.seed = 9;
  const auto s = run_experiment(c, o, sinks);
  const auto path = std::filesystem::temp_directory_path() / "mqn_test_trials.jsonl";
  {
    std::ofstream f(path);
    f << buf.str();
  }
  const LoadedLog log = read_trial_log(path);
  CHECK(log.records == s.heralded());
  CHECK(log.header.seed == 9);
  CHECK(config_to_json(log.header.config).dump() == config_to_json(c).dump());
  for (int l = 0; l < 3; ++l)
    for (int sg = 0; sg < 2; ++sg) {
      CHECK(log.counts.links[l].heralds[sg] == direct.links[l].heralds[sg]);
      for (int b = 0; b < 3; ++b) CHECK(log.counts.links[l].coinc[sg][b].n == direct.links[l].coinc[sg][b].n);
    }
  CHECK(buf.str().find("\"type\":\"switch\"") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("analysis: ideal correlations give unit fidelity") {
  LinkCounts lc;
  for (int s = 0; s < 2; ++s) {
    lc.heralds[s] = 1000;
    lc.z[s].n = {{{9000, 480}, {520, 0}}};
    const int same = s == 0 ? 1 : 0;  // psi+: correlated, psi-: anti-correlated in X and Y
    for (int b = 1; b < 3; ++b) {
      auto& cc = lc.coinc[s][b];
      cc.n[0][0] = cc.n[1][1] = same ? 60 : 0;
      cc.n[0][1] = cc.n[1][0] = same ? 0 : 60;
    }
    lc.coinc[s][0].n = {{{0, 60}, {60, 0}}};
  }
  for (int s = 0; s < 2; ++s) {
    const SignReport r = analyze_sign(lc, s, {0.25, 0.25});
    REQUIRE(r.valid);
    CHECK(r.fidelity.value == doctest::Approx(1.0));
    CHECK(r.concurrence.value > 0.0);
    CHECK(r.c_tilde.value > r.concurrence.value);
  }
}

TEST_CASE("analysis: sign folding of XX(theta) and bootstrap determinism") {
  LinkCounts lc;
  TrialRecord r;
  r.link = LinkId::AC;
  r.measured = true;
  r.basis = Basis::XX;
  r.theta_c = 0.5;
  r.herald = HeraldOutcome::PsiMinus;
  r.pattern = 1;  // (+, -): anti-correlated
  lc.add(r);
  r.herald = HeraldOutcome::PsiPlus;
  r.pattern = 0;  // (+, +)
  lc.add(r);
  const auto& t = lc.xx_by_theta.at(0.5);
  CHECK(t.n[0][0] == 1);
  CHECK(t.n[1][1] == 1);
  CHECK(t.n[0][1] == 0);
  CHECK(lc.coinc[1][1].n[0][1] == 1);

  // bootstrap is seeded and reproducible
  const auto c = three_links();
  CountsByLink counts;
  for (const auto& rec : run_records(c, 300000, 17))
    counts.add(rec);
  const auto a = analyze(counts, c, StorageMode::Delayed, 30, 5);
  const auto b = analyze(counts, c, StorageMode::Delayed, 30, 5);
  CHECK(report_to_json(a).dump() == report_to_json(b).dump());
}
