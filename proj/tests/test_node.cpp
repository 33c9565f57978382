#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "mqn/node.hpp"
#include "mqn/stats.hpp"

using namespace mqn;

TEST_CASE("write_trial statistics") {
  NodeParams p;
  p.chi = 0.0;
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) CHECK_FALSE(write_trial(p, rng).writeout_present);

  p.chi = 0.01;
  const int n = 1000000;
  int single = 0, dbl = 0;
  for (int i = 0; i < n; ++i) {
    const auto r = write_trial(p, rng);
    single += r.excitations == 1;
    dbl += r.excitations == 2;
  }
  CHECK(std::abs(single / double(n) - 0.01) < 3e-4);
  CHECK(std::abs(dbl / double(n) - 1e-4) < 4.0 * std::sqrt(1e-4 / n));
}

TEST_CASE("double excitations scale as chi^2") {
  Rng rng(2);
  std::vector<double> lx, ly;
  for (double chi : {0.005, 0.01, 0.02, 0.04}) {
    NodeParams p;
    p.chi = chi;
    const int n = 4000000;
    int dbl = 0;
    for (int i = 0; i < n; ++i) dbl += write_trial(p, rng).excitations == 2;
    lx.push_back(std::log(chi));
    ly.push_back(std::log(dbl / double(n)));
  }
  const auto fit = linear_fit(lx, ly);
  double ss_tot = 0.0, ss_res = 0.0;
  const double my = mean(ly);
  for (std::size_t i = 0; i < lx.size(); ++i) {
    ss_tot += (ly[i] - my) * (ly[i] - my);
    const double r = ly[i] - fit.intercept - fit.slope * lx[i];
    ss_res += r * r;
  }
  CHECK(std::abs(fit.slope - 2.0) < 0.1);
  CHECK(1.0 - ss_res / ss_tot > 0.99);
}

TEST_CASE("qfc_convert") {
  NodeParams p;
  p.qfc_efficiency = 0.46;
  p.qfc_noise_rate = 0.0;
  Rng rng(3);
  const auto r = qfc_convert(1000000, p, 1e-6, rng);
  CHECK(std::abs(r.signal - 460000) < 1500);

  p.qfc_noise_rate = 100.0;
  long noise = 0;
  for (int i = 0; i < 10000000; ++i) noise += qfc_convert(0, p, 500e-9, rng).noise;
  CHECK(std::abs(noise - 500.0) < 3.0 * std::sqrt(500.0));

  p.qfc_efficiency = 0.0;
  for (int i = 0; i < 1000; ++i) CHECK(qfc_convert(1, p, 1e-6, rng).signal == 0);
}

TEST_CASE("read_retrieve") {
  NodeParams p;
  p.read = LaserModel{};
  p.pump = LaserModel{};
  Node node(p);
  Rng rng(4);
  int ok = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    MemorySlot slot{true, 0.0, 0.0, 0.7, 600e-6, 560e-6};
    ok += read_retrieve(node, slot, 0.0, rng).readout_present;
    CHECK_FALSE(slot.occupied);
  }
  CHECK(std::abs(ok / double(n) - 0.7) < 0.005);

  MemorySlot old{true, 0.0, 0.0, 0.7, 600e-6, 560e-6};
  CHECK_THROWS_AS(read_retrieve(node, old, 600e-6, rng), std::out_of_range);

  // noise-free: the phase is the memory phase plus the Read laser phase
  LaserModel fixed;
  fixed.phase = 0.4;
  p.read = fixed;
  Node quiet(p);
  quiet.advance_to(5e-6, rng);
  MemorySlot s{true, 0.0, 0.25, 0.7, 600e-6, 560e-6};
  CHECK(read_retrieve(quiet, s, 5e-6, rng).phase == 0.65);
}

TEST_CASE("memory_phase") {
  CHECK(memory_phase({0.0, 0.0, 0.0}, 5e-6, false) == 0.0);
  // constant field: 2 * 2pi * muB/h * gF * B * dt
  CHECK(memory_phase({1.9e-3, 1.9e-3}, 5e-6, false) == doctest::Approx(kTwoPi * 1.3996e6 * 1.9e-3 * 5e-6));

  for (auto [sd, expect] : {std::pair{1.9e-3, 0.084}, std::pair{0.8e-3, 0.035}, std::pair{0.4e-3, 0.018}}) {
    NodeParams p;
    p.b_field_sd = sd;
    Node node(p);
    Rng rng(5);
    std::normal_distribution<double> jit(0.0, node.b_jitter_sd());
    std::vector<double> off, on;
    for (int cycle = 0; cycle < 20000; ++cycle) {
      node.start_cycle(rng);
      const double t0 = 0.026 + 1e-3 * rng.uniform();
      const auto tr = node.b_trace(t0, 5e-6, jit(rng));
      off.push_back(memory_phase(tr, 5e-6, false));
      on.push_back(memory_phase(tr, 5e-6, true, 1e-3));
    }
    const double s_off = stddev(off), s_on = stddev(on);
    CHECK(std::abs(s_off / expect - 1.0) < 0.05);
    CHECK(s_on / s_off == doctest::Approx(1e-3).epsilon(1e-12));
  }
}

TEST_CASE("evolve_laser_phase") {
  Rng rng(6);
  LaserModel still;
  for (int i = 0; i < 10; ++i) CHECK(evolve_laser_phase(still, i * 1e-4, 1e-4, rng) == 0.0);
  CHECK(still.phase == 0.0);

  LaserModel off;
  off.frequency_offset = 1000.0;
  CHECK(evolve_laser_phase(off, 0.0, 1e-3, rng) == doctest::Approx(kTwoPi));

  LaserModel noisy;
  noisy.linewidth = 500.0;
  std::vector<double> inc;
  for (int i = 0; i < 100000; ++i) inc.push_back(evolve_laser_phase(noisy, i * 1e-4, 1e-4, rng));
  CHECK(stddev(inc) == doctest::Approx(std::sqrt(kTwoPi * 500 * 1e-4)).epsilon(0.01));
  CHECK(std::sqrt(kTwoPi * 500 * 1e-4) == doctest::Approx(0.56).epsilon(0.01));
  // disjoint increments are uncorrelated
  const double m = mean(inc);
  double c = 0.0, v = 0.0;
  for (std::size_t i = 0; i + 1 < inc.size(); ++i) c += (inc[i] - m) * (inc[i + 1] - m);
  for (double x : inc) v += (x - m) * (x - m);
  CHECK(std::abs(c / v) < 3.0 / std::sqrt(double(inc.size())));

  LaserModel drift;
  drift.drift_rate = 3600.0;  // 1 Hz per second
  // integral of 2 pi t from 0 to 1 s
  CHECK(evolve_laser_phase(drift, 0.0, 1.0, rng) == doctest::Approx(kPi));
}

TEST_CASE("OPLL jitter reproduces the configured increment SD") {
  NodeParams p;
  p.opll = {0.3, 0.1414, 7.5e-6};
  Node node(p);
  Rng rng(7);
  std::vector<double> d;
  double t = 0.0;
  for (int i = 0; i < 50000; ++i) {
    t += 1e-3;
    node.advance_to(t, rng);
    const double w0 = node.write_phase() - node.read_phase();
    node.advance_to(t + 5e-6, rng);
    const double w1 = node.write_phase() - node.read_phase();
    d.push_back(wrap_phase(w1 - w0));
    t += 5e-6;
  }
  CHECK(stddev(d) == doctest::Approx(p.opll.increment_sd(5e-6)).epsilon(0.02));
}

TEST_CASE("make_probe_pulse") {
  NodeParams p;
  p.read = LaserModel{0.0, 0.0, 300.0, 0.0};
  p.pump = LaserModel{0.0, 0.0, 200.0, 0.0};
  Node node(p);
  Rng rng(8);
  node.advance_to(1e-3, rng);
  const auto a = make_probe_pulse(node, PulseKind::PP, 1e-3, 100, 4e-6);
  node.advance_to(1.1e-3, rng);
  const auto b = make_probe_pulse(node, PulseKind::PP, 1.1e-3, 100, 4e-6);
  CHECK(a.duration == 4e-6);
  CHECK(a.mean_photons == 100);
  CHECK(std::abs(wrap_phase(b.phase - a.phase - kTwoPi * 500.0 * 1e-4)) < 1e-9);
  CHECK(b.frequency_offset == doctest::Approx(500.0));

  const auto ep = make_probe_pulse(node, PulseKind::EP, 1.1e-3, 0.03, 0.3e-6);
  CHECK(ep.mean_photons == 0.03);
  CHECK(ep.phase == doctest::Approx(wrap_phase(node.write_phase() + p.paths.phi_ep)));
}

TEST_CASE("write_trial ledger entries") {
  NodeParams p;
  Node node(p);
  Rng rng(9);
  node.advance_to(10e-6, rng);
  NodeEntries e;
  write_trial(node, 10e-6, e, rng);
  CHECK(e.has(Sym::VarphiW_tw));
  CHECK(e.has(Sym::VarphiP_tw));
  CHECK(e.has(Sym::PhiWoIn));
  CHECK(e.get(Sym::VarphiP_tw) == node.pump_phase());
  CHECK_THROWS_AS(write_trial(node, 11e-6, e, rng), std::logic_error);
}

TEST_CASE("node params validation") {
  NodeParams p;
  CHECK_NOTHROW(p.validate());
  p.chi = 0.2;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.chi = 0.01;
  p.qfc_efficiency = 1.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
