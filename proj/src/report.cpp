#include "mqn/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "mqn/imperfections.hpp"
#include "mqn/photonics.hpp"

namespace mqn {

namespace {

std::string fmt(double x, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, x);
  return buf;
}

std::string pm(double v, double e, int prec = 3) { return fmt(v, prec) + "+-" + fmt(e, prec); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

const char* flag(bool ok) { return ok ? "OK" : "DEV"; }

// g2 inversion uses the reference pulse settings (p_ro, p_ep)
constexpr double kHomPro = 0.02, kHomPep = 0.04;
constexpr double kSdStorage = 5e-6;

}  // namespace

bool within(double computed, double value, double error) { return std::abs(computed - value) <= error + 1e-12; }

std::string Table::csv() const {
  std::ostringstream o;
  for (std::size_t i = 0; i < columns.size(); ++i) o << (i ? "," : "") << csv_field(columns[i]);
  o << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << csv_field(r[i]);
    o << '\n';
  }
  return o.str();
}

std::string Table::text() const {
  std::vector<std::size_t> w(columns.size());
  for (std::size_t i = 0; i < columns.size(); ++i) w[i] = columns[i].size();
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size() && i < w.size(); ++i) w[i] = std::max(w[i], r[i].size());
  std::ostringstream o;
  o << title << '\n';
  auto emit = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      o << (i ? "  " : "") << r[i];
      if (i + 1 < r.size()) o << std::string(w[i] - r[i].size(), ' ');
    }
    o << '\n';
  };
  emit(columns);
  std::size_t total = 0;
  for (auto x : w) total += x + 2;
  o << std::string(total > 2 ? total - 2 : 0, '-') << '\n';
  for (const auto& r : rows) emit(r);
  return o.str();
}

std::vector<Table> theory_tables(const RunConfig& c, const std::string& id) {
  for (const auto& b : c.budgets) b.validate();
  std::vector<Table> out;
  if (id == "s2") {
    Table t{"Z-basis visibility: (1-beta)/(1+beta) from the budget vs reference",
            {"config", "state", "beta", "V_beta_computed", "V_E_ref", "V_beta_ref", "V_P_ref", "delta_vs_V_P"},
            {}};
    for (const auto& b : c.budgets) {
      const auto& ref = reference_row(b.name);
      const double vb = z_visibility(b.beta());
      for (int s = 0; s < 2; ++s)
        t.rows.push_back({b.name, s == 0 ? "psi-" : "psi+", fmt(b.beta()), fmt(vb, 3), pm(ref.ve[s].value, ref.ve[s].error),
                          pm(ref.vbeta[s].value, ref.vbeta[s].error), pm(ref.vp[s].value, ref.vp[s].error),
                          fmt(vb - ref.vp[s].value, 3)});
    }
    out.push_back(t);
  } else if (id == "s4") {
    Table t{"HOM g2 and inferred indistinguishability eta (p_ro=0.02, p_EP=0.04)",
            {"node", "g2_ref", "eta_computed", "eta_ref", "delta", "flag"},
            {}};
    for (const auto& h : hom_reference()) {
      const double eta = invert_g2(h.g2.value, kHomPro, kHomPep);
      t.rows.push_back({h.node, pm(h.g2.value, h.g2.error), fmt(eta, 3), pm(h.eta.value, h.eta.error),
                        fmt(eta - h.eta.value, 3), flag(within(eta, h.eta.value, h.eta.error))});
    }
    out.push_back(t);
  } else if (id == "s5") {
    Table t{"High-order excitation factor", {"config", "chi", "eta_r", "V_M_computed", "V_M_ref", "delta", "flag"}, {}};
    for (const auto& b : c.budgets) {
      const auto& ref = reference_row(b.name);
      const double v = b.vm_high_order();
      t.rows.push_back({b.name, fmt(b.chi, 5), fmt(b.eta_r, 3), fmt(v, 3), pm(ref.high_order.value, ref.high_order.error),
                        fmt(v - ref.high_order.value, 3), flag(within(v, ref.high_order.value, ref.high_order.error))});
    }
    out.push_back(t);
  } else if (id == "s6") {
    Table t{"Mode-mismatch factor", {"config", "eta_a", "eta_b", "V_M_computed", "V_M_ref", "delta", "flag"}, {}};
    for (const auto& b : c.budgets) {
      const auto& ref = reference_row(b.name);
      const double v = b.vm_mode();
      t.rows.push_back({b.name, fmt(b.a.eta_mode, 3), fmt(b.b.eta_mode, 3), fmt(v, 3),
                        pm(ref.mode.value, ref.mode.error), fmt(v - ref.mode.value, 3),
                        flag(within(v, ref.mode.value, ref.mode.error))});
    }
    out.push_back(t);
  } else if (id == "s7") {
    Table t{"Imbalance factor", {"config", "p01", "p10", "V_M_computed", "V_M_ref", "delta", "flag"}, {}};
    for (const auto& b : c.budgets) {
      const auto& ref = reference_row(b.name);
      const double v = b.vm_imbalance();
      t.rows.push_back({b.name, fmt(b.p01), fmt(b.p10), fmt(v, 4), pm(ref.imbalance.value, ref.imbalance.error, 4),
                        fmt(v - ref.imbalance.value, 4), flag(within(v, ref.imbalance.value, ref.imbalance.error))});
    }
    out.push_back(t);
  } else if (id == "s8") {
    Table nodes{"Memory phase SD from the field noise at 5 us storage (rad)",
                {"node", "B_sd_G", "memory_computed", "memory_ref", "interferometer", "laser_5us", "laser_107us"},
                {}};
    for (const auto& r : phase_sd_reference()) {
      const double m = memory_phase_sd(r.b_field_sd, kSdStorage);
      nodes.rows.push_back({r.node, fmt(r.b_field_sd, 5), fmt(m, 4), fmt(r.memory, 3), fmt(r.interferometer, 3),
                            fmt(r.laser_5us, 2), fmt(r.laser_107us, 2)});
    }
    out.push_back(nodes);
    Table links{"Phase SD per configuration and phase factor",
                {"config", "sd_local_a", "sd_local_b", "sd_remote", "sd_link", "V_M_computed", "V_M_ref", "delta"},
                {}};
    for (const auto& b : c.budgets) {
      const auto& ref = reference_row(b.name);
      links.rows.push_back({b.name, fmt(b.a.sd_local(), 3), fmt(b.b.sd_local(), 3), fmt(b.sd_remote, 3),
                            fmt(b.sd_link(), 3), fmt(b.vm_phase(), 3), fmt(ref.phase, 2),
                            fmt(b.vm_phase() - ref.phase, 3)});
    }
    out.push_back(links);
  } else if (id == "s9") {
    Table t{"Visibility budget: product of the four factors vs reference V_theory",
            {"config", "high_order", "mode", "phase", "imbalance", "V_theory_computed", "V_theory_ref", "delta", "flag",
             "V_exp_ref"},
            {}};
    for (const auto& b : c.budgets) {
      const auto& ref = reference_row(b.name);
      const double v = v_theory(b);
      t.rows.push_back({b.name, fmt(b.vm_high_order(), 3), fmt(b.vm_mode(), 3), fmt(b.vm_phase(), 3),
                        fmt(b.vm_imbalance(), 4), fmt(v, 3), pm(ref.v_theory.value, ref.v_theory.error),
                        fmt(v - ref.v_theory.value, 3), flag(within(v, ref.v_theory.value, ref.v_theory.error)),
                        pm(ref.v_exp.value, ref.v_exp.error, 2)});
    }
    out.push_back(t);
  } else {
    throw std::invalid_argument("unknown table id '" + id + "' (expected s2, s4, s5, s6, s7, s8 or s9)");
  }
  return out;
}

}  // namespace mqn
