#include "mqn/imperfections.hpp"

#include <cmath>
#include <stdexcept>

#include "mqn/node.hpp"
#include "mqn/stats.hpp"

namespace mqn {

double beta(double snr, double eta_r, double chi) {
  if (!(snr > 0.0)) throw std::invalid_argument("beta: snr must be > 0");
  return 2.0 * std::sqrt(std::max(0.0, (1.0 / snr + 1.0 - eta_r) * chi));
}

double z_visibility(double b) { return (1.0 - b) / (1.0 + b); }

double snr_from_beta(double b, double eta_r, double chi) {
  const double inv = b * b / (4.0 * chi) - (1.0 - eta_r);
  if (!(inv > 0.0)) throw std::domain_error("snr_from_beta: beta too small for chi and eta_r");
  return 1.0 / inv;
}

double vm_high_order(double chi, double eta_r) { return 1.0 / (1.0 + 2.0 * chi * (3.0 - 2.0 * eta_r)); }

double vm_mode_mismatch(double eta_a, double eta_b) { return std::sqrt(eta_a * eta_b); }

double vm_imbalance(double p01, double p10) {
  if (p01 < 0.0 || p10 < 0.0) throw std::invalid_argument("vm_imbalance: negative probability");
  if (p01 + p10 == 0.0) throw std::invalid_argument("vm_imbalance: p01 and p10 both zero");
  return std::sqrt(p01 * p10) / ((p01 + p10) / 2.0);
}

double vm_phase(double sigma) { return std::exp(-sigma * sigma / 2.0); }

double compose_sd(double m, double i, double l) { return std::sqrt(m * m + i * i + l * l); }

double compose_link(double a, double b, double r) { return std::sqrt(a * a + b * b + r * r); }

double memory_phase_sd(double b_sd, double dt, bool clock, double clock_reduction) {
  const double sd = 2.0 * kTwoPi * kMuBOverH * kGF * b_sd * dt;
  return clock ? sd * clock_reduction : sd;
}

void ImperfectionBudget::validate() const {
  auto need = [&](bool ok, const char* field) {
    if (!ok) throw std::invalid_argument("budget " + name + ": invalid or missing " + field);
  };
  need(chi > 0.0 && chi <= 1.0, "chi");
  need(eta_r > 0.0 && eta_r <= 1.0, "eta_r");
  need(snr > 0.0, "snr");
  need(a.eta_mode > 0.0 && a.eta_mode <= 1.0, "eta_mode (first node)");
  need(b.eta_mode > 0.0 && b.eta_mode <= 1.0, "eta_mode (second node)");
  need(p01 >= 0.0 && p10 >= 0.0 && p01 + p10 > 0.0, "p01/p10");
  for (const NodeBudget* n : {&a, &b})
    need(n->sd_memory >= 0.0 && n->sd_interferometer >= 0.0 && n->sd_laser >= 0.0, "node phase SDs");
  need(sd_remote >= 0.0, "sd_remote");
}

double v_theory(const ImperfectionBudget& b) {
  return b.vm_high_order() * b.vm_mode() * b.vm_phase() * b.vm_imbalance();
}

Quoted product_with_errors(const std::vector<Quoted>& factors) {
  Quoted out{1.0, 0.0};
  double rel2 = 0.0;
  for (const auto& f : factors) {
    out.value *= f.value;
    if (f.value != 0.0) rel2 += (f.error / f.value) * (f.error / f.value);
  }
  out.error = std::abs(out.value) * std::sqrt(rel2);
  return out;
}

namespace {

// Node phase SDs at 5 us (rad); 107 us storage uses the clock transition so
// the memory term drops out.
NodeBudget node_at(const char* n, double mem, double in, double laser, double eta) {
  return NodeBudget{n, mem, in, laser, eta};
}

std::vector<BudgetReference> make_rows() {
  std::vector<BudgetReference> rows;
  auto add = [&](ImperfectionBudget b, Quoted ho, Quoted mode, Quoted imb, double ph, Quoted vt, Quoted vx,
                 Quoted ve_m, Quoted ve_p, Quoted vb_m, Quoted vb_p, Quoted vp_m, Quoted vp_p) {
    BudgetReference r;
    r.budget = std::move(b);
    r.high_order = ho;
    r.mode = mode;
    r.imbalance = imb;
    r.phase = ph;
    r.v_theory = vt;
    r.v_exp = vx;
    r.ve[0] = ve_m;
    r.ve[1] = ve_p;
    r.vbeta[0] = vb_m;
    r.vbeta[1] = vb_p;
    r.vp[0] = vp_m;
    r.vp[1] = vp_p;
    rows.push_back(std::move(r));
  };
  // chi solved from the high-order factor at the listed eta_r; snr rounded
  // from the Z-basis V_P column; p01/p10 ratios from the imbalance factor
  const NodeBudget a5 = node_at("A", 0.084, 0.029, 0.14, 0.90);
  const NodeBudget b5 = node_at("B", 0.035, 0.135, 0.31, 0.90);
  const NodeBudget c5 = node_at("C", 0.018, 0.063, 0.14, 0.95);
  const NodeBudget a107 = node_at("A", 0.0, 0.029, 0.20, 0.90);
  const NodeBudget b107 = node_at("B", 0.0, 0.135, 0.33, 0.90);

  add({"ST5", 0.013904, 0.25, 4.7, a5, b5, 0.1, 0.1, 0.30}, {0.935, 0.009}, {0.900, 0.028}, {1.000, 0.0012}, 0.89,
      {0.753, 0.026}, {0.64, 0.05}, {0.60, 0.07}, {0.67, 0.07}, {0.631, 0.021}, {0.661, 0.022}, {0.629, 0.016},
      {0.619, 0.016});
  add({"ST107", 0.019019, 0.20, 3.6, a107, b107, 0.11, 0.11 / 1.22, 0.30}, {0.910, 0.016}, {0.900, 0.028},
      {0.995, 0.015}, 0.88, {0.719, 0.028}, {0.59, 0.6}, {0.56, 0.09}, {0.69, 0.09}, {0.551, 0.032}, {0.605, 0.035},
      {0.561, 0.024}, {0.548, 0.025});
  add({"A-B", 0.0096436, 0.25, 3.6, a5, b5, 0.1, 0.1, 0.30}, {0.954, 0.009}, {0.900, 0.028}, {1.000, 0.014}, 0.89,
      {0.768, 0.027}, {0.67, 0.05}, {0.71, 0.09}, {0.72, 0.09}, {0.674, 0.029}, {0.685, 0.029}, {0.671, 0.021},
      {0.665, 0.021});
  add({"A-C", 0.0237136, 0.25, 2.8, a5, c5, 0.1, 0.1 / 1.166, 0.22}, {0.894, 0.014}, {0.92, 0.04}, {0.997, 0.014},
      0.95, {0.79, 0.04}, {0.73, 0.06}, {0.48, 0.08}, {0.53, 0.008}, {0.513, 0.027}, {0.577, 0.028}, {0.510, 0.021},
      {0.511, 0.021});
  add({"B-C", 0.020022, 0.25, 2.65, b5, c5, 0.1, 0.1 / 1.245, 0.30}, {0.909, 0.013}, {0.92, 0.04}, {0.994, 0.0014},
      0.89, {0.75, 0.04}, {0.51, 0.05}, {0.55, 0.09}, {0.49, 0.09}, {0.586, 0.028}, {0.555, 0.028}, {0.541, 0.021},
      {0.535, 0.021});
  return rows;
}

}  // namespace

const std::vector<BudgetReference>& reference_rows() {
  static const std::vector<BudgetReference> rows = make_rows();
  return rows;
}

const BudgetReference& reference_row(const std::string& name) {
  for (const auto& r : reference_rows())
    if (r.budget.name == name) return r;
  throw std::invalid_argument("unknown budget configuration: " + name);
}

const std::vector<HomReference>& hom_reference() {
  static const std::vector<HomReference> rows = {
      {"A", {0.716, 0.019}, {0.90, 0.04}},
      {"B", {0.717, 0.014}, {0.90, 0.04}},
      {"C", {0.700, 0.028}, {0.95, 0.08}},
  };
  return rows;
}

const std::vector<PhaseSdReference>& phase_sd_reference() {
  static const std::vector<PhaseSdReference> rows = {
      {"A", 1.9e-3, 0.084, 0.029, 0.14, 0.20},
      {"B", 0.8e-3, 0.035, 0.135, 0.31, 0.33},
      {"C", 0.4e-3, 0.018, 0.063, 0.14, 0.17},
  };
  return rows;
}

}  // namespace mqn
