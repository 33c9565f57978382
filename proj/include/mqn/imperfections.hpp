#pragma once

#include <string>
#include <vector>

namespace mqn {

// beta = 2 sqrt((1/snr + 1 - eta_r) chi)
double beta(double snr, double eta_r, double chi);
// Z-basis bound (1 - beta) / (1 + beta)
double z_visibility(double beta);
// SNR that reproduces a given beta (inverse of beta())
double snr_from_beta(double beta, double eta_r, double chi);

double vm_high_order(double chi, double eta_r);
double vm_mode_mismatch(double eta_a, double eta_b);
double vm_imbalance(double p01, double p10);
double vm_phase(double sigma);

double compose_sd(double sd_memory, double sd_interferometer, double sd_laser);
double compose_link(double sd_local_a, double sd_local_b, double sd_remote);

// SD of the memory phase 2 muB gF B dt for a Gaussian field of SD b_sd (G)
double memory_phase_sd(double b_sd, double dt, bool clock = false, double clock_reduction = 1e-3);

struct NodeBudget {
  std::string name;
  double sd_memory = 0.0;
  double sd_interferometer = 0.0;
  double sd_laser = 0.0;
  double eta_mode = 1.0;

  double sd_local() const { return compose_sd(sd_memory, sd_interferometer, sd_laser); }
};

struct ImperfectionBudget {
  std::string name;
  double chi = 0.01;
  double eta_r = 0.25;
  double snr = 10.0;
  NodeBudget a, b;
  double p01 = 0.1, p10 = 0.1;
  double sd_remote = 0.0;

  void validate() const;  // throws std::invalid_argument naming the field
  double beta() const { return mqn::beta(snr, eta_r, chi); }
  double vm_high_order() const { return mqn::vm_high_order(chi, eta_r); }
  double vm_mode() const { return vm_mode_mismatch(a.eta_mode, b.eta_mode); }
  double vm_imbalance() const { return mqn::vm_imbalance(p01, p10); }
  double sd_link() const { return compose_link(a.sd_local(), b.sd_local(), sd_remote); }
  double vm_phase() const { return mqn::vm_phase(sd_link()); }
};

double v_theory(const ImperfectionBudget& b);

struct Quoted {
  double value = 0.0;
  double error = 0.0;
};

// first-order relative errors added in quadrature
Quoted product_with_errors(const std::vector<Quoted>& factors);

// Reference per-configuration values shipped for side-by-side reports.
struct BudgetReference {
  ImperfectionBudget budget;
  Quoted high_order, mode, imbalance;
  double phase = 0.0;  // printed without uncertainty
  Quoted v_theory, v_exp;
  // Z-basis visibilities for psi-, psi+
  Quoted ve[2], vbeta[2], vp[2];
};
const std::vector<BudgetReference>& reference_rows();
const BudgetReference& reference_row(const std::string& name);

struct HomReference {
  std::string node;
  Quoted g2, eta;
};
const std::vector<HomReference>& hom_reference();

struct PhaseSdReference {
  std::string node;
  double b_field_sd = 0.0;  // G
  double memory = 0.0, interferometer = 0.0, laser_5us = 0.0, laser_107us = 0.0;
};
const std::vector<PhaseSdReference>& phase_sd_reference();

}  // namespace mqn
