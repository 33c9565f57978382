#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "mqn/config.hpp"
#include "mqn/simkernel.hpp"
#include "mqn/stats.hpp"
#include "mqn/verification.hpp"

namespace mqn {

// Counts of one link split by herald sign (0: psi+, 1: psi-).
struct LinkCounts {
  std::array<long, 2> heralds{};
  std::array<ZCounts, 2> z{};                                // H-detector patterns from ZZ trials
  std::array<std::array<CoincidenceCounts, 3>, 2> coinc{};  // by Basis
  // XX coincidences per EP setting at node C, sign-folded to psi+
  std::map<double, CoincidenceCounts> xx_by_theta;

  LinkCounts();
  void add(const TrialRecord& r);
  void merge(const LinkCounts& o);
};

struct CountsByLink {
  std::array<LinkCounts, 3> links;
  void add(const TrialRecord& r) { links[index(r.link)].add(r); }
  void merge(const CountsByLink& o);
};

struct SignReport {
  int sign = 1;
  long heralds = 0;
  PijEstimate pij;
  Estimate e_x, e_y, zz;
  Estimate concurrence;   // lower bound from E_X, E_Y and p_ij
  Estimate c_tilde;       // rescaled to the ensembles
  Estimate fidelity;      // PME fidelity
  double d = 0.0;         // inferred coherence
  bool clamped = false;
  bool valid = false;     // enough counts in every basis
};

struct ThetaPoint {
  double theta = 0.0;
  Estimate xx;
};

struct LinkReport {
  LinkId link = LinkId::AB;
  std::array<SignReport, 2> sign;
  std::array<double, 2> readout_eta{};
  std::vector<ThetaPoint> xx_theta;
  SinusoidFit fit;     // XX(theta) = A cos(theta + phase) + c
  bool fit_valid = false;
};

struct EntanglementReport {
  std::vector<LinkReport> links;
  // phase(AC) - phase(CB) of the XX(theta) fits, when both are available
  bool delay_valid = false;
  double delay = 0.0;
  double delay_err = 0.0;
};

// Bootstrap resamples the counts multinomially; `bootstrap` = 0 keeps the
// binomial errors of the point estimates only.
EntanglementReport analyze(const CountsByLink& counts, const RunConfig& c, StorageMode mode, int bootstrap,
                           std::uint64_t seed);

SignReport analyze_sign(const LinkCounts& lc, int s, const std::array<double, 2>& readout_eta);

}  // namespace mqn
