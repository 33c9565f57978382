#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mqn {

// Phase symbols recorded per node for one trial. Laser phases are indexed by
// the write (tw) and read (tr) times.
enum class Sym : std::uint8_t {
  VarphiW_tw,  // Write laser at t_w
  VarphiW_tr,  // Write laser at t_r (drives the EP pulse)
  VarphiP_tw,  // Pump laser at t_w
  VarphiR_tw,  // Read laser at t_w
  VarphiR_tr,  // Read laser at t_r
  PhiW,        // write pulse path
  PhiWoIn,     // write-out path inside the node interferometer
  PhiWoOut,    // write-out path outside (QFC, fiber to server)
  PhiRIn,      // read pulse path inside
  PhiROut,     // read pulse path outside
  PhiRo,       // read-out path
  PhiEP,       // EP pulse path (includes the EP phase setting)
  PhiA,        // memory phase
  Count
};

inline constexpr std::size_t kSymCount = static_cast<std::size_t>(Sym::Count);
const char* sym_name(Sym s);

class MissingEntry : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NodeEntries {
public:
  void record(Sym s, double value);
  double get(Sym s) const;
  bool has(Sym s) const { return written_ & bit(s); }
  bool complete() const { return written_ == kAll; }
  bool fully_read() const { return read_ == kAll; }
  double value_unchecked(Sym s) const { return v_[static_cast<std::size_t>(s)]; }

  double t_w = 0.0;
  double t_r = 0.0;

private:
  static constexpr std::uint32_t bit(Sym s) { return 1u << static_cast<unsigned>(s); }
  static constexpr std::uint32_t kAll = (1u << kSymCount) - 1u;
  std::array<double, kSymCount> v_{};
  std::uint32_t written_ = 0;
  mutable std::uint32_t read_ = 0;
};

// One link's ledger for one trial. "first" is the node whose arm carries the
// server EOM.
struct PhaseLedger {
  NodeEntries first;
  NodeEntries second;
  double phi_eom = 0.0;
  bool eom_recorded = false;

  void record_eom(double v) {
    phi_eom = v;
    eom_recorded = true;
  }
  double eom() const {
    if (!eom_recorded) throw MissingEntry("phase ledger: phi_EOM not recorded");
    return phi_eom;
  }
  bool fully_covered() const {
    return eom_recorded && first.complete() && second.complete() && first.fully_read() && second.fully_read();
  }
};

// varphi_w(t_w)+varphi_p(t_w)+varphi_r(t_r)+phi_a+phi_w+phi_wo+phi_r+phi_ro
double pair_phase(const NodeEntries& n);
double local_phase(const NodeEntries& n);
double remote_phase(const NodeEntries& a, const NodeEntries& b, double phi_eom);
// phi_lo^A - phi_lo^B + phi_rm, wrapped to (-pi, pi]
double pme_phase(const PhaseLedger& l);
// same quantity evaluated from pair phases without the local/remote split
double pme_phase_direct(const PhaseLedger& l);
// phi_PME^{AC} + phi_PME^{CB} - phi_PME^{AB} - pi/2, wrapped
double three_link_identity(const PhaseLedger& ab, const PhaseLedger& ac, const PhaseLedger& cb);

}  // namespace mqn
