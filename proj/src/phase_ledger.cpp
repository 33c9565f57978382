#include "mqn/phase_ledger.hpp"

#include <cmath>

#include "mqn/stats.hpp"

namespace mqn {

const char* sym_name(Sym s) {
  switch (s) {
    case Sym::VarphiW_tw: return "varphi_w(t_w)";
    case Sym::VarphiW_tr: return "varphi_w(t_r)";
    case Sym::VarphiP_tw: return "varphi_p(t_w)";
    case Sym::VarphiR_tw: return "varphi_r(t_w)";
    case Sym::VarphiR_tr: return "varphi_r(t_r)";
    case Sym::PhiW: return "phi_w";
    case Sym::PhiWoIn: return "phi_wo_in";
    case Sym::PhiWoOut: return "phi_wo_out";
    case Sym::PhiRIn: return "phi_r_in";
    case Sym::PhiROut: return "phi_r_out";
    case Sym::PhiRo: return "phi_ro";
    case Sym::PhiEP: return "phi_EP";
    case Sym::PhiA: return "phi_a";
    case Sym::Count: break;
  }
  return "?";
}

void NodeEntries::record(Sym s, double value) {
  if (!std::isfinite(value)) throw std::invalid_argument(std::string("phase ledger: non-finite ") + sym_name(s));
  v_[static_cast<std::size_t>(s)] = value;
  written_ |= bit(s);
}

double NodeEntries::get(Sym s) const {
  if (!has(s)) throw MissingEntry(std::string("phase ledger: missing entry ") + sym_name(s));
  read_ |= bit(s);
  return v_[static_cast<std::size_t>(s)];
}

double pair_phase(const NodeEntries& n) {
  return n.get(Sym::VarphiW_tw) + n.get(Sym::VarphiP_tw) + n.get(Sym::VarphiR_tr) + n.get(Sym::PhiA) +
         n.get(Sym::PhiW) + (n.get(Sym::PhiWoIn) + n.get(Sym::PhiWoOut)) + (n.get(Sym::PhiRIn) + n.get(Sym::PhiROut)) +
         n.get(Sym::PhiRo);
}

double local_phase(const NodeEntries& n) {
  const double paths = n.get(Sym::PhiW) + n.get(Sym::PhiWoIn) + n.get(Sym::PhiRIn) + n.get(Sym::PhiRo) - n.get(Sym::PhiEP);
  const double lasers = n.get(Sym::VarphiW_tw) + n.get(Sym::VarphiR_tr) - n.get(Sym::VarphiW_tr) - n.get(Sym::VarphiR_tw);
  return n.get(Sym::PhiA) + paths + lasers;
}

namespace {
double remote_part(const NodeEntries& n) {
  return n.get(Sym::PhiWoOut) + n.get(Sym::PhiROut) + n.get(Sym::VarphiR_tw) + n.get(Sym::VarphiP_tw);
}
}  // namespace

double remote_phase(const NodeEntries& a, const NodeEntries& b, double phi_eom) {
  return phi_eom + remote_part(a) - remote_part(b);
}

double pme_phase(const PhaseLedger& l) {
  return wrap_phase(local_phase(l.first) - local_phase(l.second) + remote_phase(l.first, l.second, l.eom()));
}

double pme_phase_direct(const PhaseLedger& l) {
  auto node = [](const NodeEntries& n) { return pair_phase(n) - n.get(Sym::PhiEP) - n.get(Sym::VarphiW_tr); };
  return wrap_phase(l.eom() + node(l.first) - node(l.second));
}

double three_link_identity(const PhaseLedger& ab, const PhaseLedger& ac, const PhaseLedger& cb) {
  return wrap_phase(pme_phase(ac) + pme_phase(cb) - pme_phase(ab) - kPi / 2.0);
}

}  // namespace mqn
