#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "piezoq/errors.hpp"
#include "piezoq/units.hpp"

// Lumped-element admittance algebra for a multimode Butterworth-Van Dyke
// circuit: a static capacitance C_idt in parallel with one series RLC branch
// per mechanical mode.

namespace piezoq {

/// One motional branch. R >= 0, L > 0, C > 0.
struct RlcBranch {
  double resistance_ohm = 0.0;
  double inductance_h = 0.0;
  double capacitance_f = 0.0;

  RlcBranch() = default;
  RlcBranch(double r_ohm, double l_h, double c_f)
      : resistance_ohm(r_ohm), inductance_h(l_h), capacitance_f(c_f) {
    validate();
  }

  /// Series resonance omega_m = 1/sqrt(LC), rad/s.
  double mode_frequency_rad() const { return 1.0 / std::sqrt(inductance_h * capacitance_f); }

  /// kappa_m = R/L, 1/s.
  double linewidth_per_s() const { return resistance_ohm / inductance_h; }

  void validate() const {
    if (!(resistance_ohm >= 0.0) || !std::isfinite(resistance_ohm))
      throw DomainError("RlcBranch: resistance must be finite and >= 0");
    if (!(inductance_h > 0.0) || !std::isfinite(inductance_h))
      throw DomainError("RlcBranch: inductance must be finite and > 0");
    if (!(capacitance_f > 0.0) || !std::isfinite(capacitance_f))
      throw DomainError("RlcBranch: capacitance must be finite and > 0");
    const double wm = mode_frequency_rad();
    if (!std::isfinite(wm) || !(wm > 0.0))
      throw DomainError("RlcBranch: derived mode frequency is not finite and positive");
  }
};

/// Static capacitance in parallel with motional branches, branches stored in
/// canonical order (mode frequency ascending, larger C first on near-ties).
class BvdCircuit {
 public:
  BvdCircuit() = default;
  BvdCircuit(double c_idt_f, std::vector<RlcBranch> branches)
      : static_capacitance_f_(c_idt_f), branches_(std::move(branches)) {
    if (!(static_capacitance_f_ > 0.0) || !std::isfinite(static_capacitance_f_))
      throw DomainError("BvdCircuit: static capacitance must be finite and > 0");
    for (const auto& b : branches_) b.validate();
    std::stable_sort(branches_.begin(), branches_.end(), [](const RlcBranch& a, const RlcBranch& b) {
      const double wa = a.mode_frequency_rad();
      const double wb = b.mode_frequency_rad();
      if (wa != wb) return wa < wb;
      return a.capacitance_f > b.capacitance_f;
    });
    for (std::size_t k = 1; k < branches_.size(); ++k) {
      if (branches_[k].mode_frequency_rad() == branches_[k - 1].mode_frequency_rad())
        throw DomainError("BvdCircuit: duplicate branch mode frequencies");
    }
  }

  double static_capacitance_f() const { return static_capacitance_f_; }
  const std::vector<RlcBranch>& branches() const { return branches_; }

 private:
  double static_capacitance_f_ = 0.0;
  std::vector<RlcBranch> branches_;
};

/// Complex admittance sample: Y = G + iB at angular frequency omega.
struct Admittance {
  double frequency_rad = 0.0;
  double conductance_s = 0.0;  // G = Re Y
  double susceptance_s = 0.0;  // B = Im Y

  std::complex<double> value() const { return {conductance_s, susceptance_s}; }
};

/// Y(omega) of one series RLC branch, Y = 1/(R + i(wL - 1/(wC))).
inline Admittance series_rlc_admittance(const RlcBranch& branch, double omega) {
  branch.validate();
  if (!(omega > 0.0) || !std::isfinite(omega))
    throw DomainError("series_rlc_admittance: omega must be finite and > 0");
  const double reactance = omega * branch.inductance_h - 1.0 / (omega * branch.capacitance_f);
  if (branch.resistance_ohm == 0.0 && reactance == 0.0)
    throw SingularAdmittanceError(
        "series_rlc_admittance: lossless branch evaluated exactly at resonance");
  const double denom =
      branch.resistance_ohm * branch.resistance_ohm + reactance * reactance;
  return Admittance{omega, branch.resistance_ohm / denom, -reactance / denom};
}

/// Y(omega) of the full circuit: i*omega*C_idt plus the branch admittances.
inline Admittance bvd_admittance(const BvdCircuit& circuit, double omega) {
  if (!(omega > 0.0) || !std::isfinite(omega))
    throw DomainError("bvd_admittance: omega must be finite and > 0");
  double g = 0.0;
  double b = omega * circuit.static_capacitance_f();
  for (const auto& branch : circuit.branches()) {
    const Admittance y = series_rlc_admittance(branch, omega);
    g += y.conductance_s;
    b += y.susceptance_s;
  }
  return Admittance{omega, g, b};
}

/// Element-wise sweep over a strictly increasing, positive grid.
inline std::vector<Admittance> sweep_admittance(const BvdCircuit& circuit,
                                                std::span<const double> grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0))
      throw DomainError("sweep_admittance: grid frequencies must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw DomainError("sweep_admittance: grid must be strictly increasing");
  }
  std::vector<Admittance> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = bvd_admittance(circuit, grid[i]);
  return out;
}

}  // namespace piezoq
