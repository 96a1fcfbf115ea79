#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "piezoq/circuit.hpp"
#include "piezoq/errors.hpp"
#include "piezoq/units.hpp"

// Black-box quantization: map lumped circuits and admittance data to
// circuit-QED parameters (mode frequencies, couplings, linewidths, K^2,
// lifetimes, quality factors).

namespace piezoq {

/// Transmon parameters. Energies are given as E/h in Hz.
struct QubitParams {
  double charging_energy_hz = 0.0;       // E_C/h
  double max_josephson_energy_hz = 0.0;  // E_J,max/h
  double flux_quanta = 0.0;              // Phi/Phi_0
  double shunt_capacitance_f = 0.0;      // C_idt
  double junction_capacitance_f = 0.0;   // C_J1 + C_J2, usually negligible
  double nominal_decay_per_s = 0.0;      // Gamma_1,q(0)
  double pure_dephasing_per_s = 0.0;     // Gamma_phi,q

  /// C_q = C_idt + C_J1 + C_J2.
  double total_capacitance_f() const { return shunt_capacitance_f + junction_capacitance_f; }

  /// Gamma_2,q = Gamma_phi + Gamma_1(0)/2 (= 1/T2*).
  double qubit_dephasing_rate_per_s() const {
    return pure_dephasing_per_s + 0.5 * nominal_decay_per_s;
  }
};

/// Symmetric-SQUID flux tuning, E_J = E_J,max |cos(pi Phi/Phi_0)|.
inline double flux_tuned_ej_hz(double ej_max_hz, double flux_quanta) {
  if (!(ej_max_hz > 0.0)) throw DomainError("flux_tuned_ej: E_J,max must be > 0");
  return ej_max_hz * std::abs(std::cos(std::numbers::pi * flux_quanta));
}

struct TransmonFrequency {
  double omega_rad = 0.0;
  std::vector<Warning> warnings;
};

/// f_q = sqrt(8 E_C E_J) - E_C (energies as frequencies), returned angular.
/// Warns (never errors) when E_J/E_C < 20, outside the transmon regime.
inline TransmonFrequency transmon_frequency(const QubitParams& params) {
  if (!(params.charging_energy_hz > 0.0))
    throw DomainError("transmon_frequency: E_C must be > 0");
  const double ej = flux_tuned_ej_hz(params.max_josephson_energy_hz, params.flux_quanta);
  if (!(ej > 0.0))
    throw DomainError("transmon_frequency: E_J(flux) vanished (fully frustrated SQUID)");
  TransmonFrequency result;
  if (ej / params.charging_energy_hz < 20.0)
    result.warnings.push_back(
        {"transmon_frequency: E_J/E_C = " + std::to_string(ej / params.charging_energy_hz) +
         " < 20, outside the transmon regime"});
  const double fq_hz = std::sqrt(8.0 * params.charging_energy_hz * ej) - params.charging_energy_hz;
  if (!(fq_hz > 0.0)) throw DomainError("transmon_frequency: derived frequency not positive");
  result.omega_rad = hz_to_rad(fq_hz);
  return result;
}

/// C_q from the charging energy, C = e^2/(2 h E_C).
inline double capacitance_from_charging_energy(double ec_hz) {
  if (!(ec_hz > 0.0)) throw DomainError("capacitance_from_charging_energy: E_C must be > 0");
  return elementary_charge * elementary_charge / (2.0 * planck_h * ec_hz);
}

/// Josephson inductance, L_J = (Phi_0/2pi)^2 / (h E_J).
inline double josephson_inductance_h(double ej_hz) {
  if (!(ej_hz > 0.0)) throw DomainError("josephson_inductance: E_J must be > 0");
  const double phi0_reduced = flux_quantum / two_pi;
  return phi0_reduced * phi0_reduced / (planck_h * ej_hz);
}

/// Quantized parameters of one mechanical mode.
struct ModeCoupling {
  double mode_frequency_rad = 0.0;        // omega_m
  double coupling_rad = 0.0;              // g_m
  double linewidth_per_s = 0.0;           // kappa_m
  double em_coupling_coefficient = 0.0;   // K^2
};

/// Modes sorted by frequency, strictly increasing.
struct CouplingSet {
  std::vector<ModeCoupling> modes;

  void validate() const {
    for (std::size_t k = 0; k < modes.size(); ++k) {
      const auto& m = modes[k];
      if (!(m.mode_frequency_rad > 0.0) || !(m.coupling_rad >= 0.0) ||
          !(m.linewidth_per_s >= 0.0) || !(m.em_coupling_coefficient >= 0.0))
        throw DomainError("CouplingSet: mode " + std::to_string(k) + " has invalid parameters");
      if (k > 0 && !(m.mode_frequency_rad > modes[k - 1].mode_frequency_rad))
        throw DomainError("CouplingSet: mode frequencies must be strictly increasing");
    }
  }
};

struct QuantizedBranch {
  ModeCoupling mode;
  std::vector<Warning> warnings;
};

/// Map one RLC branch to {omega_m, g_m, kappa_m, K^2}:
///   omega_m = 1/sqrt(L_m C_m),
///   g_m     = (sqrt(omega_q omega_m)/2) sqrt(C_m/C_q),
///   kappa_m = R_m/L_m,
///   K^2     = C_m/C_q.
inline QuantizedBranch quantize_branch(const RlcBranch& branch, const QubitParams& qubit) {
  branch.validate();
  const double cq = qubit.total_capacitance_f();
  if (!(cq > 0.0)) throw DomainError("quantize_branch: qubit capacitance must be > 0");
  QuantizedBranch out;
  const double wq = transmon_frequency(qubit).omega_rad;
  const double wm = branch.mode_frequency_rad();
  const double k2 = branch.capacitance_f / cq;
  if (branch.capacitance_f >= cq)
    out.warnings.push_back(
        {"quantize_branch: C_m >= C_q, coupling formula outside its validity regime"});
  out.mode.mode_frequency_rad = wm;
  out.mode.coupling_rad = 0.5 * std::sqrt(wq * wm) * std::sqrt(k2);
  out.mode.linewidth_per_s = branch.linewidth_per_s();
  out.mode.em_coupling_coefficient = k2;
  return out;
}

/// Algebraic inverse of quantize_branch:
///   C_m = C_q (2 g / sqrt(omega_q omega_m))^2, L_m = 1/(omega_m^2 C_m), R_m = kappa_m L_m.
inline RlcBranch dequantize_mode(const ModeCoupling& mode, const QubitParams& qubit) {
  const double cq = qubit.total_capacitance_f();
  if (!(cq > 0.0)) throw DomainError("dequantize_mode: qubit capacitance must be > 0");
  if (!(mode.mode_frequency_rad > 0.0) || !(mode.coupling_rad > 0.0))
    throw DomainError("dequantize_mode: mode frequency and coupling must be > 0");
  const double wq = transmon_frequency(qubit).omega_rad;
  const double ratio = 2.0 * mode.coupling_rad / std::sqrt(wq * mode.mode_frequency_rad);
  const double cm = cq * ratio * ratio;
  const double lm = 1.0 / (mode.mode_frequency_rad * mode.mode_frequency_rad * cm);
  return RlcBranch{mode.linewidth_per_s * lm, lm, cm};
}

/// Diagnostic inductance form, g_m = (sqrt(omega_q omega_m)/2) sqrt(L_q/L_m).
/// Equals the capacitance form only on resonance.
inline double coupling_from_inductances(double omega_q, double omega_m, double lq_h,
                                        double lm_h) {
  if (!(omega_q > 0.0) || !(omega_m > 0.0) || !(lq_h > 0.0) || !(lm_h > 0.0))
    throw DomainError("coupling_from_inductances: all arguments must be > 0");
  return 0.5 * std::sqrt(omega_q * omega_m) * std::sqrt(lq_h / lm_h);
}

inline constexpr double minimum_conductance_s = 1e-20;

/// T1 = C_idt / Re Y11 at the qubit frequency.
inline double t1_from_admittance(const Admittance& y, double c_idt_f) {
  if (!(c_idt_f > 0.0)) throw DomainError("t1_from_admittance: C_idt must be > 0");
  if (!(y.conductance_s > minimum_conductance_s))
    throw UndefinedLifetimeError("t1_from_admittance: Re Y <= " +
                                 std::to_string(minimum_conductance_s) +
                                 " S, lifetime undefined (lossless point)");
  return c_idt_f / y.conductance_s;
}

/// Q = Im Y / Re Y.
inline double q_from_admittance(const Admittance& y) {
  if (!(y.conductance_s > 0.0)) throw DomainError("q_from_admittance: Re Y must be > 0");
  if (!(y.susceptance_s > 0.0)) throw DomainError("q_from_admittance: Im Y must be > 0");
  return y.susceptance_s / y.conductance_s;
}

}  // namespace piezoq
