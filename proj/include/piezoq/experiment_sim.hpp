#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "piezoq/dynamics.hpp"
#include "piezoq/errors.hpp"
#include "piezoq/quantization.hpp"
#include "piezoq/rng.hpp"
#include "piezoq/units.hpp"

// Synthetic-experiment generator: a SAW mode comb plus a Stark-tunable TLS
// ensemble, pulse-sequence population maps p_e(f_q, V_bias) at fixed delay,
// and the bias-averaging protocol that separates the two.

namespace piezoq {

/// A two-level defect in the standard tunneling model. All frequencies in Hz.
struct TlsDefect {
  double tunneling_amplitude_hz = 0.0;   // Delta_0/h
  double asymmetry_at_zero_bias_hz = 0.0;// epsilon_0/h
  double bias_sensitivity_hz_per_v = 0.0;// d epsilon / dV
  double qubit_coupling_hz = 0.0;        // g_TLS
  double linewidth_hz = 0.0;             // gamma_TLS (half width of the rate Lorentzian)

  void validate() const {
    if (!(tunneling_amplitude_hz > 0.0))
      throw DomainError("TlsDefect: tunneling amplitude must be > 0");
    if (!(qubit_coupling_hz >= 0.0)) throw DomainError("TlsDefect: coupling must be >= 0");
    if (!(linewidth_hz > 0.0)) throw DomainError("TlsDefect: linewidth must be > 0");
  }
};

/// omega_TLS/2pi = sqrt(Delta_0^2 + eps^2(V)) with eps(V) = eps_0 + (d eps/dV) V.
inline double tls_frequency_hz(const TlsDefect& defect, double v_bias) {
  defect.validate();
  const double eps = defect.asymmetry_at_zero_bias_hz + defect.bias_sensitivity_hz_per_v * v_bias;
  return std::hypot(defect.tunneling_amplitude_hz, eps);
}

struct ExperimentPlan {
  std::vector<double> qubit_frequency_grid_hz;
  std::vector<double> bias_grid_v;
  double delay_s = 3e-6;  // tau_0
  long shots = 0;         // 0 = noise-free limit

  void validate() const {
    if (qubit_frequency_grid_hz.empty() || bias_grid_v.empty())
      throw DomainError("ExperimentPlan: grids must be non-empty");
    if (!(delay_s > 0.0)) throw DomainError("ExperimentPlan: delay must be > 0");
    if (shots < 0) throw DomainError("ExperimentPlan: shots must be >= 0");
  }
};

/// Total relaxation rate at (f_q, V): background + bias-independent SAW sum
/// + bias-dependent TLS Lorentzians (same form, Gamma_2 -> gamma_TLS).
inline double total_gamma1(double fq_hz, double v_bias, const CouplingSet& saw,
                           std::span<const TlsDefect> tls, const QubitParams& qubit) {
  if (!(fq_hz > 0.0)) throw DomainError("total_gamma1: qubit frequency must be > 0");
  saw.validate();
  const double omega_q = hz_to_rad(fq_hz);
  double gamma = qubit.nominal_decay_per_s;
  for (const auto& mode : saw.modes) {
    const double gamma2 = mode_decoherence_rate(qubit, mode.linewidth_per_s);
    gamma += lorentzian_rate(mode.coupling_rad, gamma2, omega_q - mode.mode_frequency_rad);
  }
  for (const auto& defect : tls) {
    const double detuning = hz_to_rad(fq_hz - tls_frequency_hz(defect, v_bias));
    gamma += lorentzian_rate(hz_to_rad(defect.qubit_coupling_hz),
                             hz_to_rad(defect.linewidth_hz), detuning);
  }
  return gamma;
}

/// p_e map, rows indexed by qubit frequency, columns by bias.
struct PeMap {
  std::vector<double> qubit_frequency_hz;
  std::vector<double> bias_v;
  std::vector<double> values;  // row-major [frequency][bias]

  double at(std::size_t i_freq, std::size_t j_bias) const {
    return values[i_freq * bias_v.size() + j_bias];
  }
};

/// p_e(f_q, V) = exp(-Gamma_1(f_q, V) tau_0), with binomial shot noise when
/// shots > 0. Each grid point draws from its own (seed, i, j) stream, so the
/// map is reproducible independent of evaluation order.
inline PeMap pe_map(const ExperimentPlan& plan, const CouplingSet& saw,
                    std::span<const TlsDefect> tls, const QubitParams& qubit,
                    std::uint64_t noise_seed) {
  plan.validate();
  PeMap map;
  map.qubit_frequency_hz = plan.qubit_frequency_grid_hz;
  map.bias_v = plan.bias_grid_v;
  map.values.resize(map.qubit_frequency_hz.size() * map.bias_v.size());
  const SeedStream root(noise_seed);
  for (std::size_t i = 0; i < map.qubit_frequency_hz.size(); ++i) {
    for (std::size_t j = 0; j < map.bias_v.size(); ++j) {
      const double gamma =
          total_gamma1(map.qubit_frequency_hz[i], map.bias_v[j], saw, tls, qubit);
      double pe = std::exp(-gamma * plan.delay_s);
      if (plan.shots > 0) {
        SeedStream point = root.fork(i + 1, j + 1);
        pe = static_cast<double>(point.binomial(plan.shots, pe)) /
             static_cast<double>(plan.shots);
      }
      map.values[i * map.bias_v.size() + j] = pe;
    }
  }
  return map;
}

/// Arithmetic mean over the bias axis; p_e vs f_q.
inline std::vector<double> bias_average(const PeMap& map) {
  if (map.bias_v.empty() || map.qubit_frequency_hz.empty() || map.values.empty())
    throw DomainError("bias_average: map must be non-empty");
  std::vector<double> profile(map.qubit_frequency_hz.size(), 0.0);
  for (std::size_t i = 0; i < profile.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < map.bias_v.size(); ++j) acc += map.at(i, j);
    profile[i] = acc / static_cast<double>(map.bias_v.size());
  }
  return profile;
}

/// Uniform comb omega_m,k = omega_center + (k - (N+1)/2) FSR, k = 1..N, with
/// per-mode couplings/linewidths from lists (or single repeated values).
inline CouplingSet make_mode_comb(double center_hz, double fsr_hz, std::size_t n_modes,
                                  std::span<const double> g_hz,
                                  std::span<const double> kappa_hz) {
  if (!(center_hz > 0.0) || !(fsr_hz > 0.0))
    throw DomainError("make_mode_comb: center and FSR must be > 0");
  if (g_hz.size() != n_modes && g_hz.size() != 1)
    throw DomainError("make_mode_comb: need one coupling or one per mode");
  if (kappa_hz.size() != n_modes && kappa_hz.size() != 1)
    throw DomainError("make_mode_comb: need one linewidth or one per mode");
  CouplingSet set;
  for (std::size_t k = 1; k <= n_modes; ++k) {
    const double f =
        center_hz + (static_cast<double>(k) - 0.5 * (static_cast<double>(n_modes) + 1.0)) * fsr_hz;
    if (!(f > 0.0)) throw DomainError("make_mode_comb: comb extends to non-positive frequency");
    ModeCoupling mode;
    mode.mode_frequency_rad = hz_to_rad(f);
    mode.coupling_rad = hz_to_rad(g_hz.size() == 1 ? g_hz[0] : g_hz[k - 1]);
    mode.linewidth_per_s = hz_to_rad(kappa_hz.size() == 1 ? kappa_hz[0] : kappa_hz[k - 1]);
    const double wq = mode.mode_frequency_rad;  // K^2 quoted on resonance
    mode.em_coupling_coefficient =
        (2.0 * mode.coupling_rad / wq) * (2.0 * mode.coupling_rad / wq);
    set.modes.push_back(mode);
  }
  set.validate();
  return set;
}

}  // namespace piezoq
