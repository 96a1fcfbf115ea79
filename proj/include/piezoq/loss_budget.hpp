#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "piezoq/errors.hpp"
#include "piezoq/units.hpp"

// Frequency-scaling loss analysis: power-law fits of 1/Q data, participation-
// ratio loss tangents for the piezoelectric and TLS channels, and the
// frequency where the two cross.

namespace piezoq {

/// Two-channel loss model. The piezo channel is linear in the interface EPR
/// with an EPR-independent loss tangent anchored at a reference frequency;
/// the TLS channel uses the empirical weak power law. The f^0.15 TLS scaling
/// is an empirical convenience, not a controlled approximation; treat the
/// TLS side as indicative.
struct LossModel {
  double piezo_tan_delta_ref = 1.7e-4;        // tan(delta_piezo) at the reference
  double piezo_reference_frequency_hz = 4.5e9;
  double piezo_exponent = 2.4;                // 1/Q_piezo ~ f^x
  double epr = 1e-3;                          // p_Al-Si
  double tls_tan_delta0 = 1e-3;               // tan(delta_TLS) at f_q0
  double tls_reference_frequency_hz = 6e9;    // f_q0
  double tls_exponent = 0.15;

  void validate() const {
    if (!(piezo_tan_delta_ref > 0.0) || !(piezo_reference_frequency_hz > 0.0) ||
        !(piezo_exponent > 0.0) || !(tls_tan_delta0 > 0.0) ||
        !(tls_reference_frequency_hz > 0.0) || !(tls_exponent >= 0.0))
      throw DomainError("LossModel: all parameters must be positive");
    if (!(epr > 0.0 && epr < 1.0)) throw DomainError("LossModel: epr must lie in (0,1)");
  }

  /// Q_piezo at the reference frequency, 1/(epr tan delta_ref).
  double piezo_reference_q() const { return 1.0 / (epr * piezo_tan_delta_ref); }

  double tls_participation() const { return 2.0 * epr; }  // p_TLS = 2 p_Al-Si

  double tan_delta_tls(double fq_hz) const {
    return tls_tan_delta0 * std::pow(fq_hz / tls_reference_frequency_hz, tls_exponent);
  }

  double tan_delta_piezo(double fq_hz) const {
    return piezo_tan_delta_ref * std::pow(fq_hz / piezo_reference_frequency_hz, piezo_exponent);
  }
};

struct PowerLawFit {
  double exponent = 0.0;
  double prefactor = 0.0;  // y = prefactor * f^exponent, f in Hz
  double r_squared = 1.0;
  std::optional<double> exponent_stderr;  // absent for a two-point fit
};

/// Ordinary least squares on (log f, log y). Needs >= 3 points for a
/// standard error, >= 2 for the fit itself.
inline PowerLawFit fit_power_law(std::span<const double> f_hz, std::span<const double> y) {
  if (f_hz.size() != y.size()) throw DomainError("fit_power_law: length mismatch");
  if (f_hz.size() < 2) throw InsufficientDataError("fit_power_law: need at least 2 points");
  const std::size_t n = f_hz.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(f_hz[i] > 0.0) || !(y[i] > 0.0))
      throw DomainError("fit_power_law: all values must be positive");
    const double x = std::log(f_hz[i]);
    const double v = std::log(y[i]);
    sx += x;
    sy += v;
    sxx += x * x;
    sxy += x * v;
  }
  const double nn = static_cast<double>(n);
  const double denom = nn * sxx - sx * sx;
  if (!(denom > 0.0)) throw DomainError("fit_power_law: frequencies must not be all equal");
  PowerLawFit fit;
  fit.exponent = (nn * sxy - sx * sy) / denom;
  const double intercept = (sy - fit.exponent * sx) / nn;
  fit.prefactor = std::exp(intercept);

  double ss_res = 0.0, ss_tot = 0.0;
  const double mean_y = sy / nn;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::log(y[i]);
    const double pred = intercept + fit.exponent * std::log(f_hz[i]);
    ss_res += (v - pred) * (v - pred);
    ss_tot += (v - mean_y) * (v - mean_y);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  if (n >= 3) {
    const double sigma2 = ss_res / (nn - 2.0);
    fit.exponent_stderr = std::sqrt(sigma2 * nn / denom);
  }
  return fit;
}

/// Q_TLS(f) = 1/(p_TLS tan delta_TLS(f)).
inline double q_tls(const LossModel& model, double fq_hz) {
  model.validate();
  if (!(fq_hz > 0.0)) throw DomainError("q_tls: frequency must be > 0");
  return 1.0 / (model.tls_participation() * model.tan_delta_tls(fq_hz));
}

/// Q_piezo(f) = 1/(epr tan delta_piezo(f)), with 1/Q following the fitted
/// power law through the reference anchor.
inline double q_piezo(const LossModel& model, double fq_hz) {
  model.validate();
  if (!(fq_hz > 0.0)) throw DomainError("q_piezo: frequency must be > 0");
  return 1.0 / (model.epr * model.tan_delta_piezo(fq_hz));
}

inline double q_total(const LossModel& model, double fq_hz) {
  return 1.0 / (1.0 / q_piezo(model, fq_hz) + 1.0 / q_tls(model, fq_hz));
}

/// Unique positive root of Q_piezo(f) = Q_TLS(f) in closed form. Requires
/// piezo_exponent > tls_exponent; otherwise the curves never cross (or the
/// model is degenerate) and an error is raised.
inline double crossover_frequency_hz(const LossModel& model) {
  model.validate();
  if (model.piezo_exponent == model.tls_exponent)
    throw NoCrossoverError("crossover_frequency: degenerate model, equal loss exponents");
  if (!(model.piezo_exponent > model.tls_exponent))
    throw NoCrossoverError(
        "crossover_frequency: piezo exponent must exceed the TLS exponent");
  // epr * dp0 * (f/fp)^a = 2 epr * dt0 * (f/ft)^b  =>
  // f = exp([ln(2 dt0/dp0) + a ln fp - b ln ft] / (a - b))
  const double a = model.piezo_exponent;
  const double b = model.tls_exponent;
  const double log_f = (std::log(2.0 * model.tls_tan_delta0 / model.piezo_tan_delta_ref) +
                        a * std::log(model.piezo_reference_frequency_hz) -
                        b * std::log(model.tls_reference_frequency_hz)) /
                       (a - b);
  return std::exp(log_f);
}

struct LossBudgetRow {
  double fq_hz = 0.0;
  double q_piezo = 0.0;
  double q_tls = 0.0;
  double q_total = 0.0;
};

/// Log-spaced budget table over [fmin, fmax].
inline std::vector<LossBudgetRow> loss_budget_table(const LossModel& model, double fmin_hz,
                                                    double fmax_hz, std::size_t n_points) {
  model.validate();
  if (!(fmin_hz > 0.0) || !(fmax_hz > fmin_hz))
    throw DomainError("loss_budget_table: need 0 < fmin < fmax");
  if (n_points < 2) throw DomainError("loss_budget_table: need at least 2 points");
  std::vector<LossBudgetRow> rows(n_points);
  const double log_min = std::log(fmin_hz);
  const double log_step = (std::log(fmax_hz) - log_min) / static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double f = std::exp(log_min + log_step * static_cast<double>(i));
    rows[i] = {f, q_piezo(model, f), q_tls(model, f), q_total(model, f)};
  }
  return rows;
}

}  // namespace piezoq
