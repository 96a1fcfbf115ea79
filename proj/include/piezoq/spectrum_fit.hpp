#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "piezoq/dynamics.hpp"
#include "piezoq/errors.hpp"
#include "piezoq/levmar.hpp"
#include "piezoq/units.hpp"

// Fitting measured or synthetic T1(f_q) spectra to the multimode
// relaxation-rate model, recovering the background rate and per-mode
// (f_m, g, kappa). Fits run in rate space, Gamma_1 = 1/T1, where the model
// is additive.

namespace piezoq {

/// A T1 spectrum. Frequencies strictly increasing, T1 > 0. Uncertainties
/// and per-point T2* are optional (empty or one per point).
struct SpectrumData {
  std::vector<double> qubit_frequency_hz;
  std::vector<double> t1_s;
  std::vector<double> t1_uncertainty_s;
  std::vector<double> t2_star_s;

  std::size_t size() const { return qubit_frequency_hz.size(); }

  void validate() const {
    if (t1_s.size() != qubit_frequency_hz.size())
      throw DomainError("SpectrumData: frequency and t1 arrays differ in length");
    if (!t1_uncertainty_s.empty() && t1_uncertainty_s.size() != size())
      throw DomainError("SpectrumData: uncertainty array has wrong length");
    if (!t2_star_s.empty() && t2_star_s.size() != size())
      throw DomainError("SpectrumData: t2* array has wrong length");
    for (std::size_t i = 0; i < size(); ++i) {
      if (!(t1_s[i] > 0.0)) throw DomainError("SpectrumData: t1 must be > 0");
      if (i > 0 && !(qubit_frequency_hz[i] > qubit_frequency_hz[i - 1]))
        throw DomainError("SpectrumData: frequencies must be strictly increasing");
    }
  }
};

/// Mean qubit dephasing rate from per-point T2* samples.
inline double gamma2q_from_t2star(std::span<const double> t2_star_s) {
  if (t2_star_s.empty()) throw InsufficientDataError("gamma2q_from_t2star: no samples");
  double acc = 0.0;
  for (double t2 : t2_star_s) {
    if (!(t2 > 0.0)) throw DomainError("gamma2q_from_t2star: t2* must be > 0");
    acc += 1.0 / t2;
  }
  return acc / static_cast<double>(t2_star_s.size());
}

/// Local maxima of Gamma_1 = 1/T1 with prominence above
/// min_prominence x (max - min), used as mode seeds. Needs >= 20 points.
/// smoothing_points > 1 applies a moving average of that width before the
/// peak scan, for noisy spectra.
inline std::vector<double> detect_modes(const SpectrumData& data, double min_prominence,
                                        std::size_t smoothing_points = 1) {
  data.validate();
  if (data.size() < 20)
    throw InsufficientDataError("detect_modes: need at least 20 spectrum points");
  if (!(min_prominence >= 0.0)) throw DomainError("detect_modes: min_prominence must be >= 0");

  const std::size_t n = data.size();
  std::vector<double> rate(n);
  for (std::size_t i = 0; i < n; ++i) rate[i] = 1.0 / data.t1_s[i];
  if (smoothing_points > 1) {
    const std::size_t half = smoothing_points / 2;
    std::vector<double> smoothed(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = i >= half ? i - half : 0;
      const std::size_t hi = std::min(i + half, n - 1);
      double acc = 0.0;
      for (std::size_t j = lo; j <= hi; ++j) acc += rate[j];
      smoothed[i] = acc / static_cast<double>(hi - lo + 1);
    }
    rate = std::move(smoothed);
  }
  const auto [lo_it, hi_it] = std::minmax_element(rate.begin(), rate.end());
  const double threshold = min_prominence * (*hi_it - *lo_it);

  std::vector<double> peaks_hz;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(rate[i] > rate[i - 1] && rate[i] > rate[i + 1])) continue;
    // Prominence: drop to the lowest valley before a higher point on each side.
    double left_min = rate[i];
    for (std::size_t j = i; j-- > 0;) {
      if (rate[j] > rate[i]) break;
      left_min = std::min(left_min, rate[j]);
    }
    double right_min = rate[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rate[j] > rate[i]) break;
      right_min = std::min(right_min, rate[j]);
    }
    const double prominence = rate[i] - std::max(left_min, right_min);
    if (prominence > threshold && prominence > 0.0)
      peaks_hz.push_back(data.qubit_frequency_hz[i]);
  }
  return peaks_hz;
}

struct FsrEstimate {
  double fsr_hz = 0.0;
  double max_relative_deviation = 0.0;
};

/// Median spacing of a mode comb plus its worst relative deviation from
/// uniformity. Needs >= 3 modes.
inline FsrEstimate fsr_estimate(std::span<const double> mode_frequencies_hz) {
  if (mode_frequencies_hz.size() < 3)
    throw InsufficientDataError("fsr_estimate: need at least 3 modes");
  std::vector<double> diffs;
  diffs.reserve(mode_frequencies_hz.size() - 1);
  for (std::size_t i = 1; i < mode_frequencies_hz.size(); ++i) {
    const double d = mode_frequencies_hz[i] - mode_frequencies_hz[i - 1];
    if (!(d > 0.0)) throw DomainError("fsr_estimate: frequencies must be strictly increasing");
    diffs.push_back(d);
  }
  std::vector<double> sorted = diffs;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const double median = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  double dev = 0.0;
  for (double d : diffs) dev = std::max(dev, std::abs(d - median) / median);
  return FsrEstimate{median, dev};
}

struct FittedMode {
  double f_m_hz = 0.0;
  double g_hz = 0.0;
  double kappa_hz = 0.0;
  double g_stderr_hz = 0.0;
  double kappa_stderr_hz = 0.0;
};

struct SpectrumFitResult {
  double background_t1_s = 0.0;
  double background_gamma1_per_s = 0.0;
  std::vector<FittedMode> modes;
  double residual_norm = 0.0;  // sqrt(cost/n) of weighted residuals
  double gradient_norm = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct FitOptions {
  bool use_uncertainty_weights = false;  // default: uniform weights
  int max_iterations = 500;
  double gradient_tol = 1e-8;
  double seed_merge_linewidths = 3.0;
  std::function<void(int, double, double, double)> lm_trace;
};

namespace detail {

// Rough half width (Hz) of the feature around grid index i0, from the
// half-prominence crossing on each side.
inline double local_half_width_hz(const std::vector<double>& f_hz,
                                  const std::vector<double>& rate, std::size_t i0,
                                  double background) {
  const double half = background + 0.5 * (rate[i0] - background);
  double left = f_hz.front();
  for (std::size_t j = i0; j-- > 0;) {
    if (rate[j] <= half) {
      left = f_hz[j];
      break;
    }
  }
  double right = f_hz.back();
  for (std::size_t j = i0 + 1; j < rate.size(); ++j) {
    if (rate[j] <= half) {
      right = f_hz[j];
      break;
    }
  }
  const double width = 0.5 * (right - left);
  const double grid_step = f_hz.size() > 1 ? f_hz[1] - f_hz[0] : 1.0;
  return std::max(width, grid_step);
}

inline std::size_t nearest_index(const std::vector<double>& f_hz, double f) {
  const auto it = std::lower_bound(f_hz.begin(), f_hz.end(), f);
  if (it == f_hz.begin()) return 0;
  if (it == f_hz.end()) return f_hz.size() - 1;
  const std::size_t i = static_cast<std::size_t>(it - f_hz.begin());
  return (f - f_hz[i - 1] < f_hz[i] - f) ? i - 1 : i;
}

}  // namespace detail

/// Weighted nonlinear least squares of the rate model on Gamma_1 = 1/T1 with
/// softplus-constrained non-negative background, couplings and linewidths.
/// Non-convergence is reported via the converged flag, never an exception.
inline SpectrumFitResult fit_spectrum(const SpectrumData& data, std::span<const double> seeds_hz,
                                      double gamma2q_per_s, const FitOptions& opt = {}) {
  data.validate();
  if (seeds_hz.empty()) throw DomainError("fit_spectrum: seeds must be non-empty");
  if (!(gamma2q_per_s >= 0.0)) throw DomainError("fit_spectrum: gamma2q must be >= 0");

  const std::size_t n = data.size();
  std::vector<double> rate(n);
  for (std::size_t i = 0; i < n; ++i) rate[i] = 1.0 / data.t1_s[i];

  // Weights: propagated uncertainties when requested and present, else
  // uniform, normalized so the cost is dimensionless either way.
  const double rate_scale = *std::max_element(rate.begin(), rate.end());
  std::vector<double> weight(n);
  if (opt.use_uncertainty_weights && !data.t1_uncertainty_s.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      const double sigma_rate = data.t1_uncertainty_s[i] / (data.t1_s[i] * data.t1_s[i]);
      if (!(sigma_rate > 0.0)) throw DomainError("fit_spectrum: uncertainties must be > 0");
      weight[i] = 1.0 / sigma_rate;
    }
  } else {
    std::fill(weight.begin(), weight.end(), 1.0 / rate_scale);
  }

  // Background seed: lower decile of the rate data.
  std::vector<double> sorted_rate = rate;
  std::sort(sorted_rate.begin(), sorted_rate.end());
  const double background0 = std::max(sorted_rate[sorted_rate.size() / 10], 1e-12 * rate_scale);

  // Merge seeds closer than seed_merge_linewidths x the local linewidth,
  // keeping the taller peak; prevents rank deficiency from split peaks.
  struct Seed {
    double f_hz;
    double height;
    double half_width_hz;
  };
  std::vector<Seed> seeds;
  for (double f : seeds_hz) {
    const std::size_t i0 = detail::nearest_index(data.qubit_frequency_hz, f);
    seeds.push_back({f, rate[i0], detail::local_half_width_hz(data.qubit_frequency_hz, rate,
                                                              i0, background0)});
  }
  std::sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) { return a.f_hz < b.f_hz; });
  for (bool merged = true; merged;) {
    merged = false;
    for (std::size_t k = 0; k + 1 < seeds.size(); ++k) {
      const double lw = std::min(seeds[k].half_width_hz, seeds[k + 1].half_width_hz);
      if (seeds[k + 1].f_hz - seeds[k].f_hz < opt.seed_merge_linewidths * lw) {
        seeds[k] = seeds[k].height >= seeds[k + 1].height ? seeds[k] : seeds[k + 1];
        seeds.erase(seeds.begin() + static_cast<std::ptrdiff_t>(k) + 1);
        merged = true;
        break;
      }
    }
  }

  const std::size_t n_modes = seeds.size();
  const Eigen::Index n_params = 1 + 3 * static_cast<Eigen::Index>(n_modes);

  // Internal parameters: theta0 (background, softplus), then per mode
  // (frequency offset, coupling, linewidth) with softplus on g and kappa.
  // Per-parameter scales keep every softplus argument O(1).
  std::vector<double> g_scale(n_modes), kappa_scale(n_modes), freq_scale(n_modes),
      freq_ref(n_modes);
  Eigen::VectorXd theta(n_params);
  theta[0] = softplus_inverse(1.0);
  const double background_scale = background0;
  std::vector<std::string> names;
  names.emplace_back("background_rate");
  for (std::size_t k = 0; k < n_modes; ++k) {
    const double gamma2_init = std::max(hz_to_rad(seeds[k].half_width_hz), 1.5 * gamma2q_per_s);
    const double kappa_init = std::max(2.0 * (gamma2_init - gamma2q_per_s), 0.2 * gamma2_init);
    const double height = std::max(seeds[k].height - background0, 0.05 * seeds[k].height);
    const double g_init = std::sqrt(0.5 * height * gamma2_init);
    g_scale[k] = g_init;
    kappa_scale[k] = kappa_init;
    freq_ref[k] = hz_to_rad(seeds[k].f_hz);
    freq_scale[k] = gamma2_init;  // frequencies resolve on the linewidth scale
    theta[1 + 3 * k] = 0.0;
    theta[2 + 3 * k] = softplus_inverse(1.0);
    theta[3 + 3 * k] = softplus_inverse(1.0);
    const std::string tag = "mode" + std::to_string(k);
    names.push_back(tag + ".frequency");
    names.push_back(tag + ".coupling");
    names.push_back(tag + ".linewidth");
  }

  std::vector<double> omega_data(n);
  for (std::size_t i = 0; i < n; ++i) omega_data[i] = hz_to_rad(data.qubit_frequency_hz[i]);

  const auto model = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    r.resize(static_cast<Eigen::Index>(n));
    if (jac) jac->setZero(static_cast<Eigen::Index>(n), n_params);
    const double background = background_scale * softplus(p[0]);
    const double d_background = background_scale * softplus_derivative(p[0]);
    std::vector<double> g(n_modes), kappa(n_modes), omega_m(n_modes), dg(n_modes), dkappa(n_modes);
    for (std::size_t k = 0; k < n_modes; ++k) {
      g[k] = g_scale[k] * softplus(p[2 + 3 * k]);
      dg[k] = g_scale[k] * softplus_derivative(p[2 + 3 * k]);
      kappa[k] = kappa_scale[k] * softplus(p[3 + 3 * k]);
      dkappa[k] = kappa_scale[k] * softplus_derivative(p[3 + 3 * k]);
      omega_m[k] = freq_ref[k] + p[1 + 3 * k] * freq_scale[k];
    }
    for (std::size_t i = 0; i < n; ++i) {
      double value = background;
      for (std::size_t k = 0; k < n_modes; ++k) {
        const double gamma2 = gamma2q_per_s + 0.5 * kappa[k];
        const double delta = omega_data[i] - omega_m[k];
        const double denom = gamma2 * gamma2 + delta * delta;
        value += 2.0 * g[k] * g[k] * gamma2 / denom;
        if (jac) {
          const double w = weight[i];
          (*jac)(static_cast<Eigen::Index>(i), 1 + 3 * static_cast<Eigen::Index>(k)) =
              w * (4.0 * g[k] * g[k] * gamma2 * delta / (denom * denom)) * freq_scale[k];
          (*jac)(static_cast<Eigen::Index>(i), 2 + 3 * static_cast<Eigen::Index>(k)) =
              w * (4.0 * g[k] * gamma2 / denom) * dg[k];
          (*jac)(static_cast<Eigen::Index>(i), 3 + 3 * static_cast<Eigen::Index>(k)) =
              w * (g[k] * g[k] * (delta * delta - gamma2 * gamma2) / (denom * denom)) * dkappa[k];
        }
      }
      r[static_cast<Eigen::Index>(i)] = weight[i] * (value - rate[i]);
      if (jac) (*jac)(static_cast<Eigen::Index>(i), 0) = weight[i] * d_background;
    }
  };

  LevMarOptions lm_opt;
  lm_opt.max_iterations = opt.max_iterations;
  lm_opt.gradient_tol = opt.gradient_tol;
  lm_opt.on_iteration = opt.lm_trace;
  const LevMarResult lm = levmar_fit(model, theta, lm_opt, names);

  // Map back to physical units with standard errors from the local
  // quadratic model, s^2 (J^T J)^-1, pushed through the softplus chain rule.
  const Eigen::Index dof =
      std::max<Eigen::Index>(static_cast<Eigen::Index>(n) - n_params, 1);
  const double s2 = lm.cost / static_cast<double>(dof);
  Eigen::MatrixXd covariance = Eigen::MatrixXd::Zero(n_params, n_params);
  {
    const Eigen::MatrixXd damped =
        lm.jtj + 1e-12 * lm.jtj.diagonal().maxCoeff() * Eigen::MatrixXd::Identity(n_params, n_params);
    covariance = s2 * damped.ldlt().solve(Eigen::MatrixXd::Identity(n_params, n_params));
  }

  SpectrumFitResult result;
  result.background_gamma1_per_s = background_scale * softplus(lm.params[0]);
  result.background_t1_s = 1.0 / result.background_gamma1_per_s;
  result.converged = lm.converged;
  result.iterations = lm.iterations;
  result.gradient_norm = lm.gradient_norm;
  result.residual_norm = std::sqrt(lm.cost / static_cast<double>(n));
  for (std::size_t k = 0; k < n_modes; ++k) {
    FittedMode mode;
    mode.f_m_hz = rad_to_hz(freq_ref[k] + lm.params[1 + 3 * k] * freq_scale[k]);
    mode.g_hz = rad_to_hz(g_scale[k] * softplus(lm.params[2 + 3 * k]));
    mode.kappa_hz = rad_to_hz(kappa_scale[k] * softplus(lm.params[3 + 3 * k]));
    const double dgdtheta = g_scale[k] * softplus_derivative(lm.params[2 + 3 * k]);
    const double dkdtheta = kappa_scale[k] * softplus_derivative(lm.params[3 + 3 * k]);
    const double var_g = std::max(covariance(2 + 3 * static_cast<Eigen::Index>(k),
                                             2 + 3 * static_cast<Eigen::Index>(k)),
                                  0.0);
    const double var_k = std::max(covariance(3 + 3 * static_cast<Eigen::Index>(k),
                                             3 + 3 * static_cast<Eigen::Index>(k)),
                                  0.0);
    mode.g_stderr_hz = rad_to_hz(std::sqrt(var_g) * dgdtheta);
    mode.kappa_stderr_hz = rad_to_hz(std::sqrt(var_k) * dkdtheta);
    result.modes.push_back(mode);
  }
  std::sort(result.modes.begin(), result.modes.end(),
            [](const FittedMode& a, const FittedMode& b) { return a.f_m_hz < b.f_m_hz; });
  return result;
}

/// Model evaluation for plotting fitted curves, in rate space (1/s).
inline std::vector<double> evaluate_fit(const SpectrumFitResult& fit,
                                        std::span<const double> fq_hz, double gamma2q_per_s) {
  std::vector<double> out(fq_hz.size(), fit.background_gamma1_per_s);
  for (const auto& mode : fit.modes) {
    const double gamma2 = gamma2q_per_s + 0.5 * hz_to_rad(mode.kappa_hz);
    const double g = hz_to_rad(mode.g_hz);
    for (std::size_t i = 0; i < fq_hz.size(); ++i) {
      const double delta = hz_to_rad(fq_hz[i] - mode.f_m_hz);
      out[i] += 2.0 * g * g * gamma2 / (gamma2 * gamma2 + delta * delta);
    }
  }
  return out;
}

/// Durbin-Watson statistic of a residual sequence.
inline double durbin_watson(std::span<const double> residuals) {
  if (residuals.size() < 2) throw InsufficientDataError("durbin_watson: need >= 2 residuals");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    den += residuals[i] * residuals[i];
    if (i > 0) {
      const double d = residuals[i] - residuals[i - 1];
      num += d * d;
    }
  }
  if (!(den > 0.0)) throw FitFailedError("durbin_watson: residuals are identically zero");
  return num / den;
}

}  // namespace piezoq
