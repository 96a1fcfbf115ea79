#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "piezoq/errors.hpp"
#include "piezoq/quantization.hpp"
#include "piezoq/units.hpp"

// Open-system dynamics of a qubit coupled to one lossy mechanical mode,
// restricted to the single-excitation manifold spanned by
// |1> = |g,0>, |2> = |e,0>, |3> = |g,1>, in the interaction picture.

namespace piezoq {

/// 3x3 density matrix. Hermitian to 1e-12, unit trace to 1e-10,
/// eigenvalues >= -1e-9.
class DensityMatrix3 {
 public:
  DensityMatrix3() : rho_(Eigen::Matrix3cd::Zero()) { rho_(0, 0) = 1.0; }

  explicit DensityMatrix3(const Eigen::Matrix3cd& rho) : rho_(rho) { validate(); }

  /// |level><level| with level in {1,2,3}.
  static DensityMatrix3 pure(int level) {
    if (level < 1 || level > 3) throw DomainError("DensityMatrix3::pure: level must be 1..3");
    DensityMatrix3 m;
    m.rho_.setZero();
    m.rho_(level - 1, level - 1) = 1.0;
    return m;
  }

  const Eigen::Matrix3cd& matrix() const { return rho_; }

  /// Population of basis state `level` in {1,2,3}.
  double population(int level) const { return rho_(level - 1, level - 1).real(); }

  double trace() const { return rho_.trace().real(); }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(rho_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  void validate(double hermiticity_tol = 1e-12, double trace_tol = 1e-10,
                double eigenvalue_floor = -1e-9) const {
    const double herm = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
    if (!(herm <= hermiticity_tol))
      throw DomainError("DensityMatrix3: not Hermitian (deviation " + std::to_string(herm) + ")");
    if (!(std::abs(trace() - 1.0) <= trace_tol))
      throw DomainError("DensityMatrix3: trace != 1 (got " + std::to_string(trace()) + ")");
    if (!(min_eigenvalue() >= eigenvalue_floor))
      throw DomainError("DensityMatrix3: negative eigenvalue " +
                        std::to_string(min_eigenvalue()));
  }

 private:
  Eigen::Matrix3cd rho_;
};

/// Single-mode interaction-picture configuration. All rates in 1/s,
/// detuning and coupling in rad/s, Delta = omega_m - omega_q.
struct DynamicsConfig {
  double detuning_rad = 0.0;        // Delta
  double coupling_rad = 0.0;        // g_m
  double nominal_decay_per_s = 0.0; // Gamma_1,q(0)
  double pure_dephasing_per_s = 0.0;// Gamma_phi,q
  double mode_linewidth_per_s = 0.0;// kappa_m
  double time_step_s = 0.0;         // 0 selects the default step
  double total_time_s = 0.0;

  void validate() const {
    if (!(nominal_decay_per_s >= 0.0) || !(pure_dephasing_per_s >= 0.0) ||
        !(mode_linewidth_per_s >= 0.0) || !(coupling_rad >= 0.0))
      throw DomainError("DynamicsConfig: rates and coupling must be >= 0");
    if (!(total_time_s > 0.0)) throw DomainError("DynamicsConfig: total_time must be > 0");
    if (time_step_s != 0.0 && (!(time_step_s > 0.0) || total_time_s < time_step_s))
      throw DomainError("DynamicsConfig: need 0 < time_step <= total_time");
  }

  /// Default step: 1/(50 max rate), 1/(50 g) and 1/(50 |Delta|), whichever
  /// is smallest, capped at total_time/100.
  double default_step_s() const {
    double dt = total_time_s / 100.0;
    const double scales[] = {std::max({nominal_decay_per_s, pure_dephasing_per_s,
                                       mode_linewidth_per_s}),
                             coupling_rad, std::abs(detuning_rad)};
    for (double s : scales) {
      if (s > 0.0) dt = std::min(dt, 1.0 / (50.0 * s));
    }
    return dt;
  }
};

namespace detail {

// Hermitian 3x3 state in compressed form; keeping only the upper triangle
// makes Hermiticity exact by construction and the RHS trace identically zero
// in floating point.
struct Rho3 {
  double p1 = 0, p2 = 0, p3 = 0;          // populations
  std::complex<double> c12, c13, c23;     // upper-triangle coherences

  static Rho3 from_matrix(const Eigen::Matrix3cd& m) {
    Rho3 r;
    r.p1 = m(0, 0).real();
    r.p2 = m(1, 1).real();
    r.p3 = m(2, 2).real();
    r.c12 = m(0, 1);
    r.c13 = m(0, 2);
    r.c23 = m(1, 2);
    return r;
  }

  Eigen::Matrix3cd to_matrix() const {
    Eigen::Matrix3cd m;
    m(0, 0) = p1;
    m(1, 1) = p2;
    m(2, 2) = p3;
    m(0, 1) = c12;
    m(0, 2) = c13;
    m(1, 2) = c23;
    m(1, 0) = std::conj(c12);
    m(2, 0) = std::conj(c13);
    m(2, 1) = std::conj(c23);
    return m;
  }

  Rho3 operator+(const Rho3& o) const {
    return {p1 + o.p1, p2 + o.p2, p3 + o.p3, c12 + o.c12, c13 + o.c13, c23 + o.c23};
  }
  Rho3 operator*(double s) const { return {s * p1, s * p2, s * p3, s * c12, s * c13, s * c23}; }

  double max_abs_diff(const Rho3& o) const {
    double d = std::max({std::abs(p1 - o.p1), std::abs(p2 - o.p2), std::abs(p3 - o.p3)});
    d = std::max(d, std::abs(c12 - o.c12));
    d = std::max(d, std::abs(c13 - o.c13));
    return std::max(d, std::abs(c23 - o.c23));
  }
};

// Interaction-picture master equation for the three-state manifold.
// Diagonal derivatives reuse the same products so the trace of the RHS is
// exactly zero in floating point.
inline Rho3 lindblad_rhs(const Rho3& r, const DynamicsConfig& cfg) {
  const double g = cfg.coupling_rad;
  const double delta = cfg.detuning_rad;
  const double gamma1 = cfg.nominal_decay_per_s;
  const double gamma_phi = cfg.pure_dephasing_per_s;
  const double kappa = cfg.mode_linewidth_per_s;
  const double gamma2 = gamma_phi + 0.5 * gamma1 + 0.5 * kappa;
  const std::complex<double> i_unit(0.0, 1.0);

  const double qubit_decay = gamma1 * r.p2;
  const double mode_decay = kappa * r.p3;
  const double exchange = 2.0 * g * r.c23.imag();

  Rho3 d;
  d.p1 = qubit_decay + mode_decay;
  d.p2 = exchange - qubit_decay;
  d.p3 = -exchange - mode_decay;
  d.c12 = -i_unit * g * r.c13 - (0.5 * gamma1 + gamma_phi) * r.c12;
  d.c13 = -i_unit * (g * r.c12 - delta * r.c13) - 0.5 * kappa * r.c13;
  d.c23 = i_unit * (g * (r.p3 - r.p2) + delta * r.c23) - gamma2 * r.c23;
  return d;
}

inline Rho3 rk4_step(const Rho3& r, double dt, const DynamicsConfig& cfg) {
  const Rho3 k1 = lindblad_rhs(r, cfg);
  const Rho3 k2 = lindblad_rhs(r + k1 * (0.5 * dt), cfg);
  const Rho3 k3 = lindblad_rhs(r + k2 * (0.5 * dt), cfg);
  const Rho3 k4 = lindblad_rhs(r + k3 * dt, cfg);
  return r + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
}

}  // namespace detail

/// d(rho)/dt of the interaction-picture master equation. Total function on
/// valid states; trace of the result is zero to 1e-14.
inline Eigen::Matrix3cd lindblad_rhs(const DensityMatrix3& rho, const DynamicsConfig& cfg) {
  cfg.validate();
  return detail::lindblad_rhs(detail::Rho3::from_matrix(rho.matrix()), cfg).to_matrix();
}

struct Trajectory {
  std::vector<double> times_s;
  std::vector<DensityMatrix3> states;

  std::vector<double> population_series(int level) const {
    std::vector<double> out(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) out[i] = states[i].population(level);
    return out;
  }
};

struct EvolveOptions {
  double step_error_tol = 1e-10;   // max-norm local truncation error per step
  double invariant_tol = 1e-8;     // runtime trace/Hermiticity guard
  int max_halvings = 40;
  std::size_t max_output_samples = 4096;
};

/// Fixed-step classical RK4 with step-halving acceptance: each step is taken
/// at dt and at dt/2 twice; the step is accepted when the Richardson error
/// estimate stays below the tolerance, else dt is halved. Output is sampled
/// on roughly max_output_samples points.
inline Trajectory evolve(const DensityMatrix3& rho0, const DynamicsConfig& cfg,
                         const EvolveOptions& opt = {}) {
  cfg.validate();
  rho0.validate();

  const double dt0 = cfg.time_step_s > 0.0 ? cfg.time_step_s : cfg.default_step_s();
  double dt = dt0;
  detail::Rho3 r = detail::Rho3::from_matrix(rho0.matrix());

  Trajectory traj;
  traj.times_s.push_back(0.0);
  traj.states.push_back(rho0);

  const double record_interval = cfg.total_time_s / static_cast<double>(opt.max_output_samples);
  double next_record = record_interval;
  double t = 0.0;
  // Accept if the dt vs 2x(dt/2) difference, which overestimates the dt/2
  // LTE by ~16x, is below tolerance.
  const double accept_tol = opt.step_error_tol * 15.0 / 16.0;

  while (t < cfg.total_time_s) {
    const double step = std::min(dt, cfg.total_time_s - t);
    int halvings = 0;
    detail::Rho3 fine;
    double local_dt = step;
    for (;;) {
      const detail::Rho3 coarse = detail::rk4_step(r, local_dt, cfg);
      fine = detail::rk4_step(detail::rk4_step(r, 0.5 * local_dt, cfg), 0.5 * local_dt, cfg);
      const double err = coarse.max_abs_diff(fine);
      if (err <= accept_tol) {
        if (err < accept_tol / 64.0 && 2.0 * local_dt <= dt0 && local_dt == step) dt = 2.0 * local_dt;
        break;
      }
      if (++halvings > opt.max_halvings)
        throw IntegrationDivergedError("evolve: step size underflow", t);
      local_dt *= 0.5;
      dt = local_dt;
    }
    r = fine;
    t += local_dt;

    const double trace = r.p1 + r.p2 + r.p3;
    if (!(std::abs(trace - 1.0) <= opt.invariant_tol) || !std::isfinite(trace))
      throw IntegrationDivergedError("evolve: trace invariant violated", t);

    if (t >= next_record || t >= cfg.total_time_s) {
      traj.times_s.push_back(t);
      traj.states.emplace_back(r.to_matrix());
      while (next_record <= t) next_record += record_interval;
    }
  }
  return traj;
}

struct DecayFit {
  double rate_per_s = 0.0;
  double residual_rms = 0.0;  // RMS of log-space fit residuals
};

/// Least-squares fit of log rho22 vs t over the window where rho22 lies in
/// [0.05, 0.95] of the initial population.
inline DecayFit effective_decay_rate(std::span<const double> times_s,
                                     std::span<const double> rho22,
                                     double monotonicity_tol = 1e-3) {
  if (times_s.size() != rho22.size())
    throw DomainError("effective_decay_rate: times and values must have equal length");
  if (rho22.size() < 10)
    throw InsufficientDataError("effective_decay_rate: need at least 10 points");
  const double p0 = rho22.front();
  if (!(p0 > 0.0)) throw FitFailedError("effective_decay_rate: initial population not positive");
  for (std::size_t i = 1; i < rho22.size(); ++i) {
    if (rho22[i] > rho22[i - 1] + monotonicity_tol * p0)
      throw FitFailedError("effective_decay_rate: trace is not monotone-decreasing");
  }

  const double lo = 0.05 * p0;
  const double hi = 0.95 * p0;
  double sum_t = 0, sum_y = 0, sum_tt = 0, sum_ty = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < rho22.size(); ++i) {
    if (rho22[i] < lo || rho22[i] > hi || !(rho22[i] > 0.0)) continue;
    const double y = std::log(rho22[i]);
    sum_t += times_s[i];
    sum_y += y;
    sum_tt += times_s[i] * times_s[i];
    sum_ty += times_s[i] * y;
    ++n;
  }
  if (n < 5) throw FitFailedError("effective_decay_rate: trace does not decay into the fit window");
  const double nn = static_cast<double>(n);
  const double denom = nn * sum_tt - sum_t * sum_t;
  if (!(denom > 0.0)) throw FitFailedError("effective_decay_rate: degenerate time axis");
  const double slope = (nn * sum_ty - sum_t * sum_y) / denom;
  const double intercept = (sum_y - slope * sum_t) / nn;
  if (!(slope < 0.0)) throw FitFailedError("effective_decay_rate: trace does not decay");

  double ss = 0.0;
  for (std::size_t i = 0; i < rho22.size(); ++i) {
    if (rho22[i] < lo || rho22[i] > hi || !(rho22[i] > 0.0)) continue;
    const double res = std::log(rho22[i]) - (intercept + slope * times_s[i]);
    ss += res * res;
  }
  return DecayFit{-slope, std::sqrt(ss / nn)};
}

/// Gamma_2,k = Gamma_2,q + kappa_k/2 with Gamma_2,q = Gamma_phi + Gamma_1(0)/2.
inline double mode_decoherence_rate(const QubitParams& qubit, double kappa_per_s) {
  return qubit.qubit_dephasing_rate_per_s() + 0.5 * kappa_per_s;
}

/// Relaxation-rate spectrum,
///   Gamma_1(omega_q) = Gamma_1(0) + sum_k 2 g_k^2 Gamma_2,k /
///                      (Gamma_2,k^2 + (omega_q - omega_m,k)^2).
inline std::vector<double> gamma1_spectrum(const CouplingSet& couplings,
                                           const QubitParams& qubit,
                                           std::span<const double> omega_grid) {
  couplings.validate();
  for (double w : omega_grid) {
    if (!(w > 0.0)) throw DomainError("gamma1_spectrum: grid frequencies must be positive");
  }
  std::vector<double> out(omega_grid.size(), qubit.nominal_decay_per_s);
  for (const auto& mode : couplings.modes) {
    const double gamma2 = mode_decoherence_rate(qubit, mode.linewidth_per_s);
    const double strength = 2.0 * mode.coupling_rad * mode.coupling_rad * gamma2;
    for (std::size_t i = 0; i < omega_grid.size(); ++i) {
      const double delta = omega_grid[i] - mode.mode_frequency_rad;
      out[i] += strength / (gamma2 * gamma2 + delta * delta);
    }
  }
  return out;
}

/// Single-mode Gamma_1 at one qubit frequency (background excluded).
inline double lorentzian_rate(double g_rad, double gamma2_per_s, double detuning_rad) {
  return 2.0 * g_rad * g_rad * gamma2_per_s /
         (gamma2_per_s * gamma2_per_s + detuning_rad * detuning_rad);
}

}  // namespace piezoq
