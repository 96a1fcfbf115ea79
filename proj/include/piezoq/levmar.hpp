#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "piezoq/errors.hpp"

namespace piezoq {

// Small dense Levenberg-Marquardt engine. The caller supplies weighted
// residuals and their analytic Jacobian; damping follows the fixed schedule
// lambda = 1e-3, x10 on reject, /10 on accept.

struct LevMarOptions {
  int max_iterations = 500;
  double gradient_tol = 1e-8;  // converged when ||J^T r|| < tol * (1 + cost)
  double initial_lambda = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
  double max_lambda = 1e12;
  std::function<void(int, double, double, double)> on_iteration;  // iter, cost, |grad|, lambda
};

struct LevMarResult {
  Eigen::VectorXd params;
  double cost = 0.0;           // sum of squared weighted residuals
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  Eigen::MatrixXd jtj;         // J^T J at the solution, for error estimates
};

/// model(params, r, J) fills the residual vector and, when J != nullptr,
/// the Jacobian d r_i / d params_j.
using LevMarModel =
    std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd*)>;

/// Column norms of J far below the largest indicate parameters the data
/// cannot constrain; names the first offender.
inline void check_jacobian_rank(const Eigen::MatrixXd& jac,
                                const std::vector<std::string>& parameter_names,
                                double relative_floor = 1e-10) {
  const Eigen::VectorXd norms = jac.colwise().norm();
  const double max_norm = norms.maxCoeff();
  if (!(max_norm > 0.0))
    throw RankDeficientError("Jacobian is identically zero", parameter_names.empty()
                                                                 ? "all"
                                                                 : parameter_names.front());
  for (Eigen::Index j = 0; j < norms.size(); ++j) {
    if (norms[j] < relative_floor * max_norm) {
      const std::string name =
          j < static_cast<Eigen::Index>(parameter_names.size())
              ? parameter_names[static_cast<std::size_t>(j)]
              : ("parameter " + std::to_string(j));
      throw RankDeficientError("Jacobian column has no sensitivity", name);
    }
  }
}

inline LevMarResult levmar_fit(const LevMarModel& model, Eigen::VectorXd initial,
                               const LevMarOptions& opt = {},
                               const std::vector<std::string>& parameter_names = {}) {
  const Eigen::Index n_params = initial.size();
  Eigen::VectorXd params = std::move(initial);
  Eigen::VectorXd residual;
  Eigen::MatrixXd jac;
  model(params, residual, &jac);
  if (!parameter_names.empty()) check_jacobian_rank(jac, parameter_names);

  double cost = residual.squaredNorm();
  double lambda = opt.initial_lambda;

  LevMarResult result;
  result.params = params;
  result.cost = cost;

  Eigen::VectorXd gradient = jac.transpose() * residual;
  Eigen::MatrixXd jtj = jac.transpose() * jac;

  int iter = 0;
  for (; iter < opt.max_iterations; ++iter) {
    result.gradient_norm = gradient.norm();
    if (opt.on_iteration) opt.on_iteration(iter, cost, result.gradient_norm, lambda);
    if (result.gradient_norm < opt.gradient_tol * (1.0 + std::abs(cost))) {
      result.converged = true;
      break;
    }

    Eigen::MatrixXd damped = jtj;
    const double diag_floor = std::max(1e-12 * jtj.diagonal().maxCoeff(), 1e-300);
    for (Eigen::Index j = 0; j < n_params; ++j) {
      damped(j, j) += lambda * std::max(jtj(j, j), diag_floor);
    }
    const Eigen::VectorXd step = damped.ldlt().solve(-gradient);
    if (!step.allFinite()) {
      lambda *= opt.lambda_up;
      if (lambda > opt.max_lambda) break;
      continue;
    }

    const Eigen::VectorXd trial = params + step;
    Eigen::VectorXd trial_residual;
    model(trial, trial_residual, nullptr);
    // Cost change via a compensated difference sum; a plain comparison of
    // two large sums cannot resolve the tiny improvements near the optimum.
    double delta = 0.0, comp = 0.0;
    for (Eigen::Index i = 0; i < residual.size(); ++i) {
      const double term = (trial_residual[i] - residual[i]) * (trial_residual[i] + residual[i]);
      const double y = term - comp;
      const double t = delta + y;
      comp = (t - delta) - y;
      delta = t;
    }

    if (delta < 0.0) {
      params = trial;
      cost += delta;
      model(params, residual, &jac);
      gradient = jac.transpose() * residual;
      jtj = jac.transpose() * jac;
      lambda = std::max(lambda * opt.lambda_down, 1e-15);
    } else {
      lambda *= opt.lambda_up;
      if (lambda > opt.max_lambda) break;
    }
  }

  result.params = params;
  result.cost = cost;
  result.iterations = iter;
  result.gradient_norm = gradient.norm();
  if (!result.converged)
    result.converged = result.gradient_norm < opt.gradient_tol * (1.0 + std::abs(cost));
  result.jtj = jtj;
  return result;
}

/// Numerically stable softplus reparametrization used for non-negative
/// fit parameters.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double softplus_derivative(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double softplus_inverse(double y) {
  if (!(y > 0.0)) throw DomainError("softplus_inverse: argument must be > 0");
  return y > 30.0 ? y : std::log(std::expm1(y));
}

}  // namespace piezoq
