#pragma once

#include <functional>

#include <Eigen/Core>

#include "dtscr/conditional_likelihood.hpp"

namespace dtscr {

struct SolverConfig {
  double tol = 1e-8;      // on the gradient infinity norm
  int max_iter = 100;
  double bound = 50.0;    // |beta_k| beyond this is treated as separation
  int exact_limit = 10;   // largest stratum event count allowed for exact ties
  int workers = 0;        // 0 = DTSCR_WORKERS or 1
};

using SmoothObjective = std::function<LogLikResult(const Eigen::VectorXd&, Derivatives)>;

struct NewtonResult {
  Eigen::VectorXd x;
  LogLikResult at;  // value, gradient and Hessian at x
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
};

/// Damped Newton ascent on a concave objective. Steps are halved until the
/// value stops decreasing; a flat step within rounding is accepted.
/// Throws EstimationError(kDivergence) when an iterate leaves the bound.
NewtonResult newton_maximize(const SmoothObjective& objective, Eigen::VectorXd start,
                             const SolverConfig& config);

/// Inverse of a symmetric positive definite matrix, NaN-filled when singular.
Eigen::MatrixXd inverse_or_nan(const Eigen::MatrixXd& information);

}  // namespace dtscr
