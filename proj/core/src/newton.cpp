#include "dtscr/newton.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "dtscr/error.hpp"

namespace dtscr {
namespace {

Eigen::VectorXd newton_direction(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& gradient) {
  const Eigen::MatrixXd information = -hessian;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(information);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
      (ldlt.vectorD().array() > 0.0).all()) {
    Eigen::VectorXd step = ldlt.solve(gradient);
    if (step.allFinite()) return step;
  }
  // Flat or indefinite curvature: shift the spectrum until Cholesky succeeds.
  const double scale = std::max(1.0, information.diagonal().cwiseAbs().maxCoeff());
  const Eigen::Index p = gradient.size();
  for (double mu = 1e-10; mu < 1e10; mu *= 10.0) {
    Eigen::LLT<Eigen::MatrixXd> llt(information +
                                    mu * scale * Eigen::MatrixXd::Identity(p, p));
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd step = llt.solve(gradient);
      if (step.allFinite()) return step;
    }
  }
  return gradient / scale;
}

}  // namespace

NewtonResult newton_maximize(const SmoothObjective& objective, Eigen::VectorXd start,
                             const SolverConfig& config) {
  NewtonResult result;
  result.x = std::move(start);
  result.at = objective(result.x, Derivatives::kHessian);
  if (!std::isfinite(result.at.value)) {
    throw EstimationError(EstimationError::Kind::kEvaluation,
                          "objective is not finite at the starting point");
  }
  const double eps = std::numeric_limits<double>::epsilon();
  int unresolved = 0;
  while (true) {
    result.gradient_norm =
        result.at.gradient.size() == 0 ? 0.0 : result.at.gradient.cwiseAbs().maxCoeff();
    if (result.gradient_norm < config.tol) {
      result.converged = true;
      break;
    }
    if (result.iterations >= config.max_iter) break;
    ++result.iterations;

    const Eigen::VectorXd direction = newton_direction(result.at.hessian, result.at.gradient);
    // Near the optimum of a large sum the predicted gain drops below what the
    // objective can resolve, so a line search would only chase rounding noise.
    // Full Newton steps are taken instead; if they cannot push the gradient
    // under the tolerance either, the gradient itself is at its rounding floor.
    const double resolution = 16.0 * eps * std::max(1.0, std::abs(result.at.value));
    Eigen::VectorXd candidate;
    if (0.5 * result.at.gradient.dot(direction) < resolution) {
      if (++unresolved > 5) {
        result.converged = true;
        break;
      }
      candidate = result.x + direction;
    } else {
      unresolved = 0;
      const double floor = result.at.value - 4.0 * eps * std::max(1.0, std::abs(result.at.value));
      double step = 1.0;
      bool accepted = false;
      for (int halving = 0; halving < 50; ++halving, step *= 0.5) {
        candidate = result.x + step * direction;
        const double value = objective(candidate, Derivatives::kValue).value;
        if (std::isfinite(value) && value >= floor) {
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }
    if (candidate.size() > 0 && candidate.cwiseAbs().maxCoeff() > config.bound) {
      throw EstimationError(EstimationError::Kind::kDivergence,
                            "coefficients left the bound |beta| <= " +
                                std::to_string(config.bound) +
                                " (likely separation or a near-degenerate covariate)");
    }
    result.x = std::move(candidate);
    result.at = objective(result.x, Derivatives::kHessian);
  }
  return result;
}

Eigen::MatrixXd inverse_or_nan(const Eigen::MatrixXd& information) {
  const Eigen::Index p = information.rows();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(information);
  if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all()) {
    Eigen::MatrixXd inverse = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    if (inverse.allFinite()) return 0.5 * (inverse + inverse.transpose());
  }
  return Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
}

}  // namespace dtscr
