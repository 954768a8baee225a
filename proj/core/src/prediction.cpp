#include "dtscr/prediction.hpp"

#include <cmath>
#include <string>

#include "dtscr/error.hpp"
#include "dtscr/logistic.hpp"

namespace dtscr {
namespace {

void check_params(const HazardParams& params, std::span<const double> z) {
  if (params.beta.rows() != params.alpha.rows()) {
    throw InputError("alpha and beta disagree on the number of event types");
  }
  if (static_cast<Eigen::Index>(z.size()) != params.beta.cols()) {
    throw InputError("covariate vector has length " + std::to_string(z.size()) +
                     ", expected " + std::to_string(params.beta.cols()));
  }
}

void check_time(const HazardParams& params, int t, int lowest) {
  if (t < lowest || t > params.d()) {
    throw InputError(t > params.d() ? "t > d" : "t is below the valid range");
  }
}

double linear(const HazardParams& params, int j, std::span<const double> z) {
  const Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
  return params.beta.row(j - 1).dot(zv);
}

// Survivor factor 1 - sum_j lambda_j(t), with admissibility bookkeeping.
double survivor_factor(double sum, int t, Diagnostics* diagnostics) {
  double factor = 1.0 - sum;
  if (sum > 1.0) {
    if (diagnostics != nullptr) {
      ++diagnostics->violations;
      ++diagnostics->clamps;
      if (sum > diagnostics->worst_sum) {
        diagnostics->worst_sum = sum;
        diagnostics->worst_t = t;
      }
    }
    factor = 0.0;
  }
  return factor;
}

}  // namespace

void Diagnostics::merge(const Diagnostics& other) {
  violations += other.violations;
  clamps += other.clamps;
  if (other.worst_sum > worst_sum) {
    worst_sum = other.worst_sum;
    worst_t = other.worst_t;
  }
}

HazardParams params_from_model(const FittedModel& model) {
  return {model.baseline.alpha, model.beta_matrix()};
}

double hazard(const HazardParams& params, int j, int t, std::span<const double> z,
              Diagnostics* diagnostics) {
  check_params(params, z);
  check_time(params, t, 1);
  if (j < 1 || j > params.m()) throw InputError("event type out of range");
  const double value = expit(params.alpha(j - 1, t - 1) + linear(params, j, z));
  if (diagnostics != nullptr) {
    double sum = 0.0;
    for (int k = 1; k <= params.m(); ++k) sum += expit(params.alpha(k - 1, t - 1) + linear(params, k, z));
    if (sum > 1.0) {
      ++diagnostics->violations;
      if (sum > diagnostics->worst_sum) {
        diagnostics->worst_sum = sum;
        diagnostics->worst_t = t;
      }
    }
  }
  return value;
}

Curves predict_curves(const HazardParams& params, std::span<const double> z,
                      Diagnostics* diagnostics) {
  check_params(params, z);
  const int m = params.m();
  const int d = params.d();
  Curves curves;
  curves.hazard.resize(m, d);
  curves.cif.resize(m, d);
  curves.survival.resize(d + 1);
  curves.survival[0] = 1.0;

  Eigen::VectorXd eta(m);
  for (int j = 1; j <= m; ++j) eta[j - 1] = linear(params, j, z);
  Eigen::VectorXd running = Eigen::VectorXd::Zero(m);
  for (int t = 1; t <= d; ++t) {
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
      const double lambda = expit(params.alpha(j, t - 1) + eta[j]);
      curves.hazard(j, t - 1) = lambda;
      sum += lambda;
      running[j] += lambda * curves.survival[t - 1];
      curves.cif(j, t - 1) = running[j];
    }
    curves.survival[t] = curves.survival[t - 1] * survivor_factor(sum, t, diagnostics);
  }
  return curves;
}

double survival(const HazardParams& params, int t, std::span<const double> z,
                Diagnostics* diagnostics) {
  check_time(params, t, 0);
  return predict_curves(params, z, diagnostics).survival[t];
}

double cif(const HazardParams& params, int j, int t, std::span<const double> z,
           Diagnostics* diagnostics) {
  check_time(params, t, 0);
  if (j < 1 || j > params.m()) throw InputError("event type out of range");
  if (t == 0) return 0.0;
  return predict_curves(params, z, diagnostics).cif(j - 1, t - 1);
}

double marginal_event_prob(const HazardParams& params, int j, std::span<const double> z,
                           Diagnostics* diagnostics) {
  return cif(params, j, params.d(), z, diagnostics);
}

Eigen::MatrixXd linear_predictors(const HazardParams& params, const Eigen::MatrixXd& z) {
  return z * params.beta.transpose();
}

double full_loglik(const HazardParams& params, const Dataset& dataset) {
  require_valid(dataset);
  if (dataset.p() != params.p() || dataset.m() > params.m() || dataset.d() > params.d()) {
    throw InputError("parameter dimensions do not cover the dataset");
  }
  const Eigen::MatrixXd eta = linear_predictors(params, dataset.covariates());
  const int m = params.m();
  double total = 0.0;
  for (int i = 0; i < dataset.n(); ++i) {
    const int x = dataset.time(i);
    const int event = dataset.event(i);
    for (int t = 1; t <= x; ++t) {
      double term = 0.0;
      if (t == x && event > 0) {
        const double lambda = expit(params.alpha(event - 1, t - 1) + eta(i, event - 1));
        if (!(lambda > 0.0)) {
          throw EstimationError(EstimationError::Kind::kEvaluation,
                                "zero hazard at the observed event of subject " + dataset.id(i));
        }
        term = std::log(lambda);
      } else {
        double sum = 0.0;
        for (int j = 0; j < m; ++j) sum += expit(params.alpha(j, t - 1) + eta(i, j));
        if (!(sum < 1.0)) {
          throw EstimationError(EstimationError::Kind::kEvaluation,
                                "hazards sum to " + std::to_string(sum) + " >= 1 for subject " +
                                    dataset.id(i) + " at t=" + std::to_string(t));
        }
        term = std::log1p(-sum);
      }
      total += term;
    }
  }
  return total;
}

}  // namespace dtscr
