#pragma once

#include <span>

#include <Eigen/Core>

#include "dtscr/dataset.hpp"
#include "dtscr/estimators.hpp"

namespace dtscr {

/// alpha (m x d) and beta (m x p). Alpha entries may be -inf (hazard 0),
/// +inf (hazard 1) or NaN (no information; propagates).
struct HazardParams {
  Eigen::MatrixXd alpha;
  Eigen::MatrixXd beta;

  int m() const { return static_cast<int>(alpha.rows()); }
  int d() const { return static_cast<int>(alpha.cols()); }
  int p() const { return static_cast<int>(beta.cols()); }
};

HazardParams params_from_model(const FittedModel& model);

/// Admissibility bookkeeping. A violation is a period where the cause-specific
/// hazards sum above 1; the survivor factor is then clamped at 0.
struct Diagnostics {
  long long violations = 0;
  long long clamps = 0;
  double worst_sum = 0.0;
  int worst_t = 0;

  void merge(const Diagnostics& other);
};

double hazard(const HazardParams& params, int j, int t, std::span<const double> z,
              Diagnostics* diagnostics = nullptr);
double survival(const HazardParams& params, int t, std::span<const double> z,
                Diagnostics* diagnostics = nullptr);
double cif(const HazardParams& params, int j, int t, std::span<const double> z,
           Diagnostics* diagnostics = nullptr);
double marginal_event_prob(const HazardParams& params, int j, std::span<const double> z,
                           Diagnostics* diagnostics = nullptr);

/// Every curve for one covariate vector in a single pass.
struct Curves {
  Eigen::MatrixXd hazard;    // m x d
  Eigen::MatrixXd cif;       // m x d, F_j(t) at (j-1, t-1)
  Eigen::VectorXd survival;  // length d + 1, S(0) = 1
};

Curves predict_curves(const HazardParams& params, std::span<const double> z,
                      Diagnostics* diagnostics = nullptr);

/// Full (joint over causes) log-likelihood of the observed data. Throws
/// EstimationError(kEvaluation) when an observed record has probability 0.
double full_loglik(const HazardParams& params, const Dataset& dataset);

/// Linear predictors: (n x p covariates) * beta^T -> n x m.
Eigen::MatrixXd linear_predictors(const HazardParams& params, const Eigen::MatrixXd& z);

}  // namespace dtscr
