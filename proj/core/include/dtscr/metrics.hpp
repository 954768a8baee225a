#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "dtscr/dataset.hpp"
#include "dtscr/prediction.hpp"

namespace dtscr {

/// Fraction of (case, control) pairs ordered correctly, ties counted 1/2.
/// NaN when either side is empty.
double concordance(std::span<const double> case_scores, std::span<const double> control_scores);

/// Cause-specific AUC at period t among subjects at risk (X_i >= t). Cases fail
/// from cause j at t; everyone else at risk is a control. `scores` holds the
/// predicted hazard lambda_j(t | Z_i) for every subject (length n).
double auc_jt(std::span<const double> scores, const Dataset& dataset, int j, int t);

/// Mean squared error of the predicted hazard against delta_jit over the
/// subjects at risk at t. NaN when nobody is at risk.
double brier_jt(std::span<const double> scores, const Dataset& dataset, int j, int t);

/// Weighted mean over entries with a finite value and positive weight,
/// renormalizing the weights. Throws InputError when no such entry exists.
double integrate(std::span<const double> values, std::span<const double> weights);
double globalize(std::span<const double> values, std::span<const double> weights);

struct CellMetrics {
  int j = 0;
  int t = 0;
  int at_risk = 0;
  int events = 0;
  double auc = 0.0;    // NaN when undefined
  double brier = 0.0;  // NaN when nobody is at risk
};

struct MetricsReport {
  std::vector<CellMetrics> cells;  // ordered by j, then t
  Eigen::VectorXd auc_j;           // NaN when every cell of j is undefined
  Eigen::VectorXd brier_j;
  double auc_global = 0.0;
  double brier_global = 0.0;
  Eigen::MatrixXd auc_weights;     // m x d, normalized within j
  Eigen::MatrixXd brier_weights;   // m x d, normalized within j
  Eigen::VectorXd global_weights;  // length m, event-count shares
};

/// Scores every subject of `dataset` with `params`; event-count weights.
MetricsReport evaluate(const HazardParams& params, const Dataset& dataset, int workers = 1);

}  // namespace dtscr
