#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "dtscr/conditional_likelihood.hpp"
#include "dtscr/dataset.hpp"
#include "dtscr/newton.hpp"

namespace dtscr {

struct CoefficientEstimate {
  int j = 0;
  Eigen::VectorXd beta;
  Eigen::MatrixXd covariance;  // NaN when unavailable
  bool converged = false;
  int iterations = 0;
  double final_gradient_norm = 0.0;
  /// False when no stratum carries information about beta_j; beta is then 0.
  bool identified = true;
};

/// Status of one (j, t) baseline cell.
enum class CellStatus {
  kDefined,
  kNoEvents,   // N_j(t) = 0: alpha = -inf, hazard 0
  kAllEvents,  // N_j(t) = Y.(t): alpha = +inf, hazard 1
  kEmpty,      // Y.(t) = 0: alpha is NaN
};

std::string_view to_string(CellStatus status);

struct UndefinedCell {
  int j = 0;
  int t = 0;
  CellStatus status = CellStatus::kNoEvents;
};

struct BaselineEstimate {
  Eigen::MatrixXd alpha;     // m x d, entry (j-1, t-1)
  Eigen::MatrixXd variance;  // m x d, NaN for undefined cells
  std::vector<UndefinedCell> undefined_cells;
};

enum class Method { kTwoStep, kCollapsed };

std::string_view to_string(Method method);
/// Accepts "two_step", "two-step" or "collapsed".
Method parse_method(std::string_view text);

struct FittedModel {
  Method method = Method::kTwoStep;
  TieMethod ties = TieMethod::kBreslow;
  int n = 0;
  int p = 0;
  int d = 0;
  int m = 0;
  std::vector<std::string> covariate_names;
  std::vector<CoefficientEstimate> coefficients;  // index j-1
  BaselineEstimate baseline;

  /// m x p matrix whose row j-1 is beta_j.
  Eigen::MatrixXd beta_matrix() const;
};

/// Conditional-likelihood fit of beta_j (first step of the two-step method).
CoefficientEstimate fit_beta_conditional(const Dataset& dataset, int j,
                                         TieMethod ties = TieMethod::kBreslow,
                                         const SolverConfig& solver = {});
/// Same, reusing an expansion of `dataset` built by the caller.
CoefficientEstimate fit_beta_conditional(const Dataset& dataset, const ExpandedData& expanded,
                                         int j, TieMethod ties, const SolverConfig& solver);
/// Maximizes an already-built likelihood; `names` label covariates in errors.
CoefficientEstimate maximize_conditional(const ConditionalLikelihood& likelihood,
                                         const std::vector<std::string>& names,
                                         const SolverConfig& solver);

struct AlphaFit {
  double alpha = 0.0;
  double variance = 0.0;
  double residual = 0.0;  // observed minus expected proportion at alpha
  CellStatus status = CellStatus::kDefined;
};

/// Solves sum_{X_i >= t} expit(a + eta_i) = N_j(t) for a by a safeguarded
/// Newton iteration inside a guaranteed bracket. `eta` are the linear
/// predictors of the at-risk subjects.
AlphaFit solve_alpha(std::span<const double> eta, int events);

/// Baseline alpha_jt for fixed beta_j with the sandwich-type variance. Pass an
/// empty covariance to treat beta as known.
AlphaFit fit_alpha(const Dataset& dataset, int j, int t, const Eigen::VectorXd& beta_hat,
                   const Eigen::MatrixXd& beta_covariance = {});

/// Observed minus expected proportion of type-j failures at t for a given
/// alpha; the second-step estimating equation.
double moment_residual(const Dataset& dataset, int j, int t, double alpha,
                       const Eigen::VectorXd& beta);

/// Baselines for all (j, t) given fitted coefficients. `coefficients` index j-1.
BaselineEstimate fit_baselines(const Dataset& dataset, const ExpandedData& expanded,
                               const std::vector<CoefficientEstimate>& coefficients,
                               TieMethod ties, bool with_variance, int workers);

struct TwoStepConfig {
  TieMethod ties = TieMethod::kBreslow;
  SolverConfig solver;
};

FittedModel fit_two_step(const Dataset& dataset, const TwoStepConfig& config = {});

struct CollapsedFit {
  int j = 0;
  Eigen::VectorXd alpha;       // length d, +-inf for undefined cells
  Eigen::VectorXd beta;        // length p
  Eigen::MatrixXd covariance;  // (d + p) x (d + p), NaN rows/cols for undefined cells
  bool converged = false;
  int iterations = 0;
  double final_gradient_norm = 0.0;
  std::vector<UndefinedCell> undefined_cells;
};

/// Joint maximum likelihood of (alpha_j., beta_j) on the person-period rows
/// with a dense design [time indicators | Z], solved by Newton (IRLS).
CollapsedFit fit_collapsed(const Dataset& dataset, int j, const SolverConfig& solver = {});

FittedModel fit_collapsed_model(const Dataset& dataset, const SolverConfig& solver = {});

}  // namespace dtscr
