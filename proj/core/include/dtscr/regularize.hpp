#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "dtscr/conditional_likelihood.hpp"
#include "dtscr/dataset.hpp"
#include "dtscr/estimators.hpp"
#include "dtscr/newton.hpp"

namespace dtscr {

enum class PenaltyKind { kLasso, kRidge, kElasticNet };

std::string_view to_string(PenaltyKind kind);
/// "lasso", "ridge", "elastic-net" / "elastic_net".
PenaltyKind parse_penalty(std::string_view text);

/// P(b) = mixing * |b|_1 + (1 - mixing) / 2 * |b|^2 on standardized
/// coefficients; lasso fixes mixing = 1 and ridge mixing = 0.
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::kLasso;
  double eta = 0.0;
  double mixing = 0.5;  // used by elastic net only

  double l1_share() const;
  void validate() const;
};

struct ProximalConfig {
  double tol = 1e-8;      // on the gradient-mapping infinity norm
  int max_iter = 20000;
};

struct PenalizedResult {
  CoefficientEstimate estimate;   // original covariate scale, NaN covariance
  Eigen::VectorXd beta_standardized;
  double objective = 0.0;         // smooth part plus penalty, standardized scale
  double kkt_residual = 0.0;
  int nonzero = 0;
};

/// One event type's penalized problem. Covariates are centred and scaled to
/// unit (population) variance; the smooth part is the negative log
/// conditional likelihood divided by the number of person-period records.
class PenalizedProblem {
 public:
  PenalizedProblem(const Dataset& dataset, int j, TieMethod ties = TieMethod::kBreslow,
                   const SolverConfig& solver = {}, ProximalConfig proximal = {});

  int p() const { return static_cast<int>(scale_.size()); }
  int j() const { return j_; }
  double records() const { return records_; }

  /// Smooth part f(b) and its derivatives at standardized coefficients b.
  LogLikResult smooth(const Eigen::VectorXd& b, Derivatives level) const;

  /// Starts from `warm_start` (standardized) or zero.
  PenalizedResult fit(const PenaltySpec& penalty,
                      const Eigen::VectorXd* warm_start = nullptr) const;

  /// Largest violation of the optimality conditions at b:
  /// |g_k + eta*(l1*sign(b_k) + l2*b_k)| for b_k != 0, (|g_k| - eta*l1)_+ otherwise.
  double kkt_residual(const Eigen::VectorXd& b, const PenaltySpec& penalty) const;

  Eigen::VectorXd to_original(const Eigen::VectorXd& b) const;
  Eigen::VectorXd to_standardized(const Eigen::VectorXd& beta) const;

 private:
  PenalizedResult finish(const Eigen::VectorXd& b, const PenaltySpec& penalty, bool converged,
                         int iterations) const;
  PenalizedResult fit_smooth(const PenaltySpec& penalty, Eigen::VectorXd start) const;
  PenalizedResult fit_proximal(const PenaltySpec& penalty, Eigen::VectorXd start) const;

  int j_ = 0;
  double records_ = 1.0;
  Eigen::VectorXd scale_;
  SolverConfig solver_;
  ProximalConfig proximal_;
  std::unique_ptr<NestedRiskSetLikelihood> nested_;
  std::unique_ptr<ConditionalLikelihood> records_route_;
  std::unique_ptr<ExpandedData> expanded_;
};

CoefficientEstimate penalized_fit(const Dataset& dataset, int j, const PenaltySpec& penalty,
                                  TieMethod ties = TieMethod::kBreslow,
                                  const SolverConfig& solver = {});

/// Inclusive range "start:stop:step" (e.g. "-12:-1:1"), or a comma list.
std::vector<double> parse_grid(std::string_view text);

struct TuningGrid {
  std::vector<double> log_eta{-12, -11, -10, -9, -8, -7, -6, -5, -4, -3, -2, -1};
  int folds = 5;
  std::uint64_t seed = 0;
  /// Baselines inside CV from the training part (default) or from all data.
  bool fold_local_alpha = true;
};

/// Balanced seeded partition: a random permutation dealt round-robin.
std::vector<int> assign_folds(int n, int folds, std::uint64_t seed);

struct PathPoint {
  double log_eta = 0.0;
  double eta = 0.0;
  bool ok = false;
  std::string error;
  PenalizedResult result;
};

/// Warm-started sweep from the largest to the smallest eta. A failed point is
/// recorded and the sweep continues from the last good solution.
std::vector<PathPoint> regularization_path(const PenalizedProblem& problem,
                                           const std::vector<double>& log_eta,
                                           PenaltyKind kind, double mixing = 0.5);
std::vector<PathPoint> regularization_path(const Dataset& dataset, int j,
                                           const std::vector<double>& log_eta, PenaltyKind kind,
                                           double mixing = 0.5,
                                           TieMethod ties = TieMethod::kBreslow,
                                           const SolverConfig& solver = {});

struct CvRow {
  int j = 0;
  double log_eta = 0.0;
  int fold = 0;
  double auc = 0.0;     // integrated cause-specific AUC on the held-out fold
  double weight = 0.0;  // event share of cause j on the held-out fold
};

struct CvSummary {
  int j = 0;
  double log_eta = 0.0;
  double mean_auc = 0.0;
  double sd_auc = 0.0;
  double criterion = 0.0;  // mean over folds of weight * auc
  int folds_used = 0;
};

struct CvResult {
  std::vector<double> selected_log_eta;  // per event type
  std::vector<CvRow> rows;
  std::vector<CvSummary> summary;
  std::vector<std::string> warnings;
};

struct CvConfig {
  PenaltyKind kind = PenaltyKind::kLasso;
  double mixing = 0.5;
  TieMethod ties = TieMethod::kBreslow;
  SolverConfig solver;
  int workers = 0;
};

/// Chooses eta_j per event type by K-fold CV on the held-out global AUC. The
/// global AUC is a fixed-weight sum of cause-specific parts, so each eta_j is
/// tuned on its own term; ties go to the larger eta. `events` restricts the
/// tuning to some event types (empty = all); the others report NaN.
CvResult cv_select_eta(const Dataset& dataset, const TuningGrid& grid, const CvConfig& config,
                       const std::vector<int>& events = {});

/// Penalized beta per event type at the given log-eta values, then baselines.
FittedModel fit_penalized_model(const Dataset& dataset, const std::vector<double>& log_eta,
                                const CvConfig& config);

}  // namespace dtscr
