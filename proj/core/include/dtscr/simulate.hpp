#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "dtscr/dataset.hpp"
#include "dtscr/estimators.hpp"

namespace dtscr {

enum class CovariateLaw { kUniform, kNormal, kAr1 };

std::string_view to_string(CovariateLaw law);

struct CovarianceUpdate {
  int a = 0;  // zero-based covariate indices
  int b = 0;
  double value = 0.0;
};

/// Uniform(0,1) entries, or zero-mean normals with common variance and either
/// sparse covariance updates or AR(1) correlation rho^|l-h|. Normal draws are
/// clamped to [-truncation, truncation] when truncation is finite.
struct CovariateSpec {
  CovariateLaw law = CovariateLaw::kUniform;
  double variance = 1.0;
  double rho = 0.0;
  double truncation = 0.0;  // 0 = none
  std::vector<CovarianceUpdate> updates;
};

// What sampling does when a drawn covariate vector makes the cause-specific
// hazards sum to 1 or more in some period. kRescale divides that period's
// hazards by their sum, so every subject still at risk fails there.
enum class InadmissiblePolicy { kError, kRescale };

InadmissiblePolicy parse_inadmissible_policy(std::string_view text);

struct SimulationConfig {
  int setting = 0;  // preset id, 0 for custom
  int n = 0;
  int p = 0;
  int d = 0;
  int m = 0;
  Eigen::MatrixXd alpha;      // m x d
  Eigen::MatrixXd beta;       // m x p
  CovariateSpec covariates;
  Eigen::VectorXd censoring;  // length d, per-period mass; the rest means C > d
  int reps = 1;
  std::uint64_t seed = 0;
  InadmissiblePolicy inadmissible = InadmissiblePolicy::kError;

  void validate() const;
  /// Column indices with a non-zero coefficient for cause j.
  std::vector<int> signals(int j) const;
};

/// Published parameterizations of the simulation settings 1..19.
SimulationConfig preset(int setting);

/// Same configuration with p covariates: extra columns get zero coefficients,
/// dropped columns take their coefficients and covariance updates with them.
SimulationConfig resize_covariates(const SimulationConfig& config, int p);

/// Configuration of the running-time comparison for a given horizon.
SimulationConfig timing_config(int d, int n = 20000);

/// Draws one dataset. Subject i uses its own random stream, so the result
/// does not depend on the number of workers. Under InadmissiblePolicy::kError
/// a drawn covariate vector whose hazards sum to 1 or more is a ConfigError;
/// under kRescale the number of such subjects goes to *rescaled.
Dataset sample_dataset(const SimulationConfig& config, std::uint64_t seed, int workers = 1,
                       int* rescaled = nullptr);
Dataset sample_dataset(const SimulationConfig& config);

/// Largest hazard sum over the corners of the covariate support that maximize
/// each cause's linear predictor. A diagnostic; bounded laws only.
struct CornerDiagnostic {
  int t = 0;
  int j = 0;  // cause whose maximizing corner attains the sum
  double hazard_sum = 0.0;
};
CornerDiagnostic worst_corner(const SimulationConfig& config);

struct ParameterSummary {
  std::string name;
  int j = 0;
  int k = -1;  // covariate index for beta, -1 for alpha
  int t = 0;   // period for alpha, 0 for beta
  double truth = 0.0;
  double mean = 0.0;
  double mean_se = 0.0;
  double empirical_se = 0.0;  // NaN when fewer than 2 estimates
  double coverage = 0.0;      // NaN when no estimate has a finite SE
  int count = 0;
};

struct MethodSummary {
  Method method = Method::kTwoStep;
  std::vector<ParameterSummary> beta;
  std::vector<ParameterSummary> alpha;
  int failures = 0;
  bool valid = true;  // false when more than 10% of the repetitions failed
  std::vector<std::string> failure_messages;
};

struct RepEstimate {
  int rep = 0;
  Method method = Method::kTwoStep;
  std::string parameter;
  double estimate = 0.0;
  double se = 0.0;
};

struct ReplicationReport {
  int setting = 0;
  int reps = 0;
  std::uint64_t seed = 0;
  std::vector<double> event_mix;  // percent censored, then per cause
  std::vector<MethodSummary> methods;
  std::vector<RepEstimate> estimates;
};

struct ReplicationOptions {
  std::vector<Method> methods{Method::kTwoStep};
  TieMethod ties = TieMethod::kBreslow;
  SolverConfig solver;
  int workers = 0;
};

/// Repetition r samples with derive_seed(config.seed, r).
ReplicationReport run_replications(const SimulationConfig& config, int reps,
                                   const ReplicationOptions& options = {});

struct TimingRow {
  int d = 0;
  Method method = Method::kTwoStep;
  double median_seconds = 0.0;
  double iqr_seconds = 0.0;
  int reps = 0;
};

/// Fits both methods on identical data for each horizon, single-threaded.
std::vector<TimingRow> timing_study(const std::vector<int>& horizons, int reps,
                                    std::uint64_t seed, int n = 20000);

}  // namespace dtscr
