#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dtscr/dataset.hpp"
#include "dtscr/estimators.hpp"
#include "dtscr/regularize.hpp"

namespace dtscr {

/// One-covariate conditional-likelihood fits for every (j, column).
struct MarginalFits {
  Eigen::MatrixXd beta;    // m x p signed estimates, 0 where the fit failed
  Eigen::MatrixXi failed;  // m x p, 1 where the fit raised an error
  std::vector<std::string> failures;  // "j=.., column: reason"
};

MarginalFits marginal_fits(const Dataset& dataset, TieMethod ties = TieMethod::kBreslow,
                           const SolverConfig& solver = {});

/// Same covariates with whole rows permuted by a seeded permutation.
Dataset permute_covariates(const Dataset& dataset, std::uint64_t seed);

/// Largest marginal magnitude after decoupling covariates from outcomes.
double permutation_threshold(const Dataset& dataset, std::uint64_t seed,
                             TieMethod ties = TieMethod::kBreslow,
                             const SolverConfig& solver = {});

struct ScreeningResult {
  MarginalFits fits;
  double threshold = 0.0;
  std::uint64_t permutation_seed = 0;
  std::vector<std::vector<int>> selected;  // per event type, ascending columns
};

ScreeningResult sis(const Dataset& dataset, std::uint64_t seed,
                    TieMethod ties = TieMethod::kBreslow, const SolverConfig& solver = {});

struct SelectionCounts {
  int size = 0;
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
};

SelectionCounts count_selection(const std::vector<int>& selected, const std::vector<int>& truth);

struct SisLassoEvent {
  int j = 0;
  std::vector<int> screened;
  std::vector<int> selected;  // non-zero lasso coefficients, original columns
  double log_eta = 0.0;       // NaN when the event degenerated to intercept-only
  bool intercept_only = false;
};

struct SisLassoResult {
  ScreeningResult screening;
  std::vector<SisLassoEvent> events;
  CvResult cv;        // rows of every event type's tuning
  FittedModel model;  // full p, zeros outside the lasso selection
};

/// Screening, then per-event CV-tuned lasso on the screened columns, then
/// baselines.
SisLassoResult sis_lasso(const Dataset& dataset, std::uint64_t seed, const TuningGrid& grid,
                         const CvConfig& config);

}  // namespace dtscr
