#include "dtscr/screening.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "dtscr/error.hpp"
#include "dtscr/parallel.hpp"
#include "dtscr/rng.hpp"

namespace dtscr {

MarginalFits marginal_fits(const Dataset& dataset, TieMethod ties, const SolverConfig& solver) {
  require_valid(dataset);
  const int m = dataset.m();
  const int p = dataset.p();
  const ExpandedData expanded(dataset);
  std::vector<std::shared_ptr<const EventStrata>> strata;
  for (int j = 1; j <= m; ++j) strata.push_back(std::make_shared<const EventStrata>(expanded, j));

  MarginalFits out;
  out.beta = Eigen::MatrixXd::Zero(m, p);
  out.failed = Eigen::MatrixXi::Zero(m, p);
  std::vector<std::string> reasons(static_cast<std::size_t>(m) * p);
  const auto& names = dataset.covariate_names();
  parallel_for(static_cast<std::size_t>(m) * p, resolve_workers(solver.workers),
               [&](std::size_t index) {
                 const int j = static_cast<int>(index) / p + 1;
                 const int r = static_cast<int>(index) % p;
                 try {
                   const ConditionalLikelihood likelihood(strata[j - 1], dataset.covariates().col(r),
                                                          ties, solver.exact_limit);
                   const auto estimate = maximize_conditional(likelihood, {names[r]}, solver);
                   out.beta(j - 1, r) = estimate.beta[0];
                 } catch (const Error& e) {
                   out.failed(j - 1, r) = 1;
                   reasons[index] = e.what();
                 }
               });
  for (std::size_t index = 0; index < reasons.size(); ++index) {
    if (reasons[index].empty()) continue;
    out.failures.push_back("j=" + std::to_string(index / p + 1) + ", " + names[index % p] + ": " +
                           reasons[index]);
  }
  return out;
}

Dataset permute_covariates(const Dataset& dataset, std::uint64_t seed) {
  RandomStream rng(seed, 0x7065726d);  // "perm"
  const auto order = random_permutation(dataset.n(), rng);
  Eigen::MatrixXd permuted(dataset.n(), dataset.p());
  for (int i = 0; i < dataset.n(); ++i) permuted.row(i) = dataset.covariates().row(order[i]);
  return dataset.with_covariates(std::move(permuted), dataset.covariate_names());
}

double permutation_threshold(const Dataset& dataset, std::uint64_t seed, TieMethod ties,
                             const SolverConfig& solver) {
  const auto fits = marginal_fits(permute_covariates(dataset, seed), ties, solver);
  return fits.beta.size() == 0 ? 0.0 : fits.beta.cwiseAbs().maxCoeff();
}

ScreeningResult sis(const Dataset& dataset, std::uint64_t seed, TieMethod ties,
                    const SolverConfig& solver) {
  ScreeningResult result;
  result.permutation_seed = seed;
  result.fits = marginal_fits(dataset, ties, solver);
  result.threshold = permutation_threshold(dataset, seed, ties, solver);
  result.selected.resize(static_cast<std::size_t>(dataset.m()));
  for (int j = 0; j < dataset.m(); ++j) {
    for (int k = 0; k < dataset.p(); ++k) {
      if (std::abs(result.fits.beta(j, k)) >= result.threshold) result.selected[j].push_back(k);
    }
  }
  return result;
}

SelectionCounts count_selection(const std::vector<int>& selected, const std::vector<int>& truth) {
  SelectionCounts counts;
  counts.size = static_cast<int>(selected.size());
  for (const int k : selected) {
    if (std::find(truth.begin(), truth.end(), k) != truth.end()) {
      ++counts.true_positives;
    } else {
      ++counts.false_positives;
    }
  }
  counts.false_negatives = static_cast<int>(truth.size()) - counts.true_positives;
  return counts;
}

SisLassoResult sis_lasso(const Dataset& dataset, std::uint64_t seed, const TuningGrid& grid,
                         const CvConfig& config) {
  SisLassoResult result;
  result.screening = sis(dataset, seed, config.ties, config.solver);
  const int m = dataset.m();
  const int p = dataset.p();

  FittedModel& model = result.model;
  model.method = Method::kTwoStep;
  model.ties = config.ties;
  model.n = dataset.n();
  model.p = p;
  model.d = dataset.d();
  model.m = m;
  model.covariate_names = dataset.covariate_names();
  model.coefficients.resize(static_cast<std::size_t>(m));

  for (int j = 1; j <= m; ++j) {
    SisLassoEvent event;
    event.j = j;
    event.screened = result.screening.selected[j - 1];
    CoefficientEstimate& estimate = model.coefficients[j - 1];
    estimate.j = j;
    estimate.beta = Eigen::VectorXd::Zero(p);
    estimate.covariance =
        Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
    estimate.converged = true;
    if (event.screened.empty()) {
      event.intercept_only = true;
      event.log_eta = std::numeric_limits<double>::quiet_NaN();
    } else {
      const Dataset reduced = dataset.select_columns(event.screened);
      CvResult cv = cv_select_eta(reduced, grid, config, {j});
      event.log_eta = cv.selected_log_eta[j - 1];
      for (auto& row : cv.rows) result.cv.rows.push_back(row);
      for (auto& row : cv.summary) result.cv.summary.push_back(row);
      for (auto& warning : cv.warnings) result.cv.warnings.push_back(std::move(warning));
      if (!std::isfinite(event.log_eta)) {
        throw EstimationError(EstimationError::Kind::kNotConverged,
                              "SIS-L: no usable tuning value for event type " + std::to_string(j));
      }
      const PenalizedProblem problem(reduced, j, config.ties, config.solver);
      const auto fit = problem.fit({config.kind, std::exp(event.log_eta), config.mixing});
      for (std::size_t c = 0; c < event.screened.size(); ++c) {
        const double value = fit.estimate.beta[static_cast<Eigen::Index>(c)];
        estimate.beta[event.screened[c]] = value;
        if (value != 0.0) event.selected.push_back(event.screened[c]);
      }
      estimate.converged = fit.estimate.converged;
      estimate.iterations = fit.estimate.iterations;
      estimate.final_gradient_norm = fit.estimate.final_gradient_norm;
    }
    result.cv.selected_log_eta.push_back(event.log_eta);
    result.events.push_back(std::move(event));
  }
  const ExpandedData expanded(dataset);
  model.baseline = fit_baselines(dataset, expanded, model.coefficients, config.ties, false,
                                 resolve_workers(config.workers));
  return result;
}

}  // namespace dtscr
