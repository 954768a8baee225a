#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "dtscr/error.hpp"
#include "dtscr/regularize.hpp"
#include "dtscr/simulate.hpp"
#include "oracles.hpp"

namespace dtscr {
namespace {

Dataset sparse_data(std::uint64_t seed, int n = 400) {
  SimulationConfig config = preset(14);
  config.n = n;
  config = resize_covariates(config, 12);
  return sample_dataset(config, seed, 1);
}

TEST(Grid, ParsesRangesAndLists) {
  const auto range = parse_grid("-12:-1:1");
  ASSERT_EQ(range.size(), 12u);
  EXPECT_EQ(range.front(), -12.0);
  EXPECT_EQ(range.back(), -1.0);
  EXPECT_EQ(parse_grid("-8:-2.5:0.25").size(), 23u);
  EXPECT_EQ(parse_grid("-3,-1.5,0"), (std::vector<double>{-3, -1.5, 0}));
  EXPECT_THROW(parse_grid("1:0:1"), InputError);
  EXPECT_THROW(parse_grid("a,b"), InputError);
}

TEST(Folds, BalancedAndSeeded) {
  const auto folds = assign_folds(103, 5, 9);
  std::vector<int> sizes(5, 0);
  for (const int f : folds) ++sizes[f];
  for (const int s : sizes) EXPECT_TRUE(s == 20 || s == 21);
  EXPECT_EQ(folds, assign_folds(103, 5, 9));
  EXPECT_NE(folds, assign_folds(103, 5, 10));
  EXPECT_THROW(assign_folds(3, 1, 0), InputError);
}

TEST(Penalty, ValidatesSpecs) {
  EXPECT_EQ(parse_penalty("elastic-net"), PenaltyKind::kElasticNet);
  EXPECT_EQ(parse_penalty("elastic_net"), PenaltyKind::kElasticNet);
  EXPECT_THROW(parse_penalty("scad"), InputError);
  EXPECT_THROW((PenaltySpec{PenaltyKind::kLasso, -1.0}).validate(), InputError);
  EXPECT_THROW((PenaltySpec{PenaltyKind::kElasticNet, 0.1, 1.5}).validate(), InputError);
  EXPECT_EQ((PenaltySpec{PenaltyKind::kRidge, 0.1}).l1_share(), 0.0);
  EXPECT_EQ((PenaltySpec{PenaltyKind::kLasso, 0.1}).l1_share(), 1.0);
}

TEST(Penalized, ZeroPenaltyReproducesUnpenalizedFit) {
  const Dataset data = sparse_data(1);
  const auto plain = fit_beta_conditional(data, 1);
  const auto lasso = penalized_fit(data, 1, {PenaltyKind::kLasso, 0.0});
  EXPECT_LT((plain.beta - lasso.beta).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Penalized, KktHoldsForEveryFamily) {
  const Dataset data = sparse_data(2);
  const PenalizedProblem problem(data, 2);
  for (const auto kind : {PenaltyKind::kLasso, PenaltyKind::kRidge, PenaltyKind::kElasticNet}) {
    for (const double log_eta : {-8.0, -6.0, -4.5}) {
      const PenaltySpec spec{kind, std::exp(log_eta), 0.5};
      const auto result = problem.fit(spec);
      EXPECT_TRUE(result.estimate.converged);
      EXPECT_LT(result.kkt_residual, 1e-6) << to_string(kind) << " " << log_eta;
    }
  }
}

TEST(Penalized, LargePenaltyZeroesEverything) {
  const Dataset data = sparse_data(3);
  const auto fit = penalized_fit(data, 1, {PenaltyKind::kLasso, 10.0});
  EXPECT_EQ(fit.beta.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Penalized, SmoothPartMatchesScaledLikelihood) {
  const Dataset data = sparse_data(4, 150);
  const PenalizedProblem problem(data, 1);
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(data.p(), -0.2, 0.3);
  const Eigen::VectorXd beta = problem.to_original(b);
  EXPECT_LT((problem.to_standardized(beta) - b).cwiseAbs().maxCoeff(), 1e-14);
  const double expected = -conditional_loglik(beta, data, 1).value / problem.records();
  EXPECT_NEAR(problem.smooth(b, Derivatives::kValue).value, expected, 1e-10);
}

TEST(Path, OrderedFromLargestEta) {
  const Dataset data = sparse_data(5);
  const auto path = regularization_path(data, 1, parse_grid("-9:-3:1"), PenaltyKind::kLasso);
  ASSERT_EQ(path.size(), 7u);
  EXPECT_EQ(path.front().log_eta, -3.0);
  for (const auto& point : path) EXPECT_TRUE(point.ok) << point.error;
  EXPECT_LE(path.front().result.nonzero, path.back().result.nonzero);
}

TEST(Cv, DeterministicAcrossWorkerCounts) {
  const Dataset data = sparse_data(6);
  TuningGrid grid;
  grid.log_eta = parse_grid("-8:-4:1");
  grid.folds = 3;
  grid.seed = 77;
  CvConfig one;
  one.workers = 1;
  CvConfig many;
  many.workers = 4;
  const CvResult a = cv_select_eta(data, grid, one);
  const CvResult b = cv_select_eta(data, grid, many);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    EXPECT_EQ(a.rows[r].j, b.rows[r].j);
    EXPECT_EQ(a.rows[r].fold, b.rows[r].fold);
    EXPECT_EQ(a.rows[r].auc, b.rows[r].auc);
  }
  EXPECT_EQ(a.selected_log_eta, b.selected_log_eta);
  for (const double s : a.selected_log_eta) EXPECT_TRUE(std::isfinite(s));
}

TEST(Cv, EventFilterLeavesOthersUntuned) {
  const Dataset data = sparse_data(7);
  TuningGrid grid;
  grid.log_eta = {-7, -5};
  grid.folds = 2;
  const CvResult cv = cv_select_eta(data, grid, {}, {2});
  EXPECT_TRUE(std::isnan(cv.selected_log_eta[0]));
  EXPECT_TRUE(std::isfinite(cv.selected_log_eta[1]));
}

TEST(Cv, FullDataAlphaOptionRuns) {
  const Dataset data = sparse_data(8);
  TuningGrid grid;
  grid.log_eta = {-7, -5};
  grid.folds = 2;
  grid.fold_local_alpha = false;
  EXPECT_NO_THROW(cv_select_eta(data, grid, {}));
}

TEST(PenalizedModel, BaselinesSolveMomentEquations) {
  const Dataset data = sparse_data(9);
  const FittedModel model = fit_penalized_model(data, {-6.0, -6.0}, {});
  for (int j = 1; j <= model.m; ++j) {
    for (int t = 1; t <= model.d; ++t) {
      const double a = model.baseline.alpha(j - 1, t - 1);
      if (!std::isfinite(a)) continue;
      EXPECT_LT(std::abs(moment_residual(data, j, t, a, model.coefficients[j - 1].beta)), 1e-10);
    }
  }
}

}  // namespace
}  // namespace dtscr
