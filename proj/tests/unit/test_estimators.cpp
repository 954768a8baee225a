#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dtscr/error.hpp"
#include "dtscr/estimators.hpp"
#include "dtscr/logistic.hpp"
#include "oracles.hpp"

namespace dtscr {
namespace {

using testing::random_dataset;
using testing::RandomDatasetSpec;

SolverConfig wide_exact() {
  SolverConfig solver;
  solver.exact_limit = 60;
  return solver;
}

Dataset medium_dataset(std::uint64_t seed, int p = 2) {
  std::mt19937_64 gen(seed);
  RandomDatasetSpec spec;
  spec.n = 120;
  spec.p = p;
  spec.d = 4;
  spec.event_prob = 0.3;
  return random_dataset(gen, spec);
}

TEST(FitBeta, MatchesGridSearchForOneCovariate) {
  std::mt19937_64 gen(21);
  int checked = 0;
  while (checked < 5) {
    RandomDatasetSpec spec;
    spec.n = 20;
    spec.d = 3;
    const Dataset data = random_dataset(gen, spec);
    CoefficientEstimate fit;
    try {
      fit = fit_beta_conditional(data, 1);
    } catch (const EstimationError&) {
      continue;
    }
    if (!fit.identified) continue;
    const double grid = testing::grid_argmax(
        [&](double b) {
          return testing::brute_conditional_loglik(Eigen::VectorXd::Constant(1, b), data, 1, false);
        },
        -20, 20, 4001);
    if (std::abs(grid) > 19) continue;
    EXPECT_NEAR(fit.beta[0], grid, 1e-6);
    ++checked;
  }
}

TEST(FitBeta, GradientVanishesAtEstimate) {
  const Dataset data = medium_dataset(4);
  for (const auto ties : {TieMethod::kBreslow, TieMethod::kExact}) {
    const auto fit = fit_beta_conditional(data, 1, ties, wide_exact());
    EXPECT_TRUE(fit.converged);
    const auto at = conditional_loglik(fit.beta, data, 1, ties, 60);
    EXPECT_LT(at.gradient.cwiseAbs().maxCoeff(), 1e-8);
    const Eigen::MatrixXd inverse = (-at.hessian).inverse();
    EXPECT_LT((fit.covariance - inverse).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(FitBeta, NoEventsIsAnError) {
  Eigen::MatrixXd z(3, 1);
  z << 1, 2, 3;
  const Dataset data({}, {1, 2, 2}, {2, 0, 2}, z, DatasetOptions{0, 2});
  try {
    fit_beta_conditional(data, 1);
    FAIL();
  } catch (const EstimationError& e) {
    EXPECT_EQ(e.kind(), EstimationError::Kind::kNoEvents);
  }
}

TEST(FitBeta, SaturatedOnlyGivesUnidentifiedZero) {
  Eigen::MatrixXd z(2, 1);
  z << 1, 2;
  // Everyone at risk fails in the only period.
  const Dataset data({}, {1, 1}, {1, 1}, z);
  const auto fit = fit_beta_conditional(data, 1);
  EXPECT_FALSE(fit.identified);
  EXPECT_EQ(fit.beta[0], 0.0);
  EXPECT_TRUE(std::isnan(fit.covariance(0, 0)));
}

TEST(FitBeta, ConstantColumnIsNotIdentifiable) {
  Dataset data = medium_dataset(5, 1);
  Eigen::MatrixXd z(data.n(), 2);
  z.col(0) = data.covariates().col(0);
  z.col(1).setConstant(3.0);
  data = data.with_covariates(z, {"x", "const"});
  try {
    fit_beta_conditional(data, 1);
    FAIL();
  } catch (const EstimationError& e) {
    EXPECT_EQ(e.kind(), EstimationError::Kind::kNotIdentifiable);
    EXPECT_NE(std::string(e.what()).find("const"), std::string::npos);
  }
}

TEST(FitBeta, PerfectSeparationDiverges) {
  Eigen::MatrixXd z(6, 1);
  z << 5, 4, -1, -2, -3, -4;
  const Dataset data({}, {1, 1, 1, 1, 1, 1}, {1, 0, 0, 0, 0, 0}, z);
  try {
    fit_beta_conditional(data, 1);
    FAIL();
  } catch (const EstimationError& e) {
    EXPECT_EQ(e.kind(), EstimationError::Kind::kDivergence);
  }
}

TEST(SolveAlpha, SentinelsForDegenerateCells) {
  const std::vector<double> eta{0.1, -0.3, 0.7};
  EXPECT_EQ(solve_alpha(eta, 0).alpha, -INFINITY);
  EXPECT_EQ(solve_alpha(eta, 0).status, CellStatus::kNoEvents);
  EXPECT_EQ(solve_alpha(eta, 3).alpha, INFINITY);
  EXPECT_EQ(solve_alpha(eta, 3).status, CellStatus::kAllEvents);
  EXPECT_TRUE(std::isnan(solve_alpha({}, 0).alpha));
  EXPECT_EQ(solve_alpha({}, 0).status, CellStatus::kEmpty);
}

TEST(SolveAlpha, SolvesMomentEquation) {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> eta(25);
    for (auto& e : eta) e = normal(gen);
    const int events = 1 + rep % 24;
    const auto fit = solve_alpha(eta, events);
    double expected = 0.0;
    for (const double e : eta) expected += expit(fit.alpha + e);
    EXPECT_LT(std::abs(expected - events) / eta.size(), 1e-12);
  }
}

TEST(SolveAlpha, EqualPredictorsGiveLogitOfProportion) {
  const std::vector<double> eta(10, 0.4);
  EXPECT_NEAR(solve_alpha(eta, 3).alpha, logit(0.3) - 0.4, 1e-13);
}

TEST(FitAlpha, KnownBetaVarianceIsEmpirical) {
  const Dataset data = medium_dataset(6);
  const Eigen::VectorXd beta = Eigen::Vector2d(0.3, -0.5);
  const auto fit = fit_alpha(data, 1, 2, beta);
  // Empirical form: squared moment residuals over squared information.
  double info = 0.0;
  double spread = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    if (data.time(i) < 2) continue;
    const double l = expit(fit.alpha + data.covariates().row(i).dot(beta));
    const double delta = data.time(i) == 2 && data.event(i) == 1 ? 1.0 : 0.0;
    info += l * (1 - l);
    spread += (delta - l) * (delta - l);
  }
  EXPECT_NEAR(fit.variance, spread / (info * info), 1e-12);
  // Uncertainty in beta can only add variance on average; here it must be finite.
  const auto with_cov = fit_alpha(data, 1, 2, beta, 0.01 * Eigen::Matrix2d::Identity());
  EXPECT_TRUE(std::isfinite(with_cov.variance));
  EXPECT_GT(with_cov.variance, 0.0);
}

TEST(TwoStep, MomentResidualsVanishForDefinedCells) {
  for (const auto ties : {TieMethod::kBreslow, TieMethod::kExact}) {
    const Dataset data = medium_dataset(10, 3);
    const FittedModel model = fit_two_step(data, {ties, wide_exact()});
    EXPECT_EQ(model.method, Method::kTwoStep);
    EXPECT_EQ(model.ties, ties);
    for (int j = 1; j <= model.m; ++j) {
      for (int t = 1; t <= model.d; ++t) {
        const double a = model.baseline.alpha(j - 1, t - 1);
        if (!std::isfinite(a)) continue;
        EXPECT_LT(std::abs(moment_residual(data, j, t, a, model.coefficients[j - 1].beta)), 1e-10);
        EXPECT_GT(model.baseline.variance(j - 1, t - 1), 0.0);
      }
    }
  }
}

TEST(TwoStep, UndefinedCellsAreListed) {
  Eigen::MatrixXd z(4, 1);
  z << 0.1, 0.5, -0.4, 1.0;
  const Dataset data({}, {1, 1, 2, 3}, {1, 0, 0, 1}, z);
  const FittedModel model = fit_two_step(data);
  EXPECT_EQ(model.baseline.alpha(0, 1), -INFINITY);
  EXPECT_EQ(model.baseline.alpha(0, 2), INFINITY);
  ASSERT_EQ(model.baseline.undefined_cells.size(), 2u);
  EXPECT_EQ(model.baseline.undefined_cells[0].t, 2);
  EXPECT_EQ(model.baseline.undefined_cells[1].status, CellStatus::kAllEvents);
}

TEST(Collapsed, MatchesIndependentIrls) {
  for (std::uint64_t seed = 30; seed < 35; ++seed) {
    const Dataset data = medium_dataset(seed, 2);
    for (int j = 1; j <= data.m(); ++j) {
      const CollapsedFit fit = fit_collapsed(data, j);
      const auto design = testing::expanded_design(data, j);
      const auto oracle = testing::irls_logistic(design.x, design.y);
      ASSERT_TRUE(oracle.converged);
      const int q = static_cast<int>(design.periods.size());
      for (int c = 0; c < q; ++c) {
        EXPECT_NEAR(fit.alpha[design.periods[c] - 1], oracle.coef[c], 1e-6);
      }
      for (int k = 0; k < data.p(); ++k) EXPECT_NEAR(fit.beta[k], oracle.coef[q + k], 1e-6);
      const int d = data.d();
      EXPECT_NEAR(fit.covariance(d, d), oracle.covariance(q, q), 1e-6);
    }
  }
}

TEST(Collapsed, CloseToTwoStepOnModerateData) {
  const Dataset data = medium_dataset(40, 2);
  const FittedModel a = fit_two_step(data, {TieMethod::kExact, wide_exact()});
  const FittedModel b = fit_collapsed_model(data);
  EXPECT_EQ(b.method, Method::kCollapsed);
  EXPECT_LT((a.beta_matrix() - b.beta_matrix()).cwiseAbs().maxCoeff(), 0.15);
}

TEST(Method, ParsesBothSpellings) {
  EXPECT_EQ(parse_method("two-step"), Method::kTwoStep);
  EXPECT_EQ(parse_method("two_step"), Method::kTwoStep);
  EXPECT_EQ(parse_method("collapsed"), Method::kCollapsed);
  EXPECT_THROW(parse_method("cox"), InputError);
  EXPECT_EQ(parse_tie_method("exact"), TieMethod::kExact);
  EXPECT_THROW(parse_tie_method("efron"), InputError);
}

TEST(TwoStep, ErrorsCarryEventContext) {
  Eigen::MatrixXd z(4, 1);
  z << 1, 1, 1, 1;
  const Dataset data({}, {1, 1, 2, 2}, {1, 0, 2, 0}, z);
  try {
    fit_two_step(data);
    FAIL();
  } catch (const EstimationError& e) {
    EXPECT_EQ(e.kind(), EstimationError::Kind::kNotIdentifiable);
    EXPECT_NE(std::string(e.what()).find("event type 1"), std::string::npos);
  }
}

}  // namespace
}  // namespace dtscr
