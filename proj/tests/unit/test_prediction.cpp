#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dtscr/error.hpp"
#include "dtscr/logistic.hpp"
#include "dtscr/prediction.hpp"
#include "oracles.hpp"

namespace dtscr {
namespace {

HazardParams small_params() {
  HazardParams params;
  params.alpha.resize(2, 3);
  params.alpha << -1.0, -1.5, -0.5, -2.0, -1.0, -1.2;
  params.beta.resize(2, 2);
  params.beta << 0.4, -0.3, -0.2, 0.6;
  return params;
}

TEST(Prediction, CurvesMatchStatePropagation) {
  const HazardParams params = small_params();
  const std::vector<double> z{0.7, -1.1};
  const Curves curves = predict_curves(params, z);
  Eigen::MatrixXd hazards(2, 3);
  for (int j = 0; j < 2; ++j) {
    for (int t = 0; t < 3; ++t) {
      hazards(j, t) = expit(params.alpha(j, t) + params.beta(j, 0) * z[0] + params.beta(j, 1) * z[1]);
    }
  }
  EXPECT_LT((curves.hazard - hazards).cwiseAbs().maxCoeff(), 1e-15);
  const Eigen::MatrixXd oracle = testing::cif_by_propagation(hazards);
  EXPECT_LT((curves.cif - oracle).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_DOUBLE_EQ(curves.survival[0], 1.0);
  EXPECT_NEAR(curves.survival[3] + curves.cif.col(2).sum(), 1.0, 1e-14);
  EXPECT_NEAR(cif(params, 2, 3, z), oracle(1, 2), 1e-14);
  EXPECT_NEAR(marginal_event_prob(params, 1, z), oracle(0, 2), 1e-14);
  EXPECT_NEAR(survival(params, 2, z), 1.0 - oracle.col(1).sum(), 1e-14);
  EXPECT_NEAR(hazard(params, 1, 2, z), hazards(0, 1), 1e-15);
}

TEST(Prediction, InfiniteAlphaGivesZeroOrOneHazard) {
  HazardParams params = small_params();
  params.alpha(0, 0) = -INFINITY;
  params.alpha(1, 1) = INFINITY;
  const std::vector<double> z{0.0, 0.0};
  EXPECT_EQ(hazard(params, 1, 1, z), 0.0);
  EXPECT_EQ(hazard(params, 2, 2, z), 1.0);
}

TEST(Prediction, InadmissibleSumIsClampedAndCounted) {
  HazardParams params;
  params.alpha = Eigen::MatrixXd::Constant(2, 2, 3.0);
  params.beta = Eigen::MatrixXd::Zero(2, 1);
  Diagnostics diagnostics;
  const std::vector<double> z{0.0};
  const Curves curves = predict_curves(params, z, &diagnostics);
  EXPECT_GE(diagnostics.violations, 1);
  EXPECT_GE(diagnostics.clamps, 1);
  EXPECT_GT(diagnostics.worst_sum, 1.0);
  EXPECT_EQ(curves.survival[1], 0.0);
}

TEST(Prediction, TimeBeyondHorizonIsRejected) {
  const HazardParams params = small_params();
  const std::vector<double> z{0.0, 0.0};
  try {
    cif(params, 1, 4, z);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_STREQ(e.what(), "t > d");
  }
  EXPECT_THROW(cif(params, 3, 1, z), InputError);
  EXPECT_THROW(cif(params, 1, 1, std::vector<double>{1.0}), InputError);
}

TEST(FullLoglik, MatchesDirectSum) {
  const HazardParams params = small_params();
  Eigen::MatrixXd z(3, 2);
  z << 0.2, 0.1, -0.5, 1.0, 1.2, -0.3;
  const Dataset data({}, {1, 3, 2}, {2, 0, 1}, z);
  double expected = 0.0;
  const auto lam = [&](int i, int j, int t) {
    return expit(params.alpha(j - 1, t - 1) + z.row(i).dot(params.beta.row(j - 1)));
  };
  expected += std::log(lam(0, 2, 1));
  for (int t = 1; t <= 3; ++t) expected += std::log(1 - lam(1, 1, t) - lam(1, 2, t));
  expected += std::log(1 - lam(2, 1, 1) - lam(2, 2, 1)) + std::log(lam(2, 1, 2));
  EXPECT_NEAR(full_loglik(params, data), expected, 1e-12);
}

TEST(FullLoglik, ZeroProbabilityRecordThrows) {
  HazardParams params = small_params();
  params.alpha(1, 0) = -INFINITY;
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(1, 2);
  const Dataset data({}, {1}, {2}, z, DatasetOptions{3, 2});
  try {
    full_loglik(params, data);
    FAIL();
  } catch (const EstimationError& e) {
    EXPECT_EQ(e.kind(), EstimationError::Kind::kEvaluation);
  }
}

TEST(Prediction, LinearPredictorsAreZTimesBetaTransposed) {
  const HazardParams params = small_params();
  Eigen::MatrixXd z(2, 2);
  z << 1, 2, 3, 4;
  const Eigen::MatrixXd eta = linear_predictors(params, z);
  EXPECT_LT((eta - z * params.beta.transpose()).cwiseAbs().maxCoeff(), 1e-15);
}

}  // namespace
}  // namespace dtscr
