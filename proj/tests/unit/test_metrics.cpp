#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dtscr/error.hpp"
#include "dtscr/logistic.hpp"
#include "dtscr/metrics.hpp"
#include "oracles.hpp"

namespace dtscr {
namespace {

TEST(Concordance, MatchesPairEnumerationWithTies) {
  std::mt19937_64 gen(2);
  std::uniform_int_distribution<int> level(0, 5);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> cases(1 + rep % 7);
    std::vector<double> controls(1 + rep % 11);
    for (auto& c : cases) c = level(gen);
    for (auto& c : controls) c = level(gen);
    EXPECT_NEAR(concordance(cases, controls), testing::pairwise_auc(cases, controls), 1e-15);
  }
}

TEST(Concordance, EdgeCases) {
  EXPECT_EQ(concordance(std::vector<double>{1, 1}, std::vector<double>{1, 1, 1}), 0.5);
  EXPECT_EQ(concordance(std::vector<double>{2}, std::vector<double>{1}), 1.0);
  EXPECT_TRUE(std::isnan(concordance(std::vector<double>{}, std::vector<double>{1.0})));
}

Dataset metric_data() {
  Eigen::MatrixXd z(6, 1);
  z << 0.1, 0.9, -0.3, 0.5, 1.2, -1.0;
  return Dataset({}, {1, 1, 2, 2, 3, 3}, {1, 0, 2, 1, 0, 1}, z);
}

TEST(Metrics, AucJtUsesSubjectsAtRisk) {
  const Dataset data = metric_data();
  const std::vector<double> scores{0.3, 0.1, 0.4, 0.8, 0.2, 0.6};
  // t = 2: at risk {2,3,4,5}; cause-1 case {3}; controls {2,4,5}.
  EXPECT_NEAR(auc_jt(scores, data, 1, 2), testing::pairwise_auc({0.8}, {0.4, 0.2, 0.6}), 1e-15);
  // t = 1: case {0}, controls {1..5}.
  EXPECT_NEAR(auc_jt(scores, data, 1, 1),
              testing::pairwise_auc({0.3}, {0.1, 0.4, 0.8, 0.2, 0.6}), 1e-15);
  EXPECT_TRUE(std::isnan(auc_jt(scores, data, 2, 1)));
}

TEST(Metrics, BrierIsMeanSquaredErrorOverRiskSet) {
  const Dataset data = metric_data();
  const std::vector<double> scores{0.3, 0.1, 0.4, 0.8, 0.2, 0.6};
  const double expected = (0.4 * 0.4 + 0.2 * 0.2 + 0.2 * 0.2 + 0.6 * 0.6) / 4.0;
  EXPECT_NEAR(brier_jt(scores, data, 1, 2), expected, 1e-15);
}

TEST(Metrics, IntegrateSkipsUndefinedCells) {
  const std::vector<double> values{0.6, NAN, 0.8};
  const std::vector<double> weights{1.0, 5.0, 3.0};
  EXPECT_NEAR(integrate(values, weights), (0.6 + 2.4) / 4.0, 1e-15);
  EXPECT_THROW(integrate(std::vector<double>{NAN}, std::vector<double>{1.0}), InputError);
}

TEST(Metrics, EvaluateAggregatesWithEventWeights) {
  const Dataset data = metric_data();
  HazardParams params;
  params.alpha = Eigen::MatrixXd::Constant(2, 3, -1.0);
  params.beta.resize(2, 1);
  params.beta << 0.8, -0.4;
  const MetricsReport report = evaluate(params, data);
  ASSERT_EQ(report.cells.size(), 6u);
  double auc1 = 0.0;
  double mass = 0.0;
  for (const auto& c : report.cells) {
    if (c.j == 1 && std::isfinite(c.auc)) {
      auc1 += c.events * c.auc;
      mass += c.events;
    }
  }
  EXPECT_NEAR(report.auc_j[0], auc1 / mass, 1e-15);
  EXPECT_NEAR(report.global_weights[0], 3.0 / 4.0, 1e-15);
  EXPECT_NEAR(report.auc_global,
              0.75 * report.auc_j[0] + 0.25 * report.auc_j[1], 1e-15);
}

TEST(Metrics, AucInvariantUnderMonotoneTransform) {
  std::mt19937_64 gen(4);
  testing::RandomDatasetSpec spec;
  spec.n = 80;
  spec.d = 4;
  const Dataset data = testing::random_dataset(gen, spec);
  std::normal_distribution<double> normal;
  std::vector<double> scores(data.n());
  for (auto& s : scores) s = normal(gen);
  std::vector<double> transformed(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) transformed[i] = std::exp(3 * scores[i]) + 1;
  for (int t = 1; t <= data.d(); ++t) {
    const double a = auc_jt(scores, data, 1, t);
    const double b = auc_jt(transformed, data, 1, t);
    if (std::isnan(a)) {
      EXPECT_TRUE(std::isnan(b));
    } else {
      EXPECT_EQ(a, b);
    }
  }
}

}  // namespace
}  // namespace dtscr
