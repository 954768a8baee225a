#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "dtscr/error.hpp"
#include "dtscr/estimators.hpp"
#include "dtscr/model_io.hpp"
#include "oracles.hpp"

namespace dtscr {
namespace {

TEST(ModelIo, RoundTripPreservesEverything) {
  std::mt19937_64 gen(12);
  testing::RandomDatasetSpec spec;
  spec.n = 60;
  spec.p = 2;
  spec.d = 5;
  spec.event_prob = 0.15;
  const Dataset data = testing::random_dataset(gen, spec);
  const FittedModel model = fit_two_step(data);
  const FittedModel back = model_from_json(model_to_json(model));
  EXPECT_EQ(back.method, model.method);
  EXPECT_EQ(back.ties, model.ties);
  EXPECT_EQ(back.n, model.n);
  EXPECT_EQ(back.covariate_names, model.covariate_names);
  EXPECT_EQ(back.beta_matrix(), model.beta_matrix());
  for (int j = 0; j < model.m; ++j) {
    EXPECT_EQ(back.coefficients[j].covariance, model.coefficients[j].covariance);
  }
  for (int j = 0; j < model.m; ++j) {
    for (int t = 0; t < model.d; ++t) {
      const double a = model.baseline.alpha(j, t);
      const double b = back.baseline.alpha(j, t);
      if (std::isnan(a)) {
        EXPECT_TRUE(std::isnan(b));
      } else {
        EXPECT_EQ(a, b);
      }
    }
  }
  EXPECT_EQ(back.baseline.undefined_cells.size(), model.baseline.undefined_cells.size());
}

TEST(ModelIo, SentinelsAreEncodedAsStrings) {
  FittedModel model;
  model.n = 1;
  model.p = 1;
  model.d = 2;
  model.m = 1;
  model.covariate_names = {"x"};
  CoefficientEstimate c;
  c.j = 1;
  c.beta = Eigen::VectorXd::Constant(1, 0.5);
  c.covariance = Eigen::MatrixXd::Constant(1, 1, NAN);
  model.coefficients = {c};
  model.baseline.alpha.resize(1, 2);
  model.baseline.alpha << -INFINITY, INFINITY;
  model.baseline.variance = Eigen::MatrixXd::Constant(1, 2, NAN);
  const std::string text = model_to_json(model);
  EXPECT_NE(text.find("\"-inf\""), std::string::npos);
  EXPECT_NE(text.find("\"+inf\""), std::string::npos);
  EXPECT_NE(text.find("null"), std::string::npos);
  const FittedModel back = model_from_json(text);
  EXPECT_EQ(back.baseline.alpha(0, 0), -INFINITY);
  EXPECT_EQ(back.baseline.alpha(0, 1), INFINITY);
  EXPECT_TRUE(std::isnan(back.coefficients[0].covariance(0, 0)));
}

TEST(ModelIo, RejectsForeignDocuments) {
  EXPECT_THROW(model_from_json("{\"format\": \"other\"}"), InputError);
  EXPECT_THROW(model_from_json("not json"), InputError);
  EXPECT_THROW(read_model("/nonexistent/model.json"), InputError);
}

}  // namespace
}  // namespace dtscr
