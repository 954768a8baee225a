#include "dtscr/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Cholesky>

#include "dtscr/error.hpp"
#include "dtscr/io.hpp"
#include "dtscr/parallel.hpp"
#include "dtscr/prediction.hpp"
#include "dtscr/rng.hpp"

namespace dtscr {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// alpha_jt = intercept_j + slope * f(t) for t = 1..d, f = log or identity.
Eigen::MatrixXd alpha_grid(const std::vector<double>& intercepts, const std::vector<double>& slopes,
                           int d, bool log_time) {
  Eigen::MatrixXd alpha(static_cast<Eigen::Index>(intercepts.size()), d);
  for (std::size_t j = 0; j < intercepts.size(); ++j) {
    for (int t = 1; t <= d; ++t) {
      const double f = log_time ? std::log(static_cast<double>(t)) : static_cast<double>(t);
      alpha(static_cast<Eigen::Index>(j), t - 1) = intercepts[j] + slopes[j] * f;
    }
  }
  return alpha;
}

// Row vector c * log(x_k), padded with zeros to length p.
Eigen::RowVectorXd log_coefficients(double c, const std::vector<double>& x, int p) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(p);
  for (std::size_t k = 0; k < x.size(); ++k) row[static_cast<Eigen::Index>(k)] = c * std::log(x[k]);
  return row;
}

Eigen::RowVectorXd leading(const std::vector<double>& values, int p) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(p);
  for (std::size_t k = 0; k < values.size(); ++k) row[static_cast<Eigen::Index>(k)] = values[k];
  return row;
}

const std::vector<CovarianceUpdate>& sparse_updates() {
  static const std::vector<CovarianceUpdate> updates{
      {0, 8, 0.1}, {1, 9, 0.3}, {3, 7, -0.3}, {4, 11, -0.1}};
  return updates;
}

class CovariateSampler {
 public:
  explicit CovariateSampler(const SimulationConfig& config) : spec_(config.covariates), p_(config.p) {
    if (spec_.law == CovariateLaw::kNormal) {
      Eigen::MatrixXd covariance = spec_.variance * Eigen::MatrixXd::Identity(p_, p_);
      for (const auto& u : spec_.updates) {
        covariance(u.a, u.b) = u.value;
        covariance(u.b, u.a) = u.value;
      }
      Eigen::LLT<Eigen::MatrixXd> llt(covariance);
      if (llt.info() != Eigen::Success) throw ConfigError("covariate covariance is not positive definite");
      factor_ = llt.matrixL();
      diagonal_ = spec_.updates.empty();
    }
  }

  void draw(RandomStream& rng, Eigen::Ref<Eigen::VectorXd> z) const {
    switch (spec_.law) {
      case CovariateLaw::kUniform:
        for (int k = 0; k < p_; ++k) z[k] = rng.uniform();
        return;
      case CovariateLaw::kNormal: {
        Eigen::VectorXd e(p_);
        for (int k = 0; k < p_; ++k) e[k] = rng.normal();
        if (diagonal_) {
          z = std::sqrt(spec_.variance) * e;
        } else {
          z = factor_.triangularView<Eigen::Lower>() * e;
        }
        break;
      }
      case CovariateLaw::kAr1: {
        const double sd = std::sqrt(spec_.variance);
        const double innovation = std::sqrt(1.0 - spec_.rho * spec_.rho);
        double previous = 0.0;
        for (int k = 0; k < p_; ++k) {
          const double e = rng.normal();
          previous = k == 0 ? e : spec_.rho * previous + innovation * e;
          z[k] = sd * previous;
        }
        break;
      }
    }
    if (spec_.truncation > 0.0) {
      z = z.cwiseMax(-spec_.truncation).cwiseMin(spec_.truncation);
    }
  }

 private:
  CovariateSpec spec_;
  int p_;
  Eigen::MatrixXd factor_;
  bool diagonal_ = true;
};

std::string describe(const Eigen::VectorXd& z) {
  std::ostringstream out;
  out << '(';
  const Eigen::Index shown = std::min<Eigen::Index>(z.size(), 8);
  for (Eigen::Index k = 0; k < shown; ++k) out << (k ? ", " : "") << format_number(z[k]);
  if (z.size() > shown) out << ", ...";
  out << ')';
  return out.str();
}

}  // namespace

std::string_view to_string(CovariateLaw law) {
  switch (law) {
    case CovariateLaw::kUniform: return "uniform";
    case CovariateLaw::kNormal: return "normal";
    case CovariateLaw::kAr1: return "ar1";
  }
  return "unknown";
}

void SimulationConfig::validate() const {
  if (n < 1 || p < 0 || d < 1 || m < 1) throw ConfigError("simulation needs n, d, m >= 1 and p >= 0");
  if (alpha.rows() != m || alpha.cols() != d) throw ConfigError("alpha must be m x d");
  if (beta.rows() != m || beta.cols() != p) throw ConfigError("beta must be m x p");
  if (censoring.size() != d) throw ConfigError("censoring needs one mass per period");
  if ((censoring.array() < 0.0).any() || censoring.sum() > 1.0 + 1e-12) {
    throw ConfigError("censoring masses must be >= 0 and sum to at most 1");
  }
  if (!beta.allFinite() || alpha.array().isNaN().any()) {
    throw ConfigError("true parameters must be finite or -inf");
  }
  if (covariates.law != CovariateLaw::kUniform && !(covariates.variance > 0.0)) {
    throw ConfigError("covariate variance must be positive");
  }
  if (covariates.law == CovariateLaw::kAr1 && !(std::abs(covariates.rho) < 1.0)) {
    throw ConfigError("AR(1) correlation must lie in (-1, 1)");
  }
  if (!(covariates.truncation >= 0.0) || !std::isfinite(covariates.truncation)) {
    throw ConfigError("truncation bound must be finite and >= 0");
  }
  for (const auto& u : covariates.updates) {
    if (u.a < 0 || u.b < 0 || u.a >= p || u.b >= p) throw ConfigError("covariance update out of range");
  }
  if (reps < 1) throw ConfigError("reps must be >= 1");
}

std::vector<int> SimulationConfig::signals(int j) const {
  std::vector<int> out;
  for (int k = 0; k < p; ++k) {
    if (beta(j - 1, k) != 0.0) out.push_back(k);
  }
  return out;
}

SimulationConfig preset(int setting) {
  SimulationConfig c;
  c.setting = setting;
  c.seed = static_cast<std::uint64_t>(setting);
  if (setting >= 1 && setting <= 2) {
    c.n = setting == 1 ? 250 : 500;
    c.p = 5;
    c.d = 7;
    c.m = 2;
    c.alpha = alpha_grid({-1.4, -1.3}, {0.4, 0.4}, c.d, true);
    c.beta.resize(2, 5);
    c.beta.row(0) = log_coefficients(-0.7, {0.8, 3, 3, 2.5, 2}, 5);
    c.beta.row(1) = log_coefficients(-0.6, {1, 3, 4, 3, 2}, 5);
    c.censoring = Eigen::VectorXd::Constant(c.d, 0.02);
    c.reps = 200;
  } else if (setting >= 3 && setting <= 6) {
    static constexpr int sizes[] = {5000, 20000, 10000, 15000};
    c.n = sizes[setting - 3];
    c.p = 5;
    c.d = 30;
    c.m = 2;
    c.alpha = alpha_grid({-2.0, -2.2}, {-0.2, -0.2}, c.d, true);
    c.beta.resize(2, 5);
    c.beta.row(0) = log_coefficients(-1.0, {0.8, 3, 3, 2.5, 2}, 5);
    c.beta.row(1) = log_coefficients(-1.0, {1, 3, 4, 3, 2}, 5);
    c.censoring = Eigen::VectorXd::Constant(c.d, 0.01);
    c.reps = 200;
  } else if (setting >= 7 && setting <= 10) {
    c.n = 5000 * (setting - 6);
    c.p = 5;
    c.d = 30;
    c.m = 3;
    c.alpha = alpha_grid({-2.2, -2.3, -2.4}, {-0.1, -0.1, -0.1}, c.d, true);
    c.beta.resize(3, 5);
    c.beta.row(0) = log_coefficients(-1.0, {2.5, 1.5, 0.8, 3, 2}, 5);
    c.beta.row(1) = log_coefficients(-1.0, {0.8, 3, 2.8, 2.2, 1.5}, 5);
    c.beta.row(2) = log_coefficients(-1.0, {1.8, 0.8, 2.5, 1.2, 3}, 5);
    c.censoring = Eigen::VectorXd::Constant(c.d, 0.01);
    c.reps = 200;
  } else if (setting >= 11 && setting <= 13) {
    c.n = 10000;
    c.p = 100;
    c.d = 15;
    c.m = 2;
    c.alpha = alpha_grid({-3.4, -3.4}, {-0.1, -0.2}, c.d, true);
    c.beta.resize(2, c.p);
    c.beta.row(0) = leading({1.2, 1.5, -1, -0.3, -1.2}, c.p);
    c.beta.row(1) = leading({-1.2, 1, 1, -1, 1.4}, c.p);
    c.covariates = {CovariateLaw::kNormal, 0.4, 0.0, 1.5, {}};
    if (setting == 12) c.covariates.updates = sparse_updates();
    c.censoring = Eigen::VectorXd::Constant(c.d, 0.01);
    c.reps = setting == 13 ? 100 : 1;
  } else if (setting >= 14 && setting <= 16) {
    c.n = 500;
    c.p = 35;
    c.d = 10;
    c.m = 2;
    c.alpha = alpha_grid({-4.4, -4.3}, {0.3, 0.3}, c.d, false);
    c.beta.resize(2, c.p);
    c.beta.row(0) = leading({1.2, 1.5, -1, -0.3, -1.2}, c.p);
    c.beta.row(1) = leading({-1.2, -1, 1.4, 1, 1}, c.p);
    c.covariates = {CovariateLaw::kNormal, 0.4, 0.0, 1.5, {}};
    if (setting == 15) c.covariates.updates = sparse_updates();
    c.censoring = Eigen::VectorXd::Constant(c.d, 0.01);
    c.reps = setting == 16 ? 100 : 1;
  } else if (setting >= 17 && setting <= 19) {
    static constexpr double rhos[] = {0.0, 0.5, 0.9};
    c.n = 1000;
    c.p = 15000;
    c.d = 8;
    c.m = 2;
    c.alpha = alpha_grid({-3.2, -3.3}, {0.3, 0.4}, c.d, true);
    c.beta.resize(2, c.p);
    c.beta.row(0) = leading({-0.7, -0.6, 0.8, 0.7, -0.8}, c.p);
    c.beta.row(1) = leading({0.7, 0.8, -0.8, -0.6, -0.7}, c.p);
    c.covariates = {CovariateLaw::kAr1, 1.0, rhos[setting - 17], 3.0, {}};
    c.censoring = Eigen::VectorXd::Zero(c.d);
    c.reps = 100;
  } else {
    throw InputError("unknown setting " + std::to_string(setting) + " (expected 1..19)");
  }
  return c;
}

SimulationConfig resize_covariates(const SimulationConfig& config, int p) {
  if (p < 1) throw InputError("p must be >= 1");
  SimulationConfig out = config;
  out.p = p;
  out.beta = Eigen::MatrixXd::Zero(config.m, p);
  const int kept = std::min(p, config.p);
  out.beta.leftCols(kept) = config.beta.leftCols(kept);
  std::erase_if(out.covariates.updates,
                [p](const CovarianceUpdate& u) { return u.a >= p || u.b >= p; });
  return out;
}

SimulationConfig timing_config(int d, int n) {
  SimulationConfig c;
  c.n = n;
  c.p = 10;
  c.d = d;
  c.m = 2;
  c.alpha = alpha_grid({-2.5, -2.8}, {-0.3, -0.3}, d, true);
  c.beta.resize(2, 10);
  c.beta.row(0) = log_coefficients(-0.5, {0.8, 3, 3, 2.5, 4, 1, 3, 2, 2, 3}, 10);
  c.beta.row(1) = log_coefficients(-0.5, {1, 3, 2, 1, 4, 3, 4, 3, 3, 2}, 10);
  c.censoring = Eigen::VectorXd::Zero(d);
  c.reps = 10;
  return c;
}

Dataset sample_dataset(const SimulationConfig& config) {
  return sample_dataset(config, config.seed, 1);
}

InadmissiblePolicy parse_inadmissible_policy(std::string_view text) {
  if (text == "error") return InadmissiblePolicy::kError;
  if (text == "rescale") return InadmissiblePolicy::kRescale;
  throw InputError("unknown inadmissibility policy '" + std::string(text) +
                   "' (expected error or rescale)");
}

Dataset sample_dataset(const SimulationConfig& config, std::uint64_t seed, int workers,
                       int* rescaled) {
  config.validate();
  const int n = config.n;
  const int d = config.d;
  const int m = config.m;
  const CovariateSampler sampler(config);
  const HazardParams params{config.alpha, config.beta};
  Eigen::VectorXd censoring_cdf(d);
  double running = 0.0;
  for (int t = 0; t < d; ++t) censoring_cdf[t] = running += config.censoring[t];

  Eigen::MatrixXd z(n, config.p);
  std::vector<int> times(static_cast<std::size_t>(n));
  std::vector<int> events(static_cast<std::size_t>(n));
  // Samples are processed in fixed blocks so the failing subject reported
  // does not depend on scheduling.
  constexpr int kBlock = 256;
  const int blocks = (n + kBlock - 1) / kBlock;
  std::vector<int> rescaled_in_block(static_cast<std::size_t>(blocks), 0);
  parallel_for(static_cast<std::size_t>(blocks), workers, [&](std::size_t block) {
    Eigen::VectorXd zi(config.p);
    const int first = static_cast<int>(block) * kBlock;
    const int last = std::min(n, first + kBlock);
    for (int i = first; i < last; ++i) {
      RandomStream rng(seed, static_cast<std::uint64_t>(i));
      sampler.draw(rng, zi);
      z.row(i) = zi.transpose();

      Diagnostics diagnostics;
      Curves curves = predict_curves(params, {zi.data(), static_cast<std::size_t>(zi.size())},
                                     &diagnostics);
      bool violated = false;
      for (int t = 1; t <= d; ++t) {
        const double sum = curves.hazard.col(t - 1).sum();
        if (sum < 1.0) continue;
        if (config.inadmissible == InadmissiblePolicy::kError) {
          throw ConfigError("inadmissible true hazards: sum over causes is " + format_number(sum) +
                            " at t=" + std::to_string(t) + " for Z=" + describe(zi));
        }
        curves.hazard.col(t - 1) /= sum;
        violated = true;
      }
      if (violated) {
        ++rescaled_in_block[block];
        for (int t = 1; t <= d; ++t) {
          curves.survival[t] =
              std::max(0.0, curves.survival[t - 1] * (1.0 - curves.hazard.col(t - 1).sum()));
        }
      }

      // Pr(T = t, J = j | Z) = lambda_j(t) S(t-1); remaining mass S(d).
      const double u = rng.uniform();
      int event = 0;
      int event_time = d + 1;
      double cumulative = 0.0;
      for (int j = 1; j <= m && event == 0; ++j) {
        for (int t = 1; t <= d; ++t) {
          cumulative += curves.hazard(j - 1, t - 1) * curves.survival[t - 1];
          if (u < cumulative) {
            event = j;
            event_time = t;
            break;
          }
        }
      }
      const double v = rng.uniform();
      int censor_time = d + 1;
      for (int t = 1; t <= d; ++t) {
        if (v < censoring_cdf[t - 1]) {
          censor_time = t;
          break;
        }
      }
      // Events recorded in the same period as censoring count as events.
      if (event > 0 && event_time <= censor_time) {
        times[i] = event_time;
        events[i] = event;
      } else {
        times[i] = std::min(censor_time, d);
        events[i] = 0;
      }
    }
  });
  if (rescaled != nullptr) {
    *rescaled = std::accumulate(rescaled_in_block.begin(), rescaled_in_block.end(), 0);
  }
  std::vector<std::string> ids(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ids[i] = std::to_string(i + 1);
  return Dataset(std::move(ids), std::move(times), std::move(events), std::move(z),
                 DatasetOptions{d, m});
}

CornerDiagnostic worst_corner(const SimulationConfig& config) {
  config.validate();
  double lower = 0.0;
  double upper = 1.0;
  if (config.covariates.law != CovariateLaw::kUniform) {
    if (!(config.covariates.truncation > 0.0)) {
      throw ConfigError("corner diagnostic needs bounded covariates");
    }
    lower = -config.covariates.truncation;
    upper = config.covariates.truncation;
  }
  const HazardParams params{config.alpha, config.beta};
  CornerDiagnostic worst;
  Eigen::VectorXd corner(config.p);
  for (int j = 1; j <= config.m; ++j) {
    for (int k = 0; k < config.p; ++k) corner[k] = config.beta(j - 1, k) > 0 ? upper : lower;
    const Curves curves = predict_curves(params, {corner.data(), static_cast<std::size_t>(config.p)});
    for (int t = 1; t <= config.d; ++t) {
      const double sum = curves.hazard.col(t - 1).sum();
      if (sum > worst.hazard_sum) worst = {t, j, sum};
    }
  }
  return worst;
}

namespace {

struct RepOutcome {
  std::vector<int> event_counts;  // censored, then per cause
  std::vector<FittedModel> models;
  std::vector<std::string> errors;  // per method, empty on success
};

ParameterSummary summarize(std::string name, int j, int k, int t, double truth,
                           const std::vector<double>& estimates, const std::vector<double>& ses) {
  ParameterSummary s;
  s.name = std::move(name);
  s.j = j;
  s.k = k;
  s.t = t;
  s.truth = truth;
  s.count = static_cast<int>(estimates.size());
  if (estimates.empty()) {
    s.mean = s.mean_se = s.empirical_se = s.coverage = kNaN;
    return s;
  }
  double sum = 0.0;
  for (const double e : estimates) sum += e;
  s.mean = sum / static_cast<double>(estimates.size());
  double ss = 0.0;
  for (const double e : estimates) ss += (e - s.mean) * (e - s.mean);
  s.empirical_se = estimates.size() > 1 ? std::sqrt(ss / static_cast<double>(estimates.size() - 1)) : kNaN;
  double se_sum = 0.0;
  int se_count = 0;
  int covered = 0;
  for (std::size_t r = 0; r < estimates.size(); ++r) {
    if (!std::isfinite(ses[r])) continue;
    se_sum += ses[r];
    ++se_count;
    if (std::abs(estimates[r] - truth) <= 1.959963984540054 * ses[r]) ++covered;
  }
  s.mean_se = se_count > 0 ? se_sum / se_count : kNaN;
  s.coverage = se_count > 0 ? static_cast<double>(covered) / se_count : kNaN;
  return s;
}

}  // namespace

ReplicationReport run_replications(const SimulationConfig& config, int reps,
                                   const ReplicationOptions& options) {
  config.validate();
  if (reps < 1) throw InputError("reps must be >= 1");
  if (options.methods.empty()) throw InputError("select at least one estimator");
  const int workers = resolve_workers(options.workers);
  const std::size_t methods = options.methods.size();

  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), workers, [&](std::size_t rep) {
    RepOutcome& outcome = outcomes[rep];
    const Dataset data = sample_dataset(config, derive_seed(config.seed, rep), 1);
    outcome.event_counts.assign(static_cast<std::size_t>(config.m) + 1, 0);
    for (int i = 0; i < data.n(); ++i) ++outcome.event_counts[data.event(i)];
    outcome.models.resize(methods);
    outcome.errors.resize(methods);
    SolverConfig solver = options.solver;
    solver.workers = 1;
    for (std::size_t k = 0; k < methods; ++k) {
      try {
        outcome.models[k] = options.methods[k] == Method::kTwoStep
                                ? fit_two_step(data, {options.ties, solver})
                                : fit_collapsed_model(data, solver);
      } catch (const EstimationError& e) {
        outcome.errors[k] = e.what();
      }
    }
  });

  ReplicationReport report;
  report.setting = config.setting;
  report.reps = reps;
  report.seed = config.seed;
  std::vector<double> totals(static_cast<std::size_t>(config.m) + 1, 0.0);
  for (const auto& outcome : outcomes) {
    for (std::size_t k = 0; k < totals.size(); ++k) totals[k] += outcome.event_counts[k];
  }
  const double subjects = static_cast<double>(config.n) * reps;
  for (const double total : totals) report.event_mix.push_back(100.0 * total / subjects);

  for (std::size_t k = 0; k < methods; ++k) {
    MethodSummary summary;
    summary.method = options.methods[k];
    std::vector<const FittedModel*> fits;
    for (int rep = 0; rep < reps; ++rep) {
      const auto& outcome = outcomes[rep];
      if (!outcome.errors[k].empty()) {
        ++summary.failures;
        summary.failure_messages.push_back("rep " + std::to_string(rep) + ": " + outcome.errors[k]);
        continue;
      }
      fits.push_back(&outcome.models[k]);
      const FittedModel& model = outcome.models[k];
      for (int j = 1; j <= config.m; ++j) {
        for (int c = 0; c < config.p; ++c) {
          const auto& coefficient = model.coefficients[j - 1];
          report.estimates.push_back({rep, summary.method,
                                      "beta_" + std::to_string(j) + "_" + std::to_string(c + 1),
                                      coefficient.beta[c],
                                      std::sqrt(coefficient.covariance(c, c))});
        }
        for (int t = 1; t <= config.d; ++t) {
          const double a = model.baseline.alpha(j - 1, t - 1);
          if (!std::isfinite(a)) continue;
          report.estimates.push_back({rep, summary.method,
                                      "alpha_" + std::to_string(j) + "_" + std::to_string(t), a,
                                      std::sqrt(model.baseline.variance(j - 1, t - 1))});
        }
      }
    }
    summary.valid = summary.failures * 10 <= reps;
    std::vector<double> estimates;
    std::vector<double> ses;
    for (int j = 1; j <= config.m; ++j) {
      for (int c = 0; c < config.p; ++c) {
        estimates.clear();
        ses.clear();
        for (const FittedModel* model : fits) {
          const auto& coefficient = model->coefficients[j - 1];
          estimates.push_back(coefficient.beta[c]);
          ses.push_back(std::sqrt(coefficient.covariance(c, c)));
        }
        summary.beta.push_back(summarize("beta_" + std::to_string(j) + "_" + std::to_string(c + 1),
                                         j, c, 0, config.beta(j - 1, c), estimates, ses));
      }
      for (int t = 1; t <= config.d; ++t) {
        estimates.clear();
        ses.clear();
        for (const FittedModel* model : fits) {
          const double a = model->baseline.alpha(j - 1, t - 1);
          if (!std::isfinite(a)) continue;
          estimates.push_back(a);
          ses.push_back(std::sqrt(model->baseline.variance(j - 1, t - 1)));
        }
        summary.alpha.push_back(summarize("alpha_" + std::to_string(j) + "_" + std::to_string(t),
                                          j, -1, t, config.alpha(j - 1, t - 1), estimates, ses));
      }
    }
    report.methods.push_back(std::move(summary));
  }
  return report;
}

std::vector<TimingRow> timing_study(const std::vector<int>& horizons, int reps,
                                    std::uint64_t seed, int n) {
  if (reps < 1) throw InputError("reps must be >= 1");
  std::vector<TimingRow> rows;
  const auto quantile = [](std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const double position = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(position));
    const auto hi = static_cast<std::size_t>(std::ceil(position));
    return values[lo] + (position - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  SolverConfig solver;
  solver.workers = 1;
  for (const int d : horizons) {
    const SimulationConfig config = timing_config(d, n);
    std::vector<double> two_step;
    std::vector<double> collapsed;
    for (int rep = 0; rep < reps; ++rep) {
      const Dataset data =
          sample_dataset(config, derive_seed(derive_seed(seed, static_cast<std::uint64_t>(d)), rep), 1);
      auto start = std::chrono::steady_clock::now();
      const auto a = fit_two_step(data, {TieMethod::kBreslow, solver});
      auto stop = std::chrono::steady_clock::now();
      two_step.push_back(std::chrono::duration<double>(stop - start).count());
      start = std::chrono::steady_clock::now();
      const auto b = fit_collapsed_model(data, solver);
      stop = std::chrono::steady_clock::now();
      collapsed.push_back(std::chrono::duration<double>(stop - start).count());
      (void)a;
      (void)b;
    }
    rows.push_back({d, Method::kTwoStep, quantile(two_step, 0.5),
                    quantile(two_step, 0.75) - quantile(two_step, 0.25), reps});
    rows.push_back({d, Method::kCollapsed, quantile(collapsed, 0.5),
                    quantile(collapsed, 0.75) - quantile(collapsed, 0.25), reps});
  }
  return rows;
}

}  // namespace dtscr
