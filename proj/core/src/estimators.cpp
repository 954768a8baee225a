#include "dtscr/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <Eigen/Eigenvalues>

#include "dtscr/error.hpp"
#include "dtscr/logistic.hpp"
#include "dtscr/parallel.hpp"

namespace dtscr {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_event_type(const Dataset& dataset, int j) {
  if (j < 1 || j > dataset.m()) {
    throw InputError("event type " + std::to_string(j) + " is outside 1.." +
                     std::to_string(dataset.m()));
  }
}

// Re-throws the active exception with a context prefix, keeping its type.
[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const NonConvergenceError& e) {
    throw NonConvergenceError(context + e.what(), e.last_iterate());
  } catch (const EstimationError& e) {
    throw EstimationError(e.kind(), context + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(context + e.what());
  } catch (const InputError& e) {
    throw InputError(context + e.what());
  }
}

struct EventBaseline {
  std::vector<AlphaFit> cells;  // one per t in [first, last]
};

EventBaseline event_baseline(const Dataset& dataset, const ExpandedData& expanded, int j,
                             const Eigen::VectorXd& beta, const Eigen::MatrixXd& covariance,
                             int first, int last) {
  const Eigen::MatrixXd& z = dataset.covariates();
  const Eigen::VectorXd eta = z * beta;
  const bool with_beta_terms =
      beta.size() > 0 && covariance.size() > 0 && covariance.allFinite();

  // Influence of each subject on beta_hat: g_i = Sigma * s_i.
  Eigen::MatrixXd influence;
  if (with_beta_terms) {
    const ConditionalLikelihood likelihood(expanded, z, j, TieMethod::kBreslow);
    influence = likelihood.score_residuals(beta) * covariance;
  }

  EventBaseline out;
  std::vector<double> eta_risk;
  for (int t = first; t <= last; ++t) {
    const auto members = expanded.stratum(t);
    eta_risk.resize(members.size());
    for (std::size_t r = 0; r < members.size(); ++r) eta_risk[r] = eta[members[r]];
    const int events = static_cast<int>(expanded.cases(j, t).size());
    AlphaFit fit = solve_alpha(eta_risk, events);
    if (fit.status == CellStatus::kDefined) {
      std::vector<char> is_case(members.size(), 0);
      {
        const auto cases = expanded.cases(j, t);
        std::size_t r = 0;
        for (const int c : cases) {  // both lists are ascending
          while (members[r] != c) ++r;
          is_case[r] = 1;
        }
      }
      double a = 0.0;
      double v1 = 0.0;
      Eigen::VectorXd dvec = Eigen::VectorXd::Zero(beta.size());
      Eigen::VectorXd xi_influence = Eigen::VectorXd::Zero(beta.size());
      for (std::size_t r = 0; r < members.size(); ++r) {
        const double lambda = expit(fit.alpha + eta_risk[r]);
        const double curvature = lambda * (1.0 - lambda);
        const double xi = lambda - is_case[r];
        a += curvature;
        v1 += xi * xi;
        if (with_beta_terms) {
          dvec.noalias() += curvature * z.row(members[r]).transpose();
          xi_influence.noalias() += xi * influence.row(members[r]).transpose();
        }
      }
      double total = v1;
      if (with_beta_terms) {
        total += dvec.dot(covariance * dvec) + 2.0 * dvec.dot(xi_influence);
      }
      fit.variance = std::max(0.0, total) / (a * a);
    }
    out.cells.push_back(fit);
  }
  return out;
}

}  // namespace

std::string_view to_string(CellStatus status) {
  switch (status) {
    case CellStatus::kDefined: return "defined";
    case CellStatus::kNoEvents: return "no_events";
    case CellStatus::kAllEvents: return "all_events";
    case CellStatus::kEmpty: return "empty";
  }
  return "unknown";
}

std::string_view to_string(Method method) {
  return method == Method::kTwoStep ? "two_step" : "collapsed";
}

Method parse_method(std::string_view text) {
  if (text == "two_step" || text == "two-step") return Method::kTwoStep;
  if (text == "collapsed") return Method::kCollapsed;
  throw InputError("unknown method '" + std::string(text) + "' (expected two-step or collapsed)");
}

Eigen::MatrixXd FittedModel::beta_matrix() const {
  Eigen::MatrixXd out(m, p);
  for (int j = 0; j < m; ++j) out.row(j) = coefficients[j].beta.transpose();
  return out;
}

namespace {

// Under separation the likelihood keeps rising towards a supremum at infinity
// and Newton stops once the gradient underflows the tolerance. The information
// then collapses along the escape direction, which a genuine optimum never
// shows relative to the information at zero.
bool separated(const ConditionalLikelihood& likelihood, const Eigen::MatrixXd& hessian) {
  const Eigen::MatrixXd at_zero =
      -likelihood.evaluate(Eigen::VectorXd::Zero(likelihood.p()), Derivatives::kHessian).hessian;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> start(at_zero, Eigen::EigenvaluesOnly);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> end(-hessian, Eigen::EigenvaluesOnly);
  const double reference = start.eigenvalues().minCoeff();
  return reference > 0.0 && end.eigenvalues().minCoeff() < 1e-6 * reference;
}

}  // namespace

CoefficientEstimate maximize_conditional(const ConditionalLikelihood& likelihood,
                                         const std::vector<std::string>& names,
                                         const SolverConfig& solver) {
  CoefficientEstimate estimate;
  estimate.j = likelihood.j();
  const int p = likelihood.p();
  if (likelihood.strata().total_events() == 0) {
    throw EstimationError(EstimationError::Kind::kNoEvents,
                          "no events of type " + std::to_string(likelihood.j()));
  }
  if (!likelihood.informative()) {
    estimate.beta = Eigen::VectorXd::Zero(p);
    estimate.covariance = Eigen::MatrixXd::Constant(p, p, kNaN);
    estimate.converged = true;
    estimate.identified = false;
    return estimate;
  }
  if (const int column = likelihood.first_unidentified_column(); column >= 0) {
    const std::string name =
        column < static_cast<int>(names.size()) ? names[column] : "z" + std::to_string(column + 1);
    throw EstimationError(EstimationError::Kind::kNotIdentifiable,
                          "covariate '" + name +
                              "' is constant within every period with type-" +
                              std::to_string(likelihood.j()) +
                              " events and cancels from the conditional likelihood");
  }
  const auto result = newton_maximize(
      [&likelihood](const Eigen::VectorXd& beta, Derivatives level) {
        return likelihood.evaluate(beta, level);
      },
      Eigen::VectorXd::Zero(p), solver);
  if (result.converged && separated(likelihood, result.at.hessian)) {
    throw EstimationError(EstimationError::Kind::kDivergence,
                          "type-" + std::to_string(likelihood.j()) +
                              " information vanished at the estimate (separation: some "
                              "combination of covariates orders cases ahead of controls)");
  }
  estimate.beta = result.x;
  estimate.covariance = inverse_or_nan(-result.at.hessian);
  estimate.converged = result.converged;
  estimate.iterations = result.iterations;
  estimate.final_gradient_norm = result.gradient_norm;
  return estimate;
}

CoefficientEstimate fit_beta_conditional(const Dataset& dataset, const ExpandedData& expanded,
                                         int j, TieMethod ties, const SolverConfig& solver) {
  check_event_type(dataset, j);
  const ConditionalLikelihood likelihood(expanded, dataset.covariates(), j, ties,
                                         solver.exact_limit);
  return maximize_conditional(likelihood, dataset.covariate_names(), solver);
}

CoefficientEstimate fit_beta_conditional(const Dataset& dataset, int j, TieMethod ties,
                                         const SolverConfig& solver) {
  require_valid(dataset);
  const ExpandedData expanded(dataset);
  return fit_beta_conditional(dataset, expanded, j, ties, solver);
}

AlphaFit solve_alpha(std::span<const double> eta, int events) {
  AlphaFit fit;
  const int at_risk = static_cast<int>(eta.size());
  if (at_risk == 0) {
    fit.status = CellStatus::kEmpty;
    fit.alpha = fit.variance = kNaN;
    return fit;
  }
  if (events == 0 || events == at_risk) {
    fit.status = events == 0 ? CellStatus::kNoEvents : CellStatus::kAllEvents;
    fit.alpha = events == 0 ? -kInf : kInf;
    fit.variance = kNaN;
    return fit;
  }

  const double target = events;
  const double base = logit(target / at_risk);
  const auto [lo_it, hi_it] = std::minmax_element(eta.begin(), eta.end());
  // Every term is below (above) the observed proportion at lo (hi).
  double lo = base - *hi_it;
  double hi = base - *lo_it;
  double mean = 0.0;
  for (const double e : eta) mean += e;
  mean /= at_risk;

  double a = base - mean;
  double residual = 0.0;
  for (int iteration = 0; iteration < 200; ++iteration) {
    double expected = 0.0;
    double slope = 0.0;
    for (const double e : eta) {
      const double lambda = expit(a + e);
      expected += lambda;
      slope += lambda * (1.0 - lambda);
    }
    residual = (target - expected) / at_risk;
    if (residual == 0.0) break;
    if (residual > 0.0) {
      lo = a;
    } else {
      hi = a;
    }
    if (std::abs(residual) < 1e-14 || hi - lo <= 4e-16 * std::max(1.0, std::abs(a))) break;
    double next = a + (target - expected) / slope;
    if (!(slope > 0.0) || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
    a = next;
  }
  fit.alpha = a;
  fit.residual = residual;
  return fit;
}

AlphaFit fit_alpha(const Dataset& dataset, int j, int t, const Eigen::VectorXd& beta_hat,
                   const Eigen::MatrixXd& beta_covariance) {
  require_valid(dataset);
  check_event_type(dataset, j);
  if (t < 1 || t > dataset.d()) throw InputError("t is outside 1..d");
  if (beta_hat.size() != dataset.p() || !beta_hat.allFinite()) {
    throw InputError("beta must be finite with length p");
  }
  const ExpandedData expanded(dataset);
  return event_baseline(dataset, expanded, j, beta_hat, beta_covariance, t, t).cells.front();
}

double moment_residual(const Dataset& dataset, int j, int t, double alpha,
                       const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = dataset.covariates() * beta;
  double expected = 0.0;
  int at_risk = 0;
  int events = 0;
  for (int i = 0; i < dataset.n(); ++i) {
    if (dataset.time(i) < t) continue;
    ++at_risk;
    if (dataset.time(i) == t && dataset.event(i) == j) ++events;
    expected += expit(alpha + eta[i]);
  }
  if (at_risk == 0) return 0.0;
  return (events - expected) / at_risk;
}

BaselineEstimate fit_baselines(const Dataset& dataset, const ExpandedData& expanded,
                               const std::vector<CoefficientEstimate>& coefficients,
                               TieMethod, bool with_variance, int workers) {
  const int m = dataset.m();
  const int d = dataset.d();
  BaselineEstimate baseline;
  baseline.alpha = Eigen::MatrixXd::Constant(m, d, kNaN);
  baseline.variance = Eigen::MatrixXd::Constant(m, d, kNaN);
  std::vector<EventBaseline> per_event(static_cast<std::size_t>(m));
  parallel_for(static_cast<std::size_t>(m), workers, [&](std::size_t index) {
    const auto& coefficient = coefficients[index];
    const Eigen::MatrixXd covariance = with_variance ? coefficient.covariance : Eigen::MatrixXd();
    try {
      per_event[index] = event_baseline(dataset, expanded, static_cast<int>(index) + 1,
                                        coefficient.beta, covariance, 1, d);
    } catch (...) {
      rethrow_with_context("event type " + std::to_string(index + 1) + ": ");
    }
  });
  for (int j = 1; j <= m; ++j) {
    for (int t = 1; t <= d; ++t) {
      const AlphaFit& cell = per_event[j - 1].cells[t - 1];
      baseline.alpha(j - 1, t - 1) = cell.alpha;
      baseline.variance(j - 1, t - 1) = cell.variance;
      if (cell.status != CellStatus::kDefined) baseline.undefined_cells.push_back({j, t, cell.status});
    }
  }
  return baseline;
}

FittedModel fit_two_step(const Dataset& dataset, const TwoStepConfig& config) {
  require_valid(dataset);
  const ExpandedData expanded(dataset);
  const int workers = resolve_workers(config.solver.workers);

  FittedModel model;
  model.method = Method::kTwoStep;
  model.ties = config.ties;
  model.n = dataset.n();
  model.p = dataset.p();
  model.d = dataset.d();
  model.m = dataset.m();
  model.covariate_names = dataset.covariate_names();
  model.coefficients.resize(static_cast<std::size_t>(model.m));
  parallel_for(static_cast<std::size_t>(model.m), workers, [&](std::size_t index) {
    const int j = static_cast<int>(index) + 1;
    try {
      model.coefficients[index] =
          fit_beta_conditional(dataset, expanded, j, config.ties, config.solver);
    } catch (...) {
      rethrow_with_context("event type " + std::to_string(j) + ": ");
    }
  });
  model.baseline = fit_baselines(dataset, expanded, model.coefficients, config.ties, true, workers);
  return model;
}

CollapsedFit fit_collapsed(const Dataset& dataset, int j, const SolverConfig& solver) {
  require_valid(dataset);
  check_event_type(dataset, j);
  const ExpandedData expanded(dataset);
  const int d = dataset.d();
  const int p = dataset.p();

  CollapsedFit fit;
  fit.j = j;
  fit.alpha = Eigen::VectorXd::Constant(d, kNaN);

  {
    const ConditionalLikelihood likelihood(expanded, dataset.covariates(), j);
    if (likelihood.strata().total_events() == 0) {
      throw EstimationError(EstimationError::Kind::kNoEvents,
                            "no events of type " + std::to_string(j));
    }
    if (likelihood.informative()) {
      if (const int column = likelihood.first_unidentified_column(); column >= 0) {
        throw EstimationError(EstimationError::Kind::kNotIdentifiable,
                              "covariate '" + dataset.covariate_names()[column] +
                                  "' is constant within every period with type-" +
                                  std::to_string(j) + " events");
      }
    }
  }

  // Cells with no events or only events have infinite MLEs; their rows are
  // dropped and the intercept reported as the matching sentinel.
  std::vector<int> column_of(static_cast<std::size_t>(d) + 1, -1);
  int defined = 0;
  long long rows = 0;
  for (int t = 1; t <= d; ++t) {
    const auto at_risk = static_cast<int>(expanded.stratum(t).size());
    const auto events = static_cast<int>(expanded.cases(j, t).size());
    if (at_risk == 0) {
      fit.undefined_cells.push_back({j, t, CellStatus::kEmpty});
    } else if (events == 0) {
      fit.alpha[t - 1] = -kInf;
      fit.undefined_cells.push_back({j, t, CellStatus::kNoEvents});
    } else if (events == at_risk) {
      fit.alpha[t - 1] = kInf;
      fit.undefined_cells.push_back({j, t, CellStatus::kAllEvents});
    } else {
      column_of[t] = defined++;
      rows += at_risk;
    }
  }

  const int k = defined + p;
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(rows, k);
  Eigen::VectorXd response = Eigen::VectorXd::Zero(rows);
  {
    Eigen::Index row = 0;
    for (const auto& record : expand(dataset)) {
      const int column = column_of[record.t];
      if (column < 0) continue;
      design(row, column) = 1.0;
      design.row(row).tail(p) = dataset.covariates().row(record.subject);
      response[row] = record.delta(j) ? 1.0 : 0.0;
      ++row;
    }
  }

  const SmoothObjective objective = [&](const Eigen::VectorXd& theta, Derivatives level) {
    const Eigen::VectorXd eta = design * theta;
    LogLikResult out;
    Eigen::VectorXd mu(eta.size());
    Eigen::VectorXd weight(eta.size());
    for (Eigen::Index r = 0; r < eta.size(); ++r) {
      out.value += response[r] * eta[r] - log1pexp(eta[r]);
      mu[r] = expit(eta[r]);
      weight[r] = mu[r] * (1.0 - mu[r]);
    }
    if (level == Derivatives::kValue) return out;
    out.gradient = design.transpose() * (response - mu);
    if (level == Derivatives::kHessian) {
      const Eigen::MatrixXd weighted = weight.cwiseSqrt().asDiagonal() * design;
      out.hessian = Eigen::MatrixXd::Zero(k, k);
      out.hessian.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose(), -1.0);
      out.hessian.triangularView<Eigen::StrictlyUpper>() = out.hessian.transpose();
    }
    return out;
  };
  const auto result = newton_maximize(objective, Eigen::VectorXd::Zero(k), solver);
  const Eigen::MatrixXd inverse = inverse_or_nan(-result.at.hessian);

  // Parameter order in the report: alpha_1..alpha_d, then beta.
  std::vector<int> position(static_cast<std::size_t>(k));
  for (int t = 1; t <= d; ++t) {
    if (column_of[t] >= 0) {
      fit.alpha[t - 1] = result.x[column_of[t]];
      position[column_of[t]] = t - 1;
    }
  }
  for (int c = 0; c < p; ++c) position[defined + c] = d + c;
  fit.beta = result.x.tail(p);
  fit.covariance = Eigen::MatrixXd::Constant(d + p, d + p, kNaN);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) fit.covariance(position[a], position[b]) = inverse(a, b);
  }
  fit.converged = result.converged;
  fit.iterations = result.iterations;
  fit.final_gradient_norm = result.gradient_norm;
  return fit;
}

FittedModel fit_collapsed_model(const Dataset& dataset, const SolverConfig& solver) {
  require_valid(dataset);
  FittedModel model;
  model.method = Method::kCollapsed;
  model.n = dataset.n();
  model.p = dataset.p();
  model.d = dataset.d();
  model.m = dataset.m();
  model.covariate_names = dataset.covariate_names();
  model.coefficients.resize(static_cast<std::size_t>(model.m));
  model.baseline.alpha = Eigen::MatrixXd::Constant(model.m, model.d, kNaN);
  model.baseline.variance = Eigen::MatrixXd::Constant(model.m, model.d, kNaN);
  std::vector<CollapsedFit> fits(static_cast<std::size_t>(model.m));
  parallel_for(static_cast<std::size_t>(model.m), resolve_workers(solver.workers),
               [&](std::size_t index) {
                 const int j = static_cast<int>(index) + 1;
                 try {
                   fits[index] = fit_collapsed(dataset, j, solver);
                 } catch (...) {
                   rethrow_with_context("event type " + std::to_string(j) + ": ");
                 }
               });
  const int d = model.d;
  const int p = model.p;
  for (int j = 1; j <= model.m; ++j) {
    const auto& fit = fits[j - 1];
    auto& coefficient = model.coefficients[j - 1];
    coefficient.j = j;
    coefficient.beta = fit.beta;
    coefficient.covariance = fit.covariance.bottomRightCorner(p, p);
    coefficient.converged = fit.converged;
    coefficient.iterations = fit.iterations;
    coefficient.final_gradient_norm = fit.final_gradient_norm;
    for (int t = 1; t <= d; ++t) {
      model.baseline.alpha(j - 1, t - 1) = fit.alpha[t - 1];
      model.baseline.variance(j - 1, t - 1) = fit.covariance(t - 1, t - 1);
    }
    model.baseline.undefined_cells.insert(model.baseline.undefined_cells.end(),
                                          fit.undefined_cells.begin(), fit.undefined_cells.end());
  }
  return model;
}

}  // namespace dtscr
