#include "dtscr/regularize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "dtscr/error.hpp"
#include "dtscr/io.hpp"
#include "dtscr/logistic.hpp"
#include "dtscr/metrics.hpp"
#include "dtscr/parallel.hpp"
#include "dtscr/rng.hpp"

namespace dtscr {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double soft_threshold(double value, double threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

double penalty_value(const Eigen::VectorXd& b, const PenaltySpec& penalty) {
  const double l1 = penalty.l1_share();
  return penalty.eta * (l1 * b.lpNorm<1>() + 0.5 * (1.0 - l1) * b.squaredNorm());
}

double parse_number(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw InputError("grid: '" + std::string(text) + "' is not a number");
  }
  return value;
}

}  // namespace

std::string_view to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::kLasso: return "lasso";
    case PenaltyKind::kRidge: return "ridge";
    case PenaltyKind::kElasticNet: return "elastic_net";
  }
  return "unknown";
}

PenaltyKind parse_penalty(std::string_view text) {
  if (text == "lasso") return PenaltyKind::kLasso;
  if (text == "ridge") return PenaltyKind::kRidge;
  if (text == "elastic-net" || text == "elastic_net") return PenaltyKind::kElasticNet;
  throw InputError("unknown penalty '" + std::string(text) +
                   "' (expected lasso, ridge or elastic-net)");
}

double PenaltySpec::l1_share() const {
  switch (kind) {
    case PenaltyKind::kLasso: return 1.0;
    case PenaltyKind::kRidge: return 0.0;
    case PenaltyKind::kElasticNet: return mixing;
  }
  return 1.0;
}

void PenaltySpec::validate() const {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw InputError("eta must be finite and >= 0");
  if (kind == PenaltyKind::kElasticNet && !(mixing >= 0.0 && mixing <= 1.0)) {
    throw InputError("elastic-net mixing must lie in [0, 1]");
  }
}

PenalizedProblem::PenalizedProblem(const Dataset& dataset, int j, TieMethod ties,
                                   const SolverConfig& solver, ProximalConfig proximal)
    : j_(j), solver_(solver), proximal_(proximal) {
  require_valid(dataset);
  if (j < 1 || j > dataset.m()) throw InputError("event type out of range");
  const Eigen::MatrixXd& z = dataset.covariates();
  const Eigen::Index n = z.rows();
  const Eigen::Index p = z.cols();

  const ExpandedData expanded(dataset);
  records_ = std::max<double>(1.0, static_cast<double>(expanded.record_count()));
  {
    const ConditionalLikelihood check(expanded, z, j, TieMethod::kBreslow);
    if (check.strata().total_events() == 0) {
      throw EstimationError(EstimationError::Kind::kNoEvents,
                            "no events of type " + std::to_string(j));
    }
    if (check.informative()) {
      if (const int column = check.first_unidentified_column(); column >= 0) {
        throw EstimationError(EstimationError::Kind::kNotIdentifiable,
                              "covariate '" + dataset.covariate_names()[column] +
                                  "' is constant within every period with type-" +
                                  std::to_string(j) + " events");
      }
    }
  }

  scale_.resize(p);
  Eigen::MatrixXd standardized(n, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const double mean = z.col(k).mean();
    const double sd = std::sqrt((z.col(k).array() - mean).square().mean());
    scale_[k] = sd > 0.0 ? sd : 1.0;
    standardized.col(k) = (z.col(k).array() - mean) / scale_[k];
  }
  if (ties == TieMethod::kBreslow) {
    nested_ = std::make_unique<NestedRiskSetLikelihood>(dataset, standardized, j);
  } else {
    records_route_ = std::make_unique<ConditionalLikelihood>(expanded, standardized, j, ties,
                                                             solver.exact_limit);
  }
}

LogLikResult PenalizedProblem::smooth(const Eigen::VectorXd& b, Derivatives level) const {
  LogLikResult r = nested_ ? nested_->evaluate(b, level) : records_route_->evaluate(b, level);
  r.value = -r.value / records_;
  if (r.gradient.size() > 0) r.gradient = -r.gradient / records_;
  if (r.hessian.size() > 0) r.hessian = -r.hessian / records_;
  return r;
}

double PenalizedProblem::kkt_residual(const Eigen::VectorXd& b, const PenaltySpec& penalty) const {
  if (b.size() == 0) return 0.0;
  const Eigen::VectorXd g = smooth(b, Derivatives::kGradient).gradient;
  const double l1 = penalty.l1_share();
  double worst = 0.0;
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    double violation = 0.0;
    if (b[k] != 0.0) {
      const double sign = b[k] > 0.0 ? 1.0 : -1.0;
      violation = std::abs(g[k] + penalty.eta * (l1 * sign + (1.0 - l1) * b[k]));
    } else {
      violation = std::max(0.0, std::abs(g[k]) - penalty.eta * l1);
    }
    worst = std::max(worst, violation);
  }
  return worst;
}

Eigen::VectorXd PenalizedProblem::to_original(const Eigen::VectorXd& b) const {
  return b.cwiseQuotient(scale_);
}

Eigen::VectorXd PenalizedProblem::to_standardized(const Eigen::VectorXd& beta) const {
  return beta.cwiseProduct(scale_);
}

PenalizedResult PenalizedProblem::finish(const Eigen::VectorXd& b, const PenaltySpec& penalty,
                                         bool converged, int iterations) const {
  PenalizedResult out;
  out.beta_standardized = b;
  out.objective = smooth(b, Derivatives::kValue).value + penalty_value(b, penalty);
  out.kkt_residual = kkt_residual(b, penalty);
  out.nonzero = static_cast<int>((b.array() != 0.0).count());
  out.estimate.j = j_;
  out.estimate.beta = to_original(b);
  out.estimate.covariance = Eigen::MatrixXd::Constant(p(), p(), kNaN);
  out.estimate.converged = converged;
  out.estimate.iterations = iterations;
  out.estimate.final_gradient_norm = out.kkt_residual;
  return out;
}

PenalizedResult PenalizedProblem::fit(const PenaltySpec& penalty,
                                      const Eigen::VectorXd* warm_start) const {
  penalty.validate();
  const bool informative = nested_ ? nested_->informative() : records_route_->informative();
  if (!informative || p() == 0) {
    PenalizedResult out = finish(Eigen::VectorXd::Zero(p()), penalty, true, 0);
    out.estimate.identified = informative;
    return out;
  }
  Eigen::VectorXd start = warm_start != nullptr && warm_start->size() == p()
                              ? *warm_start
                              : Eigen::VectorXd::Zero(p());
  if (penalty.eta == 0.0 || penalty.l1_share() == 0.0) return fit_smooth(penalty, std::move(start));
  return fit_proximal(penalty, std::move(start));
}

PenalizedResult PenalizedProblem::fit_smooth(const PenaltySpec& penalty,
                                             Eigen::VectorXd start) const {
  const double ridge = penalty.eta * (1.0 - penalty.l1_share());
  const auto objective = [&](const Eigen::VectorXd& b, Derivatives level) {
    LogLikResult r = smooth(b, level);
    r.value = -(r.value + 0.5 * ridge * b.squaredNorm());
    if (r.gradient.size() > 0) r.gradient = -(r.gradient + ridge * b);
    if (r.hessian.size() > 0) {
      r.hessian = -r.hessian;
      r.hessian.diagonal().array() -= ridge;
    }
    return r;
  };
  SolverConfig config = solver_;
  config.tol = solver_.tol / records_;  // same absolute tolerance as the unscaled fit
  const auto result = newton_maximize(objective, std::move(start), config);
  return finish(result.x, penalty, result.converged, result.iterations);
}

PenalizedResult PenalizedProblem::fit_proximal(const PenaltySpec& penalty,
                                               Eigen::VectorXd start) const {
  const double l1 = penalty.l1_share();
  const auto prox = [&](const Eigen::VectorXd& v, double step) {
    Eigen::VectorXd out(v.size());
    const double shrink = 1.0 + step * penalty.eta * (1.0 - l1);
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      out[k] = soft_threshold(v[k], step * penalty.eta * l1) / shrink;
    }
    return out;
  };

  // Monotone FISTA with backtracking on the Lipschitz estimate.
  Eigen::VectorXd x = std::move(start);
  double fx = smooth(x, Derivatives::kValue).value + penalty_value(x, penalty);
  Eigen::VectorXd y = x;
  double momentum = 1.0;
  double lipschitz = 1.0;
  for (int iteration = 1; iteration <= proximal_.max_iter; ++iteration) {
    const LogLikResult at_y = smooth(y, Derivatives::kGradient);
    Eigen::VectorXd z;
    double fz_smooth = 0.0;
    for (int backtrack = 0; backtrack < 60; ++backtrack) {
      z = prox(y - at_y.gradient / lipschitz, 1.0 / lipschitz);
      fz_smooth = smooth(z, Derivatives::kValue).value;
      const Eigen::VectorXd diff = z - y;
      const double bound = at_y.value + at_y.gradient.dot(diff) + 0.5 * lipschitz * diff.squaredNorm();
      if (fz_smooth <= bound + 1e-14 * std::abs(at_y.value)) break;
      lipschitz *= 2.0;
    }
    const double mapping = lipschitz * (y - z).cwiseAbs().maxCoeff();
    const double fz = fz_smooth + penalty_value(z, penalty);
    const Eigen::VectorXd x_previous = x;
    if (fz <= fx) {
      x = z;
      fx = fz;
    }
    if (mapping < proximal_.tol) return finish(x, penalty, true, iteration);
    const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    y = x + (momentum / next) * (z - x) + ((momentum - 1.0) / next) * (x - x_previous);
    momentum = next;
    lipschitz *= 0.9;
  }
  throw NonConvergenceError("proximal gradient did not converge in " +
                                std::to_string(proximal_.max_iter) + " iterations",
                            to_original(x));
}

CoefficientEstimate penalized_fit(const Dataset& dataset, int j, const PenaltySpec& penalty,
                                  TieMethod ties, const SolverConfig& solver) {
  return PenalizedProblem(dataset, j, ties, solver).fit(penalty).estimate;
}

std::vector<double> parse_grid(std::string_view text) {
  std::vector<double> values;
  if (text.find(':') != std::string_view::npos) {
    std::vector<double> parts;
    std::size_t begin = 0;
    while (true) {
      const std::size_t end = text.find(':', begin);
      parts.push_back(parse_number(text.substr(begin, end - begin)));
      if (end == std::string_view::npos) break;
      begin = end + 1;
    }
    if (parts.size() != 3) throw InputError("grid range must be start:stop:step");
    const double start = parts[0];
    const double stop = parts[1];
    const double step = parts[2];
    if (!(step > 0.0) || stop < start) {
      throw InputError("grid range needs step > 0 and stop >= start");
    }
    const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (count > 100000) throw InputError("grid is too large");
    for (long long k = 0; k < count; ++k) values.push_back(start + static_cast<double>(k) * step);
  } else {
    std::size_t begin = 0;
    while (true) {
      const std::size_t end = text.find(',', begin);
      values.push_back(parse_number(text.substr(begin, end - begin)));
      if (end == std::string_view::npos) break;
      begin = end + 1;
    }
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

std::vector<int> assign_folds(int n, int folds, std::uint64_t seed) {
  if (folds < 2) throw InputError("at least 2 folds are required");
  if (folds > n) throw InputError("more folds than subjects");
  RandomStream rng(seed, 0x666f6c64);  // "fold"
  const auto order = random_permutation(n, rng);
  std::vector<int> assignment(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) assignment[order[r]] = r % folds;
  return assignment;
}

std::vector<PathPoint> regularization_path(const PenalizedProblem& problem,
                                           const std::vector<double>& log_eta, PenaltyKind kind,
                                           double mixing) {
  if (log_eta.empty()) throw InputError("empty tuning grid");
  std::vector<double> order = log_eta;
  std::sort(order.begin(), order.end(), std::greater<>());
  std::vector<PathPoint> path;
  path.reserve(order.size());
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(problem.p());
  for (const double value : order) {
    PathPoint point;
    point.log_eta = value;
    point.eta = std::exp(value);
    try {
      point.result = problem.fit({kind, point.eta, mixing}, &warm);
      point.ok = true;
      warm = point.result.beta_standardized;
    } catch (const Error& e) {
      point.error = e.what();
    }
    path.push_back(std::move(point));
  }
  return path;
}

std::vector<PathPoint> regularization_path(const Dataset& dataset, int j,
                                           const std::vector<double>& log_eta, PenaltyKind kind,
                                           double mixing, TieMethod ties,
                                           const SolverConfig& solver) {
  const PenalizedProblem problem(dataset, j, ties, solver);
  return regularization_path(problem, log_eta, kind, mixing);
}

namespace {

struct FoldData {
  Dataset train;
  Dataset test;
  std::unique_ptr<ExpandedData> test_expanded;
};

// Integrated cause-specific AUC of one event type on a held-out fold, plus
// the event mass of its defined cells.
struct FoldScore {
  double auc = kNaN;
  double mass = 0.0;
};

FoldScore score_fold(const Dataset& test, const ExpandedData& expanded, int j,
                     const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = test.covariates() * beta;
  std::vector<double> values;
  std::vector<double> weights;
  std::vector<double> cases;
  std::vector<double> controls;
  for (int t = 1; t <= test.d(); ++t) {
    const auto members = expanded.stratum(t);
    const auto failed = expanded.cases(j, t);
    cases.clear();
    controls.clear();
    std::size_t next = 0;
    for (const int i : members) {
      const double lambda = expit(alpha[t - 1] + eta[i]);
      if (next < failed.size() && failed[next] == i) {
        ++next;
        cases.push_back(lambda);
      } else {
        controls.push_back(lambda);
      }
    }
    const double auc = concordance(cases, controls);
    if (std::isfinite(auc)) {
      values.push_back(auc);
      weights.push_back(static_cast<double>(failed.size()));
    }
  }
  FoldScore score;
  for (const double w : weights) score.mass += w;
  if (score.mass > 0.0) score.auc = integrate(values, weights);
  return score;
}

}  // namespace

CvResult cv_select_eta(const Dataset& dataset, const TuningGrid& grid, const CvConfig& config,
                       const std::vector<int>& events) {
  require_valid(dataset);
  if (grid.log_eta.empty()) throw InputError("empty tuning grid");
  const int m = dataset.m();
  const int folds = grid.folds;
  const int workers = resolve_workers(config.workers);
  const auto assignment = assign_folds(dataset.n(), folds, grid.seed);

  std::vector<double> order = grid.log_eta;
  std::sort(order.begin(), order.end(), std::greater<>());
  order.erase(std::unique(order.begin(), order.end()), order.end());
  const std::size_t points = order.size();

  std::vector<FoldData> data(static_cast<std::size_t>(folds));
  for (int k = 0; k < folds; ++k) {
    std::vector<int> train_rows;
    std::vector<int> test_rows;
    for (int i = 0; i < dataset.n(); ++i) (assignment[i] == k ? test_rows : train_rows).push_back(i);
    data[k].train = dataset.subset(train_rows);
    data[k].test = dataset.subset(test_rows);
    data[k].test_expanded = std::make_unique<ExpandedData>(data[k].test);
  }
  std::unique_ptr<ExpandedData> full_expanded;
  if (!grid.fold_local_alpha) full_expanded = std::make_unique<ExpandedData>(dataset);

  // Job (k, j): the whole path on fold k's training part for event type j.
  struct JobResult {
    bool skipped = false;
    std::string warning;
    std::vector<FoldScore> scores;
    std::vector<std::string> failures;
  };
  std::vector<char> tuned(static_cast<std::size_t>(m), events.empty() ? 1 : 0);
  for (const int j : events) {
    if (j < 1 || j > m) throw InputError("event type out of range");
    tuned[j - 1] = 1;
  }
  std::vector<JobResult> jobs(static_cast<std::size_t>(folds) * m);
  parallel_for(jobs.size(), workers, [&](std::size_t index) {
    const int k = static_cast<int>(index) / m;
    const int j = static_cast<int>(index) % m + 1;
    JobResult& job = jobs[index];
    if (!tuned[j - 1]) {
      job.skipped = true;
      return;
    }
    const FoldData& fold = data[k];
    const std::string where = "fold " + std::to_string(k + 1) + ", event type " + std::to_string(j);
    int held_out_events = 0;
    for (int t = 1; t <= fold.test.d(); ++t) {
      held_out_events += static_cast<int>(fold.test_expanded->cases(j, t).size());
    }
    if (held_out_events == 0) {
      job.skipped = true;
      job.warning = where + ": no type-" + std::to_string(j) + " events in the held-out part";
      return;
    }
    std::unique_ptr<PenalizedProblem> problem;
    try {
      problem = std::make_unique<PenalizedProblem>(fold.train, j, config.ties, config.solver);
    } catch (const Error& e) {
      job.skipped = true;
      job.warning = where + ": skipped (" + e.what() + ")";
      return;
    }
    const ExpandedData train_expanded(fold.train);
    const Dataset& alpha_data = grid.fold_local_alpha ? fold.train : dataset;
    const ExpandedData& alpha_expanded = grid.fold_local_alpha ? train_expanded : *full_expanded;
    const auto path = regularization_path(*problem, order, config.kind, config.mixing);
    job.scores.resize(points);
    job.failures.resize(points);
    std::vector<double> eta_risk;
    for (std::size_t g = 0; g < points; ++g) {
      if (!path[g].ok) {
        job.failures[g] = path[g].error;
        continue;
      }
      const Eigen::VectorXd& beta = path[g].result.estimate.beta;
      const Eigen::VectorXd eta = alpha_data.covariates() * beta;
      Eigen::VectorXd alpha(dataset.d());
      for (int t = 1; t <= dataset.d(); ++t) {
        const auto members = alpha_expanded.stratum(t);
        eta_risk.resize(members.size());
        for (std::size_t r = 0; r < members.size(); ++r) eta_risk[r] = eta[members[r]];
        const AlphaFit fit = solve_alpha(eta_risk, static_cast<int>(alpha_expanded.cases(j, t).size()));
        // An empty training risk set gives no information; score the cell as all ties.
        alpha[t - 1] = std::isnan(fit.alpha) ? -std::numeric_limits<double>::infinity() : fit.alpha;
      }
      job.scores[g] = score_fold(fold.test, *fold.test_expanded, j, alpha, beta);
    }
  });

  CvResult result;
  result.selected_log_eta.assign(static_cast<std::size_t>(m), kNaN);
  // Global-AUC weights per fold: each cause's share of the events in cells
  // where the AUC is defined. They depend on the held-out data only.
  std::vector<double> fold_mass(static_cast<std::size_t>(folds), 0.0);
  for (int k = 0; k < folds; ++k) {
    const ExpandedData& expanded = *data[k].test_expanded;
    for (int j = 1; j <= m; ++j) {
      for (int t = 1; t <= dataset.d(); ++t) {
        const auto cases = expanded.cases(j, t).size();
        if (cases > 0 && cases < expanded.stratum(t).size()) fold_mass[k] += static_cast<double>(cases);
      }
    }
  }

  for (int j = 1; j <= m; ++j) {
    if (!tuned[j - 1]) continue;
    bool any_fold = false;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < points; ++g) {
      CvSummary summary;
      summary.j = j;
      summary.log_eta = order[g];
      std::vector<double> aucs;
      double criterion = 0.0;
      bool failed = false;
      for (int k = 0; k < folds; ++k) {
        const auto& job = jobs[static_cast<std::size_t>(k) * m + (j - 1)];
        if (job.skipped) continue;
        any_fold = true;
        if (!job.failures[g].empty()) {
          failed = true;
          continue;
        }
        const FoldScore& score = job.scores[g];
        if (!std::isfinite(score.auc)) continue;
        const double weight = fold_mass[k] > 0.0 ? score.mass / fold_mass[k] : 0.0;
        result.rows.push_back({j, order[g], k + 1, score.auc, weight});
        aucs.push_back(score.auc);
        criterion += weight * score.auc;
      }
      summary.folds_used = static_cast<int>(aucs.size());
      if (!aucs.empty()) {
        double mean = 0.0;
        for (const double a : aucs) mean += a;
        mean /= static_cast<double>(aucs.size());
        double ss = 0.0;
        for (const double a : aucs) ss += (a - mean) * (a - mean);
        summary.mean_auc = mean;
        summary.sd_auc = aucs.size() > 1 ? std::sqrt(ss / static_cast<double>(aucs.size() - 1)) : kNaN;
        summary.criterion = criterion / static_cast<double>(aucs.size());
      } else {
        summary.mean_auc = summary.sd_auc = summary.criterion = kNaN;
      }
      if (failed) {
        result.warnings.push_back("event type " + std::to_string(j) + ", log eta " +
                                  format_number(order[g]) +
                                  ": fit failed in at least one fold; candidate excluded");
        summary.criterion = kNaN;
      }
      // Grid runs from large to small eta, so a strict improvement is needed
      // to move to a smaller eta.
      if (std::isfinite(summary.criterion) && summary.criterion > best) {
        best = summary.criterion;
        result.selected_log_eta[j - 1] = order[g];
      }
      result.summary.push_back(summary);
    }
    if (!any_fold && points > 1) {
      throw EstimationError(EstimationError::Kind::kNoEvents,
                            "cross-validation: every fold was skipped for event type " +
                                std::to_string(j));
    }
    if (points == 1) result.selected_log_eta[j - 1] = order.front();
  }
  for (const auto& job : jobs) {
    if (job.skipped && !job.warning.empty()) result.warnings.push_back(job.warning);
  }
  if (result.warnings.size() > 1) {
    std::stable_sort(result.warnings.begin(), result.warnings.end());
  }
  return result;
}

FittedModel fit_penalized_model(const Dataset& dataset, const std::vector<double>& log_eta,
                                const CvConfig& config) {
  require_valid(dataset);
  const int m = dataset.m();
  if (static_cast<int>(log_eta.size()) != m) throw InputError("one log eta per event type");
  const int workers = resolve_workers(config.workers);
  FittedModel model;
  model.method = Method::kTwoStep;
  model.ties = config.ties;
  model.n = dataset.n();
  model.p = dataset.p();
  model.d = dataset.d();
  model.m = m;
  model.covariate_names = dataset.covariate_names();
  model.coefficients.resize(static_cast<std::size_t>(m));
  parallel_for(static_cast<std::size_t>(m), workers, [&](std::size_t index) {
    const int j = static_cast<int>(index) + 1;
    const PenalizedProblem problem(dataset, j, config.ties, config.solver);
    model.coefficients[index] =
        problem.fit({config.kind, std::exp(log_eta[index]), config.mixing}).estimate;
  });
  const ExpandedData expanded(dataset);
  model.baseline = fit_baselines(dataset, expanded, model.coefficients, config.ties, false, workers);
  return model;
}

}  // namespace dtscr
