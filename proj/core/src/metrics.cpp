#include "dtscr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dtscr/error.hpp"
#include "dtscr/logistic.hpp"
#include "dtscr/parallel.hpp"

namespace dtscr {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_scores(std::span<const double> scores, const Dataset& dataset) {
  if (static_cast<int>(scores.size()) != dataset.n()) {
    throw InputError("one score per subject is required");
  }
}

}  // namespace

double concordance(std::span<const double> case_scores, std::span<const double> control_scores) {
  if (case_scores.empty() || control_scores.empty()) return kNaN;
  std::vector<double> controls(control_scores.begin(), control_scores.end());
  std::sort(controls.begin(), controls.end());
  double concordant = 0.0;
  for (const double s : case_scores) {
    const auto below = std::lower_bound(controls.begin(), controls.end(), s);
    const auto not_above = std::upper_bound(below, controls.end(), s);
    concordant += static_cast<double>(below - controls.begin()) +
                  0.5 * static_cast<double>(not_above - below);
  }
  return concordant / (static_cast<double>(case_scores.size()) *
                       static_cast<double>(controls.size()));
}

double auc_jt(std::span<const double> scores, const Dataset& dataset, int j, int t) {
  check_scores(scores, dataset);
  std::vector<double> cases;
  std::vector<double> controls;
  for (int i = 0; i < dataset.n(); ++i) {
    if (dataset.time(i) < t) continue;
    if (dataset.time(i) == t && dataset.event(i) == j) {
      cases.push_back(scores[i]);
    } else {
      controls.push_back(scores[i]);
    }
  }
  return concordance(cases, controls);
}

double brier_jt(std::span<const double> scores, const Dataset& dataset, int j, int t) {
  check_scores(scores, dataset);
  double total = 0.0;
  int at_risk = 0;
  for (int i = 0; i < dataset.n(); ++i) {
    if (dataset.time(i) < t) continue;
    const double delta = dataset.time(i) == t && dataset.event(i) == j ? 1.0 : 0.0;
    total += (delta - scores[i]) * (delta - scores[i]);
    ++at_risk;
  }
  return at_risk == 0 ? kNaN : total / at_risk;
}

double integrate(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size()) throw InputError("values and weights differ in length");
  double weighted = 0.0;
  double mass = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (weights[k] < 0.0) throw InputError("weights must be non-negative");
    if (!std::isfinite(values[k]) || !(weights[k] > 0.0)) continue;
    weighted += weights[k] * values[k];
    mass += weights[k];
  }
  if (!(mass > 0.0)) throw InputError("no defined cell carries positive weight");
  return weighted / mass;
}

double globalize(std::span<const double> values, std::span<const double> weights) {
  return integrate(values, weights);
}

MetricsReport evaluate(const HazardParams& params, const Dataset& dataset, int workers) {
  require_valid(dataset);
  const int m = dataset.m();
  const int d = dataset.d();
  if (params.m() < m || params.d() < d || params.p() != dataset.p()) {
    throw InputError("model dimensions do not cover the evaluation data");
  }
  const Eigen::MatrixXd eta = linear_predictors(params, dataset.covariates());
  const ExpandedData expanded(dataset);

  MetricsReport report;
  report.cells.resize(static_cast<std::size_t>(m) * d);
  parallel_for(report.cells.size(), workers, [&](std::size_t index) {
    const int j = static_cast<int>(index) / d + 1;
    const int t = static_cast<int>(index) % d + 1;
    const auto members = expanded.stratum(t);
    const auto cases = expanded.cases(j, t);
    std::vector<double> case_scores;
    std::vector<double> control_scores;
    case_scores.reserve(cases.size());
    control_scores.reserve(members.size() - cases.size());
    double squared = 0.0;
    std::size_t next_case = 0;
    for (const int i : members) {
      const double lambda = expit(params.alpha(j - 1, t - 1) + eta(i, j - 1));
      const bool is_case = next_case < cases.size() && cases[next_case] == i;
      if (is_case) {
        ++next_case;
        case_scores.push_back(lambda);
      } else {
        control_scores.push_back(lambda);
      }
      const double delta = is_case ? 1.0 : 0.0;
      squared += (delta - lambda) * (delta - lambda);
    }
    CellMetrics& cell = report.cells[index];
    cell.j = j;
    cell.t = t;
    cell.at_risk = static_cast<int>(members.size());
    cell.events = static_cast<int>(cases.size());
    cell.auc = concordance(case_scores, control_scores);
    cell.brier = members.empty() ? kNaN : squared / static_cast<double>(members.size());
  });

  report.auc_j = Eigen::VectorXd::Constant(m, kNaN);
  report.brier_j = Eigen::VectorXd::Constant(m, kNaN);
  report.auc_weights = Eigen::MatrixXd::Zero(m, d);
  report.brier_weights = Eigen::MatrixXd::Zero(m, d);
  Eigen::VectorXd auc_mass = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd brier_mass = Eigen::VectorXd::Zero(m);
  for (int j = 1; j <= m; ++j) {
    std::vector<double> auc(d);
    std::vector<double> brier(d);
    std::vector<double> auc_w(d, 0.0);
    std::vector<double> brier_w(d, 0.0);
    for (int t = 1; t <= d; ++t) {
      const auto& cell = report.cells[static_cast<std::size_t>(j - 1) * d + (t - 1)];
      auc[t - 1] = cell.auc;
      brier[t - 1] = cell.brier;
      if (std::isfinite(cell.auc)) auc_w[t - 1] = cell.events;
      if (std::isfinite(cell.brier)) brier_w[t - 1] = cell.events;
      auc_mass[j - 1] += auc_w[t - 1];
      brier_mass[j - 1] += brier_w[t - 1];
    }
    if (auc_mass[j - 1] > 0) {
      report.auc_j[j - 1] = integrate(auc, auc_w);
      for (int t = 0; t < d; ++t) report.auc_weights(j - 1, t) = auc_w[t] / auc_mass[j - 1];
    }
    if (brier_mass[j - 1] > 0) {
      report.brier_j[j - 1] = integrate(brier, brier_w);
      for (int t = 0; t < d; ++t) report.brier_weights(j - 1, t) = brier_w[t] / brier_mass[j - 1];
    }
  }
  const std::span<const double> auc_j(report.auc_j.data(), static_cast<std::size_t>(m));
  const std::span<const double> brier_j(report.brier_j.data(), static_cast<std::size_t>(m));
  report.auc_global = globalize(auc_j, std::span<const double>(auc_mass.data(), m));
  report.brier_global = globalize(brier_j, std::span<const double>(brier_mass.data(), m));
  report.global_weights = auc_mass / auc_mass.sum();
  return report;
}

}  // namespace dtscr
