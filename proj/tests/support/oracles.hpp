#pragma once

// Independent reference implementations used by the tests. Nothing here calls
// the estimation code under test; datasets are drawn with std::mt19937.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dtscr/dataset.hpp"

namespace dtscr::testing {

struct RandomDatasetSpec {
  int n = 15;
  int d = 3;
  int m = 2;
  int p = 1;
  double censor_prob = 0.15;
  double event_prob = 0.35;  // per period, split evenly over causes
};

inline Dataset random_dataset(std::mt19937_64& gen, const RandomDatasetSpec& spec) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::string> ids;
  std::vector<int> times;
  std::vector<int> events;
  Eigen::MatrixXd z(spec.n, spec.p);
  for (int i = 0; i < spec.n; ++i) {
    for (int k = 0; k < spec.p; ++k) z(i, k) = normal(gen);
    int time = spec.d;
    int event = 0;
    for (int t = 1; t <= spec.d; ++t) {
      const double u = unif(gen);
      if (u < spec.censor_prob) {
        time = t;
        break;
      }
      if (u < spec.censor_prob + spec.event_prob) {
        time = t;
        event = 1 + static_cast<int>(unif(gen) * spec.m) % spec.m;
        break;
      }
    }
    ids.push_back("s" + std::to_string(i));
    times.push_back(time);
    events.push_back(event);
  }
  return Dataset(ids, times, events, z, DatasetOptions{spec.d, spec.m});
}

inline double log_sum_exp(std::span<const double> values) {
  const double top = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (const double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

/// Conditional log-likelihood by brute force: exact ties enumerate every
/// subset of the risk set with the observed number of events.
inline double brute_conditional_loglik(const Eigen::VectorXd& beta, const Dataset& data, int j,
                                       bool exact) {
  double total = 0.0;
  for (int t = 1; t <= data.d(); ++t) {
    std::vector<int> risk;
    double case_eta = 0.0;
    int cases = 0;
    for (int i = 0; i < data.n(); ++i) {
      if (data.time(i) < t) continue;
      risk.push_back(i);
      if (data.time(i) == t && data.event(i) == j) {
        case_eta += data.covariates().row(i).dot(beta);
        ++cases;
      }
    }
    const int size = static_cast<int>(risk.size());
    if (cases == 0 || cases == size) continue;
    std::vector<double> eta(risk.size());
    for (int a = 0; a < size; ++a) eta[a] = data.covariates().row(risk[a]).dot(beta);
    if (!exact) {
      total += case_eta - cases * log_sum_exp(eta);
      continue;
    }
    std::vector<double> subset_sums;
    for (unsigned mask = 0; mask < (1u << size); ++mask) {
      if (__builtin_popcount(mask) != cases) continue;
      double s = 0.0;
      for (int a = 0; a < size; ++a) {
        if (mask & (1u << a)) s += eta[a];
      }
      subset_sums.push_back(s);
    }
    total += case_eta - log_sum_exp(subset_sums);
  }
  return total;
}

/// Logistic regression by plain IRLS (weighted least squares with a QR solve).
struct IrlsFit {
  Eigen::VectorXd coef;
  Eigen::MatrixXd covariance;
  bool converged = false;
};

inline IrlsFit irls_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  IrlsFit fit;
  fit.coef = Eigen::VectorXd::Zero(x.cols());
  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::VectorXd eta = x * fit.coef;
    Eigen::VectorXd mu(eta.size());
    Eigen::VectorXd w(eta.size());
    Eigen::VectorXd zwork(eta.size());
    for (Eigen::Index r = 0; r < eta.size(); ++r) {
      mu[r] = 1.0 / (1.0 + std::exp(-eta[r]));
      w[r] = std::max(mu[r] * (1.0 - mu[r]), 1e-300);
      zwork[r] = eta[r] + (y[r] - mu[r]) / w[r];
    }
    const Eigen::VectorXd sw = w.array().sqrt();
    const Eigen::MatrixXd xw = x.array().colwise() * sw.array();
    const Eigen::VectorXd zw = zwork.array() * sw.array();
    const Eigen::VectorXd next = xw.colPivHouseholderQr().solve(zw);
    const double change = (next - fit.coef).cwiseAbs().maxCoeff();
    fit.coef = next;
    if (change < 1e-13) {
      fit.converged = true;
      break;
    }
  }
  const Eigen::VectorXd eta = x * fit.coef;
  Eigen::VectorXd w(eta.size());
  for (Eigen::Index r = 0; r < eta.size(); ++r) {
    const double mu = 1.0 / (1.0 + std::exp(-eta[r]));
    w[r] = mu * (1.0 - mu);
  }
  const Eigen::MatrixXd info = x.transpose() * w.asDiagonal() * x;
  fit.covariance = info.inverse();
  return fit;
}

/// Person-period design for cause j: one indicator per period whose cell has
/// 0 < N_j(t) < Y(t), then the covariates. Rows in other periods are dropped.
struct ExpandedDesign {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<int> periods;  // period of each indicator column
};

inline ExpandedDesign expanded_design(const Dataset& data, int j) {
  std::vector<int> at_risk(data.d() + 1, 0);
  std::vector<int> events(data.d() + 1, 0);
  for (int i = 0; i < data.n(); ++i) {
    for (int t = 1; t <= data.time(i); ++t) ++at_risk[t];
    if (data.event(i) == j) ++events[data.time(i)];
  }
  ExpandedDesign design;
  std::vector<int> column(data.d() + 1, -1);
  for (int t = 1; t <= data.d(); ++t) {
    if (events[t] > 0 && events[t] < at_risk[t]) {
      column[t] = static_cast<int>(design.periods.size());
      design.periods.push_back(t);
    }
  }
  const int q = static_cast<int>(design.periods.size());
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> ys;
  for (int i = 0; i < data.n(); ++i) {
    for (int t = 1; t <= data.time(i); ++t) {
      if (column[t] < 0) continue;
      Eigen::VectorXd row = Eigen::VectorXd::Zero(q + data.p());
      row[column[t]] = 1.0;
      row.tail(data.p()) = data.covariates().row(i).transpose();
      rows.push_back(row);
      ys.push_back(t == data.time(i) && data.event(i) == j ? 1.0 : 0.0);
    }
  }
  design.x.resize(static_cast<Eigen::Index>(rows.size()), q + data.p());
  design.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    design.x.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    design.y[static_cast<Eigen::Index>(r)] = ys[r];
  }
  return design;
}

/// Grid search for a scalar maximizer followed by golden-section refinement.
inline double grid_argmax(const std::function<double(double)>& f, double lo, double hi,
                          int points) {
  double best_x = lo;
  double best = -INFINITY;
  const double step = (hi - lo) / (points - 1);
  for (int g = 0; g < points; ++g) {
    const double x = lo + step * g;
    const double v = f(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  double a = best_x - step;
  double b = best_x + step;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
    const double c = b - r * (b - a);
    const double e = a + r * (b - a);
    if (f(c) > f(e)) {
      b = e;
    } else {
      a = c;
    }
  }
  return 0.5 * (a + b);
}

/// Cumulative incidence by propagating the state distribution
/// (alive, failed from 1..M) period by period.
inline Eigen::MatrixXd cif_by_propagation(const Eigen::MatrixXd& hazards) {
  const Eigen::Index m = hazards.rows();
  const Eigen::Index d = hazards.cols();
  Eigen::VectorXd state = Eigen::VectorXd::Zero(m + 1);
  state[0] = 1.0;
  Eigen::MatrixXd cif(m, d);
  for (Eigen::Index t = 0; t < d; ++t) {
    Eigen::MatrixXd step = Eigen::MatrixXd::Identity(m + 1, m + 1);
    step(0, 0) = 1.0 - hazards.col(t).sum();
    for (Eigen::Index j = 0; j < m; ++j) step(j + 1, 0) = hazards(j, t);
    state = step * state;
    cif.col(t) = state.tail(m);
  }
  return cif;
}

/// Pairwise concordance by double loop.
inline double pairwise_auc(const std::vector<double>& cases, const std::vector<double>& controls) {
  if (cases.empty() || controls.empty()) return NAN;
  double score = 0.0;
  for (const double a : cases) {
    for (const double b : controls) score += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  }
  return score / (static_cast<double>(cases.size()) * static_cast<double>(controls.size()));
}

}  // namespace dtscr::testing
