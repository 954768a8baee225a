#include "dtscr/conditional_likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dtscr/error.hpp"

namespace dtscr {
namespace {

void require_event_type(int j, int m) {
  if (j < 1 || j > m) {
    throw InputError("event type " + std::to_string(j) + " is outside 1.." + std::to_string(m));
  }
}

}  // namespace

std::string_view to_string(TieMethod ties) {
  return ties == TieMethod::kBreslow ? "breslow" : "exact";
}

TieMethod parse_tie_method(std::string_view text) {
  if (text == "breslow") return TieMethod::kBreslow;
  if (text == "exact") return TieMethod::kExact;
  throw InputError("unknown tie method '" + std::string(text) + "' (expected breslow or exact)");
}

EventStrata::EventStrata(const ExpandedData& expanded, int j) : j_(j), n_(expanded.n()) {
  require_event_type(j, expanded.m());
  for (int t = 1; t <= expanded.d(); ++t) {
    const auto members = expanded.stratum(t);
    const auto cases = expanded.cases(j, t);
    total_events_ += static_cast<int>(cases.size());
    if (cases.empty()) continue;
    if (cases.size() == members.size()) {
      ++saturated_;
      continue;
    }
    Stratum s;
    s.t = t;
    s.member_begin = members_.size();
    members_.insert(members_.end(), members.begin(), members.end());
    s.member_end = members_.size();
    s.case_begin = cases_.size();
    cases_.insert(cases_.end(), cases.begin(), cases.end());
    s.case_end = cases_.size();
    strata_.push_back(s);
  }
}

int EventStrata::max_events() const {
  int out = 0;
  for (const auto& s : strata_) out = std::max(out, s.events());
  return out;
}

ConditionalLikelihood::ConditionalLikelihood(const ExpandedData& expanded,
                                             const Eigen::MatrixXd& covariates, int j,
                                             TieMethod ties, int exact_limit)
    : ConditionalLikelihood(std::make_shared<const EventStrata>(expanded, j), covariates, ties,
                            exact_limit) {}

ConditionalLikelihood::ConditionalLikelihood(std::shared_ptr<const EventStrata> strata,
                                             const Eigen::MatrixXd& covariates, TieMethod ties,
                                             int exact_limit)
    : strata_(std::move(strata)), zt_(covariates.transpose()), ties_(ties) {
  if (zt_.cols() != strata_->n()) {
    throw InputError("covariate rows do not match the number of subjects");
  }
  if (ties_ == TieMethod::kExact) check_exact_limit(exact_limit);
}

void ConditionalLikelihood::check_exact_limit(int exact_limit) const {
  for (const auto& s : strata_->strata()) {
    if (s.events() > exact_limit) {
      throw EstimationError(EstimationError::Kind::kCombinatorialBlowup,
                            "exact ties: stratum t=" + std::to_string(s.t) + " (event " +
                                std::to_string(strata_->j()) + ") has " +
                                std::to_string(s.events()) + " events, above the limit of " +
                                std::to_string(exact_limit) + "; use breslow");
    }
  }
}

LogLikResult ConditionalLikelihood::evaluate(const Eigen::VectorXd& beta, Derivatives level) const {
  const Eigen::Index p = zt_.rows();
  const bool want_gradient = level != Derivatives::kValue;
  const bool want_hessian = level == Derivatives::kHessian;
  const Eigen::VectorXd eta = zt_.transpose() * beta;

  LogLikResult out;
  if (want_gradient) out.gradient = Eigen::VectorXd::Zero(p);
  if (want_hessian) out.hessian = Eigen::MatrixXd::Zero(p, p);

  Eigen::VectorXd s1(p);
  Eigen::MatrixXd s2(p, p);
  // Exact-ties recursion state, indexed by subset size k.
  std::vector<double> b;
  Eigen::MatrixXd g;
  std::vector<Eigen::MatrixXd> h;

  for (const auto& stratum : strata_->strata()) {
    const auto members = strata_->members(stratum);
    const auto cases = strata_->cases(stratum);
    const int events = stratum.events();

    double shift = -std::numeric_limits<double>::infinity();
    for (const int i : members) shift = std::max(shift, eta[i]);

    for (const int c : cases) {
      out.value += eta[c];
      if (want_gradient) out.gradient += zt_.col(c);
    }

    if (ties_ == TieMethod::kBreslow || events == 1) {
      double s0 = 0.0;
      if (want_gradient) s1.setZero();
      if (want_hessian) s2.setZero();
      for (const int i : members) {
        const double w = std::exp(eta[i] - shift);
        s0 += w;
        if (want_gradient) s1.noalias() += w * zt_.col(i);
        if (want_hessian) s2.selfadjointView<Eigen::Lower>().rankUpdate(zt_.col(i), w);
      }
      out.value -= events * (std::log(s0) + shift);
      if (want_gradient) out.gradient.noalias() -= (events / s0) * s1;
      if (want_hessian) {
        s2.triangularView<Eigen::StrictlyUpper>() = s2.transpose();
        const Eigen::VectorXd mean = s1 / s0;
        out.hessian.noalias() -= events * (s2 / s0 - mean * mean.transpose());
      }
      continue;
    }

    // Subset sums B_k = sum over size-k subsets of prod w, with derivatives,
    // built one member at a time; k descends so B_{k-1} is still the old value.
    b.assign(static_cast<std::size_t>(events) + 1, 0.0);
    b[0] = 1.0;
    if (want_gradient) g = Eigen::MatrixXd::Zero(p, events + 1);
    if (want_hessian) h.assign(static_cast<std::size_t>(events) + 1, Eigen::MatrixXd::Zero(p, p));
    int seen = 0;
    for (const int i : members) {
      ++seen;
      const double w = std::exp(eta[i] - shift);
      const auto z = zt_.col(i);
      for (int k = std::min(events, seen); k >= 1; --k) {
        if (want_hessian) {
          Eigen::MatrixXd update = h[k - 1] + b[k - 1] * z * z.transpose();
          update.noalias() += z * g.col(k - 1).transpose();
          update.noalias() += g.col(k - 1) * z.transpose();
          h[k] += w * update;
        }
        if (want_gradient) g.col(k) += w * (g.col(k - 1) + b[k - 1] * z);
        b[k] += w * b[k - 1];
      }
    }
    const double bd = b[events];
    if (!(bd > 0.0) || !std::isfinite(bd)) {
      throw EstimationError(EstimationError::Kind::kEvaluation,
                            "exact ties: subset sum under/overflow in stratum t=" +
                                std::to_string(stratum.t));
    }
    out.value -= std::log(bd) + events * shift;
    if (want_gradient) {
      const Eigen::VectorXd mean = g.col(events) / bd;
      out.gradient -= mean;
      if (want_hessian) out.hessian -= h[events] / bd - mean * mean.transpose();
    }
  }
  return out;
}

int ConditionalLikelihood::first_unidentified_column() const {
  const Eigen::Index p = zt_.rows();
  for (Eigen::Index k = 0; k < p; ++k) {
    bool varies = false;
    for (const auto& stratum : strata_->strata()) {
      const auto members = strata_->members(stratum);
      const double first = zt_(k, members.front());
      for (const int i : members) {
        if (zt_(k, i) != first) {
          varies = true;
          break;
        }
      }
      if (varies) break;
    }
    if (!varies) return static_cast<int>(k);
  }
  return -1;
}

Eigen::MatrixXd ConditionalLikelihood::score_residuals(const Eigen::VectorXd& beta) const {
  const Eigen::Index p = zt_.rows();
  const Eigen::VectorXd eta = zt_.transpose() * beta;
  Eigen::MatrixXd residuals = Eigen::MatrixXd::Zero(p, strata_->n());
  std::vector<char> is_case(static_cast<std::size_t>(strata_->n()), 0);
  Eigen::VectorXd s1(p);
  for (const auto& stratum : strata_->strata()) {
    const auto members = strata_->members(stratum);
    const auto cases = strata_->cases(stratum);
    double shift = -std::numeric_limits<double>::infinity();
    for (const int i : members) shift = std::max(shift, eta[i]);
    double s0 = 0.0;
    s1.setZero();
    for (const int i : members) {
      const double w = std::exp(eta[i] - shift);
      s0 += w;
      s1.noalias() += w * zt_.col(i);
    }
    const Eigen::VectorXd mean = s1 / s0;
    const double events = stratum.events();
    for (const int c : cases) is_case[c] = 1;
    for (const int i : members) {
      const double w = std::exp(eta[i] - shift);
      residuals.col(i) += (is_case[i] - events * w / s0) * (zt_.col(i) - mean);
    }
    for (const int c : cases) is_case[c] = 0;
  }
  return residuals.transpose();
}

NestedRiskSetLikelihood::NestedRiskSetLikelihood(const Dataset& dataset,
                                                 const Eigen::MatrixXd& covariates, int j)
    : z_(covariates), d_(dataset.d()) {
  require_event_type(j, dataset.m());
  if (z_.rows() != dataset.n()) {
    throw InputError("covariate rows do not match the number of subjects");
  }
  const auto summary = risk_sets(dataset);
  events_.assign(static_cast<std::size_t>(d_), 0.0);
  for (int t = 1; t <= d_; ++t) {
    const int n_events = summary.nj(j, t);
    if (n_events > 0 && n_events < summary.y(t)) {
      events_[t - 1] = n_events;
      ++informative_count_;
    }
  }
  time_.resize(static_cast<std::size_t>(dataset.n()));
  case_sum_ = Eigen::VectorXd::Zero(z_.cols());
  for (int i = 0; i < dataset.n(); ++i) {
    time_[i] = std::min(dataset.time(i), d_);
    if (dataset.event(i) == j && time_[i] >= 1 && events_[time_[i] - 1] > 0) {
      case_sum_ += z_.row(i).transpose();
    }
  }
}

LogLikResult NestedRiskSetLikelihood::evaluate(const Eigen::VectorXd& beta,
                                               Derivatives level) const {
  const Eigen::Index n = z_.rows();
  const Eigen::Index p = z_.cols();
  const Eigen::VectorXd eta = z_ * beta;
  const double shift = n > 0 ? eta.maxCoeff() : 0.0;
  const Eigen::VectorXd w = (eta.array() - shift).exp().matrix();

  std::vector<double> s0(static_cast<std::size_t>(d_) + 1, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (time_[i] >= 1) s0[time_[i] - 1] += w[i];
  }
  for (int t = d_ - 1; t >= 1; --t) s0[t - 1] += s0[t];

  LogLikResult out;
  out.value = case_sum_.dot(beta);
  std::vector<double> cum(static_cast<std::size_t>(d_) + 1, 0.0);  // cum[x] = sum_{t<=x} D_t/S0_t
  for (int t = 1; t <= d_; ++t) {
    const double events = events_[t - 1];
    cum[t] = cum[t - 1];
    if (events > 0) {
      out.value -= events * (std::log(s0[t - 1]) + shift);
      cum[t] += events / s0[t - 1];
    }
  }
  if (level == Derivatives::kValue) return out;

  Eigen::VectorXd weight(n);
  for (Eigen::Index i = 0; i < n; ++i) weight[i] = w[i] * cum[std::max(time_[i], 0)];
  out.gradient = case_sum_ - z_.transpose() * weight;
  if (level == Derivatives::kGradient) return out;

  Eigen::MatrixXd s1 = Eigen::MatrixXd::Zero(p, d_);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (time_[i] >= 1) s1.col(time_[i] - 1) += w[i] * z_.row(i).transpose();
  }
  for (int t = d_ - 1; t >= 1; --t) s1.col(t - 1) += s1.col(t);
  out.hessian = -(z_.transpose() * weight.asDiagonal() * z_);
  for (int t = 1; t <= d_; ++t) {
    const double events = events_[t - 1];
    if (events > 0) {
      const double scale = events / (s0[t - 1] * s0[t - 1]);
      out.hessian.noalias() += scale * s1.col(t - 1) * s1.col(t - 1).transpose();
    }
  }
  return out;
}

LogLikResult conditional_loglik(const Eigen::VectorXd& beta, const Dataset& dataset, int j,
                                TieMethod ties, int exact_limit, Derivatives level) {
  require_valid(dataset);
  const ExpandedData expanded(dataset);
  const ConditionalLikelihood likelihood(expanded, dataset.covariates(), j, ties, exact_limit);
  if (beta.size() != likelihood.p()) throw InputError("beta length does not match p");
  return likelihood.evaluate(beta, level);
}

}  // namespace dtscr
