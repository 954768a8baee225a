#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "dtscr/dataset.hpp"

namespace dtscr {

enum class TieMethod { kBreslow, kExact };

std::string_view to_string(TieMethod ties);
/// Accepts "breslow" or "exact"; throws InputError otherwise.
TieMethod parse_tie_method(std::string_view text);

enum class Derivatives { kValue, kGradient, kHessian };

struct LogLikResult {
  double value = 0.0;
  Eigen::VectorXd gradient;  // empty unless requested
  Eigen::MatrixXd hessian;   // empty unless requested
};

/// Periods that carry information about beta_j: 0 < D_jt < |N_t|. Strata
/// without events contribute nothing and saturated strata (everyone at risk
/// fails from cause j) have a single admissible subset, so both are dropped.
class EventStrata {
 public:
  EventStrata(const ExpandedData& expanded, int j);

  struct Stratum {
    int t = 0;
    std::size_t member_begin = 0;
    std::size_t member_end = 0;
    std::size_t case_begin = 0;
    std::size_t case_end = 0;
    int events() const { return static_cast<int>(case_end - case_begin); }
    int size() const { return static_cast<int>(member_end - member_begin); }
  };

  int j() const { return j_; }
  int n() const { return n_; }
  int total_events() const { return total_events_; }
  int saturated() const { return saturated_; }
  const std::vector<Stratum>& strata() const { return strata_; }
  std::span<const int> members(const Stratum& s) const {
    return {members_.data() + s.member_begin, s.member_end - s.member_begin};
  }
  std::span<const int> cases(const Stratum& s) const {
    return {cases_.data() + s.case_begin, s.case_end - s.case_begin};
  }
  int max_events() const;

 private:
  int j_ = 0;
  int n_ = 0;
  int total_events_ = 0;
  int saturated_ = 0;
  std::vector<Stratum> strata_;
  std::vector<int> members_;
  std::vector<int> cases_;
};

/// Log conditional likelihood of beta_j on the person-period records, with
/// analytic gradient and Hessian. Works stratum by stratum over the records.
class ConditionalLikelihood {
 public:
  ConditionalLikelihood(const ExpandedData& expanded, const Eigen::MatrixXd& covariates, int j,
                        TieMethod ties = TieMethod::kBreslow, int exact_limit = 10);
  ConditionalLikelihood(std::shared_ptr<const EventStrata> strata,
                        const Eigen::MatrixXd& covariates, TieMethod ties = TieMethod::kBreslow,
                        int exact_limit = 10);

  int p() const { return static_cast<int>(zt_.rows()); }
  int j() const { return strata_->j(); }
  TieMethod ties() const { return ties_; }
  const EventStrata& strata() const { return *strata_; }
  bool informative() const { return !strata_->strata().empty(); }

  LogLikResult evaluate(const Eigen::VectorXd& beta,
                        Derivatives level = Derivatives::kHessian) const;

  /// Index of the first column that is constant inside every informative
  /// stratum, or -1. Such a column cancels from the likelihood.
  int first_unidentified_column() const;

  /// Per-subject score contributions sum_t (delta_it - D_t w_i / S0_t)(z_i - zbar_t)
  /// in Breslow form; rows sum to the gradient under Breslow ties. n x p.
  Eigen::MatrixXd score_residuals(const Eigen::VectorXd& beta) const;

 private:
  void check_exact_limit(int exact_limit) const;

  std::shared_ptr<const EventStrata> strata_;
  Eigen::MatrixXd zt_;  // p x n, one contiguous column per subject
  TieMethod ties_;
};

/// Breslow conditional likelihood evaluated through nested risk sets. The
/// strata N_t are nested in t, so every sum over N_t is a suffix sum over
/// subjects bucketed by observed time and the gradient costs O(np).
/// Numerically equal to ConditionalLikelihood with Breslow ties.
class NestedRiskSetLikelihood {
 public:
  NestedRiskSetLikelihood(const Dataset& dataset, const Eigen::MatrixXd& covariates, int j);

  int p() const { return static_cast<int>(z_.cols()); }
  int n() const { return static_cast<int>(z_.rows()); }
  bool informative() const { return informative_count_ > 0; }
  const Eigen::MatrixXd& covariates() const { return z_; }

  LogLikResult evaluate(const Eigen::VectorXd& beta,
                        Derivatives level = Derivatives::kGradient) const;

 private:
  Eigen::MatrixXd z_;
  std::vector<int> time_;          // X_i clamped to d
  std::vector<double> events_;     // D_t for informative strata, else 0 (index t-1)
  Eigen::VectorXd case_sum_;       // sum of z over cases in informative strata
  int d_ = 0;
  int informative_count_ = 0;
};

/// One-shot evaluation, mainly for tests and diagnostics.
LogLikResult conditional_loglik(const Eigen::VectorXd& beta, const Dataset& dataset, int j,
                                TieMethod ties = TieMethod::kBreslow, int exact_limit = 10,
                                Derivatives level = Derivatives::kHessian);

}  // namespace dtscr
