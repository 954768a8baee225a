#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dtscr {

/// One subject: observed period X = min(T, C), event label J (0 = censored)
/// and time-fixed covariates.
struct Observation {
  std::string id;
  int time = 0;
  int event = 0;
  std::vector<double> z;
};

struct DatasetOptions {
  /// Horizon d. Zero infers d = max(time); a positive value administratively
  /// censors later observations at d.
  int horizon = 0;
  /// Number of event types M. Zero infers M = max(event).
  int events = 0;
};

/// Immutable collection of observations. Construction never rejects data;
/// `validate` reports problems and every estimator calls `require_valid`.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> ids, std::vector<int> times, std::vector<int> events,
          Eigen::MatrixXd covariates, DatasetOptions options = {},
          std::vector<std::string> covariate_names = {});

  /// p comes from `covariate_names` when given, else from the first row.
  static Dataset from_observations(const std::vector<Observation>& observations,
                                   DatasetOptions options = {},
                                   std::vector<std::string> covariate_names = {});

  int n() const { return static_cast<int>(times_.size()); }
  int p() const { return static_cast<int>(covariates_.cols()); }
  int d() const { return horizon_; }
  int m() const { return event_types_; }

  const std::string& id(int i) const { return ids_[i]; }
  int time(int i) const { return times_[i]; }
  int event(int i) const { return events_[i]; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<int>& times() const { return times_; }
  const std::vector<int>& events() const { return events_; }
  const Eigen::MatrixXd& covariates() const { return covariates_; }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }
  Observation observation(int i) const;

  /// Observations censored at d because of a horizon override.
  int clamped() const { return clamped_; }
  /// Rows whose covariate count disagreed with p.
  int ragged_rows() const { return ragged_rows_; }

  /// Rows in the given order; keeps d and M of the parent.
  Dataset subset(const std::vector<int>& rows) const;
  Dataset select_columns(const std::vector<int>& columns) const;
  /// Same outcomes, new covariate matrix (n rows).
  Dataset with_covariates(Eigen::MatrixXd covariates,
                          std::vector<std::string> names = {}) const;

 private:
  std::vector<std::string> ids_;
  std::vector<int> times_;
  std::vector<int> events_;
  Eigen::MatrixXd covariates_;
  std::vector<std::string> covariate_names_;
  int horizon_ = 0;
  int event_types_ = 0;
  int clamped_ = 0;
  int ragged_rows_ = 0;
};

struct ValidationRule {
  std::string name;
  bool passed = true;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationRule> rules;

  bool ok() const;
  /// Semicolon-separated messages of the failed rules.
  std::string failures() const;
};

ValidationReport validate(const Dataset& dataset);

/// Throws InputError carrying the failed rules.
void require_valid(const Dataset& dataset);

/// Person-period row. `event` holds J_i on the subject's last row when the
/// subject failed there and 0 otherwise, so delta(j) is the indicator
/// delta_jit. Covariates stay with the source dataset.
struct ExpandedRecord {
  int subject = 0;
  int t = 0;
  int event = 0;

  bool delta(int j) const { return event == j && j > 0; }
};

/// Rows ordered by subject, then period.
std::vector<ExpandedRecord> expand(const Dataset& dataset);

struct CollapsedSubject {
  int subject = 0;
  int time = 0;
  int event = 0;
};

/// Inverse of `expand`: (max t, event on the last row) per subject.
std::vector<CollapsedSubject> collapse(std::span<const ExpandedRecord> records);

/// Person-period rows grouped by period. Stratum t holds every subject with
/// X_i >= t; the index stores subject ids only.
class ExpandedData {
 public:
  explicit ExpandedData(const Dataset& dataset);

  int n() const { return n_; }
  int d() const { return d_; }
  int m() const { return m_; }
  long long record_count() const { return static_cast<long long>(members_.size()); }

  std::span<const int> stratum(int t) const;
  /// Subjects failing from cause j in period t.
  std::span<const int> cases(int j, int t) const;

 private:
  int n_ = 0;
  int d_ = 0;
  int m_ = 0;
  std::vector<int> members_;
  std::vector<std::size_t> member_offsets_;
  std::vector<int> cases_;
  std::vector<std::size_t> case_offsets_;
};

struct RiskSetSummary {
  std::vector<int> at_risk;   // Y.(t), index t-1
  std::vector<int> censored;  // censored at t, index t-1
  Eigen::MatrixXi events;     // N_j(t) at (j-1, t-1)

  int y(int t) const { return at_risk[t - 1]; }
  int nj(int j, int t) const { return events(j - 1, t - 1); }
};

RiskSetSummary risk_sets(const Dataset& dataset);

}  // namespace dtscr
