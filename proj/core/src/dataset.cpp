#include "dtscr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "dtscr/error.hpp"

namespace dtscr {
namespace {

std::vector<std::string> default_names(int p) {
  std::vector<std::string> names;
  names.reserve(p);
  for (int k = 1; k <= p; ++k) names.push_back("z" + std::to_string(k));
  return names;
}

}  // namespace

Dataset::Dataset(std::vector<std::string> ids, std::vector<int> times,
                 std::vector<int> events, Eigen::MatrixXd covariates,
                 DatasetOptions options, std::vector<std::string> covariate_names)
    : ids_(std::move(ids)),
      times_(std::move(times)),
      events_(std::move(events)),
      covariates_(std::move(covariates)),
      covariate_names_(std::move(covariate_names)) {
  if (times_.size() != events_.size() ||
      static_cast<Eigen::Index>(times_.size()) != covariates_.rows()) {
    throw InputError("dataset columns have different lengths");
  }
  if (ids_.empty() && !times_.empty()) {
    ids_.reserve(times_.size());
    for (std::size_t i = 0; i < times_.size(); ++i) ids_.push_back(std::to_string(i + 1));
  }
  if (ids_.size() != times_.size()) throw InputError("id column length mismatch");
  if (covariate_names_.empty()) covariate_names_ = default_names(p());
  if (static_cast<int>(covariate_names_.size()) != p()) {
    throw InputError("covariate name count does not match covariate columns");
  }

  if (options.horizon > 0) {
    horizon_ = options.horizon;
    for (std::size_t i = 0; i < times_.size(); ++i) {
      if (times_[i] > horizon_) {
        times_[i] = horizon_;
        events_[i] = 0;
        ++clamped_;
      }
    }
  } else {
    horizon_ = times_.empty() ? 0 : *std::max_element(times_.begin(), times_.end());
  }
  if (options.events > 0) {
    event_types_ = options.events;
  } else {
    event_types_ = events_.empty() ? 0 : *std::max_element(events_.begin(), events_.end());
  }
}

Dataset Dataset::from_observations(const std::vector<Observation>& observations,
                                   DatasetOptions options,
                                   std::vector<std::string> covariate_names) {
  const int n = static_cast<int>(observations.size());
  const int p = !covariate_names.empty() ? static_cast<int>(covariate_names.size())
                : n == 0                 ? 0
                                         : static_cast<int>(observations.front().z.size());
  std::vector<std::string> ids;
  std::vector<int> times;
  std::vector<int> events;
  ids.reserve(n);
  times.reserve(n);
  events.reserve(n);
  Eigen::MatrixXd z(n, p);
  int ragged = 0;
  for (int i = 0; i < n; ++i) {
    const auto& obs = observations[i];
    ids.push_back(obs.id);
    times.push_back(obs.time);
    events.push_back(obs.event);
    if (static_cast<int>(obs.z.size()) != p) ++ragged;
    for (int k = 0; k < p; ++k) {
      z(i, k) = k < static_cast<int>(obs.z.size()) ? obs.z[k]
                                                   : std::numeric_limits<double>::quiet_NaN();
    }
  }
  Dataset out(std::move(ids), std::move(times), std::move(events), std::move(z), options,
              std::move(covariate_names));
  out.ragged_rows_ = ragged;
  return out;
}

Observation Dataset::observation(int i) const {
  Observation obs{ids_[i], times_[i], events_[i], {}};
  obs.z.resize(p());
  for (int k = 0; k < p(); ++k) obs.z[k] = covariates_(i, k);
  return obs;
}

Dataset Dataset::subset(const std::vector<int>& rows) const {
  Dataset out;
  out.ids_.reserve(rows.size());
  out.times_.reserve(rows.size());
  out.events_.reserve(rows.size());
  out.covariates_.resize(static_cast<Eigen::Index>(rows.size()), covariates_.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int i = rows[r];
    out.ids_.push_back(ids_[i]);
    out.times_.push_back(times_[i]);
    out.events_.push_back(events_[i]);
    out.covariates_.row(static_cast<Eigen::Index>(r)) = covariates_.row(i);
  }
  out.covariate_names_ = covariate_names_;
  out.horizon_ = horizon_;
  out.event_types_ = event_types_;
  return out;
}

Dataset Dataset::select_columns(const std::vector<int>& columns) const {
  Eigen::MatrixXd z(covariates_.rows(), static_cast<Eigen::Index>(columns.size()));
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    z.col(static_cast<Eigen::Index>(c)) = covariates_.col(columns[c]);
    names.push_back(covariate_names_[columns[c]]);
  }
  return with_covariates(std::move(z), std::move(names));
}

Dataset Dataset::with_covariates(Eigen::MatrixXd covariates,
                                 std::vector<std::string> names) const {
  if (covariates.rows() != covariates_.rows()) {
    throw InputError("replacement covariates must have one row per subject");
  }
  Dataset out = *this;
  out.covariates_ = std::move(covariates);
  out.covariate_names_ = names.empty() ? default_names(out.p()) : std::move(names);
  if (static_cast<int>(out.covariate_names_.size()) != out.p()) {
    throw InputError("covariate name count does not match covariate columns");
  }
  out.ragged_rows_ = 0;
  return out;
}

bool ValidationReport::ok() const {
  return std::all_of(rules.begin(), rules.end(), [](const auto& r) { return r.passed; });
}

std::string ValidationReport::failures() const {
  std::string out;
  for (const auto& rule : rules) {
    if (rule.passed) continue;
    if (!out.empty()) out += "; ";
    out += rule.message;
  }
  return out;
}

ValidationReport validate(const Dataset& dataset) {
  ValidationReport report;
  const int n = dataset.n();

  auto add = [&](std::string name, bool passed, std::string message) {
    report.rules.push_back({std::move(name), passed, passed ? std::string() : std::move(message)});
  };

  add("non_empty", n > 0, "n = 0");
  add("dimension", dataset.ragged_rows() == 0,
      std::to_string(dataset.ragged_rows()) + " rows with a covariate count different from p = " +
          std::to_string(dataset.p()));
  add("horizon", n == 0 || dataset.d() >= 1, "horizon d must be at least 1");
  add("event_types", n == 0 || dataset.m() >= 1, "no event types (M = 0)");

  int bad_time = -1;
  int bad_event = -1;
  for (int i = 0; i < n; ++i) {
    if (bad_time < 0 && (dataset.time(i) < 1 || dataset.time(i) > dataset.d())) bad_time = i;
    if (bad_event < 0 && (dataset.event(i) < 0 || dataset.event(i) > dataset.m())) bad_event = i;
  }
  add("time_range", bad_time < 0,
      bad_time < 0 ? "" : "time out of range 1..d at subject " + dataset.id(bad_time));
  add("event_range", bad_event < 0,
      bad_event < 0 ? ""
                    : "event label out of range at subject " + dataset.id(bad_event) +
                          " (label " + std::to_string(dataset.event(bad_event)) +
                          ", M = " + std::to_string(dataset.m()) + ")");

  const auto& z = dataset.covariates();
  long long nonfinite = 0;
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      if (!std::isfinite(z(r, c))) ++nonfinite;
    }
  }
  add("finite_covariates", nonfinite == 0,
      std::to_string(nonfinite) + " missing or non-finite covariate entries");
  return report;
}

void require_valid(const Dataset& dataset) {
  const auto report = validate(dataset);
  if (!report.ok()) throw InputError("invalid dataset: " + report.failures());
}

std::vector<ExpandedRecord> expand(const Dataset& dataset) {
  std::vector<ExpandedRecord> records;
  long long total = 0;
  for (int i = 0; i < dataset.n(); ++i) total += std::max(0, dataset.time(i));
  records.reserve(static_cast<std::size_t>(total));
  for (int i = 0; i < dataset.n(); ++i) {
    const int x = dataset.time(i);
    for (int t = 1; t <= x; ++t) {
      records.push_back({i, t, t == x ? dataset.event(i) : 0});
    }
  }
  return records;
}

std::vector<CollapsedSubject> collapse(std::span<const ExpandedRecord> records) {
  std::vector<CollapsedSubject> out;
  for (const auto& record : records) {
    if (out.empty() || out.back().subject != record.subject) {
      out.push_back({record.subject, record.t, record.event});
    } else if (record.t >= out.back().time) {
      out.back().time = record.t;
      out.back().event = record.event;
    }
  }
  return out;
}

ExpandedData::ExpandedData(const Dataset& dataset)
    : n_(dataset.n()), d_(dataset.d()), m_(dataset.m()) {
  const auto& times = dataset.times();
  const auto& events = dataset.events();

  // Counting sort by observed time keeps every stratum in ascending id order.
  std::vector<std::size_t> at_risk(static_cast<std::size_t>(d_) + 2, 0);
  for (int i = 0; i < n_; ++i) ++at_risk[std::clamp(times[i], 0, d_ + 1)];
  std::size_t running = 0;
  member_offsets_.assign(static_cast<std::size_t>(d_) + 1, 0);
  std::vector<std::size_t> stratum_size(static_cast<std::size_t>(d_) + 1, 0);
  for (int t = d_; t >= 1; --t) {
    running += at_risk[t] + (t == d_ ? at_risk[d_ + 1] : 0);
    stratum_size[t] = running;
  }
  for (int t = 1; t <= d_; ++t) member_offsets_[t] = member_offsets_[t - 1] + stratum_size[t];
  members_.resize(member_offsets_[d_]);
  std::vector<std::size_t> cursor(member_offsets_.begin(), member_offsets_.end() - 1);
  for (int i = 0; i < n_; ++i) {
    const int x = std::min(times[i], d_);
    for (int t = 1; t <= x; ++t) members_[cursor[t - 1]++] = i;
  }

  case_offsets_.assign(static_cast<std::size_t>(m_) * d_ + 1, 0);
  for (int i = 0; i < n_; ++i) {
    if (events[i] >= 1 && events[i] <= m_ && times[i] >= 1 && times[i] <= d_) {
      ++case_offsets_[static_cast<std::size_t>(events[i] - 1) * d_ + times[i]];
    }
  }
  for (std::size_t c = 1; c < case_offsets_.size(); ++c) case_offsets_[c] += case_offsets_[c - 1];
  cases_.resize(case_offsets_.back());
  std::vector<std::size_t> case_cursor(case_offsets_.begin(), case_offsets_.end() - 1);
  for (int i = 0; i < n_; ++i) {
    if (events[i] >= 1 && events[i] <= m_ && times[i] >= 1 && times[i] <= d_) {
      cases_[case_cursor[static_cast<std::size_t>(events[i] - 1) * d_ + times[i] - 1]++] = i;
    }
  }
}

std::span<const int> ExpandedData::stratum(int t) const {
  return {members_.data() + member_offsets_[t - 1], member_offsets_[t] - member_offsets_[t - 1]};
}

std::span<const int> ExpandedData::cases(int j, int t) const {
  const std::size_t cell = static_cast<std::size_t>(j - 1) * d_ + (t - 1);
  return {cases_.data() + case_offsets_[cell], case_offsets_[cell + 1] - case_offsets_[cell]};
}

RiskSetSummary risk_sets(const Dataset& dataset) {
  const int d = dataset.d();
  const int m = dataset.m();
  RiskSetSummary summary;
  summary.at_risk.assign(d, 0);
  summary.censored.assign(d, 0);
  summary.events = Eigen::MatrixXi::Zero(m, d);
  std::vector<int> exits(static_cast<std::size_t>(d) + 1, 0);
  for (int i = 0; i < dataset.n(); ++i) {
    const int x = dataset.time(i);
    if (x < 1 || x > d) continue;
    ++exits[x];
    const int j = dataset.event(i);
    if (j == 0) {
      ++summary.censored[x - 1];
    } else if (j <= m) {
      ++summary.events(j - 1, x - 1);
    }
  }
  int remaining = 0;
  for (int t = d; t >= 1; --t) {
    remaining += exits[t];
    summary.at_risk[t - 1] = remaining;
  }
  return summary;
}

}  // namespace dtscr
