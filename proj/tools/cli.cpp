#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dtscr/error.hpp"
#include "dtscr/estimators.hpp"
#include "dtscr/io.hpp"
#include "dtscr/metrics.hpp"
#include "dtscr/model_io.hpp"
#include "dtscr/parallel.hpp"
#include "dtscr/prediction.hpp"
#include "dtscr/regularize.hpp"
#include "dtscr/rng.hpp"
#include "dtscr/screening.hpp"
#include "dtscr/simulate.hpp"

#ifndef DTSCR_VERSION
#define DTSCR_VERSION "unknown"
#endif

namespace dtscr::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kZ975 = 1.959963984540054;

json number(double value) {
  if (std::isnan(value)) return nullptr;
  if (std::isinf(value)) return value > 0 ? "+inf" : "-inf";
  return value;
}

json numbers(const Eigen::VectorXd& values) {
  json out = json::array();
  for (const double v : values) out.push_back(number(v));
  return out;
}

std::string fmt(double value) { return format_number(value); }

std::string rep_name(int rep) {
  std::ostringstream name;
  name << "rep_" << std::setw(4) << std::setfill('0') << rep + 1 << ".csv";
  return name.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

// Options shared by every subcommand, plus the bookkeeping for the manifest.
struct Run {
  std::string command;
  std::vector<std::string> args;
  fs::path out;
  int workers = 0;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  json extra = json::object();

  void write(const std::string& name, const std::string& content) {
    const fs::path path = out / name;
    fs::create_directories(path.parent_path());
    write_file_atomic(path, content);
    outputs.push_back(name);
  }

  void write_manifest(double seconds) {
    json manifest{
        {"tool", "dtscr"},
        {"version", DTSCR_VERSION},
        {"command", command},
        {"arguments", args},
        {"inputs", inputs},
        {"outputs", outputs},
        {"seed", seed ? json(*seed) : json(nullptr)},
        {"workers", resolve_workers(workers)},
        {"started_at", utc_timestamp()},
        {"wall_time_seconds", seconds},
    };
    for (auto& [key, value] : extra.items()) manifest[key] = value;
    fs::create_directories(out);
    write_file_atomic(out / "manifest.json", manifest.dump(2) + "\n");
  }
};

std::uint64_t require_seed(const Run& run) {
  if (!run.seed) throw InputError(run.command + ": --seed is required for this stochastic path");
  return *run.seed;
}

SolverConfig solver_from(int workers, int exact_limit) {
  SolverConfig solver;
  solver.workers = workers;
  solver.exact_limit = exact_limit;
  return solver;
}

Dataset load_dataset(Run& run, const std::string& path, int horizon, int events) {
  run.inputs.push_back(path);
  Dataset data = read_dataset_csv(path, DatasetOptions{horizon, events});
  require_valid(data);
  if (data.clamped() > 0) {
    run.extra["horizon_clamped"] = data.clamped();
  }
  return data;
}

std::string coefficient_csv(const FittedModel& model) {
  std::ostringstream csv;
  csv << "j,k,covariate,estimate,se,ci_lower,ci_upper\n";
  for (const auto& c : model.coefficients) {
    for (int k = 0; k < model.p; ++k) {
      const double se = std::sqrt(c.covariance(k, k));
      csv << c.j << ',' << k + 1 << ',' << model.covariate_names[k] << ',' << fmt(c.beta[k]) << ','
          << fmt(se) << ',' << fmt(c.beta[k] - kZ975 * se) << ',' << fmt(c.beta[k] + kZ975 * se)
          << '\n';
    }
  }
  return csv.str();
}

void print_coefficient_table(std::ostream& out, const FittedModel& model) {
  std::size_t width = 9;
  for (const auto& name : model.covariate_names) width = std::max(width, name.size());
  out << "method: " << to_string(model.method) << ", ties: " << to_string(model.ties)
      << ", n = " << model.n << ", d = " << model.d << '\n';
  for (const auto& c : model.coefficients) {
    out << "\nevent type " << c.j << (c.identified ? "" : " (not identified)") << '\n';
    out << std::left << std::setw(static_cast<int>(width) + 2) << "covariate" << std::right
        << std::setw(12) << "estimate" << std::setw(12) << "se" << "   95% CI\n";
    for (int k = 0; k < model.p; ++k) {
      const double se = std::sqrt(c.covariance(k, k));
      out << std::left << std::setw(static_cast<int>(width) + 2) << model.covariate_names[k]
          << std::right << std::setw(12) << fmt(c.beta[k]) << std::setw(12) << fmt(se) << "   ("
          << fmt(c.beta[k] - kZ975 * se) << ", " << fmt(c.beta[k] + kZ975 * se) << ")\n";
    }
  }
}

std::string cv_csv(const CvResult& cv) {
  std::ostringstream csv;
  csv << "j,log_eta,fold,auc\n";
  for (const auto& row : cv.rows) {
    csv << row.j << ',' << fmt(row.log_eta) << ',' << row.fold + 1 << ',' << fmt(row.auc) << '\n';
  }
  return csv.str();
}

std::string cv_summary_csv(const CvResult& cv) {
  std::ostringstream csv;
  csv << "j,log_eta,mean_auc,sd_auc,criterion,folds_used,selected\n";
  for (const auto& s : cv.summary) {
    csv << s.j << ',' << fmt(s.log_eta) << ',' << fmt(s.mean_auc) << ',' << fmt(s.sd_auc) << ','
        << fmt(s.criterion) << ',' << s.folds_used << ','
        << (s.log_eta == cv.selected_log_eta[s.j - 1] ? 1 : 0) << '\n';
  }
  return csv.str();
}

// ---------------------------------------------------------------- fit

struct FitOptions {
  std::string data;
  std::string method = "two-step";
  std::string ties = "breslow";
  int horizon = 0;
  int events = 0;
  int exact_limit = 10;
  std::string penalty = "none";
  double mixing = 0.5;
  std::string grid = "-12:-1:1";
  std::vector<double> log_eta;
  int folds = 5;
  std::string cv_alpha = "fold";
  bool export_expanded = false;
};

void cmd_fit(Run& run, const FitOptions& o, std::ostream& out) {
  const Dataset data = load_dataset(run, o.data, o.horizon, o.events);
  const Method method = parse_method(o.method);
  const TieMethod ties = parse_tie_method(o.ties);
  const SolverConfig solver = solver_from(run.workers, o.exact_limit);
  if (o.export_expanded) {
    std::ostringstream expanded;
    write_expanded_csv(expanded, data);
    run.write("expanded.csv", expanded.str());
  }

  FittedModel model;
  if (o.penalty == "none") {
    model = method == Method::kTwoStep ? fit_two_step(data, {ties, solver})
                                       : fit_collapsed_model(data, solver);
  } else {
    if (method != Method::kTwoStep) throw InputError("penalties apply to the two-step method only");
    CvConfig config{parse_penalty(o.penalty), o.mixing, ties, solver, run.workers};
    std::vector<double> log_eta = o.log_eta;
    if (log_eta.size() == 1) log_eta.assign(static_cast<std::size_t>(data.m()), log_eta.front());
    if (log_eta.empty()) {
      TuningGrid grid;
      grid.log_eta = parse_grid(o.grid);
      grid.folds = o.folds;
      grid.seed = require_seed(run);
      grid.fold_local_alpha = o.cv_alpha == "fold";
      const CvResult cv = cv_select_eta(data, grid, config);
      run.write("cv.csv", cv_csv(cv));
      run.write("cv_summary.csv", cv_summary_csv(cv));
      if (!cv.warnings.empty()) run.extra["cv_warnings"] = cv.warnings;
      log_eta = cv.selected_log_eta;
      run.extra["selected_log_eta"] = numbers(Eigen::Map<const Eigen::VectorXd>(
          log_eta.data(), static_cast<Eigen::Index>(log_eta.size())));
    } else if (static_cast<int>(log_eta.size()) != data.m()) {
      throw InputError("--log-eta needs one value or one per event type");
    }
    model = fit_penalized_model(data, log_eta, config);
  }
  run.write("model.json", model_to_json(model));
  run.write("coefficients.csv", coefficient_csv(model));
  print_coefficient_table(out, model);
}

// ---------------------------------------------------------------- predict

struct PredictOptions {
  std::string model;
  std::string covariates;
  std::string times = "all";
};

void cmd_predict(Run& run, const PredictOptions& o) {
  run.inputs = {o.model, o.covariates};
  const FittedModel model = read_model(o.model);
  const CovariateTable table = read_covariates_csv(o.covariates);
  if (table.z.cols() != model.p) {
    throw InputError("covariate file has " + std::to_string(table.z.cols()) +
                     " columns, the model expects " + std::to_string(model.p));
  }
  std::vector<int> times;
  if (o.times == "all") {
    for (int t = 1; t <= model.d; ++t) times.push_back(t);
  } else {
    for (const double t : parse_grid(o.times)) {
      if (t != std::floor(t) || t < 1) throw InputError("times must be positive integers");
      if (t > model.d) {
        throw InputError("t > d: requested t = " + fmt(t) + " but the model horizon is d = " +
                         std::to_string(model.d));
      }
      times.push_back(static_cast<int>(t));
    }
  }
  const HazardParams params = params_from_model(model);
  std::vector<Curves> curves(static_cast<std::size_t>(table.z.rows()));
  std::vector<Diagnostics> diagnostics(curves.size());
  parallel_for(curves.size(), resolve_workers(run.workers), [&](std::size_t i) {
    const Eigen::VectorXd z = table.z.row(static_cast<Eigen::Index>(i)).transpose();
    curves[i] = predict_curves(params, {z.data(), static_cast<std::size_t>(z.size())},
                               &diagnostics[i]);
  });
  std::ostringstream csv;
  csv << "id,j,t,cif\n";
  Diagnostics total;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    total.merge(diagnostics[i]);
    for (int j = 1; j <= model.m; ++j) {
      for (const int t : times) {
        csv << table.ids[i] << ',' << j << ',' << t << ',' << fmt(curves[i].cif(j - 1, t - 1))
            << '\n';
      }
    }
  }
  run.write("predictions.csv", csv.str());
  run.extra["admissibility"] = {{"violations", total.violations},
                                {"clamps", total.clamps},
                                {"worst_sum", total.worst_sum},
                                {"worst_t", total.worst_t}};
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOptions {
  std::string model;
  std::string data;
};

void cmd_evaluate(Run& run, const EvaluateOptions& o) {
  run.inputs.push_back(o.model);
  const FittedModel model = read_model(o.model);
  const Dataset data = load_dataset(run, o.data, model.d, model.m);
  if (data.p() != model.p) {
    throw InputError("dataset has " + std::to_string(data.p()) + " covariates, the model expects " +
                     std::to_string(model.p));
  }
  const MetricsReport report = evaluate(params_from_model(model), data, resolve_workers(run.workers));
  std::ostringstream csv;
  csv << "j,t,auc,brier,n_events,n_at_risk\n";
  for (const auto& c : report.cells) {
    csv << c.j << ',' << c.t << ',' << fmt(c.auc) << ',' << fmt(c.brier) << ',' << c.events << ','
        << c.at_risk << '\n';
  }
  run.write("metrics.csv", csv.str());
  json summary{{"auc_global", number(report.auc_global)},
               {"brier_global", number(report.brier_global)},
               {"auc_j", numbers(report.auc_j)},
               {"brier_j", numbers(report.brier_j)},
               {"global_weights", numbers(report.global_weights)}};
  run.write("metrics_summary.json", summary.dump(2) + "\n");
}

// ---------------------------------------------------------------- screen

struct ScreenOptions {
  std::string data;
  std::string ties = "breslow";
  int horizon = 0;
  int events = 0;
  bool lasso = false;
  int folds = 3;
  std::string grid = "-12:-2:0.5";
};

void cmd_screen(Run& run, const ScreenOptions& o) {
  const Dataset data = load_dataset(run, o.data, o.horizon, o.events);
  const std::uint64_t seed = require_seed(run);
  const TieMethod ties = parse_tie_method(o.ties);
  const SolverConfig solver = solver_from(run.workers, 10);

  const auto write_screening = [&](const ScreeningResult& s) {
    std::ostringstream csv;
    csv << "j,k,beta,abs_beta,selected\n";
    for (int j = 1; j <= data.m(); ++j) {
      const auto& chosen = s.selected[j - 1];
      for (int k = 0; k < data.p(); ++k) {
        const double b = s.fits.beta(j - 1, k);
        const bool in = std::binary_search(chosen.begin(), chosen.end(), k);
        csv << j << ',' << k + 1 << ',' << fmt(b) << ',' << fmt(std::abs(b)) << ',' << (in ? 1 : 0)
            << '\n';
      }
    }
    run.write("screening.csv", csv.str());
    json selected = json::array();
    for (const auto& cols : s.selected) {
      json names = json::array();
      for (const int k : cols) names.push_back(data.covariate_names()[k]);
      selected.push_back(std::move(names));
    }
    run.write("screening.json", json{{"threshold", number(s.threshold)},
                                     {"permutation_seed", s.permutation_seed},
                                     {"selected", selected},
                                     {"failures", s.fits.failures}}
                                        .dump(2) +
                                    "\n");
  };

  if (!o.lasso) {
    write_screening(sis(data, seed, ties, solver));
    return;
  }
  TuningGrid grid;
  grid.log_eta = parse_grid(o.grid);
  grid.folds = o.folds;
  grid.seed = seed;
  const CvConfig config{PenaltyKind::kLasso, 1.0, ties, solver, run.workers};
  const SisLassoResult result = sis_lasso(data, seed, grid, config);
  write_screening(result.screening);
  run.write("cv.csv", cv_csv(result.cv));
  std::ostringstream csv;
  csv << "j,k,covariate,beta,log_eta\n";
  for (const auto& event : result.events) {
    for (const int k : event.selected) {
      csv << event.j << ',' << k + 1 << ',' << data.covariate_names()[k] << ','
          << fmt(result.model.coefficients[event.j - 1].beta[k]) << ',' << fmt(event.log_eta)
          << '\n';
    }
  }
  run.write("sis_lasso.csv", csv.str());
  run.write("model.json", model_to_json(result.model));
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  int setting = 0;
  int reps = 0;
  int n = 0;
  int p = 0;
  std::string methods = "two-step";
  std::string ties = "breslow";
  std::string inadmissible = "error";
  bool emit_data = false;
  bool no_fit = false;
};

SimulationConfig configure(const SimulateOptions& o, std::uint64_t seed) {
  SimulationConfig config = preset(o.setting);
  if (o.n > 0) config.n = o.n;
  if (o.p > 0) config = resize_covariates(config, o.p);
  if (o.reps > 0) config.reps = o.reps;
  config.seed = seed;
  config.inadmissible = parse_inadmissible_policy(o.inadmissible);
  config.validate();
  return config;
}

std::vector<Method> parse_methods(const std::string& text) {
  std::vector<Method> methods;
  for (const auto& part : split_csv_line(text)) methods.push_back(parse_method(part));
  if (methods.empty()) throw InputError("no estimator selected");
  return methods;
}

json report_json(const ReplicationReport& report, const SimulationConfig& config) {
  const auto summaries = [](const std::vector<ParameterSummary>& list) {
    json out = json::array();
    for (const auto& s : list) {
      out.push_back({{"name", s.name},
                     {"j", s.j},
                     {"k", s.k >= 0 ? json(s.k + 1) : json(nullptr)},
                     {"t", s.t > 0 ? json(s.t) : json(nullptr)},
                     {"truth", number(s.truth)},
                     {"mean", number(s.mean)},
                     {"mean_se", number(s.mean_se)},
                     {"empirical_se", number(s.empirical_se)},
                     {"coverage", number(s.coverage)},
                     {"count", s.count}});
    }
    return out;
  };
  json methods = json::array();
  for (const auto& m : report.methods) {
    methods.push_back({{"method", to_string(m.method)},
                       {"failures", m.failures},
                       {"valid", m.valid},
                       {"failure_messages", m.failure_messages},
                       {"beta", summaries(m.beta)},
                       {"alpha", summaries(m.alpha)}});
  }
  return {{"setting", report.setting},
          {"reps", report.reps},
          {"seed", report.seed},
          {"dims", {{"n", config.n}, {"p", config.p}, {"d", config.d}, {"m", config.m}}},
          {"event_mix_percent", report.event_mix},
          {"methods", methods}};
}

std::string summary_csv(const ReplicationReport& report) {
  std::ostringstream csv;
  csv << "method,parameter,truth,mean,est_se,emp_se,cr,count\n";
  for (const auto& m : report.methods) {
    for (const auto* list : {&m.beta, &m.alpha}) {
      for (const auto& s : *list) {
        csv << to_string(m.method) << ',' << s.name << ',' << fmt(s.truth) << ',' << fmt(s.mean)
            << ',' << fmt(s.mean_se) << ',' << fmt(s.empirical_se) << ',' << fmt(s.coverage) << ','
            << s.count << '\n';
      }
    }
  }
  return csv.str();
}

void cmd_simulate(Run& run, const SimulateOptions& o) {
  const std::uint64_t seed = require_seed(run);
  const SimulationConfig config = configure(o, seed);
  run.extra["setting"] = config.setting;
  run.extra["reps"] = config.reps;
  if (o.emit_data) {
    int rescaled_total = 0;
    for (int r = 0; r < config.reps; ++r) {
      int rescaled = 0;
      const Dataset data = sample_dataset(config, derive_seed(seed, static_cast<std::uint64_t>(r)),
                                          run.workers, &rescaled);
      rescaled_total += rescaled;
      std::ostringstream csv;
      write_dataset_csv(csv, data);
      run.write("data/" + rep_name(r), csv.str());
    }
    if (config.inadmissible == InadmissiblePolicy::kRescale) {
      run.extra["rescaled_subjects"] = rescaled_total;
    }
  }
  if (o.no_fit) return;

  ReplicationOptions options;
  options.methods = parse_methods(o.methods);
  options.ties = parse_tie_method(o.ties);
  options.workers = run.workers;
  const ReplicationReport report = run_replications(config, config.reps, options);

  std::vector<std::ostringstream> per_rep(static_cast<std::size_t>(config.reps));
  for (auto& csv : per_rep) csv << "method,parameter,estimate,se\n";
  std::ostringstream all;
  all << "rep,method,parameter,estimate,se\n";
  for (const auto& e : report.estimates) {
    per_rep[e.rep] << to_string(e.method) << ',' << e.parameter << ',' << fmt(e.estimate) << ','
                   << fmt(e.se) << '\n';
    all << e.rep + 1 << ',' << to_string(e.method) << ',' << e.parameter << ',' << fmt(e.estimate)
        << ',' << fmt(e.se) << '\n';
  }
  for (int r = 0; r < config.reps; ++r) run.write("reps/" + rep_name(r), per_rep[r].str());
  run.write("estimates.csv", all.str());
  run.write("summary.csv", summary_csv(report));
  run.write("report.json", report_json(report, config).dump(2) + "\n");
}

// ---------------------------------------------------------------- compare

struct CompareOptions {
  std::string data;
  int setting = 0;
  int reps = 0;
  int n = 0;
  std::string ties = "breslow";
  int horizon = 0;
  int events = 0;
  std::string inadmissible = "error";
};

std::string event_counts_csv(const Dataset& data) {
  const RiskSetSummary risk = risk_sets(data);
  std::ostringstream csv;
  csv << "t,j,events,at_risk\n";
  for (int t = 1; t <= data.d(); ++t) {
    for (int j = 1; j <= data.m(); ++j) csv << t << ',' << j << ',' << risk.nj(j, t) << ',' << risk.y(t) << '\n';
  }
  return csv.str();
}

void compare_single(Run& run, const Dataset& data, const SimulationConfig* truth,
                    TieMethod ties) {
  const SolverConfig solver = solver_from(run.workers, 10);
  const FittedModel two = fit_two_step(data, {ties, solver});
  const FittedModel col = fit_collapsed_model(data, solver);
  const auto truth_of = [&](bool is_beta, int j, int index) {
    if (!truth) return kNaN;
    return is_beta ? truth->beta(j - 1, index) : truth->alpha(j - 1, index);
  };

  std::ostringstream side;
  side << "parameter,j,k,t,truth,two_step,two_step_se,collapsed,collapsed_se,difference\n";
  for (int j = 1; j <= data.m(); ++j) {
    const auto& a = two.coefficients[j - 1];
    const auto& b = col.coefficients[j - 1];
    for (int k = 0; k < data.p(); ++k) {
      side << "beta_" << j << '_' << k + 1 << ',' << j << ',' << k + 1 << ",," << fmt(truth_of(true, j, k))
           << ',' << fmt(a.beta[k]) << ',' << fmt(std::sqrt(a.covariance(k, k))) << ','
           << fmt(b.beta[k]) << ',' << fmt(std::sqrt(b.covariance(k, k))) << ','
           << fmt(a.beta[k] - b.beta[k]) << '\n';
    }
  }
  std::ostringstream plot;
  plot << "j,t,truth,two_step,two_step_lower,two_step_upper,collapsed,collapsed_lower,"
          "collapsed_upper\n";
  for (int j = 1; j <= data.m(); ++j) {
    for (int t = 1; t <= data.d(); ++t) {
      const double a = two.baseline.alpha(j - 1, t - 1);
      const double as = std::sqrt(two.baseline.variance(j - 1, t - 1));
      const double b = col.baseline.alpha(j - 1, t - 1);
      const double bs = std::sqrt(col.baseline.variance(j - 1, t - 1));
      side << "alpha_" << j << '_' << t << ',' << j << ",," << t << ','
           << fmt(truth_of(false, j, t - 1)) << ',' << fmt(a) << ',' << fmt(as) << ',' << fmt(b)
           << ',' << fmt(bs) << ',' << fmt(a - b) << '\n';
      plot << j << ',' << t << ',' << fmt(truth_of(false, j, t - 1)) << ',' << fmt(a) << ','
           << fmt(a - kZ975 * as) << ',' << fmt(a + kZ975 * as) << ',' << fmt(b) << ','
           << fmt(b - kZ975 * bs) << ',' << fmt(b + kZ975 * bs) << '\n';
    }
  }
  run.write("side_by_side.csv", side.str());
  run.write("alpha_plot.csv", plot.str());
  run.write("event_counts.csv", event_counts_csv(data));
  run.write("two_step_model.json", model_to_json(two));
  run.write("collapsed_model.json", model_to_json(col));
}

void compare_replications(Run& run, const SimulationConfig& config, TieMethod ties) {
  ReplicationOptions options;
  options.methods = {Method::kTwoStep, Method::kCollapsed};
  options.ties = ties;
  options.workers = run.workers;
  const ReplicationReport report = run_replications(config, config.reps, options);
  const MethodSummary& two = report.methods[0];
  const MethodSummary& col = report.methods[1];

  std::ostringstream table;
  table << "parameter,j,k,t,truth,two_step_mean,two_step_est_se,two_step_emp_se,two_step_cr,"
           "collapsed_mean,collapsed_est_se,collapsed_emp_se,collapsed_cr\n";
  const auto row = [&](const ParameterSummary& a, const ParameterSummary& b) {
    table << a.name << ',' << a.j << ',' << (a.k >= 0 ? std::to_string(a.k + 1) : "") << ','
          << (a.t > 0 ? std::to_string(a.t) : "") << ',' << fmt(a.truth) << ',' << fmt(a.mean)
          << ',' << fmt(a.mean_se) << ',' << fmt(a.empirical_se) << ',' << fmt(a.coverage) << ','
          << fmt(b.mean) << ',' << fmt(b.mean_se) << ',' << fmt(b.empirical_se) << ','
          << fmt(b.coverage) << '\n';
  };
  for (std::size_t i = 0; i < two.beta.size(); ++i) row(two.beta[i], col.beta[i]);
  for (std::size_t i = 0; i < two.alpha.size(); ++i) row(two.alpha[i], col.alpha[i]);
  run.write("replication_table.csv", table.str());

  std::ostringstream plot;
  plot << "j,t,truth,two_step,collapsed\n";
  for (std::size_t i = 0; i < two.alpha.size(); ++i) {
    const auto& a = two.alpha[i];
    plot << a.j << ',' << a.t << ',' << fmt(a.truth) << ',' << fmt(a.mean) << ','
         << fmt(col.alpha[i].mean) << '\n';
  }
  run.write("alpha_plot.csv", plot.str());

  // Mean event counts per (t, j) across the replications.
  Eigen::MatrixXd events = Eigen::MatrixXd::Zero(config.m, config.d);
  Eigen::VectorXd at_risk = Eigen::VectorXd::Zero(config.d);
  for (int r = 0; r < config.reps; ++r) {
    const Dataset data = sample_dataset(config, derive_seed(config.seed, static_cast<std::uint64_t>(r)),
                                        run.workers);
    const RiskSetSummary risk = risk_sets(data);
    events += risk.events.cast<double>();
    for (int t = 1; t <= config.d; ++t) at_risk[t - 1] += risk.y(t);
  }
  std::ostringstream bars;
  bars << "t,j,mean_events,mean_at_risk\n";
  for (int t = 1; t <= config.d; ++t) {
    for (int j = 1; j <= config.m; ++j) {
      bars << t << ',' << j << ',' << fmt(events(j - 1, t - 1) / config.reps) << ','
           << fmt(at_risk[t - 1] / config.reps) << '\n';
    }
  }
  run.write("event_counts.csv", bars.str());
  run.write("report.json", report_json(report, config).dump(2) + "\n");
}

void cmd_compare(Run& run, const CompareOptions& o) {
  const TieMethod ties = parse_tie_method(o.ties);
  if (!o.data.empty()) {
    compare_single(run, load_dataset(run, o.data, o.horizon, o.events), nullptr, ties);
    return;
  }
  if (o.setting == 0) throw InputError("compare needs --data or --setting");
  SimulateOptions sim;
  sim.setting = o.setting;
  sim.n = o.n;
  sim.reps = std::max(o.reps, 1);
  sim.inadmissible = o.inadmissible;
  const SimulationConfig config = configure(sim, require_seed(run));
  run.extra["setting"] = config.setting;
  if (o.reps <= 1) {
    compare_single(run, sample_dataset(config, config.seed, run.workers), &config, ties);
  } else {
    compare_replications(run, config, ties);
  }
}

// ---------------------------------------------------------------- driver

std::string error_type(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const InputError*>(&e)) return "input";
  if (dynamic_cast<const EstimationError*>(&e)) return "estimation";
  return "runtime";
}

std::string_view kind_name(EstimationError::Kind kind) {
  switch (kind) {
    case EstimationError::Kind::kNoEvents: return "no_events";
    case EstimationError::Kind::kNotIdentifiable: return "not_identifiable";
    case EstimationError::Kind::kDivergence: return "divergence";
    case EstimationError::Kind::kCombinatorialBlowup: return "combinatorial_blowup";
    case EstimationError::Kind::kNotConverged: return "not_converged";
    case EstimationError::Kind::kSingular: return "singular";
    case EstimationError::Kind::kEvaluation: return "evaluation";
  }
  return "unknown";
}

int report_error(std::ostream& err, const std::string& command, const std::exception& e, int code) {
  json body{{"command", command}, {"type", error_type(e)}, {"message", e.what()}, {"exit_code", code}};
  if (const auto* estimation = dynamic_cast<const EstimationError*>(&e)) {
    body["kind"] = kind_name(estimation->kind());
  }
  err << json{{"error", body}}.dump() << '\n';
  return code;
}

void add_common(CLI::App* sub, Run& run, bool seeded) {
  sub->add_option("--out,-o", run.out, "Output directory")->required();
  sub->add_option("--workers", run.workers, "Worker threads (default: DTSCR_WORKERS or 1)")
      ->check(CLI::NonNegativeNumber);
  if (seeded) sub->add_option("--seed", run.seed, "Random seed");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discrete-time competing-risks regression", "dtscr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DTSCR_VERSION);

  Run run;
  for (std::size_t i = 1; i < args.size(); ++i) run.args.push_back(args[i]);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the model to a dataset CSV");
  add_common(fit_cmd, run, true);
  fit_cmd->add_option("--data,-d", fit.data, "Dataset CSV (id,time,event,z...)")->required();
  fit_cmd->add_option("--method", fit.method, "two-step or collapsed");
  fit_cmd->add_option("--ties", fit.ties, "breslow or exact");
  fit_cmd->add_option("--horizon", fit.horizon, "Administrative horizon d");
  fit_cmd->add_option("--events", fit.events, "Number of event types M");
  fit_cmd->add_option("--exact-limit", fit.exact_limit, "Largest tied event count for exact ties");
  fit_cmd->add_option("--penalty", fit.penalty, "none, lasso, ridge or elastic-net");
  fit_cmd->add_option("--mixing", fit.mixing, "Elastic-net L1 share");
  fit_cmd->add_option("--log-eta-grid", fit.grid, "Tuning grid start:stop:step or a list");
  fit_cmd->add_option("--log-eta", fit.log_eta, "Fixed log eta (one, or one per event type)")
      ->delimiter(',');
  fit_cmd->add_option("--folds", fit.folds, "Cross-validation folds");
  fit_cmd->add_option("--cv-alpha", fit.cv_alpha, "Baselines inside CV: fold or full")
      ->check(CLI::IsMember({"fold", "full"}));
  fit_cmd->add_flag("--export-expanded", fit.export_expanded, "Write the person-period rows");

  PredictOptions predict;
  auto* predict_cmd = app.add_subcommand("predict", "Cumulative incidence curves per subject");
  add_common(predict_cmd, run, false);
  predict_cmd->add_option("--model,-m", predict.model, "Model JSON")->required();
  predict_cmd->add_option("--covariates,-c", predict.covariates, "Covariate CSV")->required();
  predict_cmd->add_option("--times", predict.times, "all, a list, or start:stop:step");

  EvaluateOptions evaluate_opts;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "AUC and Brier scores on a dataset");
  add_common(evaluate_cmd, run, false);
  evaluate_cmd->add_option("--model,-m", evaluate_opts.model, "Model JSON")->required();
  evaluate_cmd->add_option("--data,-d", evaluate_opts.data, "Dataset CSV")->required();

  ScreenOptions screen;
  auto* screen_cmd = app.add_subcommand("screen", "Marginal screening with a permutation threshold");
  add_common(screen_cmd, run, true);
  screen_cmd->add_option("--data,-d", screen.data, "Dataset CSV")->required();
  screen_cmd->add_option("--ties", screen.ties, "breslow or exact");
  screen_cmd->add_option("--horizon", screen.horizon, "Administrative horizon d");
  screen_cmd->add_option("--events", screen.events, "Number of event types M");
  screen_cmd->add_flag("--lasso", screen.lasso, "Follow screening with a tuned lasso");
  screen_cmd->add_option("--folds", screen.folds, "Cross-validation folds for --lasso");
  screen_cmd->add_option("--log-eta-grid", screen.grid, "Tuning grid for --lasso");

  SimulateOptions simulate;
  auto* simulate_cmd = app.add_subcommand("simulate", "Replication study of a preset setting");
  add_common(simulate_cmd, run, true);
  simulate_cmd->add_option("--setting", simulate.setting, "Preset 1..19")->required();
  simulate_cmd->add_option("--reps", simulate.reps, "Replications (default: the preset's)");
  simulate_cmd->add_option("--n", simulate.n, "Override the sample size");
  simulate_cmd->add_option("--p", simulate.p, "Override the number of covariates");
  simulate_cmd->add_option("--methods", simulate.methods, "Comma list of estimators");
  simulate_cmd->add_option("--ties", simulate.ties, "breslow or exact");
  simulate_cmd->add_option("--inadmissible", simulate.inadmissible,
                           "error (default) or rescale periods whose hazards sum past 1");
  simulate_cmd->add_flag("--emit-data", simulate.emit_data, "Write every sampled dataset");
  simulate_cmd->add_flag("--no-fit", simulate.no_fit, "Only sample (use with --emit-data)");

  CompareOptions compare;
  auto* compare_cmd = app.add_subcommand("compare", "Two-step and collapsed estimates side by side");
  add_common(compare_cmd, run, true);
  compare_cmd->add_option("--data,-d", compare.data, "Dataset CSV");
  compare_cmd->add_option("--setting", compare.setting, "Preset 1..19 instead of --data");
  compare_cmd->add_option("--reps", compare.reps, "Replications (> 1 summarizes across replications)");
  compare_cmd->add_option("--n", compare.n, "Override the preset sample size");
  compare_cmd->add_option("--ties", compare.ties, "breslow or exact");
  compare_cmd->add_option("--inadmissible", compare.inadmissible, "error or rescale");
  compare_cmd->add_option("--horizon", compare.horizon, "Administrative horizon d");
  compare_cmd->add_option("--events", compare.events, "Number of event types M");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("dtscr");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) return app.exit(e, out, err);
    return report_error(err, "", InputError(e.what()), 2);
  }

  const auto* chosen = app.get_subcommands().front();
  run.command = chosen->get_name();
  const auto start = std::chrono::steady_clock::now();
  try {
    if (chosen == fit_cmd) cmd_fit(run, fit, out);
    else if (chosen == predict_cmd) cmd_predict(run, predict);
    else if (chosen == evaluate_cmd) cmd_evaluate(run, evaluate_opts);
    else if (chosen == screen_cmd) cmd_screen(run, screen);
    else if (chosen == simulate_cmd) cmd_simulate(run, simulate);
    else cmd_compare(run, compare);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    run.write_manifest(seconds);
  } catch (const InputError& e) {
    return report_error(err, run.command, e, 2);
  } catch (const Error& e) {
    return report_error(err, run.command, e, 1);
  } catch (const fs::filesystem_error& e) {
    return report_error(err, run.command, e, 2);
  } catch (const std::exception& e) {
    return report_error(err, run.command, e, 1);
  }
  return 0;
}

}  // namespace dtscr::cli
