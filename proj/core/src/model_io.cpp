#include "dtscr/model_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dtscr/error.hpp"
#include "dtscr/io.hpp"

namespace dtscr {
namespace {

using nlohmann::json;

json encode(double value) {
  if (std::isnan(value)) return nullptr;
  if (std::isinf(value)) return value > 0 ? "+inf" : "-inf";
  return value;
}

double decode(const json& value) {
  if (value.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (value.is_string()) {
    const auto text = value.get<std::string>();
    if (text == "+inf" || text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    throw InputError("model JSON: unexpected string '" + text + "' in a numeric field");
  }
  return value.get<double>();
}

json encode_matrix(const Eigen::MatrixXd& matrix) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) row.push_back(encode(matrix(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd decode_matrix(const json& rows, Eigen::Index expected_rows,
                              Eigen::Index expected_cols, const char* what) {
  if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != expected_rows) {
    throw InputError(std::string("model JSON: '") + what + "' has the wrong number of rows");
  }
  Eigen::MatrixXd out(expected_rows, expected_cols);
  for (Eigen::Index r = 0; r < expected_rows; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != expected_cols) {
      throw InputError(std::string("model JSON: '") + what + "' has a row of the wrong length");
    }
    for (Eigen::Index c = 0; c < expected_cols; ++c) out(r, c) = decode(row[static_cast<std::size_t>(c)]);
  }
  return out;
}

}  // namespace

std::string model_to_json(const FittedModel& model) {
  json doc;
  doc["format"] = "dtscr-model";
  doc["version"] = 1;
  doc["method"] = std::string(to_string(model.method));
  doc["tie_method"] = std::string(to_string(model.ties));
  doc["alpha_variance_method"] =
      model.method == Method::kTwoStep ? "influence_sandwich" : "observed_information";
  doc["dims"] = {{"n", model.n}, {"p", model.p}, {"d", model.d}, {"m", model.m}};
  doc["covariates"] = model.covariate_names;

  json coefficients = json::array();
  for (const auto& c : model.coefficients) {
    json beta = json::array();
    for (Eigen::Index k = 0; k < c.beta.size(); ++k) beta.push_back(encode(c.beta[k]));
    json covariance = json::array();
    for (Eigen::Index r = 0; r < c.covariance.rows(); ++r) {
      for (Eigen::Index k = 0; k < c.covariance.cols(); ++k) {
        covariance.push_back(encode(c.covariance(r, k)));
      }
    }
    coefficients.push_back({{"j", c.j},
                            {"beta", std::move(beta)},
                            {"covariance", std::move(covariance)},
                            {"converged", c.converged},
                            {"identified", c.identified},
                            {"iterations", c.iterations},
                            {"final_gradient_norm", encode(c.final_gradient_norm)}});
  }
  doc["coefficients"] = std::move(coefficients);
  doc["alpha"] = encode_matrix(model.baseline.alpha);
  doc["alpha_variance"] = encode_matrix(model.baseline.variance);
  json cells = json::array();
  for (const auto& cell : model.baseline.undefined_cells) {
    cells.push_back({{"j", cell.j}, {"t", cell.t}, {"status", std::string(to_string(cell.status))}});
  }
  doc["undefined_cells"] = std::move(cells);
  return doc.dump(2) + "\n";
}

FittedModel model_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw InputError(std::string("model JSON: ") + e.what());
  }
  try {
    if (doc.value("format", "") != "dtscr-model") throw InputError("not a dtscr model document");
    FittedModel model;
    model.method = parse_method(doc.at("method").get<std::string>());
    model.ties = parse_tie_method(doc.at("tie_method").get<std::string>());
    const auto& dims = doc.at("dims");
    model.n = dims.at("n").get<int>();
    model.p = dims.at("p").get<int>();
    model.d = dims.at("d").get<int>();
    model.m = dims.at("m").get<int>();
    model.covariate_names = doc.at("covariates").get<std::vector<std::string>>();
    if (static_cast<int>(model.covariate_names.size()) != model.p) {
      throw InputError("covariate name count does not match p");
    }
    const auto& coefficients = doc.at("coefficients");
    if (static_cast<int>(coefficients.size()) != model.m) {
      throw InputError("expected one coefficient block per event type");
    }
    for (const auto& block : coefficients) {
      CoefficientEstimate c;
      c.j = block.at("j").get<int>();
      const auto& beta = block.at("beta");
      if (static_cast<int>(beta.size()) != model.p) throw InputError("beta length does not match p");
      c.beta.resize(model.p);
      for (int k = 0; k < model.p; ++k) c.beta[k] = decode(beta[static_cast<std::size_t>(k)]);
      const auto& covariance = block.at("covariance");
      if (static_cast<int>(covariance.size()) != model.p * model.p) {
        throw InputError("covariance must hold p*p entries");
      }
      c.covariance.resize(model.p, model.p);
      for (int r = 0; r < model.p; ++r) {
        for (int k = 0; k < model.p; ++k) {
          c.covariance(r, k) = decode(covariance[static_cast<std::size_t>(r * model.p + k)]);
        }
      }
      c.converged = block.value("converged", true);
      c.identified = block.value("identified", true);
      c.iterations = block.value("iterations", 0);
      c.final_gradient_norm = block.contains("final_gradient_norm")
                                  ? decode(block["final_gradient_norm"])
                                  : 0.0;
      model.coefficients.push_back(std::move(c));
    }
    model.baseline.alpha = decode_matrix(doc.at("alpha"), model.m, model.d, "alpha");
    model.baseline.variance =
        decode_matrix(doc.at("alpha_variance"), model.m, model.d, "alpha_variance");
    for (int j = 1; j <= model.m; ++j) {
      for (int t = 1; t <= model.d; ++t) {
        const double a = model.baseline.alpha(j - 1, t - 1);
        if (std::isfinite(a)) continue;
        const CellStatus status = std::isnan(a) ? CellStatus::kEmpty
                                  : a < 0       ? CellStatus::kNoEvents
                                                : CellStatus::kAllEvents;
        model.baseline.undefined_cells.push_back({j, t, status});
      }
    }
    return model;
  } catch (const json::exception& e) {
    throw InputError(std::string("model JSON: ") + e.what());
  }
}

void write_model(const std::filesystem::path& path, const FittedModel& model) {
  write_file_atomic(path, model_to_json(model));
}

FittedModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

}  // namespace dtscr
