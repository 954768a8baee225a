#include "dtscr/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <system_error>

#include "dtscr/error.hpp"

namespace dtscr {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool parse_double(std::string_view text, double& value) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size();
}

bool parse_int(std::string_view text, int& value) {
  text = trim(text);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::string where(const std::string& source, long long line) {
  return source + ":" + std::to_string(line) + ": ";
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

Dataset parse_dataset_csv(std::istream& in, DatasetOptions options, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw InputError(source + ": empty file, expected a header");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || trim(header[0]) != "id" || trim(header[1]) != "time" ||
      trim(header[2]) != "event") {
    throw InputError(source + ": header must start with id,time,event");
  }
  std::vector<std::string> names;
  for (std::size_t c = 3; c < header.size(); ++c) names.emplace_back(trim(header[c]));
  const std::size_t p = names.size();

  std::vector<Observation> observations;
  long long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() < 3) throw InputError(where(source, line_no) + "fewer than 3 fields");
    Observation obs;
    obs.id = std::string(trim(fields[0]));
    if (!parse_int(fields[1], obs.time)) {
      throw InputError(where(source, line_no) + "time must be an integer, got '" + fields[1] + "'");
    }
    if (!parse_int(fields[2], obs.event)) {
      throw InputError(where(source, line_no) + "event must be an integer, got '" + fields[2] + "'");
    }
    obs.z.reserve(p);
    for (std::size_t c = 3; c < fields.size(); ++c) {
      double value = std::numeric_limits<double>::quiet_NaN();
      if (!trim(fields[c]).empty() && !parse_double(fields[c], value)) {
        throw InputError(where(source, line_no) + "covariate '" + names[std::min(c - 3, p - 1)] +
                         "' is not a number: '" + fields[c] + "'");
      }
      obs.z.push_back(value);
    }
    observations.push_back(std::move(obs));
  }

  return Dataset::from_observations(observations, options, std::move(names));
}

Dataset read_dataset_csv(const std::filesystem::path& path, DatasetOptions options) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return parse_dataset_csv(in, options, path.string());
}

void write_dataset_csv(std::ostream& out, const Dataset& dataset) {
  out << "id,time,event";
  for (const auto& name : dataset.covariate_names()) out << ',' << name;
  out << '\n';
  for (int i = 0; i < dataset.n(); ++i) {
    out << dataset.id(i) << ',' << dataset.time(i) << ',' << dataset.event(i);
    for (int k = 0; k < dataset.p(); ++k) out << ',' << format_exact(dataset.covariates()(i, k));
    out << '\n';
  }
}

void write_expanded_csv(std::ostream& out, const Dataset& dataset) {
  out << "id,t";
  for (int j = 1; j <= dataset.m(); ++j) out << ",j" << j;
  for (const auto& name : dataset.covariate_names()) out << ',' << name;
  out << '\n';
  for (const auto& record : expand(dataset)) {
    out << dataset.id(record.subject) << ',' << record.t;
    for (int j = 1; j <= dataset.m(); ++j) out << ',' << (record.delta(j) ? 1 : 0);
    for (int k = 0; k < dataset.p(); ++k) {
      out << ',' << format_exact(dataset.covariates()(record.subject, k));
    }
    out << '\n';
  }
}

CovariateTable read_covariates_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
  const auto header = split_csv_line(line);
  if (header.empty() || trim(header[0]) != "id") {
    throw InputError(path.string() + ": header must start with id");
  }
  std::size_t first = 1;
  if (header.size() >= 3 && trim(header[1]) == "time" && trim(header[2]) == "event") first = 3;
  CovariateTable table;
  for (std::size_t c = first; c < header.size(); ++c) table.names.emplace_back(trim(header[c]));
  std::vector<std::vector<double>> rows;
  long long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw InputError(where(path.string(), line_no) + "expected " +
                       std::to_string(header.size()) + " fields");
    }
    table.ids.emplace_back(trim(fields[0]));
    std::vector<double> row;
    for (std::size_t c = first; c < fields.size(); ++c) {
      double value = 0.0;
      if (!parse_double(fields[c], value) || !std::isfinite(value)) {
        throw InputError(where(path.string(), line_no) + "covariate is missing or not a number");
      }
      row.push_back(value);
    }
    rows.push_back(std::move(row));
  }
  table.z.resize(static_cast<Eigen::Index>(rows.size()),
                 static_cast<Eigen::Index>(table.names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      table.z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return table;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "NA";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.6g", value);
  return buffer;
}

std::string format_exact(double value) {
  if (std::isnan(value)) return "NA";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto temp = path;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + temp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InputError("write failed for " + temp.string());
  }
  std::filesystem::rename(temp, path);
}

}  // namespace dtscr
