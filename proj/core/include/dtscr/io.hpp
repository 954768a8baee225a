#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "dtscr/dataset.hpp"

namespace dtscr {

/// Input layout: header `id,time,event,z1,...,zp`, one subject per line.
/// Empty covariate fields load as NaN and fail validation later.
Dataset parse_dataset_csv(std::istream& in, DatasetOptions options = {},
                          const std::string& source = "<stream>");
Dataset read_dataset_csv(const std::filesystem::path& path, DatasetOptions options = {});

/// Writes the input layout with round-trip precision.
void write_dataset_csv(std::ostream& out, const Dataset& dataset);

/// Debug export of the person-period rows: `id,t,j1,...,jM,z1,...,zp`.
void write_expanded_csv(std::ostream& out, const Dataset& dataset);

/// Covariates for prediction. Accepts `id,z1,...` or the full dataset layout
/// (time and event columns are ignored).
struct CovariateTable {
  std::vector<std::string> ids;
  std::vector<std::string> names;
  Eigen::MatrixXd z;
};
CovariateTable read_covariates_csv(const std::filesystem::path& path);

std::vector<std::string> split_csv_line(std::string_view line);

/// Six significant digits, used for every human-facing table.
std::string format_number(double value);
/// Shortest representation that round-trips.
std::string format_exact(double value);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace dtscr
