#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "dtscr/estimators.hpp"

namespace dtscr {

/// JSON document with dims, method, tie method, per-event beta and row-major
/// covariance, and the alpha/variance grids. Infinite alphas are written as
/// the strings "-inf"/"+inf"; NaN is written as null.
std::string model_to_json(const FittedModel& model);
FittedModel model_from_json(std::string_view text);

void write_model(const std::filesystem::path& path, const FittedModel& model);
FittedModel read_model(const std::filesystem::path& path);

}  // namespace dtscr
