#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace dtscr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad CSV, failed validation, unknown preset, bad flags.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A simulation configuration that cannot produce valid probabilities.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

/// Failure inside an estimation routine.
class EstimationError : public Error {
 public:
  enum class Kind {
    kNoEvents,
    kNotIdentifiable,
    kDivergence,
    kCombinatorialBlowup,
    kNotConverged,
    kSingular,
    kEvaluation,
  };

  EstimationError(Kind kind, const std::string& message)
      : Error(message), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Iterative solver ran out of iterations; carries the last iterate.
class NonConvergenceError : public EstimationError {
 public:
  NonConvergenceError(const std::string& message, Eigen::VectorXd last_iterate)
      : EstimationError(Kind::kNotConverged, message),
        last_iterate_(std::move(last_iterate)) {}

  const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }

 private:
  Eigen::VectorXd last_iterate_;
};

}  // namespace dtscr
