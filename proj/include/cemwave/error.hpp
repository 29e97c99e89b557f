#pragma once

#include <stdexcept>
#include <string>

namespace cemwave {

/// Invalid mesh sizes, config fields or call arguments.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or out-of-range input data (coefficient files, geometry specs).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A linear solve or eigensolve did not reach its tolerance, or a
/// constrained system turned out to be degenerate.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values appeared while marching in time.
class InstabilityError : public std::runtime_error {
 public:
  InstabilityError(const std::string& what, long step)
      : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace cemwave
