#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace ans {

/// Raised when an input document violates its schema. `path()` names the
/// offending field, e.g. `units[2].gmacs` or `learner.mu`.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what),
        path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Raised when learner state can no longer be trusted (non-finite
/// accumulators, failed factorization).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ans
