#pragma once

#include <stdexcept>
#include <string>

namespace mfrc {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad configuration or malformed input; maps to CLI exit code 1.
class ValidationError : public Error {
public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

/// Numerical failure (blow-up, non-convergence, singular solve);
/// maps to CLI exit code 2. Carries the pipeline stage that failed.
class NumericError : public Error {
public:
  NumericError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

private:
  std::string stage_;
};

}  // namespace mfrc
