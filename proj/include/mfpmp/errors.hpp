#ifndef MFPMP_ERRORS_HPP
#define MFPMP_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace mfpmp {

/// Machine-readable failure classes surfaced by the CLI.
enum class ErrorCategory {
  config,
  divergence,
  line_search,
  io,
  validation,
  constraint,
  symmetry,
};

std::string_view to_string(ErrorCategory category);

/// Base class for recoverable domain failures. Precondition violations on
/// library arguments (mismatched sizes, odd mode counts) throw
/// std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what) : Error(ErrorCategory::divergence, what) {}
};

class ConstraintError : public Error {
 public:
  explicit ConstraintError(const std::string& what) : Error(ErrorCategory::constraint, what) {}
};

class SymmetryError : public Error {
 public:
  explicit SymmetryError(const std::string& what) : Error(ErrorCategory::symmetry, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

}  // namespace mfpmp

#endif  // MFPMP_ERRORS_HPP
