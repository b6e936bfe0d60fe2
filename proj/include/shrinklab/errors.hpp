#pragma once

#include <stdexcept>
#include <string>

namespace shrinklab {

// Bad input: violated preconditions, malformed configs, out-of-domain
// arguments. The CLI maps these to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what, std::string field = {})
      : std::invalid_argument(what), field_(std::move(field)) {}

  // JSON pointer to the offending field, empty when not applicable.
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Numerical failure: non-convergent quadrature, singular design, non-finite
// log-posterior. The CLI maps these to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularDesignError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

namespace detail {

inline void require(bool ok, const std::string& what, std::string field = {}) {
  if (!ok) throw ValidationError(what, std::move(field));
}

}  // namespace detail

}  // namespace shrinklab
