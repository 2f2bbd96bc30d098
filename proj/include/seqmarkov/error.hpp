#ifndef SEQMARKOV_ERROR_HPP
#define SEQMARKOV_ERROR_HPP

#include <stdexcept>
#include <string>

namespace seqmarkov {

// Base class for every error raised by the library. `kind()` is a short
// machine-parsable class name used by the command-line front-end.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error("input_error", what) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what)
      : Error("dimension_error", what) {}
};

class EstimationError : public Error {
 public:
  explicit EstimationError(const std::string& what)
      : Error("estimation_error", what) {}
};

// Raised by the coefficient M-step when the Newton Hessian is singular or
// too badly conditioned to invert.
class SingularHessianError : public Error {
 public:
  SingularHessianError()
      : Error("singular_hessian",
              "Estimation of gamma coefficients failed due to singular "
              "Hessian.") {}
};

}  // namespace seqmarkov

#endif  // SEQMARKOV_ERROR_HPP
