#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace wmcf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Position outside the domain a spec or field is defined on.
class DomainError : public Error {
 public:
  using Error::Error;
};

// An iterative method (quadrature, ODE, CG, descent) failed; carries the last error estimate.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, double estimate)
      : Error(what), estimate_(estimate) {}
  double estimate() const noexcept { return estimate_; }

 private:
  double estimate_;
};

// Descent failure that keeps the last iterate for diagnostics.
class DescentError : public NumericError {
 public:
  DescentError(const std::string& what, double estimate, std::vector<double> last)
      : NumericError(what, estimate), last_(std::move(last)) {}
  const std::vector<double>& last_iterate() const noexcept { return last_; }

 private:
  std::vector<double> last_;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// eps not resolved by the grid (eps < 4h).
class ResolutionError : public Error {
 public:
  using Error::Error;
};

class ExtractionError : public Error {
 public:
  using Error::Error;
};

}  // namespace wmcf
