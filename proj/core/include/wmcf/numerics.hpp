#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace wmcf::numerics {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

// Adaptive Gauss-Legendre (Kronrod-extended) quadrature with interval bisection.
// Throws NumericError when the absolute error estimate stays above tol.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double tol = 1e-10, unsigned max_depth = 30);

struct OdeOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double initial_step = 1e-3;
  std::size_t max_steps = 2'000'000;
};

struct OdeSample {
  double t = 0.0;
  double y = 0.0;
  double dy = 0.0;
};

struct OdeSolution {
  std::vector<OdeSample> samples;  // one per requested output time that was reached
  bool stopped = false;            // stop predicate fired before the last output time
  double t_stop = 0.0;
  double y_stop = 0.0;
};

using ScalarRhs = std::function<double(double t, double y)>;
using StopPredicate = std::function<bool(double t, double y)>;

// Dormand-Prince 4(5) with dense output. output_times must be monotone in the
// direction of integration (either direction relative to t0 is allowed).
OdeSolution solve_scalar_ode(const ScalarRhs& rhs, double t0, double y0,
                             const std::vector<double>& output_times, const OdeOptions& options = {},
                             const StopPredicate& stop = {});

// Composite Simpson on uniform samples; falls back to trapezoid on an odd interval count.
double simpson(const std::vector<double>& values, double dt);

// Cumulative trapezoid integral, same length as values, first entry zero.
std::vector<double> cumulative_trapezoid(const std::vector<double>& values, double dt);

}  // namespace wmcf::numerics
