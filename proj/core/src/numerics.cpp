#include "wmcf/numerics.hpp"

#include "wmcf/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace wmcf::numerics {

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, double tol,
                           unsigned max_depth) {
  if (!(tol > 0.0)) throw InputError("quadrature tolerance must be positive");
  if (a == b) return {};
  using Rule = boost::math::quadrature::gauss_kronrod<double, 15>;
  double error = 0.0;
  double l1 = 0.0;
  // Boost terminates on a relative criterion; translate the absolute target after a coarse pass.
  double coarse = Rule::integrate(f, a, b, 0, 1.0, &error, &l1);
  const double scale = std::max(l1, std::numeric_limits<double>::min());
  const double rel = std::max(tol / scale, 4.0 * std::numeric_limits<double>::epsilon());
  double value = coarse;
  if (error > tol) value = Rule::integrate(f, a, b, max_depth, rel, &error, &l1);
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * l1;
  if (!std::isfinite(value) || error > std::max(tol, floor)) {
    std::ostringstream msg;
    msg << "adaptive quadrature did not reach tol " << tol << " (estimate " << error << ")";
    throw NumericError(msg.str(), error);
  }
  return {value, error};
}

OdeSolution solve_scalar_ode(const ScalarRhs& rhs, double t0, double y0,
                             const std::vector<double>& output_times, const OdeOptions& options,
                             const StopPredicate& stop) {
  namespace ode = boost::numeric::odeint;
  using State = double;
  OdeSolution out;
  if (output_times.empty()) return out;
  const double direction = output_times.back() >= t0 ? 1.0 : -1.0;
  auto system = [&rhs](const State& y, State& dydt, double t) { dydt = rhs(t, y); };
  auto stepper = ode::make_dense_output(options.abs_tol, options.rel_tol,
                                        ode::runge_kutta_dopri5<State>());
  stepper.initialize(y0, t0, direction * options.initial_step);

  std::size_t next = 0;
  auto emit_until = [&](double t_hi) {
    while (next < output_times.size() && direction * (output_times[next] - t_hi) <= 0.0) {
      const double t = output_times[next];
      State y = y0;
      if (t == t0) {
        y = y0;
      } else {
        stepper.calc_state(t, y);
      }
      out.samples.push_back({t, y, rhs(t, y)});
      ++next;
    }
  };
  emit_until(t0);

  std::size_t steps = 0;
  while (next < output_times.size()) {
    if (++steps > options.max_steps) {
      throw NumericError("ODE integration exceeded the step budget", stepper.current_time_step());
    }
    stepper.do_step(system);
    const double t = stepper.current_time();
    const State y = stepper.current_state();
    if (!std::isfinite(y)) throw NumericError("ODE state became non-finite", std::abs(y));
    if (stop && stop(t, y)) {
      // Samples strictly before the stop time are still valid.
      while (next < output_times.size() && direction * (output_times[next] - t) < 0.0) {
        State ys = y0;
        stepper.calc_state(output_times[next], ys);
        if (stop(output_times[next], ys)) break;
        out.samples.push_back({output_times[next], ys, rhs(output_times[next], ys)});
        ++next;
      }
      out.stopped = next < output_times.size();
      out.t_stop = t;
      out.y_stop = y;
      return out;
    }
    emit_until(t);
  }
  out.t_stop = stepper.current_time();
  out.y_stop = stepper.current_state();
  return out;
}

double simpson(const std::vector<double>& v, double dt) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  const std::size_t intervals = n - 1;
  if (intervals % 2 != 0) {
    // Simpson on the first n-1 samples, trapezoid on the last interval.
    std::vector<double> head(v.begin(), v.end() - 1);
    return simpson(head, dt) + 0.5 * dt * (v[n - 2] + v[n - 1]);
  }
  double sum = v.front() + v.back();
  for (std::size_t i = 1; i < n - 1; ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * v[i];
  return sum * dt / 3.0;
}

std::vector<double> cumulative_trapezoid(const std::vector<double>& v, double dt) {
  std::vector<double> out(v.size(), 0.0);
  for (std::size_t i = 1; i < v.size(); ++i) out[i] = out[i - 1] + 0.5 * dt * (v[i - 1] + v[i]);
  return out;
}

}  // namespace wmcf::numerics
