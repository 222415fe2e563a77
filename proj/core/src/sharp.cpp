#include "wmcf/sharp.hpp"

#include "wmcf/errors.hpp"
#include "wmcf/numerics.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace wmcf::sharp {

SharpInterface SharpInterface::point(double p, double orientation) {
  SharpInterface A;
  A.kind = InterfaceKind::point1d;
  A.center = {p, 0.0};
  A.orientation = orientation >= 0 ? 1.0 : -1.0;
  return A;
}

SharpInterface SharpInterface::sphere(Point center, double radius, double orientation) {
  if (!(radius > 0.0)) throw GeometryError("sphere radius must be positive");
  SharpInterface A;
  A.kind = InterfaceKind::sphere;
  A.center = center;
  A.radius = radius;
  A.orientation = orientation >= 0 ? 1.0 : -1.0;
  return A;
}

double SharpInterface::sdist(Point x) const {
  if (kind == InterfaceKind::point1d) return orientation * (x.x - center.x);
  return orientation * (radius - norm(x - center));
}

Vec2 SharpInterface::normal(Point x) const {
  if (kind == InterfaceKind::point1d) return {orientation, 0.0};
  const Vec2 d = x - center;
  const double r = norm(d);
  const Vec2 radial = r > 0.0 ? (1.0 / r) * d : Vec2{1.0, 0.0};
  return -orientation * radial;
}

Point SharpInterface::project(Point x) const {
  if (kind == InterfaceKind::point1d) return {center.x, x.y};
  const Vec2 d = x - center;
  const double r = norm(d);
  const Vec2 radial = r > 0.0 ? (1.0 / r) * d : Vec2{1.0, 0.0};
  return center + radius * radial;
}

double SharpInterface::mean_curvature(int N) const {
  if (kind == InterfaceKind::point1d) return 0.0;
  return orientation * (N - 1) / radius;
}

std::vector<BoundaryNode> boundary_nodes(const SharpInterface& A, int nodes) {
  if (A.kind == InterfaceKind::point1d) return {{A.center, {A.orientation, 0.0}, 1.0}};
  std::vector<BoundaryNode> out(nodes);
  const double w = 2.0 * M_PI * A.radius / nodes;
  for (int k = 0; k < nodes; ++k) {
    const double th = 2.0 * M_PI * k / nodes;
    const Point x = A.center + A.radius * Vec2{std::cos(th), std::sin(th)};
    out[k] = {x, A.normal(x), w};
  }
  return out;
}

double weighted_perimeter(const SharpInterface& A, const SmoothScalar& sigma, int nodes) {
  double sum = 0.0;
  for (const auto& q : boundary_nodes(A, nodes)) sum += q.weight * sigma(q.x);
  return sum;
}

namespace {

// (Id - n x n) : grad Psi; zero in 1D where the tangent space is trivial.
double tangential_divergence(const SharpInterface& A, const Vec2& n, const Mat2& J) {
  if (A.kind == InterfaceKind::point1d) return 0.0;
  return J.trace() - dot(n, J.apply(n));
}

}  // namespace

double sharp_first_variation(const SharpInterface& A, const SmoothScalar& sigma,
                             const variations::TestVectorField& psi, int nodes) {
  double sum = 0.0;
  for (const auto& q : boundary_nodes(A, nodes)) {
    const double s = sigma(q.x);
    sum -= q.weight * (s * tangential_divergence(A, q.n, psi.jacobian(q.x)) + dot(sigma.gradient(q.x), psi.value(q.x)));
  }
  return sum;
}

RadialSigma constant_radial(double c) {
  return {[c](double) { return c; }, [](double) { return 0.0; }};
}

RadialSigma radial_restriction(const SmoothScalar& sigma, Point center) {
  return {[sigma, center](double r) { return sigma(center + Vec2{r, 0.0}); },
          [sigma, center](double r) { return sigma.gradient(center + Vec2{r, 0.0}).x; }};
}

double SharpTrajectory::position(double time) const {
  if (t.size() == 1) return r.front();
  const double dt = t[1] - t[0];
  const double s = std::clamp((time - t.front()) / dt, 0.0, static_cast<double>(t.size() - 1));
  const std::size_t k = std::min(static_cast<std::size_t>(s), t.size() - 2);
  const double u = s - static_cast<double>(k);
  // h00 = 1 - h01, written incrementally so constant data stays exact.
  const double h10 = u * (1 - u) * (1 - u);
  const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
  return r[k] + h01 * (r[k + 1] - r[k]) + h10 * dt * rate[k] + h11 * dt * rate[k + 1];
}

double SharpTrajectory::rate_at(double time) const {
  if (t.size() == 1) return rate.front();
  const double dt = t[1] - t[0];
  const double s = std::clamp((time - t.front()) / dt, 0.0, static_cast<double>(t.size() - 1));
  const std::size_t k = std::min(static_cast<std::size_t>(s), t.size() - 2);
  const double u = s - static_cast<double>(k);
  const double d10 = 3 * u * u - 4 * u + 1;
  const double d01 = -6 * u * u + 6 * u, d11 = 3 * u * u - 2 * u;
  return d01 * (r[k + 1] - r[k]) / dt + d10 * rate[k] + d11 * rate[k + 1];
}

double SharpTrajectory::velocity(double time) const {
  const double d = rate_at(time);
  return kind == InterfaceKind::sphere ? -orientation * d : orientation * d;
}

double SharpTrajectory::velocity_sample(std::size_t k) const {
  return kind == InterfaceKind::sphere ? -orientation * rate[k] : orientation * rate[k];
}

SharpInterface SharpTrajectory::at(double time) const {
  if (kind == InterfaceKind::point1d) return SharpInterface::point(position(time), orientation);
  return SharpInterface::sphere(center, position(time), orientation);
}

namespace {

SharpTrajectory integrate_trajectory(SharpTrajectory traj, double r0, double t_end, const numerics::ScalarRhs& rhs,
                                     const numerics::StopPredicate& stop, const OdeTolerance& tol,
                                     const std::string& reason) {
  if (!(t_end > 0.0)) throw InputError("trajectory end time must be positive");
  const int n = std::max(tol.samples, 2);
  std::vector<double> times(n);
  for (int k = 0; k < n; ++k) times[k] = t_end * k / (n - 1);
  numerics::OdeOptions o;
  o.abs_tol = tol.tol;
  o.rel_tol = tol.tol;
  o.initial_step = std::min(1e-6, t_end / n);
  const auto sol = numerics::solve_scalar_ode(rhs, 0.0, r0, times, o, stop);
  for (const auto& s : sol.samples) {
    traj.t.push_back(s.t);
    traj.r.push_back(s.y);
    traj.rate.push_back(s.dy);
  }
  if (sol.stopped) {
    traj.truncated = true;
    traj.truncation_reason = reason;
  }
  if (traj.t.size() < 2) throw NumericError("trajectory stopped before the first output time", sol.t_stop);
  return traj;
}

}  // namespace

SharpTrajectory evolve_radial(Point center, double R0, const RadialSigma& sigma, double t_end, int N,
                              const OdeTolerance& tol) {
  if (!(R0 > 0.0)) throw InputError("initial radius must be positive");
  constexpr double r_min = 1e-3;
  SharpTrajectory traj;
  traj.kind = InterfaceKind::sphere;
  traj.center = center;
  traj.N = N;
  auto rhs = [&sigma, N](double, double R) {
    return -(N - 1) / R - sigma.derivative(R) / sigma.value(R);
  };
  auto stop = [](double, double R) { return R < r_min; };
  return integrate_trajectory(std::move(traj), R0, t_end, rhs, stop, tol, "extinction");
}

SharpTrajectory evolve_point1d(double p0, const SmoothScalar& sigma, double t_end, double lo, double hi, double margin,
                               const OdeTolerance& tol, double orientation) {
  if (!(p0 > lo && p0 < hi)) throw InputError("initial point must lie inside the interval");
  SharpTrajectory traj;
  traj.kind = InterfaceKind::point1d;
  traj.center = {p0, 0.0};
  traj.orientation = orientation >= 0 ? 1.0 : -1.0;
  traj.N = 1;
  auto rhs = [&sigma](double, double p) {
    const Point x{p, 0.0};
    return -sigma.gradient(x).x / sigma(x);
  };
  auto stop = [lo, hi, margin](double, double p) { return p < lo + margin || p > hi - margin; };
  return integrate_trajectory(std::move(traj), p0, t_end, rhs, stop, tol, "left the domain margin");
}

namespace {

double area_integral(const SharpInterface& A, const std::function<double(Point)>& f, const TransportOptions& opt) {
  using Rule = boost::math::quadrature::gauss<double, 30>;
  if (A.kind == InterfaceKind::point1d) {
    const double p = A.center.x;
    auto g = [&](double x) { return f({x, 0.0}); };
    return A.orientation > 0 ? Rule::integrate(g, p, opt.hi) : Rule::integrate(g, opt.lo, p);
  }
  if (A.orientation < 0) throw InputError("transport residual supports spheres with A inside");
  const int m = opt.angular_nodes;
  double sum = 0.0;
  for (int k = 0; k < m; ++k) {
    const double th = 2.0 * M_PI * k / m;
    const Vec2 e{std::cos(th), std::sin(th)};
    sum += Rule::integrate([&](double rho) { return rho * f(A.center + rho * e); }, 0.0, A.radius);
  }
  return sum * 2.0 * M_PI / m;
}

int even_intervals(int n) { return std::max(2, n + (n % 2)); }

}  // namespace

double transport_residual(const SharpTrajectory& traj, const SpaceTimeTest& zeta, double t_prime,
                          const TransportOptions& options) {
  const double t0 = traj.t_begin();
  if (t_prime < t0 || t_prime > traj.t_end()) throw InputError("T' outside the trajectory");
  auto slice = [&](double time, const std::function<double(Point, double)>& f) {
    return area_integral(traj.at(time), [&](Point x) { return f(x, time); }, options);
  };
  const double lhs = slice(t_prime, zeta.zeta) - slice(t0, zeta.zeta);
  const int n = even_intervals(options.time_intervals);
  const double dt = (t_prime - t0) / n;
  std::vector<double> integrand(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double time = t0 + k * dt;
    const SharpInterface A = traj.at(time);
    double boundary = 0.0;
    for (const auto& q : boundary_nodes(A, options.angular_nodes)) boundary += q.weight * zeta.zeta(q.x, time);
    integrand[k] = slice(time, zeta.dzeta_dt) - traj.velocity(time) * boundary;
  }
  return lhs - numerics::simpson(integrand, dt);
}

double motion_law_residual(const SharpInterface& A, const std::function<double(Point)>& V, const SmoothScalar& sigma,
                           const variations::TestVectorField& psi, int nodes) {
  double sum = 0.0;
  for (const auto& q : boundary_nodes(A, nodes)) {
    const double s = sigma(q.x);
    const Vec2 p = psi.value(q.x);
    sum += q.weight * (s * V(q.x) * dot(p, q.n) + s * tangential_divergence(A, q.n, psi.jacobian(q.x)) +
                       dot(sigma.gradient(q.x), p));
  }
  return sum;
}

DissipationCheck dissipation_check(const SharpTrajectory& traj, const SmoothScalar& sigma, double t_prime,
                                   int time_intervals, double velocity_scale, int nodes) {
  const double t0 = traj.t_begin();
  if (t_prime < t0 || t_prime > traj.t_end()) throw InputError("T' outside the trajectory");
  const int n = even_intervals(time_intervals);
  const double dt = (t_prime - t0) / n;
  std::vector<double> rate(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double time = t0 + k * dt;
    const double V = velocity_scale * traj.velocity(time);
    rate[k] = V * V * weighted_perimeter(traj.at(time), sigma, nodes);
  }
  DissipationCheck out;
  out.rhs = weighted_perimeter(traj.at(t0), sigma, nodes);
  out.lhs = weighted_perimeter(traj.at(t_prime), sigma, nodes) + (dt > 0.0 ? numerics::simpson(rate, dt) : 0.0);
  out.slack = out.rhs - out.lhs;
  return out;
}

void write_csv(const SharpTrajectory& traj, const SmoothScalar& sigma, std::ostream& out) {
  out << std::setprecision(17) << "t,R_or_p,V,energy\n";
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    const SharpInterface A = traj.kind == InterfaceKind::point1d ? SharpInterface::point(traj.r[k], traj.orientation)
                                                                 : SharpInterface::sphere(traj.center, traj.r[k], traj.orientation);
    out << traj.t[k] << ',' << traj.r[k] << ',' << traj.velocity_sample(k) << ',' << weighted_perimeter(A, sigma) << '\n';
  }
}

}  // namespace wmcf::sharp
