#include "wmcf/calib.hpp"

#include "wmcf/errors.hpp"
#include "wmcf/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace wmcf::calib {

double Cutoff::value(double s) const {
  const double q = c * s * s;
  return q < 1.0 ? (1.0 - q) * (1.0 - q) : 0.0;
}

double Cutoff::derivative(double s) const {
  const double q = c * s * s;
  return q < 1.0 ? -4.0 * c * s * (1.0 - q) : 0.0;
}

namespace {

// p(0) = 0, p(1) = 1, p'(0) = 1, p'(1) = 0, p''(0) = p''(1) = 0; p' >= 0 on [0, 1].
double blend(double t) { return t * (1.0 + t * t * (4.0 + t * (-7.0 + 3.0 * t))); }
double blend_derivative(double t) { return 1.0 + t * t * (12.0 + t * (-28.0 + 15.0 * t)); }

}  // namespace

double Truncation::value(double s) const {
  const double a = std::abs(s);
  const double half = 0.5 * r;
  double v;
  if (a <= half) return s;
  if (a >= r) {
    v = r;
  } else {
    v = half + half * blend((a - half) / half);
  }
  return std::copysign(v, s);
}

double Truncation::derivative(double s) const {
  const double a = std::abs(s);
  const double half = 0.5 * r;
  if (a <= half) return 1.0;
  if (a >= r) return 0.0;
  return blend_derivative((a - half) / half);
}

Calibration::Calibration(sharp::SharpTrajectory traj, SmoothScalar sigma, std::function<double(double)> speed,
                         double r, double c)
    : traj_(std::move(traj)), sigma_(std::move(sigma)), speed_(std::move(speed)), r_(r), cutoff_{c}, trunc_{r} {
  if (traj_.kind != sharp::InterfaceKind::sphere) throw InputError("calibrations need a radial trajectory");
  if (traj_.orientation != 1.0) throw InputError("calibrations take A inside the circle");
  if (!(r > 0.0)) throw InputError("tube radius must be positive");
  if (!(c * r * r > 1.0)) throw InputError("quadratic-decay constant must exceed 1/r^2");
  const double min_r = *std::min_element(traj_.r.begin(), traj_.r.end());
  if (r >= min_r) {
    std::ostringstream msg;
    msg << "tube radius " << r << " is not below the minimal radius " << min_r;
    throw GeometryError(msg.str());
  }
}

Calibration Calibration::frozen(Point center, double R, SmoothScalar sigma, double r, double c) {
  sharp::SharpTrajectory traj;
  traj.kind = sharp::InterfaceKind::sphere;
  traj.center = center;
  traj.t = {0.0, 1.0};
  traj.r = {R, R};
  traj.rate = {0.0, 0.0};
  return Calibration(std::move(traj), std::move(sigma), [](double) { return 0.0; }, r, c);
}

namespace {

struct Polar {
  double rho;
  Vec2 n;  // inner normal of the circle through the projection
  double s;
};

Polar polar(const sharp::SharpTrajectory& traj, Point x, double t) {
  const Vec2 d = x - traj.center;
  const double rho = norm(d);
  // At the center the normal is irrelevant: the point is outside the tube.
  const Vec2 n = rho > 0.0 ? (-1.0 / rho) * d : Vec2{1.0, 0.0};
  return {rho, n, traj.position(t) - rho};
}

}  // namespace

double Calibration::sdist(Point x, double t) const { return polar(traj_, x, t).s; }
double Calibration::dist(Point x, double t) const { return std::abs(sdist(x, t)); }
Vec2 Calibration::normal(Point x, double t) const { return polar(traj_, x, t).n; }

Vec2 Calibration::xi(Point x, double t) const {
  const Polar p = polar(traj_, x, t);
  return cutoff_.value(p.s) * p.n;
}

Mat2 Calibration::grad_xi(Point x, double t) const {
  const Polar p = polar(traj_, x, t);
  const double g = cutoff_.value(p.s);
  const double dg = cutoff_.derivative(p.s);
  if (g == 0.0 && dg == 0.0) return {};
  const Mat2 nn = outer(p.n, p.n);
  return dg * nn + (-g / p.rho) * (Mat2::identity() + (-1.0) * nn);
}

Vec2 Calibration::B(Point x, double t) const { return speed(t) * xi(x, t); }
Mat2 Calibration::grad_B(Point x, double t) const { return speed(t) * grad_xi(x, t); }
double Calibration::theta(Point x, double t) const { return trunc_.value(sdist(x, t)); }

Vec2 Calibration::grad_theta(Point x, double t) const {
  const Polar p = polar(traj_, x, t);
  return trunc_.derivative(p.s) * p.n;
}

Calibration build_calibration(const sharp::SharpTrajectory& traj, const SmoothScalar& sigma, std::optional<double> r,
                              std::optional<double> c) {
  if (traj.r.empty()) throw InputError("empty trajectory");
  const double min_r = *std::min_element(traj.r.begin(), traj.r.end());
  const double rr = r.value_or(0.4 * min_r);
  const double cc = c.value_or(1.01 / (rr * rr));
  const sharp::RadialSigma rs = sharp::radial_restriction(sigma, traj.center);
  const int N = traj.N;
  const sharp::SharpTrajectory copy = traj;
  auto speed = [copy, rs, N](double t) {
    const double R = copy.position(t);
    return (N - 1) / R + rs.derivative(R) / rs.value(R);
  };
  return Calibration(traj, sigma, speed, rr, cc);
}

SampleCloud make_sample_cloud(const Calibration& cal, std::size_t n, std::uint64_t seed, double d_min, double d_max,
                              double t_margin, double on_interface_fraction) {
  if (!(d_min > 0.0) || !(d_max > d_min)) throw InputError("need 0 < d_min < d_max");
  const auto& traj = cal.trajectory();
  const double t0 = traj.t_begin() + t_margin;
  const double t1 = traj.t_end() - t_margin;
  if (!(t1 > t0)) throw InputError("trajectory too short for the sample margin");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SampleCloud cloud;
  cloud.x.reserve(n);
  cloud.t.reserve(n);
  const double log_lo = std::log(d_min), log_hi = std::log(d_max);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0 + (t1 - t0) * unit(rng);
    const double angle = 2.0 * std::numbers::pi * unit(rng);
    const double R = traj.position(t);
    double rho = R;
    if (unit(rng) >= on_interface_fraction) {
      const double d = std::exp(log_lo + (log_hi - log_lo) * unit(rng));
      rho = unit(rng) < 0.5 ? R - std::min(d, 0.999 * R) : R + d;
    }
    cloud.x.push_back(traj.center + rho * Vec2{std::cos(angle), std::sin(angle)});
    cloud.t.push_back(t);
  }
  return cloud;
}

bool ResidualReport::invariants_ok(double tol) const {
  return length_excess <= tol && boundary_xi_error <= tol && boundary_B_error <= tol && boundary_theta <= tol &&
         theta_sign_ok && std::isfinite(theta_constant) && theta_constant < 1e6;
}

bool ResidualReport::near_ok() const {
  const auto r = ratios();
  const double scale[4] = {near_dist, near_dist * near_dist, near_dist, near_dist};
  for (int i = 0; i < 4; ++i) {
    if (near_max[i] > r[i] * scale[i] * (1.0 + 1e-6) + 1e-12) return false;
  }
  return true;
}

namespace {

struct Residuals {
  double r[4];
  double closed[4];
};

Residuals residuals_at(const Calibration& cal, Point x, double t, double h) {
  const Vec2 xi = cal.xi(x, t);
  const Mat2 J = cal.grad_xi(x, t);
  const Vec2 B = cal.B(x, t);
  const Mat2 JB = cal.grad_B(x, t);
  const Vec2 dth = cal.grad_theta(x, t);

  // Five-point centered stencil with step h.
  const Vec2 xp2 = cal.xi(x, t + 2.0 * h), xp = cal.xi(x, t + h);
  const Vec2 xm = cal.xi(x, t - h), xm2 = cal.xi(x, t - 2.0 * h);
  const double w = 1.0 / (12.0 * h);
  const Vec2 dt_xi = w * (8.0 * (xp - xm) - (xp2 - xm2));
  const double dt_xi2 = w * (8.0 * (dot(xp, xp) - dot(xm, xm)) - (dot(xp2, xp2) - dot(xm2, xm2)));
  auto th = [&](double dt) { return cal.theta(x, t + dt); };
  const double dt_theta = w * (8.0 * (th(h) - th(-h)) - (th(2.0 * h) - th(-2.0 * h)));

  Residuals out{};
  const Vec2 r1 = dt_xi + J.apply(B) + JB.apply_transpose(xi);
  out.r[0] = norm(r1);
  out.r[1] = std::abs(dt_xi2 + dot(B, 2.0 * J.apply_transpose(xi)));
  out.r[2] = std::abs(dt_theta + dot(B, dth));
  const double s = cal.sigma()(x);
  out.r[3] = std::abs(-J.trace() - dot(cal.sigma().gradient(x), xi) / s - dot(B, xi));

  // Closed forms of the same four residuals for the radial construction.
  const double sd = cal.sdist(x, t);
  const double g = cal.cutoff().value(sd), dg = cal.cutoff().derivative(sd);
  const double V = cal.speed(t);
  const Vec2 e = x - cal.trajectory().center;
  const double rho = norm(e);
  out.closed[0] = std::abs(dg * V * (2.0 * g - 1.0));
  out.closed[1] = std::abs(2.0 * g * dg * V * (g - 1.0));
  out.closed[2] = std::abs(cal.truncation().derivative(sd) * V * (g - 1.0));
  const double dlog = rho > 0.0 ? dot(cal.sigma().gradient(x), (1.0 / rho) * e) / s : 0.0;
  out.closed[3] = g == 0.0 && dg == 0.0 ? 0.0 : std::abs(-dg + g / rho + g * dlog - V * g * g);
  return out;
}

}  // namespace

ResidualReport calibration_residuals(const Calibration& cal, const SampleCloud& cloud, double fd_step) {
  constexpr double on_interface = 1e-12;
  ResidualReport rep;
  rep.samples = cloud.x.size();
  rep.fd_step = fd_step;
  const double edge = 1.0 / std::sqrt(cal.c());
  const long count = static_cast<long>(cloud.x.size());

  double r1 = 0, r2 = 0, r3 = 0, r4 = 0, n1 = 0, n2 = 0, n3 = 0, n4 = 0, at = 0;
  double len = 0, bxi = 0, bB = 0, bth = 0, tc = 0, gap = 0;
  long n_at = 0, n_near = 0, sign_bad = 0;
#pragma omp parallel for reduction(max : r1, r2, r3, r4, n1, n2, n3, n4, at, len, bxi, bB, bth, tc, gap) \
    reduction(+ : n_at, n_near, sign_bad)
  for (long k = 0; k < count; ++k) {
    const Point x = cloud.x[static_cast<std::size_t>(k)];
    const double t = cloud.t[static_cast<std::size_t>(k)];
    const double sd = cal.sdist(x, t);
    const double d = std::abs(sd);
    const Residuals res = residuals_at(cal, x, t, fd_step);
    // g and tau are not smooth at the support edge and the blend ends; stencils straddling
    // those radii are not compared.
    const double reach = 2.5 * fd_step * std::abs(cal.speed(t));
    if (std::abs(d - edge) > reach && std::abs(d - 0.5 * cal.r()) > reach && std::abs(d - cal.r()) > reach) {
      for (int i = 0; i < 4; ++i) gap = std::max(gap, std::abs(res.r[i] - res.closed[i]));
    }

    const Vec2 xi = cal.xi(x, t);
    len = std::max(len, norm(xi) - std::max(0.0, 1.0 - cal.c() * d * d));
    const double th = cal.theta(x, t);
    if (d < on_interface) {
      ++n_at;
      at = std::max({at, res.r[0], res.r[1], res.r[2], res.r[3]});
      const Vec2 nrm = cal.normal(x, t);
      bxi = std::max(bxi, std::abs(dot(xi, nrm) - 1.0));
      bB = std::max(bB, norm(cal.B(x, t) - cal.speed(t) * nrm));
      bth = std::max(bth, std::abs(th));
      continue;
    }
    if ((sd > 0.0) != (th > 0.0) || th == 0.0) ++sign_bad;
    if (th != 0.0) tc = std::max(tc, std::min(d, 1.0) / std::abs(th));
    if (d < rep.near_dist) {
      ++n_near;
      n1 = std::max(n1, res.r[0]);
      n2 = std::max(n2, res.r[1]);
      n3 = std::max(n3, res.r[2]);
      n4 = std::max(n4, res.r[3]);
    } else {
      r1 = std::max(r1, res.r[0] / d);
      r2 = std::max(r2, res.r[1] / (d * d));
      r3 = std::max(r3, res.r[2] / d);
      r4 = std::max(r4, res.r[3] / d);
    }
  }
  rep.r1_ratio = r1;
  rep.r2_ratio = r2;
  rep.r3_ratio = r3;
  rep.r4_ratio = r4;
  rep.near_max = {n1, n2, n3, n4};
  rep.interface_max = at;
  rep.interface_samples = static_cast<std::size_t>(n_at);
  rep.near_samples = static_cast<std::size_t>(n_near);
  rep.length_excess = len;
  rep.boundary_xi_error = bxi;
  rep.boundary_B_error = bB;
  rep.boundary_theta = bth;
  rep.theta_sign_ok = sign_bad == 0;
  rep.theta_constant = tc;
  rep.closed_form_gap = gap;
  return rep;
}

WeakInterface nodes_of(const sharp::SharpInterface& A, int nodes) { return sharp::boundary_nodes(A, nodes); }

WeakInterface nodes_from_levelset(const grid::LevelSetSample& sample, const grid::Field& v) {
  if (sample.dim != 2) throw InputError("level-set nodes need a 2D sample");
  const grid::VectorField gv = grid::gradient_neumann(v);
  const grid::Grid& g = v.grid();
  WeakInterface out;
  out.reserve(sample.segments.size());
  for (const auto& seg : sample.segments) {
    const Vec2 d = seg.q - seg.p;
    const double len = norm(d);
    if (len == 0.0) continue;
    const Point mid = 0.5 * (seg.p + seg.q);
    Vec2 n{-d.y / len, d.x / len};
    // Orient along grad v at the nearest cell.
    const double hx = g.spacing(0), hy = g.spacing(1);
    const int i = std::clamp(static_cast<int>((mid.x - g.lower(0)) / hx), 0, g.cells(0) - 1);
    const int j = std::clamp(static_cast<int>((mid.y - g.lower(1)) / hy), 0, g.cells(1) - 1);
    if (dot(n, gv[g.index(i, j)]) < 0.0) n = -n;
    out.push_back({mid, n, len});
  }
  return out;
}

double relative_energy(const WeakInterface& weak, const Calibration& cal, double t) {
  long double s = 0.0L;
  for (const auto& node : weak) {
    s += node.weight * cal.sigma()(node.x) * (1.0 - dot(node.n, cal.xi(node.x, t)));
  }
  return static_cast<double>(s);
}

double relative_energy(const sharp::SharpInterface& weak, const Calibration& cal, double t, int nodes) {
  return relative_energy(nodes_of(weak, nodes), cal, t);
}

namespace {

// Parameter interval [a, b] of the ray center + rho e inside the weak circle; empty if a >= b.
std::pair<double, double> chord(const sharp::SharpInterface& weak, Point center, Vec2 e) {
  const Vec2 d = center - weak.center;
  const double bq = dot(d, e);
  const double cq = dot(d, d) - weak.radius * weak.radius;
  const double disc = bq * bq - cq;
  if (disc <= 0.0) return {0.0, 0.0};
  const double root = std::sqrt(disc);
  return {std::max(0.0, -bq - root), std::max(0.0, -bq + root)};
}

}  // namespace

double bulk_energy(const sharp::SharpInterface& weak, const Calibration& cal, double t, int angular) {
  if (weak.kind != sharp::InterfaceKind::sphere || weak.orientation != 1.0) {
    throw InputError("polar bulk energy needs a weak disk");
  }
  const Point c = cal.trajectory().center;
  const double R = cal.radius(t);
  long double total = 0.0L;
  for (int k = 0; k < angular; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / angular;
    const Vec2 e{std::cos(angle), std::sin(angle)};
    auto f = [&](double rho) {
      const Point x = c + rho * e;
      return cal.sigma()(x) * cal.theta(x, t) * rho;
    };
    auto piece = [&](double a, double b) {
      if (!(b > a)) return 0.0;
      // Split at the kinks of the truncation so the rule sees smooth pieces.
      std::vector<double> cuts{a, b};
      for (double q : {R - cal.r(), R - 0.5 * cal.r(), R, R + 0.5 * cal.r(), R + cal.r()}) {
        if (q > a && q < b) cuts.push_back(q);
      }
      std::sort(cuts.begin(), cuts.end());
      double v = 0.0;
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) v += numerics::integrate(f, cuts[i], cuts[i + 1], 1e-13).value;
      return v;
    };
    const auto [a, b] = chord(weak, c, e);
    // chi_strong - chi_weak along the ray: + on [0, R] \ [a, b], - on [a, b] \ [0, R].
    double v = 0.0;
    if (b > a) {
      v += piece(0.0, std::min(a, R)) + piece(std::max(b, 0.0), R);
      v -= piece(std::max(a, R), b);
    } else {
      v += piece(0.0, R);
    }
    total += v;
  }
  return static_cast<double>(total) * 2.0 * std::numbers::pi / angular;
}

double bulk_energy(const grid::Field& chi_weak, const Calibration& cal, double t) {
  const grid::Grid& g = chi_weak.grid();
  if (g.dim() != 2) throw InputError("bulk energy needs a 2D indicator");
  long double s = 0.0L;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.center_of(k);
    const double strong = cal.sdist(x, t) > 0.0 ? 1.0 : 0.0;
    s += cal.sigma()(x) * (strong - chi_weak[k]) * cal.theta(x, t);
  }
  return static_cast<double>(s) * g.cell_volume();
}

CoercivityReport coercivity_check(const WeakInterface& weak, const Calibration& cal, double t) {
  CoercivityReport rep;
  long double e = 0, tilt = 0, slack = 0, id = 0, dt = 0, th = 0;
  for (const auto& node : weak) {
    const double w = node.weight * cal.sigma()(node.x);
    const Vec2 xi = cal.xi(node.x, t);
    const Vec2 diff = node.n - xi;
    const double rel = 1.0 - dot(node.n, xi);
    const double ti = 0.5 * dot(diff, diff);
    const double sl = 0.5 * (1.0 - dot(xi, xi));
    e += w * rel;
    tilt += w * ti;
    slack += w * sl;
    id += std::abs(w * (rel - ti - sl));
    const double d = cal.dist(node.x, t);
    dt += w * std::min(d * d, 1.0);
    const double theta = cal.theta(node.x, t);
    th += w * theta * theta;
  }
  rep.e_rel = static_cast<double>(e);
  rep.tilt = static_cast<double>(tilt);
  rep.slack = static_cast<double>(slack);
  rep.identity_error = static_cast<double>(id);
  rep.dist_term = static_cast<double>(dt);
  rep.theta_term = static_cast<double>(th);
  if (rep.e_rel > 1e-14) {
    rep.dist_constant = rep.dist_term / rep.e_rel;
    rep.theta_constant = rep.theta_term / rep.e_rel;
  }
  return rep;
}

namespace {

double fit_constant(const std::vector<double>& t, const std::vector<double>& lhs, double base,
                    const std::vector<double>& integrand, double tol, bool& ok) {
  const double dt = t.size() > 1 ? t[1] - t[0] : 0.0;
  const std::vector<double> cum = numerics::cumulative_trapezoid(integrand, dt);
  double C = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k) {
    const double rise = lhs[k] - base;
    if (cum[k] < 1e-14) {
      if (rise > tol) ok = false;
      continue;
    }
    C = std::max(C, rise / cum[k]);
  }
  return C;
}

}  // namespace

GronwallFit gronwall_fit(const std::vector<GronwallRow>& rows, double tol) {
  GronwallFit fit;
  if (rows.empty()) return fit;
  std::vector<double> t, rel, bulk, sum;
  for (const auto& r : rows) {
    t.push_back(r.t);
    rel.push_back(r.e_rel);
    bulk.push_back(r.e_bulk);
    sum.push_back(r.e_rel + r.e_bulk);
  }
  bool ok = true;
  fit.C_rel = fit_constant(t, rel, rel.front(), rel, tol, ok);
  fit.C_bulk = fit_constant(t, bulk, rel.front() + bulk.front(), sum, tol, ok);
  fit.C = std::max(fit.C_rel, fit.C_bulk);
  fit.zero_case = std::abs(rel.front()) <= tol && std::abs(bulk.front()) <= tol;
  if (fit.zero_case) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (std::abs(rel[k]) > tol || std::abs(bulk[k]) > tol) fit.zero_case_ok = false;
    }
  }
  fit.guard_ok = ok;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double bound = rel.front() * std::exp(fit.C * (t[k] - t.front()));
    if (rel[k] > bound * (1.0 + 1e-12) + 1e-15) fit.exponential_bound_ok = false;
  }
  return fit;
}

void GronwallReport::write_csv(std::ostream& out) const {
  out << std::setprecision(17) << "t,E_rel,E_bulk,coercivity_slack,fitted_C\n";
  for (const auto& r : rows) {
    out << r.t << ',' << r.e_rel << ',' << r.e_bulk << ',' << r.coercivity_slack << ',' << fit.C << '\n';
  }
}

namespace {

std::vector<GronwallRow> energy_rows(const sharp::SharpTrajectory& weak, const Calibration& cal, double t_prime,
                                     int intervals) {
  std::vector<GronwallRow> rows(static_cast<std::size_t>(intervals) + 1);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k <= intervals; ++k) {
    const double t = t_prime * k / intervals;
    const sharp::SharpInterface w = weak.at(t);
    const WeakInterface nodes = nodes_of(w);
    const CoercivityReport co = coercivity_check(nodes, cal, t);
    rows[static_cast<std::size_t>(k)] = {t, co.e_rel, bulk_energy(w, cal, t), co.slack, co.tilt, co.identity_error};
  }
  return rows;
}

}  // namespace

GronwallReport gronwall_verify(const sharp::SharpTrajectory& weak, const Calibration& cal, double t_prime,
                               int intervals, double tol) {
  if (intervals < 2) throw InputError("need at least two time intervals");
  const double end = std::min(weak.t_end(), cal.trajectory().t_end());
  if (t_prime > end * (1.0 + 1e-12)) throw InputError("T' exceeds the common trajectory window");
  GronwallReport rep;
  rep.rows = energy_rows(weak, cal, t_prime, intervals);
  rep.fit = gronwall_fit(rep.rows, tol);
  rep.fit_refined = gronwall_fit(energy_rows(weak, cal, t_prime, 2 * intervals), tol);
  const double a = rep.fit.C, b = rep.fit_refined.C;
  if (a <= 0.0 && b <= 0.0) {
    rep.stable = true;
  } else {
    rep.stable = a > 0.0 && b > 0.0 && std::max(a, b) <= 2.0 * std::min(a, b);
  }
  return rep;
}

}  // namespace wmcf::calib
