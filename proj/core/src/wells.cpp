#include "wmcf/wells.hpp"

#include "wmcf/errors.hpp"
#include "wmcf/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>

namespace wmcf::wells {

namespace {

void check_domain(const WellSpec& spec, Point x) {
  if (spec.domain && !spec.domain->contains(x)) {
    std::ostringstream msg;
    msg << "position (" << x.x << ", " << x.y << ") outside the domain of well '" << spec.name << "'";
    throw DomainError(msg.str());
  }
}

double clamped_sqrt2(double w) { return std::sqrt(2.0 * std::max(w, 0.0)); }

}  // namespace

WellSpec quartic(const SmoothScalar& m, const SmoothScalar& a, const SmoothScalar& b, std::string name) {
  WellSpec spec;
  spec.name = std::move(name);
  spec.a = a.value;
  spec.b = b.value;
  spec.grad_a = a.gradient;
  spec.grad_b = b.gradient;
  spec.W = [m, a, b](Point x, double u) {
    const double p = (u - a(x)) * (u - b(x));
    return m(x) * p * p;
  };
  spec.dW_du = [m, a, b](Point x, double u) {
    const double ua = u - a(x), ub = u - b(x);
    return 2.0 * m(x) * ua * ub * (ua + ub);
  };
  spec.d2W_du2 = [m, a, b](Point x, double u) {
    const double ua = u - a(x), ub = u - b(x);
    return 2.0 * m(x) * (ua * ua + ub * ub + 4.0 * ua * ub);
  };
  spec.dW_dx = [m, a, b](Point x, double u) {
    const double ua = u - a(x), ub = u - b(x);
    const double mx = m(x);
    const Vec2 gm = m.gradient(x), ga = a.gradient(x), gb = b.gradient(x);
    return (ua * ua * ub * ub) * gm - (2.0 * mx * ua * ub * ub) * ga - (2.0 * mx * ua * ua * ub) * gb;
  };
  return spec;
}

WellSpec canonical_quartic(double a, double b) {
  if (!(b > a)) throw InputError("canonical quartic requires a < b");
  WellSpec spec = quartic(constant_scalar(1.0), constant_scalar(a), constant_scalar(b), "canonical_quartic");
  spec.delta_sep = b - a;
  spec.x_independent = true;
  return spec;
}

SmoothScalar constant_scalar(double c) {
  return {[c](Point) { return c; }, [](Point) { return Vec2{}; }};
}

SmoothScalar affine_scalar(double c0, Vec2 g) {
  return {[c0, g](Point x) { return c0 + dot(g, x); }, [g](Point) { return g; }};
}

SmoothScalar exponential_scalar(double c, Vec2 k) {
  return {[c, k](Point x) { return c * std::exp(dot(k, x)); },
          [c, k](Point x) { return (c * std::exp(dot(k, x))) * k; }};
}

SmoothScalar sin2_scalar(double c) {
  return {[c](Point x) {
            const double s = std::sin(M_PI * x.x);
            return c * (1.0 + s * s);
          },
          [c](Point x) { return Vec2{c * M_PI * std::sin(2.0 * M_PI * x.x), 0.0}; }};
}

SmoothScalar quadratic_x_scalar(double c0, double c1) {
  return {[c0, c1](Point x) { return c0 + c1 * x.x * x.x; },
          [c1](Point x) { return Vec2{2.0 * c1 * x.x, 0.0}; }};
}

WellSpec with_domain(WellSpec spec, const Box& domain) {
  spec.domain = domain;
  return spec;
}

double gamma(const WellSpec& spec, Point x) {
  check_domain(spec, x);
  return spec.b(x) - spec.a(x);
}

double normalized_well(const WellSpec& spec, Point x, double v) {
  check_domain(spec, x);
  const double a = spec.a(x);
  return spec.W(x, a + (spec.b(x) - a) * v);
}

double surface_tension(const WellSpec& spec, Point x, double tol) {
  check_domain(spec, x);
  const double a = spec.a(x), b = spec.b(x);
  const double value = numerics::integrate([&](double s) { return clamped_sqrt2(spec.W(x, s)); }, a, b, tol).value;
  if (!(value > 0.0)) throw NumericError("surface tension is not positive", value);
  return value;
}

double sigma_n(const WellSpec& spec, Point x, double tol) {
  check_domain(spec, x);
  const double value = numerics::integrate(
      [&](double s) { return clamped_sqrt2(normalized_well(spec, x, s)); }, 0.0, 1.0, tol).value;
  if (!(value > 0.0)) throw NumericError("normalized surface tension is not positive", value);
  return value;
}

double geodesic_distance(const WellSpec& spec, Point x, double v, double tol) {
  check_domain(spec, x);
  return numerics::integrate([&](double s) { return clamped_sqrt2(normalized_well(spec, x, s)); }, 0.0, v, tol)
      .value;
}

SmoothScalar sigma_field(const WellSpec& spec, double tol) {
  auto value = [spec, tol](Point x) { return surface_tension(spec, x, tol); };
  auto gradient = [spec, tol](Point x) {
    constexpr double h = 1e-5;
    const double gx = (surface_tension(spec, {x.x + h, x.y}, tol) - surface_tension(spec, {x.x - h, x.y}, tol)) / (2 * h);
    const double gy = (surface_tension(spec, {x.x, x.y + h}, tol) - surface_tension(spec, {x.x, x.y - h}, tol)) / (2 * h);
    return Vec2{gx, gy};
  };
  return {value, gradient};
}

SampleLattice make_lattice(const Box& box, int nx, int ny, double u_min, double u_max, int u_samples) {
  SampleLattice lattice;
  lattice.u_min = u_min;
  lattice.u_max = u_max;
  lattice.u_samples = u_samples;
  lattice.dim = box.dim;
  const int my = box.dim == 1 ? 1 : ny;
  for (int j = 0; j < my; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double tx = nx == 1 ? 0.5 : static_cast<double>(i) / (nx - 1);
      const double ty = my == 1 ? 0.5 : static_cast<double>(j) / (my - 1);
      lattice.points.push_back({box.lower.x + tx * (box.upper.x - box.lower.x),
                                box.dim == 1 ? 0.0 : box.lower.y + ty * (box.upper.y - box.lower.y)});
    }
  }
  return lattice;
}

AssumptionReport validate_assumptions(const WellSpec& spec, const SampleLattice& lattice) {
  AssumptionReport rep;
  rep.min_W = std::numeric_limits<double>::infinity();
  rep.min_gamma = std::numeric_limits<double>::infinity();
  rep.C1 = rep.C1_near = std::numeric_limits<double>::infinity();
  rep.C2 = rep.C2_near = 0.0;
  constexpr double fd = 1e-5;
  constexpr double flag = 1e6;

  const int nu = std::max(lattice.u_samples, 2);
  std::vector<double> us(nu);
  for (int k = 0; k < nu; ++k) us[k] = lattice.u_min + (lattice.u_max - lattice.u_min) * k / (nu - 1);

  // (u, W) pairs for the coercivity fit.
  std::vector<std::pair<double, double>> growth;
  double monotone_C = 0.0;
  bool monotone_found = true;

  for (const Point& x : lattice.points) {
    const double a = spec.a(x), b = spec.b(x);
    const double g = b - a;
    rep.min_gamma = std::min(rep.min_gamma, g);
    rep.max_well_value = std::max({rep.max_well_value, std::abs(spec.W(x, a)), std::abs(spec.W(x, b))});

    for (double well : {a, b}) {
      for (double sgn : {-1.0, 1.0}) {
        const double r = spec.W(x, well + sgn * rep.near_distance) / (rep.near_distance * rep.near_distance);
        rep.C1_near = std::min(rep.C1_near, r);
        rep.C2_near = std::max(rep.C2_near, r);
      }
    }

    // Sign pattern of dW/du beyond the wells: find the smallest sampled C.
    double c_here = std::max(std::abs(a), std::abs(b));
    for (double u : us) {
      const double d = spec.dW_du(x, u);
      if (u > 0.0 && d < 0.0) c_here = std::max(c_here, u);
      if (u < 0.0 && d > 0.0) c_here = std::max(c_here, -u);
    }
    if (c_here >= std::max(std::abs(lattice.u_min), std::abs(lattice.u_max))) monotone_found = false;
    monotone_C = std::max(monotone_C, c_here);

    for (double u : us) {
      const double w = spec.W(x, u);
      rep.min_W = std::min(rep.min_W, w);
      growth.emplace_back(u, w);
      const double dist = std::min(std::abs(u - a), std::abs(u - b));
      if (dist > 0.0 && dist < 1.0) {
        const double r = w / (dist * dist);
        rep.C1 = std::min(rep.C1, r);
        rep.C2 = std::max(rep.C2, r);
      }
    }

    // Derivative control in the normalized variable.
    for (int k = 1; k < nu - 1; ++k) {
      const double v = static_cast<double>(k) / (nu - 1);
      const double wn = normalized_well(spec, x, v);
      if (wn <= 1e-12) continue;
      double grad2 = 0.0;
      const int axes = lattice.dim;
      for (int axis = 0; axis < axes; ++axis) {
        Point xp = x, xm = x;
        (axis == 0 ? xp.x : xp.y) += fd;
        (axis == 0 ? xm.x : xm.y) -= fd;
        const double wp = spec.W(xp, spec.a(xp) + (spec.b(xp) - spec.a(xp)) * v);
        const double wm = spec.W(xm, spec.a(xm) + (spec.b(xm) - spec.a(xm)) * v);
        const double d = (std::sqrt(std::max(wp, 0.0)) - std::sqrt(std::max(wm, 0.0))) / (2 * fd);
        grad2 += d * d;
      }
      rep.derivative_control_C = std::max(rep.derivative_control_C, std::sqrt(grad2) / std::sqrt(wn));
    }
  }

  // Smallest C with W + C >= u^2 / C at every sample; monotone in C.
  auto holds = [&](double c) {
    return std::all_of(growth.begin(), growth.end(),
                       [c](const auto& p) { return p.second + c >= p.first * p.first / c; });
  };
  double lo = 1e-6, hi = 1e6;
  if (!holds(hi)) {
    rep.coercivity_ok = false;
    rep.coercivity_C = std::numeric_limits<double>::infinity();
  } else {
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
      const double mid = std::sqrt(lo * hi);
      (holds(mid) ? hi : lo) = mid;
    }
    rep.coercivity_C = hi;
  }

  if (monotone_found) rep.monotone_C = monotone_C;
  rep.structure_ok = rep.min_W >= -1e-12 && rep.max_well_value <= 1e-12 && rep.min_gamma >= spec.delta_sep - 1e-12 &&
                     rep.min_gamma > 0.0;
  rep.derivative_control_ok = rep.derivative_control_C <= flag;
  const bool growth_ok = rep.C1 > 0.0 && rep.C2 <= flag && rep.C1_near > 0.0 && rep.C2_near <= flag;
  rep.violation = !rep.structure_ok || !rep.coercivity_ok || !rep.derivative_control_ok || !growth_ok;
  return rep;
}

namespace {

struct ProfileTable {
  double ds = 0.0;
  double s_lo = 0.0;  // first sample; v clamps to 0 below
  double s_hi = 0.0;  // last sample; v clamps to 1 above
  std::vector<double> v;
  std::vector<double> dv;

  double operator()(double s) const {
    if (s <= s_lo) return 0.0;
    if (s >= s_hi) return 1.0;
    const double t = (s - s_lo) / ds;
    const std::size_t k = std::min(static_cast<std::size_t>(t), v.size() - 2);
    const double u = t - static_cast<double>(k);
    // Cubic Hermite with exact slopes from the ODE right-hand side.
    const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
    const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
    return std::clamp(h00 * v[k] + h10 * ds * dv[k] + h01 * v[k + 1] + h11 * ds * dv[k + 1], 0.0, 1.0);
  }
};

numerics::ScalarRhs profile_rhs(const WellSpec& spec, Point x) {
  const double a = spec.a(x), g = spec.b(x) - a;
  return [&spec, x, a, g](double, double v) {
    if (v <= 0.0 || v >= 1.0) return 0.0;
    return clamped_sqrt2(spec.W(x, a + g * v));
  };
}

// Distance from s = 0 at which the profile enters the tail band, in one direction.
double tail_extent(const WellSpec& spec, Point x, double direction, const ProfileOptions& opt) {
  numerics::OdeOptions o;
  o.abs_tol = opt.abs_tol;
  o.rel_tol = opt.abs_tol;
  auto rhs = profile_rhs(spec, x);
  auto stop = [&](double, double v) { return direction > 0 ? 1.0 - v < opt.tail : v < opt.tail; };
  // Grow the horizon until the tail condition is reached.
  for (double horizon = 8.0; horizon < 1e8; horizon *= 4.0) {
    auto sol = numerics::solve_scalar_ode(rhs, 0.0, 0.5, {direction * horizon}, o, stop);
    if (sol.stopped) return std::abs(sol.t_stop);
  }
  throw NumericError("optimal profile never reached the tail band", 0.0);
}

}  // namespace

double optimal_profile(const WellSpec& spec, Point x, double s, const ProfileOptions& options) {
  check_domain(spec, x);
  if (s == 0.0) return 0.5;
  numerics::OdeOptions o;
  o.abs_tol = options.abs_tol;
  o.rel_tol = options.abs_tol;
  const double direction = s > 0 ? 1.0 : -1.0;
  auto stop = [&](double, double v) { return direction > 0 ? 1.0 - v < options.tail : v < options.tail; };
  auto sol = numerics::solve_scalar_ode(profile_rhs(spec, x), 0.0, 0.5, {s}, o, stop);
  if (sol.stopped) return direction > 0 ? 1.0 : 0.0;
  if (sol.samples.empty()) throw NumericError("optimal profile ODE produced no output", 0.0);
  return std::clamp(sol.samples.back().y, 0.0, 1.0);
}

struct ProfileSampler::Impl {
  const WellSpec* spec = nullptr;
  Point x_ref;
  ProfileOptions options;
  ProfileTable table;
  std::vector<double> probes{0.1, 0.25, 0.5, 0.75, 0.9};
  std::vector<double> ref_values;
  mutable std::atomic<std::size_t> fallbacks{0};
};

ProfileSampler::ProfileSampler(const WellSpec& spec, Point x_ref, const ProfileOptions& options)
    : impl_(std::make_unique<Impl>()) {
  impl_->spec = &spec;
  impl_->x_ref = x_ref;
  impl_->options = options;
  const double s_neg = tail_extent(spec, x_ref, -1.0, options);
  const double s_pos = tail_extent(spec, x_ref, 1.0, options);
  constexpr int kSamples = 40000;
  ProfileTable& t = impl_->table;
  t.s_lo = -s_neg;
  t.s_hi = s_pos;
  t.ds = (s_pos + s_neg) / kSamples;

  numerics::OdeOptions o;
  o.abs_tol = options.abs_tol;
  o.rel_tol = options.abs_tol;
  auto rhs = profile_rhs(spec, x_ref);
  const int i0 = static_cast<int>(std::ceil(s_neg / t.ds));  // index of the first sample >= 0
  std::vector<double> fwd, bwd;
  for (int k = i0; k <= kSamples; ++k) fwd.push_back(t.s_lo + k * t.ds);
  for (int k = i0 - 1; k >= 0; --k) bwd.push_back(t.s_lo + k * t.ds);
  t.v.assign(kSamples + 1, 0.0);
  t.dv.assign(kSamples + 1, 0.0);
  auto fill = [&](const std::vector<double>& times, int start, int step) {
    if (times.empty()) return;
    auto sol = numerics::solve_scalar_ode(rhs, 0.0, 0.5, times, o);
    for (std::size_t k = 0; k < sol.samples.size(); ++k) {
      const int idx = start + step * static_cast<int>(k);
      t.v[idx] = std::clamp(sol.samples[k].y, 0.0, 1.0);
      t.dv[idx] = sol.samples[k].dy;
    }
  };
  fill(fwd, i0, 1);
  fill(bwd, i0 - 1, -1);

  const double a = spec.a(x_ref), g = spec.b(x_ref) - a;
  for (double v : impl_->probes) impl_->ref_values.push_back(spec.W(x_ref, a + g * v));
}

ProfileSampler::~ProfileSampler() = default;
ProfileSampler::ProfileSampler(ProfileSampler&&) noexcept = default;
ProfileSampler& ProfileSampler::operator=(ProfileSampler&&) noexcept = default;

double ProfileSampler::operator()(Point x, double s) const {
  const WellSpec& spec = *impl_->spec;
  if (spec.x_independent) return impl_->table(s);
  const double a = spec.a(x), g = spec.b(x) - a;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t k = 0; k < impl_->probes.size(); ++k) {
    const double r = spec.W(x, a + g * impl_->probes[k]) / impl_->ref_values[k];
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  if (lo > 0.0 && hi - lo <= 1e-12 * hi) {
    // W_n(x, .) = lambda^2 W_n(x_ref, .) rescales the profile by lambda.
    return impl_->table(std::sqrt(0.5 * (lo + hi)) * s);
  }
  impl_->fallbacks.fetch_add(1, std::memory_order_relaxed);
  return optimal_profile(spec, x, s, impl_->options);
}

double ProfileSampler::window() const { return std::max(-impl_->table.s_lo, impl_->table.s_hi); }

std::size_t ProfileSampler::ode_fallbacks() const { return impl_->fallbacks.load(); }

}  // namespace wmcf::wells
