#include "wmcf/test_fields.hpp"

#include "wmcf/errors.hpp"
#include "wmcf/grid.hpp"

#include <algorithm>
#include <cmath>

namespace wmcf::variations {

namespace {

// chi = 1 on [0, r_in], 1 - S((r - r_in)/(r_out - r_in)) with the C^2 quintic S, 0 beyond r_out.
struct Cutoff {
  double r_in;
  double r_out;

  double value(double r) const {
    if (r <= r_in) return 1.0;
    if (r >= r_out) return 0.0;
    const double t = (r - r_in) / (r_out - r_in);
    return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
  }
  double derivative(double r) const {
    if (r <= r_in || r >= r_out) return 0.0;
    const double t = (r - r_in) / (r_out - r_in);
    return -30.0 * t * t * (1.0 - t) * (1.0 - t) / (r_out - r_in);
  }
};

Cutoff make_cutoff(double r_in, double r_out) {
  if (!(r_in >= 0.0 && r_out > r_in)) throw InputError("cutoff needs 0 <= r_in < r_out");
  return {r_in, r_out};
}

}  // namespace

TestVectorField zero_field() {
  return {FieldKind::custom, "zero", [](Point) { return Vec2{}; }, [](Point) { return Mat2{}; }};
}

TestVectorField translation_bump(Point center, Vec2 direction, double rho) {
  if (!(rho > 0.0)) throw InputError("bump radius must be positive");
  auto value = [=](Point x) {
    const double q = dot(x - center, x - center) / (rho * rho);
    if (q >= 1.0) return Vec2{};
    return std::pow(1.0 - q, 3) * direction;
  };
  auto jacobian = [=](Point x) {
    const Vec2 d = x - center;
    const double q = dot(d, d) / (rho * rho);
    if (q >= 1.0) return Mat2{};
    // d_j phi = -6 (1 - q)^2 d_j / rho^2
    const double c = -6.0 * (1.0 - q) * (1.0 - q) / (rho * rho);
    return c * outer(direction, d);
  };
  return {FieldKind::translation_bump, "translation_bump", value, jacobian};
}

TestVectorField dilation(Point center, double r_in, double r_out) {
  const Cutoff chi = make_cutoff(r_in, r_out);
  auto value = [=](Point x) {
    const Vec2 d = x - center;
    return chi.value(norm(d)) * d;
  };
  auto jacobian = [=](Point x) {
    const Vec2 d = x - center;
    const double r = norm(d);
    Mat2 J = chi.value(r) * Mat2::identity();
    if (r > 0.0) J = J + (chi.derivative(r) / r) * outer(d, d);
    return J;
  };
  return {FieldKind::dilation, "dilation", value, jacobian};
}

TestVectorField rotation(Point center, double r_in, double r_out) {
  const Cutoff chi = make_cutoff(r_in, r_out);
  auto value = [=](Point x) {
    const Vec2 d = x - center;
    return chi.value(norm(d)) * Vec2{-d.y, d.x};
  };
  auto jacobian = [=](Point x) {
    const Vec2 d = x - center;
    const double r = norm(d);
    Mat2 J = chi.value(r) * Mat2{0.0, -1.0, 1.0, 0.0};
    if (r > 0.0) J = J + (chi.derivative(r) / r) * outer(Vec2{-d.y, d.x}, d);
    return J;
  };
  return {FieldKind::rotation, "rotation", value, jacobian};
}

TestVectorField custom(std::string label, std::function<Vec2(Point)> value, std::function<Mat2(Point)> jacobian) {
  return {FieldKind::custom, std::move(label), std::move(value), std::move(jacobian)};
}

double admissibility_defect(const TestVectorField& psi, const grid::Grid& g) {
  double worst = 0.0;
  const double lx = g.lower(0), ux = g.upper(0);
  if (g.dim() == 1) {
    worst = std::max(std::abs(psi.value({lx, 0.0}).x), std::abs(psi.value({ux, 0.0}).x));
    return worst;
  }
  const double ly = g.lower(1), uy = g.upper(1);
  for (int j = 0; j < g.cells(1); ++j) {
    const double y = g.center(0, j).y;
    worst = std::max({worst, std::abs(psi.value({lx, y}).x), std::abs(psi.value({ux, y}).x)});
  }
  for (int i = 0; i < g.cells(0); ++i) {
    const double x = g.center(i, 0).x;
    worst = std::max({worst, std::abs(psi.value({x, ly}).y), std::abs(psi.value({x, uy}).y)});
  }
  return worst;
}

bool is_admissible(const TestVectorField& psi, const grid::Grid& g, double tol) {
  return admissibility_defect(psi, g) <= tol;
}

}  // namespace wmcf::variations
