#pragma once

#include <cmath>
#include <functional>

namespace wmcf {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
};

using Point = Vec2;

constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }

// Row i, column j holds d_j F_i.
struct Mat2 {
  double xx = 0.0, xy = 0.0;
  double yx = 0.0, yy = 0.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  constexpr double trace() const { return xx + yy; }
  constexpr Vec2 apply(const Vec2& v) const { return {xx * v.x + xy * v.y, yx * v.x + yy * v.y}; }
  constexpr Vec2 apply_transpose(const Vec2& v) const {
    return {xx * v.x + yx * v.y, xy * v.x + yy * v.y};
  }
};

constexpr Mat2 operator+(const Mat2& a, const Mat2& b) {
  return {a.xx + b.xx, a.xy + b.xy, a.yx + b.yx, a.yy + b.yy};
}
constexpr Mat2 operator*(double s, const Mat2& a) { return {s * a.xx, s * a.xy, s * a.yx, s * a.yy}; }
constexpr Mat2 outer(const Vec2& a, const Vec2& b) { return {a.x * b.x, a.x * b.y, a.y * b.x, a.y * b.y}; }
// Frobenius product A:B.
constexpr double contract(const Mat2& a, const Mat2& b) {
  return a.xx * b.xx + a.xy * b.xy + a.yx * b.yx + a.yy * b.yy;
}

// Scalar field of position with its gradient, e.g. sigma(x).
struct SmoothScalar {
  std::function<double(Point)> value;
  std::function<Vec2(Point)> gradient;

  double operator()(Point p) const { return value(p); }
};

// Axis-aligned box; in 1D only the x components are used.
struct Box {
  Point lower;
  Point upper;
  int dim = 2;

  bool contains(Point p, double slack = 1e-12) const {
    if (p.x < lower.x - slack || p.x > upper.x + slack) return false;
    if (dim == 2 && (p.y < lower.y - slack || p.y > upper.y + slack)) return false;
    return true;
  }
};

}  // namespace wmcf
