#pragma once

#include "wmcf/geometry.hpp"
#include "wmcf/test_fields.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace wmcf::sharp {

enum class InterfaceKind { point1d, sphere };

// Conventions: A is the b-phase, n_A its inner normal, H = -div n_A, V the normal
// speed along n_A. orientation +1 puts A to the right of a point / inside a sphere.
struct SharpInterface {
  InterfaceKind kind = InterfaceKind::sphere;
  Point center;
  double radius = 0.0;
  double orientation = 1.0;

  static SharpInterface point(double p, double orientation = 1.0);
  static SharpInterface sphere(Point center, double radius, double orientation = 1.0);

  int dim() const { return kind == InterfaceKind::point1d ? 1 : 2; }
  double position() const { return center.x; }
  // Signed distance to the interface, positive inside A.
  double sdist(Point x) const;
  bool inside(Point x) const { return sdist(x) > 0.0; }
  // n_A at the closest-point projection of x.
  Vec2 normal(Point x) const;
  Point project(Point x) const;
  // H = -div n_A, for an N-dimensional sphere.
  double mean_curvature(int N = 2) const;
};

struct BoundaryNode {
  Point x;
  Vec2 n;
  double weight = 0.0;
};

// Trapezoid nodes on a circle (uniform angles), or the single point in 1D.
std::vector<BoundaryNode> boundary_nodes(const SharpInterface& A, int nodes = 1024);

double weighted_perimeter(const SharpInterface& A, const SmoothScalar& sigma, int nodes = 1024);

// -int sigma (Id - n x n) : grad Psi - int grad sigma . Psi over the interface.
double sharp_first_variation(const SharpInterface& A, const SmoothScalar& sigma,
                             const variations::TestVectorField& psi, int nodes = 1024);

struct RadialSigma {
  std::function<double(double)> value;       // sigma(r)
  std::function<double(double)> derivative;  // sigma'(r)
};

RadialSigma constant_radial(double c);
// Restriction of a radially symmetric sigma along the ray center + r e_x.
RadialSigma radial_restriction(const SmoothScalar& sigma, Point center);

struct SharpTrajectory {
  InterfaceKind kind = InterfaceKind::sphere;
  Point center;
  double orientation = 1.0;
  int N = 2;
  std::vector<double> t;
  std::vector<double> r;     // R for spheres, p for points
  std::vector<double> rate;  // dr/dt
  bool truncated = false;
  std::string truncation_reason;

  double t_begin() const { return t.front(); }
  double t_end() const { return t.back(); }
  // Cubic Hermite interpolation of r and its derivative.
  double position(double time) const;
  double rate_at(double time) const;
  // Normal speed along n_A.
  double velocity(double time) const;
  double velocity_sample(std::size_t k) const;
  SharpInterface at(double time) const;
};

struct OdeTolerance {
  double tol = 1e-12;
  int samples = 4001;
};

// dR/dt = -(N-1)/R - sigma'(R)/sigma(R); stops below R = 1e-3 and flags truncation.
SharpTrajectory evolve_radial(Point center, double R0, const RadialSigma& sigma, double t_end, int N = 2,
                              const OdeTolerance& tol = {});

// dp/dt = -sigma'(p)/sigma(p); stops when p leaves [lo + margin, hi - margin].
SharpTrajectory evolve_point1d(double p0, const SmoothScalar& sigma, double t_end, double lo, double hi,
                               double margin = 0.0, const OdeTolerance& tol = {}, double orientation = 1.0);

struct SpaceTimeTest {
  std::function<double(Point, double)> zeta;
  std::function<double(Point, double)> dzeta_dt;
};

struct TransportOptions {
  int time_intervals = 2000;
  int radial_nodes = 48;
  int angular_nodes = 256;
  // 1D: A = {x > p} is truncated to [lo, hi].
  double lo = 0.0;
  double hi = 1.0;
};

// LHS - RHS of the weak transport identity on [0, T'].
double transport_residual(const SharpTrajectory& traj, const SpaceTimeTest& zeta, double t_prime,
                          const TransportOptions& options = {});

// int sigma V (Psi . n) + int sigma (Id - n x n) : grad Psi + int grad sigma . Psi.
double motion_law_residual(const SharpInterface& A, const std::function<double(Point)>& V, const SmoothScalar& sigma,
                           const variations::TestVectorField& psi, int nodes = 1024);

struct DissipationCheck {
  double lhs = 0.0;  // E[T'] + int_0^T' int sigma V^2
  double rhs = 0.0;  // E[0]
  double slack = 0.0;
};

DissipationCheck dissipation_check(const SharpTrajectory& traj, const SmoothScalar& sigma, double t_prime,
                                   int time_intervals = 2000, double velocity_scale = 1.0, int nodes = 1024);

void write_csv(const SharpTrajectory& traj, const SmoothScalar& sigma, std::ostream& out);

}  // namespace wmcf::sharp
