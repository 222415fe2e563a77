#pragma once

#include "wmcf/geometry.hpp"
#include "wmcf/grid.hpp"
#include "wmcf/sharp.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace wmcf::calib {

// g(s) = (1 - c s^2)^2 while c s^2 < 1, else 0. Support radius 1/sqrt(c) < r.
struct Cutoff {
  double c = 1.0;
  double value(double s) const;
  double derivative(double s) const;
};

// Odd, C^2, nondecreasing: s on |s| <= r/2, r sign(s) on |s| >= r, quintic blend between.
struct Truncation {
  double r = 1.0;
  double value(double s) const;
  double derivative(double s) const;
};

// Gradient-flow calibration around a radial strong solution (A inside the circle).
class Calibration {
 public:
  // speed(t) is the normal velocity of the strong interface along its inner normal.
  Calibration(sharp::SharpTrajectory traj, SmoothScalar sigma, std::function<double(double)> speed, double r,
              double c);
  // Static circle with zero velocity, for frozen-in-time checks.
  static Calibration frozen(Point center, double R, SmoothScalar sigma, double r, double c);

  double r() const { return r_; }
  double c() const { return cutoff_.c; }
  const Cutoff& cutoff() const { return cutoff_; }
  const Truncation& truncation() const { return trunc_; }
  const sharp::SharpTrajectory& trajectory() const { return traj_; }
  const SmoothScalar& sigma() const { return sigma_; }

  double radius(double t) const { return traj_.position(t); }
  double speed(double t) const { return speed_(t); }
  double sdist(Point x, double t) const;  // positive inside
  double dist(Point x, double t) const;
  Vec2 normal(Point x, double t) const;   // n at the projection of x

  Vec2 xi(Point x, double t) const;
  Mat2 grad_xi(Point x, double t) const;
  Vec2 B(Point x, double t) const;
  Mat2 grad_B(Point x, double t) const;
  double theta(Point x, double t) const;
  Vec2 grad_theta(Point x, double t) const;

 private:
  sharp::SharpTrajectory traj_;
  SmoothScalar sigma_;
  std::function<double(double)> speed_;
  double r_;
  Cutoff cutoff_;
  Truncation trunc_;
};

// Speed from the radial law (N-1)/R + sigma'(R)/sigma(R). Defaults r = 0.4 min_t R(t)
// and c = 1.01 / r^2 when not given.
Calibration build_calibration(const sharp::SharpTrajectory& traj, const SmoothScalar& sigma,
                              std::optional<double> r = std::nullopt, std::optional<double> c = std::nullopt);

struct SampleCloud {
  std::vector<Point> x;
  std::vector<double> t;
};

// Random space-time samples: a fraction exactly on the strong interface, the rest
// at log-uniform distances in [d_min, d_max] on both sides.
SampleCloud make_sample_cloud(const Calibration& cal, std::size_t n, std::uint64_t seed, double d_min, double d_max,
                              double t_margin = 2e-4, double on_interface_fraction = 0.05);

// Samples fall in three classes by distance to the strong interface:
//   on it (dist < 1e-12): every |r_i| must sit at finite-difference tolerance;
//   near it (dist < near_dist): |r_i| is bounded absolutely instead of by a ratio;
//   elsewhere: the ratios |r1|/dist, |r2|/dist^2, |r3|/dist, |r4|/dist.
struct ResidualReport {
  std::size_t samples = 0;
  double r1_ratio = 0.0;
  double r2_ratio = 0.0;
  double r3_ratio = 0.0;
  double r4_ratio = 0.0;
  double near_dist = 1e-4;
  std::array<double, 4> near_max{};  // max |r_i| over near samples
  double interface_max = 0.0;        // max |r_i| over on-interface samples
  std::size_t interface_samples = 0;
  std::size_t near_samples = 0;
  // Invariants.
  double length_excess = 0.0;      // max |xi| - max(0, 1 - c dist^2)
  double boundary_xi_error = 0.0;  // max |xi . n - 1| on the interface
  double boundary_B_error = 0.0;   // max |B - V n| on the interface
  double boundary_theta = 0.0;     // max |theta| on the interface
  bool theta_sign_ok = true;
  double theta_constant = 0.0;     // max min(dist, 1) / |theta| off the interface
  double fd_step = 1e-4;
  // max |r_i(FD) - r_i(closed form)| over samples whose stencils avoid kinks of g and tau.
  double closed_form_gap = 0.0;

  std::array<double, 4> ratios() const { return {r1_ratio, r2_ratio, r3_ratio, r4_ratio}; }
  bool invariants_ok(double tol = 1e-12) const;
  // Near samples stay below the ratio bounds evaluated at near_dist.
  bool near_ok() const;
};

// Time derivatives by five-point centered differences with step fd_step (samples need
// 2 fd_step of room inside the trajectory); space derivatives closed form.
ResidualReport calibration_residuals(const Calibration& cal, const SampleCloud& cloud, double fd_step = 1e-4);

// Weak interface given by quadrature nodes with the inner normal of the weak phase.
using WeakInterface = std::vector<sharp::BoundaryNode>;

WeakInterface nodes_of(const sharp::SharpInterface& A, int nodes = 1024);
// Polyline from a 2D level-set sample; normals point toward increasing v.
WeakInterface nodes_from_levelset(const grid::LevelSetSample& sample, const grid::Field& v);

double relative_energy(const WeakInterface& weak, const Calibration& cal, double t);
double relative_energy(const sharp::SharpInterface& weak, const Calibration& cal, double t, int nodes = 1024);

// int sigma (chi_strong - chi_weak) theta, by polar quadrature about the strong center.
double bulk_energy(const sharp::SharpInterface& weak, const Calibration& cal, double t, int angular = 512);
// Midpoint rule with a weak-phase indicator on a grid (values in [0, 1]).
double bulk_energy(const grid::Field& chi_weak, const Calibration& cal, double t);

struct CoercivityReport {
  double e_rel = 0.0;
  double tilt = 0.0;      // int sigma |n - xi|^2 / 2
  double slack = 0.0;     // int sigma (1 - |xi|^2) / 2
  double identity_error = 0.0;
  double dist_term = 0.0;   // int sigma min(dist^2, 1)
  double theta_term = 0.0;  // int sigma theta^2
  std::optional<double> dist_constant;
  std::optional<double> theta_constant;

  bool holds(double tol = 1e-12) const { return tilt <= e_rel + tol && slack >= -tol; }
};

CoercivityReport coercivity_check(const WeakInterface& weak, const Calibration& cal, double t);

struct GronwallRow {
  double t = 0.0;
  double e_rel = 0.0;
  double e_bulk = 0.0;
  double coercivity_slack = 0.0;
  double tilt = 0.0;
  double identity_error = 0.0;
};

struct GronwallFit {
  double C_rel = 0.0;
  double C_bulk = 0.0;
  double C = 0.0;
  bool exponential_bound_ok = true;  // E_rel(t) <= E_rel(0) exp(C t) at every row
  bool zero_case = false;            // E_rel(0) = E_bulk(0) = 0 input
  bool zero_case_ok = true;          // ... and both stayed below tol
  bool guard_ok = true;              // E(T') - E(0) <= tol wherever int_0^T' E < 1e-14
};

// Smallest C with E(T') <= E(0) + C int_0^T' E at every grid time (and the bulk analogue).
GronwallFit gronwall_fit(const std::vector<GronwallRow>& rows, double tol = 1e-8);

struct GronwallReport {
  std::vector<GronwallRow> rows;
  GronwallFit fit;
  GronwallFit fit_refined;  // on the halved time grid
  bool stable = false;      // C within a factor 2 under time-grid halving

  void write_csv(std::ostream& out) const;
};

// Weak and strong are radial trajectories sharing sigma; times uniform on [0, T'].
GronwallReport gronwall_verify(const sharp::SharpTrajectory& weak, const Calibration& cal, double t_prime,
                               int intervals = 100, double tol = 1e-8);

}  // namespace wmcf::calib
