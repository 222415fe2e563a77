#pragma once

#include "wmcf/geometry.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wmcf::wells {

struct WellSpec {
  std::string name;
  std::function<double(Point)> a;
  std::function<double(Point)> b;
  std::function<Vec2(Point)> grad_a;
  std::function<Vec2(Point)> grad_b;
  std::function<double(Point, double)> W;
  std::function<double(Point, double)> dW_du;
  std::function<Vec2(Point, double)> dW_dx;
  // Optional; finite differences of dW_du are used when empty.
  std::function<double(Point, double)> d2W_du2;
  double delta_sep = 0.0;
  std::optional<Box> domain;
  // W does not depend on x at all.
  bool x_independent = false;
};

// W(x,u) = m(x) (u - a(x))^2 (u - b(x))^2.
WellSpec quartic(const SmoothScalar& m, const SmoothScalar& a, const SmoothScalar& b,
                 std::string name = "quartic");

// Constant wells a < b, m = 1.
WellSpec canonical_quartic(double a = 0.0, double b = 1.0);

SmoothScalar constant_scalar(double c);
// c0 + g.x
SmoothScalar affine_scalar(double c0, Vec2 g);
// c exp(k.x)
SmoothScalar exponential_scalar(double c, Vec2 k);
// c (1 + sin^2(pi x1))
SmoothScalar sin2_scalar(double c);
// c0 + c1 x1^2
SmoothScalar quadratic_x_scalar(double c0, double c1);

WellSpec with_domain(WellSpec spec, const Box& domain);

double gamma(const WellSpec& spec, Point x);
double normalized_well(const WellSpec& spec, Point x, double v);
double surface_tension(const WellSpec& spec, Point x, double tol = 1e-10);
double sigma_n(const WellSpec& spec, Point x, double tol = 1e-10);
double geodesic_distance(const WellSpec& spec, Point x, double v, double tol = 1e-10);

// sigma(x) with a centered-difference gradient (step 1e-5).
SmoothScalar sigma_field(const WellSpec& spec, double tol = 1e-10);

struct SampleLattice {
  std::vector<Point> points;
  double u_min = -1.0;
  double u_max = 2.0;
  int u_samples = 301;
  int dim = 2;
};

// Regular lattice of nx x ny points (ny = 1 for 1D) covering box, with a u range.
SampleLattice make_lattice(const Box& box, int nx, int ny, double u_min, double u_max, int u_samples);

struct AssumptionReport {
  // W >= 0, W = 0 at the wells, gamma >= delta_sep on the lattice.
  bool structure_ok = true;
  double min_W = 0.0;
  double max_well_value = 0.0;
  double min_gamma = 0.0;
  // C1 <= W / dist^2 <= C2 on {dist to nearest well < 1}.
  double C1 = 0.0;
  double C2 = 0.0;
  // Same ratio evaluated at distance near_distance from each well.
  double near_distance = 0.01;
  double C1_near = 0.0;
  double C2_near = 0.0;
  // W >= |u|^2 / C - C.
  double coercivity_C = 0.0;
  bool coercivity_ok = true;
  // |d_x sqrt(W_n)| <= C sqrt(W_n) where W_n > 1e-12.
  double derivative_control_C = 0.0;
  bool derivative_control_ok = true;
  // Smallest sampled C with W increasing for u > C and decreasing for u < -C.
  std::optional<double> monotone_C;
  bool violation = false;
};

AssumptionReport validate_assumptions(const WellSpec& spec, const SampleLattice& lattice);

struct ProfileOptions {
  double abs_tol = 1e-10;
  double tail = 1e-12;
};

// Frozen-x optimal profile: v' = sqrt(2 W_n(x, v)), v(0) = 1/2, clamped to {0,1}
// once within options.tail of a well.
double optimal_profile(const WellSpec& spec, Point x, double s, const ProfileOptions& options = {});

// Evaluates optimal profiles for many (x, s) pairs. When W_n(x, .) is a constant
// multiple of W_n(x_ref, .) the profile is a rescaling of a tabulated reference
// profile; otherwise each call integrates the ODE. The spec must outlive the sampler.
class ProfileSampler {
 public:
  ProfileSampler(const WellSpec& spec, Point x_ref, const ProfileOptions& options = {});
  ~ProfileSampler();
  ProfileSampler(ProfileSampler&&) noexcept;
  ProfileSampler& operator=(ProfileSampler&&) noexcept;

  double operator()(Point x, double s) const;
  // Half-width of the reference window (1 - v(S) < tail).
  double window() const;
  std::size_t ode_fallbacks() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace wmcf::wells
