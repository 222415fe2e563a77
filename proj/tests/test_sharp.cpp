#include "wmcf/sharp.hpp"
#include "wmcf/wells.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace wmcf;
using sharp::SharpInterface;

namespace {

constexpr double kPi = std::numbers::pi;
const double kSigma = std::sqrt(2.0) / 6.0;

SmoothScalar exp_sigma(double kappa) { return wells::exponential_scalar(1.0, {kappa, 0.0}); }

sharp::SharpTrajectory closed_form_run(int samples = 4001) {
  sharp::OdeTolerance tol;
  tol.samples = samples;
  return sharp::evolve_radial({0.0, 0.0}, 0.4, sharp::constant_radial(kSigma), 0.06, 2, tol);
}

// The five motion fields used by the bv_residuals experiment, around a circle of radius R.
std::vector<variations::TestVectorField> motion_fields(double R) {
  return {variations::dilation({0.0, 0.0}, 1.2 * R, 1.6 * R), variations::rotation({0.0, 0.0}, 1.2 * R, 1.6 * R),
          variations::translation_bump({R, 0.0}, {1.0, 0.0}, 2.0 * R),
          variations::translation_bump({0.0, -R}, {0.3, 1.0}, 2.0 * R),
          variations::custom(
              "poly", [](Point p) { return Vec2{p.x * p.y, p.x * p.x - p.y}; },
              [](Point p) { return Mat2{p.y, p.x, 2.0 * p.x, -1.0}; })};
}

// Oscillating in time so the time quadrature is not exact.
sharp::SpaceTimeTest polynomial_zeta() {
  auto p = [](Point x) { return 1.0 + x.x - 2.0 * x.y * x.y + x.x * x.y; };
  return {[p](Point x, double t) { return p(x) * std::cos(40.0 * t); },
          [p](Point x, double t) { return -40.0 * p(x) * std::sin(40.0 * t); }};
}

}  // namespace

TEST(Interface, SignConventions) {
  const auto A = SharpInterface::sphere({1.0, 2.0}, 0.5);
  EXPECT_NEAR(A.sdist({1.0, 2.0}), 0.5, 1e-15);
  EXPECT_NEAR(A.sdist({2.0, 2.0}), -0.5, 1e-15);
  const Vec2 n = A.normal({1.7, 2.0});
  EXPECT_NEAR(n.x, -1.0, 1e-15);  // inner normal
  EXPECT_NEAR(A.mean_curvature(), 2.0, 1e-15);
  EXPECT_NEAR(A.mean_curvature(3), 4.0, 1e-15);
  const auto p = SharpInterface::point(0.4);
  EXPECT_TRUE(p.inside({0.5, 0.0}));
  EXPECT_FALSE(p.inside({0.3, 0.0}));
  EXPECT_NEAR(p.normal({0.9, 0.0}).x, 1.0, 1e-15);
}

TEST(WeightedPerimeter, CircleWithConstantSigma) {
  const double v = sharp::weighted_perimeter(SharpInterface::sphere({0.0, 0.0}, 0.3), wells::constant_scalar(kSigma));
  EXPECT_NEAR(v, 2.0 * kPi * 0.3 * kSigma, 1e-13);
  EXPECT_NEAR(v, 0.444288, 5e-7);
  EXPECT_NEAR(sharp::weighted_perimeter(SharpInterface::sphere({0.3, -0.2}, 0.7), wells::constant_scalar(2.5)),
              2.5 * 2.0 * kPi * 0.7, 1e-12);
}

TEST(WeightedPerimeter, PointIsSigmaAtP) {
  const auto sigma = exp_sigma(0.5);
  EXPECT_DOUBLE_EQ(sharp::weighted_perimeter(SharpInterface::point(0.37), sigma), std::exp(0.5 * 0.37));
}

TEST(EvolveRadial, ClosedForm) {
  const auto traj = closed_form_run();
  EXPECT_FALSE(traj.truncated);
  EXPECT_NEAR(traj.position(0.06), 0.2, 1e-10);
  for (double t = 0.0; t <= 0.06; t += 0.00317) {
    EXPECT_NEAR(traj.position(t), std::sqrt(0.16 - 2.0 * t), 1e-10) << "t = " << t;
    EXPECT_NEAR(traj.velocity(t), 1.0 / std::sqrt(0.16 - 2.0 * t), 1e-6) << "t = " << t;
  }
}

TEST(EvolveRadial, ThreeDimensionalClosedForm) {
  const auto traj = sharp::evolve_radial({0.0, 0.0}, 0.5, sharp::constant_radial(1.0), 0.05, 3);
  EXPECT_NEAR(traj.position(0.05), std::sqrt(0.25 - 4.0 * 0.05), 1e-10);
}

TEST(EvolveRadial, IncreasingSigmaShrinksFaster) {
  const sharp::RadialSigma rising{[](double r) { return 1.0 + r; }, [](double) { return 1.0; }};
  const auto fast = sharp::evolve_radial({0.0, 0.0}, 0.4, rising, 0.03);
  const auto plain = sharp::evolve_radial({0.0, 0.0}, 0.4, sharp::constant_radial(1.0), 0.03);
  EXPECT_LT(fast.position(0.03), plain.position(0.03));
  EXPECT_GT(fast.rate_at(0.0), -1e9);
  EXPECT_LT(fast.rate_at(0.0), plain.rate_at(0.0));
}

TEST(EvolveRadial, FirstOrderTaylor) {
  const sharp::RadialSigma rising{[](double r) { return 1.0 + r; }, [](double) { return 1.0; }};
  const double R0 = 2.0;
  const double slope = 1.0 / R0 + 1.0 / (1.0 + R0);
  for (double t : {1e-3, 5e-4, 2.5e-4}) {
    const auto traj = sharp::evolve_radial({0.0, 0.0}, R0, rising, t);
    EXPECT_LE(std::abs(traj.position(t) - (R0 - slope * t)), 2.0 * t * t);
  }
}

TEST(EvolveRadial, ExtinctionIsFlagged) {
  const auto traj = sharp::evolve_radial({0.0, 0.0}, 0.1, sharp::constant_radial(1.0), 1.0);
  // Extinction at t = 0.005.
  EXPECT_TRUE(traj.truncated);
  EXPECT_FALSE(traj.truncation_reason.empty());
  EXPECT_LE(traj.t_end(), 0.005);
  EXPECT_GE(traj.r.back(), 1e-3);
}

TEST(EvolvePoint, ConstantSigmaDoesNotMove) {
  const auto traj = sharp::evolve_point1d(0.6, wells::constant_scalar(2.0), 1.0, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(traj.position(0.7), 0.6);
}

TEST(EvolvePoint, ExponentialSigmaIsLinear) {
  const double kappa = 0.5;
  const auto traj = sharp::evolve_point1d(0.9, exp_sigma(kappa), 0.6, 0.0, 1.3);
  EXPECT_FALSE(traj.truncated);
  for (double t = 0.0; t <= 0.6; t += 0.05) EXPECT_NEAR(traj.position(t), 0.9 - kappa * t, 1e-10);
}

TEST(EvolvePoint, SlidesToSigmaMinimum) {
  const SmoothScalar well_sigma{[](Point p) { return 1.0 + (p.x - 0.5) * (p.x - 0.5); },
                                [](Point p) { return Vec2{2.0 * (p.x - 0.5), 0.0}; }};
  for (double p0 : {0.3, 0.7}) {
    const auto traj = sharp::evolve_point1d(p0, well_sigma, 5.0, 0.0, 1.0);
    double last = std::abs(p0 - 0.5);
    for (double t = 0.25; t <= 5.0; t += 0.25) {
      const double d = std::abs(traj.position(t) - 0.5);
      EXPECT_LT(d, last);
      last = d;
    }
    EXPECT_LT(last, 1e-3);
  }
}

TEST(EvolvePoint, LeavingTheDomainIsFlagged) {
  const auto traj = sharp::evolve_point1d(0.2, exp_sigma(1.0), 1.0, 0.0, 1.0, 0.05);
  EXPECT_TRUE(traj.truncated);
  EXPECT_NEAR(traj.r.back(), 0.05, 1e-6);
}

TEST(Trajectory, VelocityMatchesDifferenceQuotient) {
  const auto traj = closed_form_run();
  for (std::size_t k = 1; k + 1 < traj.t.size(); k += 400) {
    const double dq = (traj.r[k + 1] - traj.r[k - 1]) / (traj.t[k + 1] - traj.t[k - 1]);
    EXPECT_NEAR(-dq, traj.velocity_sample(k), 1e-5);
  }
}

TEST(Transport, ZeroTestFunction) {
  const sharp::SpaceTimeTest zero{[](Point, double) { return 0.0; }, [](Point, double) { return 0.0; }};
  EXPECT_EQ(sharp::transport_residual(closed_form_run(), zero, 0.05), 0.0);
}

TEST(Transport, SpatialConstantIsAreaDerivative) {
  const sharp::SpaceTimeTest one{[](Point, double) { return 1.0; }, [](Point, double) { return 0.0; }};
  EXPECT_LE(std::abs(sharp::transport_residual(closed_form_run(), one, 0.05)), 1e-9);
}

TEST(Transport, PolynomialTestSecondOrderInTime) {
  const auto traj = closed_form_run();
  const auto zeta = polynomial_zeta();
  std::vector<double> res;
  for (int n : {8, 16, 32}) {
    sharp::TransportOptions opt;
    opt.time_intervals = n;
    res.push_back(std::abs(sharp::transport_residual(traj, zeta, 0.05, opt)));
  }
  EXPECT_GE(std::log2(res[0] / res[1]), 1.9);
  EXPECT_GE(std::log2(res[1] / res[2]), 1.9);
}

TEST(Transport, OneDimensionalDrift) {
  const auto traj = sharp::evolve_point1d(0.9, exp_sigma(0.5), 0.6, 0.0, 1.3);
  const sharp::SpaceTimeTest zeta{[](Point x, double t) { return (1.0 + x.x * x.x) * (1.0 - t); },
                                  [](Point x, double) { return -(1.0 + x.x * x.x); }};
  sharp::TransportOptions opt;
  opt.lo = 0.0;
  opt.hi = 1.3;
  EXPECT_LE(std::abs(sharp::transport_residual(traj, zeta, 0.5, opt)), 1e-6);
}

TEST(MotionLaw, ZeroAlongTrajectoryForFiveFields) {
  const auto traj = closed_form_run();
  const auto sigma = wells::constant_scalar(kSigma);
  for (double t : {0.0, 0.02, 0.05}) {
    const auto A = traj.at(t);
    const double V = traj.velocity(t);
    for (const auto& psi : motion_fields(A.radius)) {
      EXPECT_LE(std::abs(sharp::motion_law_residual(A, [V](Point) { return V; }, sigma, psi)), 1e-6) << psi.label;
    }
  }
}

TEST(MotionLaw, ZeroField) {
  const auto A = SharpInterface::sphere({0.0, 0.0}, 0.3);
  EXPECT_EQ(sharp::motion_law_residual(A, [](Point) { return 5.0; }, wells::constant_scalar(1.0), variations::zero_field()),
            0.0);
}

TEST(MotionLaw, LinearInVelocityPerturbation) {
  const auto A = SharpInterface::sphere({0.0, 0.0}, 0.3);
  const auto sigma = wells::constant_scalar(kSigma);
  const auto psi = variations::dilation({0.0, 0.0}, 0.36, 0.48);
  const double V = 1.0 / 0.3;
  double flux = 0.0;
  for (const auto& node : sharp::boundary_nodes(A)) flux += node.weight * sigma(node.x) * dot(psi.value(node.x), node.n);
  ASSERT_GT(std::abs(flux), 1e-3);
  for (double delta : {1e-3, 1e-2, 0.1}) {
    const double r = sharp::motion_law_residual(A, [&](Point) { return V + delta; }, sigma, psi);
    EXPECT_NEAR(r, delta * flux, 1e-10);
  }
}

TEST(Dissipation, ClosedFormSlackVanishes) {
  const auto check = sharp::dissipation_check(closed_form_run(), wells::constant_scalar(kSigma), 0.05);
  EXPECT_LE(std::abs(check.slack), 1e-6);
  EXPECT_NEAR(check.slack, check.rhs - check.lhs, 1e-15);
}

TEST(Dissipation, FrozenTrajectoryHasZeroSlack) {
  const auto traj = sharp::evolve_point1d(0.5, wells::constant_scalar(1.0), 1.0, 0.0, 1.0);
  EXPECT_EQ(sharp::dissipation_check(traj, wells::constant_scalar(1.0), 0.8).slack, 0.0);
}

TEST(Dissipation, DoubledVelocityIsFlagged) {
  const auto check = sharp::dissipation_check(closed_form_run(), wells::constant_scalar(kSigma), 0.05, 2000, 2.0);
  EXPECT_LT(check.slack, -1e-3);
}

TEST(Dissipation, PerimeterDecreasesAlongFlow) {
  const auto traj = closed_form_run();
  const auto sigma = wells::constant_scalar(kSigma);
  double last = sharp::weighted_perimeter(traj.at(0.0), sigma);
  for (double t = 0.005; t <= 0.06; t += 0.005) {
    const double e = sharp::weighted_perimeter(traj.at(t), sigma);
    EXPECT_LT(e, last);
    last = e;
  }
}

TEST(Trajectory, CsvHeader) {
  std::ostringstream out;
  sharp::write_csv(closed_form_run(11), wells::constant_scalar(1.0), out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "t,R_or_p,V,energy");
}
