#include "wmcf/errors.hpp"
#include "wmcf/grid.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <algorithm>

using namespace wmcf;
using grid::Field;
using grid::Grid;

namespace {

constexpr double kPi = std::numbers::pi;

double max_interior_laplacian_error(int n) {
  const Grid g = Grid::line(n, 0.0, 1.0);
  const Field f = Field::sample(g, [](Point p) { return std::cos(kPi * p.x); });
  const Field lap = grid::laplacian_neumann(f);
  double err = 0.0;
  for (int i = 1; i + 1 < n; ++i) {
    err = std::max(err, std::abs(lap.at(i) + kPi * kPi * std::cos(kPi * g.center(i).x)));
  }
  return err;
}

double max_gradient_error(int n) {
  const Grid g = Grid::rect(n, n, {0.0, 0.0}, {1.0, 1.0});
  const Field f = Field::sample(g, [](Point p) { return std::sin(2.0 * p.x) * std::cos(3.0 * p.y); });
  const auto grad = grid::gradient_neumann(f);
  double err = 0.0;
  for (int j = 1; j + 1 < n; ++j) {
    for (int i = 1; i + 1 < n; ++i) {
      const Point p = g.center(i, j);
      const std::size_t k = g.index(i, j);
      err = std::max(err, std::abs(grad.x[k] - 2.0 * std::cos(2.0 * p.x) * std::cos(3.0 * p.y)));
      err = std::max(err, std::abs(grad.y[k] + 3.0 * std::sin(2.0 * p.x) * std::sin(3.0 * p.y)));
    }
  }
  return err;
}

Field random_field(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Field f(g);
  for (double& v : f.values()) v = unit(rng);
  return f;
}

}  // namespace

TEST(GridShape, SpacingAndMinimumCells) {
  const Grid g = Grid::rect(16, 8, {0.0, -1.0}, {2.0, 1.0});
  EXPECT_DOUBLE_EQ(g.spacing(0), 0.125);
  EXPECT_DOUBLE_EQ(g.spacing(1), 0.25);
  EXPECT_THROW(Grid::line(4, 0.0, 1.0), ShapeError);
  EXPECT_THROW(Grid::line(16, 1.0, 1.0), ShapeError);
}

TEST(FieldShape, LengthMustMatchGrid) {
  const Grid g = Grid::line(8, 0.0, 1.0);
  EXPECT_THROW(Field(g, std::vector<double>(7, 0.0)), ShapeError);
}

TEST(Laplacian, ConstantIsHarmonic) {
  for (const Grid& g : {Grid::line(32, 0.0, 1.0), Grid::rect(16, 24, {0.0, 0.0}, {1.0, 2.0})}) {
    const Field lap = grid::laplacian_neumann(Field(g, 3.7));
    for (double v : lap.values()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Laplacian, CosineInteriorSecondOrder) {
  const double e1 = max_interior_laplacian_error(64);
  const double e2 = max_interior_laplacian_error(128);
  EXPECT_LT(e1, 10.0 * std::pow(1.0 / 64, 2) * std::pow(kPi, 4));
  EXPECT_GE(std::log2(e1 / e2), 1.9);
}

TEST(Laplacian, SumsToZero) {
  const Grid g = Grid::rect(40, 32, {-1.0, 0.0}, {1.0, 1.5});
  const Field f = random_field(g, 7);
  const Field lap = grid::laplacian_neumann(f);
  double scale = 0.0;
  for (double v : lap.values()) scale += std::abs(v) * g.cell_volume();
  EXPECT_LE(std::abs(grid::integrate(lap)), 1e-12 * scale);
}

TEST(Laplacian, DiscreteIntegrationByPartsIsSymmetric) {
  const Grid g = Grid::rect(33, 29, {0.0, 0.0}, {1.0, 1.0});
  const Field f = random_field(g, 1);
  const Field h = random_field(g, 2);
  const double fh = grid::pair_density(f, grid::laplacian_neumann(h));
  const double hf = grid::pair_density(h, grid::laplacian_neumann(f));
  EXPECT_LE(std::abs(fh - hf), 1e-11 * std::abs(fh));
}

TEST(Laplacian, DirichletEnergyGradientMatches) {
  const Grid g = Grid::rect(24, 20, {0.0, 0.0}, {1.0, 1.0});
  const Field f = random_field(g, 5);
  const Field dir = random_field(g, 6);
  const double step = 1e-6;
  auto energy = [&](double s) {
    Field v = f;
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += s * dir[k];
    return 0.5 * grid::integrate(grid::gradient_energy_density(v));
  };
  const double fd = (energy(step) - energy(-step)) / (2.0 * step);
  const double exact = -grid::pair_density(grid::laplacian_neumann(f), dir);
  EXPECT_NEAR(fd, exact, 1e-6 * std::abs(exact));
}

TEST(Gradient, ConstantGivesZero) {
  const Grid g = Grid::rect(16, 16, {0.0, 0.0}, {1.0, 1.0});
  const auto grad = grid::gradient_neumann(Field(g, -2.0));
  for (std::size_t k = 0; k < g.size(); ++k) {
    EXPECT_EQ(grad.x[k], 0.0);
    EXPECT_EQ(grad.y[k], 0.0);
  }
}

TEST(Gradient, QuadraticAtCenterIsExact) {
  const Grid g = Grid::rect(9, 9, {0.0, 0.0}, {1.0, 1.0});
  const Field f = Field::sample(g, [](Point p) { return p.x * p.x; });
  const auto grad = grid::gradient_neumann(f);
  ASSERT_DOUBLE_EQ(g.center(4, 4).x, 0.5);
  EXPECT_NEAR(grad.x[g.index(4, 4)], 1.0, 1e-14);
  EXPECT_NEAR(grad.y[g.index(4, 4)], 0.0, 1e-14);
}

TEST(Gradient, MirroredGhostAtBoundary) {
  const Grid g = Grid::line(16, 0.0, 1.0);
  Field f = Field::sample(g, [](Point p) { return std::cos(kPi * p.x); });
  f[1] = f[0];
  f[14] = f[15];
  const auto grad = grid::gradient_neumann(f);
  EXPECT_EQ(grad.x[0], 0.0);
  EXPECT_EQ(grad.x[15], 0.0);
}

TEST(Gradient, SecondOrderOnSmoothField) {
  const double e1 = max_gradient_error(64);
  const double e2 = max_gradient_error(128);
  EXPECT_GE(std::log2(e1 / e2), 1.9);
}

TEST(Integrate, ConstantOnUnitSquare) {
  EXPECT_NEAR(grid::integrate(Field(Grid::rect(16, 16, {0.0, 0.0}, {1.0, 1.0}), 1.0)), 1.0, 1e-15);
}

TEST(Integrate, MidpointExactForLinear) {
  const Grid g = Grid::line(64, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(grid::integrate(Field::sample(g, [](Point p) { return p.x; })), 0.5);
}

TEST(Integrate, QuadraticSecondOrder) {
  auto err = [](int n) {
    const Grid g = Grid::line(n, 0.0, 1.0);
    return std::abs(grid::integrate(Field::sample(g, [](Point p) { return p.x * p.x; })) - 1.0 / 3.0);
  };
  EXPECT_NEAR(std::log2(err(64) / err(128)), 2.0, 0.05);
}

TEST(PairDensity, Examples) {
  const Grid g = Grid::rect(16, 16, {0.0, 0.0}, {1.0, 1.0});
  const Field rho = random_field(g, 9);
  EXPECT_NEAR(grid::pair_density(rho, Field(g, 1.0)), grid::integrate(rho), 1e-14);
  EXPECT_EQ(grid::pair_density(Field(g, 0.0), rho), 0.0);
  EXPECT_THROW(grid::pair_density(rho, Field(Grid::rect(16, 17, {0.0, 0.0}, {1.0, 1.0}), 1.0)), ShapeError);
}

TEST(PairDensity, ProfileEnergyApproachesSigma) {
  const double eps = 0.05;
  const Grid g = Grid::line(1024, 0.0, 1.0);
  const Field u = Field::sample(g, [&](Point p) { return 1.0 / (1.0 + std::exp(-std::sqrt(2.0) * (p.x - 0.5) / eps)); });
  const Field dens = grid::gradient_energy_density(u);
  const double energy = eps * grid::pair_density(dens, Field(g, 1.0));
  const double sigma = std::sqrt(2.0) / 6.0;
  const double h = g.spacing(0);
  EXPECT_LE(std::abs(energy - sigma), eps + h * h);
  EXPECT_LE(std::abs(energy - sigma), 1e-3 * sigma);
}

TEST(Extract, LinearCrossing1D) {
  const Grid g = Grid::line(64, 0.0, 1.0);
  const auto s = grid::extract_levelset(Field::sample(g, [](Point p) { return p.x; }));
  ASSERT_EQ(s.crossings.size(), 1u);
  EXPECT_NEAR(s.crossings[0].x, 0.5, g.spacing(0) * g.spacing(0));
}

TEST(Extract, RadialProfileCircleFit) {
  const double eps = 0.03;
  const Grid g = Grid::rect(128, 128, {-0.5, -0.5}, {0.5, 0.5});
  const Field v = Field::sample(g, [&](Point p) {
    return 1.0 / (1.0 + std::exp(-std::sqrt(2.0) * (0.3 - norm(p)) / eps));
  });
  const auto s = grid::extract_levelset(v);
  ASSERT_TRUE(s.circle.has_value());
  EXPECT_NEAR(s.circle->radius, 0.3, g.spacing(0));
  EXPECT_NEAR(norm(s.circle->center), 0.0, g.spacing(0));
  EXPECT_FALSE(s.segments.empty());
}

TEST(Extract, ConstantFieldThrows) {
  EXPECT_THROW(grid::extract_levelset(Field(Grid::line(16, 0.0, 1.0), 0.2)), ExtractionError);
  EXPECT_THROW(grid::extract_levelset(Field(Grid::rect(16, 16, {0.0, 0.0}, {1.0, 1.0}), 0.7)), ExtractionError);
}

TEST(Helmholtz, SolvesManufacturedSystem) {
  const Grid g = Grid::rect(48, 40, {0.0, 0.0}, {1.0, 1.2});
  const double alpha = 2.0, beta = 0.3;
  const Field x_true = random_field(g, 4);
  const Field lap = grid::laplacian_neumann(x_true);
  std::vector<double> b(g.size());
  for (std::size_t k = 0; k < b.size(); ++k) b[k] = alpha * x_true[k] - beta * lap[k];
  const grid::HelmholtzSolver solver(g, alpha, beta, 1e-12);
  std::vector<double> x(g.size(), 0.0);
  const auto stats = solver.solve(b, x);
  EXPECT_LE(stats.residual, 1e-12);
  for (std::size_t k = 0; k < x.size(); ++k) EXPECT_NEAR(x[k], x_true[k], 1e-10);
}

TEST(Helmholtz, RejectsBadCoefficients) {
  const Grid g = Grid::line(16, 0.0, 1.0);
  EXPECT_THROW(grid::HelmholtzSolver(g, 0.0, 1.0), InputError);
  EXPECT_THROW(grid::HelmholtzSolver(g, 1.0, -1.0), InputError);
}

TEST(Csv, HeaderAndRowCount) {
  const Grid g = Grid::rect(8, 9, {0.0, 0.0}, {1.0, 1.0});
  std::ostringstream out;
  grid::write_csv(Field(g, 1.0), out);
  const std::string s = out.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "i,j,x,y,value");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 72);
  std::ostringstream line;
  grid::write_csv(Field(Grid::line(8, 0.0, 1.0), 1.0), line);
  EXPECT_EQ(line.str().substr(0, line.str().find('\n')), "i,x,value");
}
