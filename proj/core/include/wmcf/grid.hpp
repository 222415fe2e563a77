#pragma once

#include "wmcf/geometry.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wmcf::grid {

// Cell-centered uniform grid on an interval (dim 1) or rectangle (dim 2).
class Grid {
 public:
  static Grid line(int n, double lo, double hi);
  static Grid rect(int nx, int ny, Point lo, Point hi);
  // Square cells of side about h covering box (cell counts rounded up).
  static Grid covering(const Box& box, double h);

  int dim() const { return dim_; }
  int cells(int axis) const { return cells_[axis]; }
  double lower(int axis) const { return lower_[axis]; }
  double upper(int axis) const { return upper_[axis]; }
  double spacing(int axis) const { return (upper_[axis] - lower_[axis]) / cells_[axis]; }
  double max_spacing() const;
  std::size_t size() const { return static_cast<std::size_t>(cells_[0]) * cells_[1]; }
  double cell_volume() const;
  std::size_t index(int i, int j = 0) const { return static_cast<std::size_t>(j) * cells_[0] + i; }
  Point center(int i, int j = 0) const;
  Point center_of(std::size_t idx) const;
  Box box() const;
  // Distance from p to the nearest boundary face (in 1D only x counts).
  double distance_to_boundary(Point p) const;

  bool operator==(const Grid& o) const;
  bool operator!=(const Grid& o) const { return !(*this == o); }

 private:
  Grid(int dim, std::array<int, 2> cells, std::array<double, 2> lower, std::array<double, 2> upper);
  int dim_ = 1;
  std::array<int, 2> cells_{8, 1};
  std::array<double, 2> lower_{0.0, 0.0};
  std::array<double, 2> upper_{1.0, 1.0};
};

class Field {
 public:
  explicit Field(const Grid& g, double fill = 0.0);
  Field(const Grid& g, std::vector<double> values);
  static Field sample(const Grid& g, const std::function<double(Point)>& f);

  const Grid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator[](std::size_t k) { return values_[k]; }
  double at(int i, int j = 0) const { return values_[grid_.index(i, j)]; }
  bool all_finite() const;

 private:
  Grid grid_;
  std::vector<double> values_;
};

struct VectorField {
  explicit VectorField(const Grid& g) : grid(g), x(g.size(), 0.0), y(g.size(), 0.0) {}
  static VectorField sample(const Grid& g, const std::function<Vec2(Point)>& f);

  Grid grid;
  std::vector<double> x;
  std::vector<double> y;
  Vec2 operator[](std::size_t k) const { return {x[k], y[k]}; }
};

// Mirrored-ghost 3/5-point Laplacian.
Field laplacian_neumann(const Field& f);
// Centered differences with mirrored ghosts.
VectorField gradient_neumann(const Field& f);
// Face-difference gradient energy per cell: 1/2 sum over axes of (D+ f)^2 + (D- f)^2,
// with zero flux on boundary faces. Its cell-volume sum is the discrete Dirichlet
// energy whose exact gradient is -laplacian_neumann.
Field gradient_energy_density(const Field& f);
double integrate(const Field& f);
double pair_density(const Field& density, const Field& testfn);
void require_same_grid(const Grid& a, const Grid& b);

struct Segment {
  Point p;
  Point q;
};

struct CircleFit {
  Point center;
  double radius = 0.0;
  double rms = 0.0;
};

struct LevelSetSample {
  int dim = 1;
  // Linear-interpolated crossings along grid edges between neighboring cell centers.
  std::vector<Point> crossings;
  // Marching-squares polyline pieces (2D only).
  std::vector<Segment> segments;
  std::optional<CircleFit> circle;
};

LevelSetSample extract_levelset(const Field& v, double level = 0.5, bool fit_circle = true);
// Algebraic (Kasa) least-squares circle through points.
CircleFit fit_circle(const std::vector<Point>& points);

void write_csv(const Field& f, std::ostream& out);
void write_csv(const Field& f, const std::string& path);

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;
};

// Solves (alpha I - beta Laplacian_h) x = b by CG, preconditioned with the exact
// cosine-transform inverse of the same operator; alpha > 0, beta >= 0.
class HelmholtzSolver {
 public:
  HelmholtzSolver(const Grid& g, double alpha, double beta, double tol = 1e-10, int max_iterations = 10000);
  ~HelmholtzSolver();
  HelmholtzSolver(HelmholtzSolver&&) noexcept;
  HelmholtzSolver& operator=(HelmholtzSolver&&) noexcept;

  // x holds the initial guess on entry. Throws NumericError on non-convergence.
  SolveStats solve(const std::vector<double>& b, std::vector<double>& x) const;
  const Grid& grid() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace wmcf::grid
