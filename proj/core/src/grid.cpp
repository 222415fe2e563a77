#include "wmcf/grid.hpp"

#include "wmcf/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>

namespace wmcf::grid {

Grid::Grid(int dim, std::array<int, 2> cells, std::array<double, 2> lower, std::array<double, 2> upper)
    : dim_(dim), cells_(cells), lower_(lower), upper_(upper) {
  for (int axis = 0; axis < dim_; ++axis) {
    if (cells_[axis] < 8) throw ShapeError("grid needs at least 8 cells per axis");
    if (!(upper_[axis] > lower_[axis])) throw ShapeError("grid extent must be positive");
  }
}

Grid Grid::line(int n, double lo, double hi) { return Grid(1, {n, 1}, {lo, 0.0}, {hi, 1.0}); }

Grid Grid::rect(int nx, int ny, Point lo, Point hi) { return Grid(2, {nx, ny}, {lo.x, lo.y}, {hi.x, hi.y}); }

Grid Grid::covering(const Box& box, double h) {
  const int nx = static_cast<int>(std::ceil((box.upper.x - box.lower.x) / h - 1e-9));
  if (box.dim == 1) return line(nx, box.lower.x, box.upper.x);
  const int ny = static_cast<int>(std::ceil((box.upper.y - box.lower.y) / h - 1e-9));
  return rect(nx, ny, box.lower, box.upper);
}

double Grid::max_spacing() const { return dim_ == 1 ? spacing(0) : std::max(spacing(0), spacing(1)); }

double Grid::cell_volume() const { return dim_ == 1 ? spacing(0) : spacing(0) * spacing(1); }

Point Grid::center(int i, int j) const {
  const double x = lower_[0] + (i + 0.5) * spacing(0);
  if (dim_ == 1) return {x, 0.0};
  return {x, lower_[1] + (j + 0.5) * spacing(1)};
}

Point Grid::center_of(std::size_t idx) const {
  const int i = static_cast<int>(idx % cells_[0]);
  const int j = static_cast<int>(idx / cells_[0]);
  return center(i, j);
}

Box Grid::box() const { return {{lower_[0], lower_[1]}, {upper_[0], upper_[1]}, dim_}; }

double Grid::distance_to_boundary(Point p) const {
  double d = std::min(p.x - lower_[0], upper_[0] - p.x);
  if (dim_ == 2) d = std::min({d, p.y - lower_[1], upper_[1] - p.y});
  return d;
}

bool Grid::operator==(const Grid& o) const {
  if (dim_ != o.dim_) return false;
  for (int axis = 0; axis < dim_; ++axis) {
    if (cells_[axis] != o.cells_[axis] || lower_[axis] != o.lower_[axis] || upper_[axis] != o.upper_[axis]) {
      return false;
    }
  }
  return true;
}

Field::Field(const Grid& g, double fill) : grid_(g), values_(g.size(), fill) {}

Field::Field(const Grid& g, std::vector<double> values) : grid_(g), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw ShapeError("field length does not match the grid");
}

Field Field::sample(const Grid& g, const std::function<double(Point)>& f) {
  Field out(g);
  for (std::size_t k = 0; k < g.size(); ++k) out[k] = f(g.center_of(k));
  return out;
}

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

VectorField VectorField::sample(const Grid& g, const std::function<Vec2(Point)>& f) {
  VectorField out(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 v = f(g.center_of(k));
    out.x[k] = v.x;
    out.y[k] = v.y;
  }
  return out;
}

void require_same_grid(const Grid& a, const Grid& b) {
  if (a != b) throw ShapeError("fields live on different grids");
}

Field laplacian_neumann(const Field& f) {
  const Grid& g = f.grid();
  const int nx = g.cells(0), ny = g.cells(1);
  const double ihx2 = 1.0 / (g.spacing(0) * g.spacing(0));
  const double ihy2 = g.dim() == 2 ? 1.0 / (g.spacing(1) * g.spacing(1)) : 0.0;
  const auto& u = f.values();
  Field out(g);
  auto& r = out.values();
#pragma omp parallel for if (ny > 32)
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t k = g.index(i, j);
      const double c = u[k];
      double acc = 0.0;
      // Mirrored ghosts make boundary face differences vanish.
      if (i > 0) acc += (u[k - 1] - c) * ihx2;
      if (i < nx - 1) acc += (u[k + 1] - c) * ihx2;
      if (g.dim() == 2) {
        if (j > 0) acc += (u[k - nx] - c) * ihy2;
        if (j < ny - 1) acc += (u[k + nx] - c) * ihy2;
      }
      r[k] = acc;
    }
  }
  return out;
}

VectorField gradient_neumann(const Field& f) {
  const Grid& g = f.grid();
  const int nx = g.cells(0), ny = g.cells(1);
  const double ihx = 1.0 / (2.0 * g.spacing(0));
  const double ihy = g.dim() == 2 ? 1.0 / (2.0 * g.spacing(1)) : 0.0;
  const auto& u = f.values();
  VectorField out(g);
#pragma omp parallel for if (ny > 32)
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t k = g.index(i, j);
      const double left = i > 0 ? u[k - 1] : u[k];
      const double right = i < nx - 1 ? u[k + 1] : u[k];
      out.x[k] = (right - left) * ihx;
      if (g.dim() == 2) {
        const double down = j > 0 ? u[k - nx] : u[k];
        const double up = j < ny - 1 ? u[k + nx] : u[k];
        out.y[k] = (up - down) * ihy;
      }
    }
  }
  return out;
}

Field gradient_energy_density(const Field& f) {
  const Grid& g = f.grid();
  const int nx = g.cells(0), ny = g.cells(1);
  const double ihx = 1.0 / g.spacing(0);
  const double ihy = g.dim() == 2 ? 1.0 / g.spacing(1) : 0.0;
  const auto& u = f.values();
  Field out(g);
  auto& r = out.values();
#pragma omp parallel for if (ny > 32)
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t k = g.index(i, j);
      double acc = 0.0;
      if (i > 0) acc += std::pow((u[k] - u[k - 1]) * ihx, 2);
      if (i < nx - 1) acc += std::pow((u[k + 1] - u[k]) * ihx, 2);
      if (g.dim() == 2) {
        if (j > 0) acc += std::pow((u[k] - u[k - nx]) * ihy, 2);
        if (j < ny - 1) acc += std::pow((u[k + nx] - u[k]) * ihy, 2);
      }
      r[k] = 0.5 * acc;
    }
  }
  return out;
}

double integrate(const Field& f) {
  double sum = 0.0;
  for (double v : f.values()) sum += v;
  return sum * f.grid().cell_volume();
}

double pair_density(const Field& density, const Field& testfn) {
  require_same_grid(density.grid(), testfn.grid());
  double sum = 0.0;
  for (std::size_t k = 0; k < density.size(); ++k) sum += density[k] * testfn[k];
  return sum * density.grid().cell_volume();
}

namespace {

Point lerp_crossing(Point p, Point q, double fp, double fq, double level) {
  const double t = (level - fp) / (fq - fp);
  return p + t * (q - p);
}

bool crosses(double fp, double fq, double level) { return (fp - level) * (fq - level) < 0.0 || (fp == level && fq != level); }

}  // namespace

CircleFit fit_circle(const std::vector<Point>& pts) {
  if (pts.size() < 3) throw ExtractionError("circle fit needs at least three points");
  // Minimize sum (x^2 + y^2 + D x + E y + F)^2.
  Eigen::MatrixXd A(pts.size(), 3);
  Eigen::VectorXd rhs(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    A(k, 0) = pts[k].x;
    A(k, 1) = pts[k].y;
    A(k, 2) = 1.0;
    rhs(k) = -(pts[k].x * pts[k].x + pts[k].y * pts[k].y);
  }
  const Eigen::Vector3d sol = A.colPivHouseholderQr().solve(rhs);
  CircleFit fit;
  fit.center = {-0.5 * sol(0), -0.5 * sol(1)};
  const double r2 = fit.center.x * fit.center.x + fit.center.y * fit.center.y - sol(2);
  if (!(r2 > 0.0)) throw ExtractionError("degenerate circle fit");
  fit.radius = std::sqrt(r2);
  double ss = 0.0;
  for (const Point& p : pts) ss += std::pow(norm(p - fit.center) - fit.radius, 2);
  fit.rms = std::sqrt(ss / pts.size());
  return fit;
}

LevelSetSample extract_levelset(const Field& v, double level, bool want_circle) {
  const Grid& g = v.grid();
  LevelSetSample out;
  out.dim = g.dim();
  const int nx = g.cells(0), ny = g.cells(1);
  if (g.dim() == 1) {
    for (int i = 0; i + 1 < nx; ++i) {
      const double a = v.at(i), b = v.at(i + 1);
      if (crosses(a, b, level)) out.crossings.push_back(lerp_crossing(g.center(i), g.center(i + 1), a, b, level));
    }
    if (out.crossings.empty()) throw ExtractionError("field does not cross the requested level");
    return out;
  }

  // Edge crossings keyed by edge id so marching squares can reuse them.
  std::map<std::pair<std::size_t, int>, Point> edge_point;
  auto edge = [&](int i, int j, int dir) -> std::optional<Point> {
    const std::size_t k = g.index(i, j);
    const std::size_t k2 = dir == 0 ? g.index(i + 1, j) : g.index(i, j + 1);
    const double a = v[k], b = v[k2];
    if (!crosses(a, b, level)) return std::nullopt;
    auto key = std::make_pair(k, dir);
    auto it = edge_point.find(key);
    if (it != edge_point.end()) return it->second;
    const Point p = lerp_crossing(g.center_of(k), g.center_of(k2), a, b, level);
    edge_point.emplace(key, p);
    out.crossings.push_back(p);
    return p;
  };

  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      // Square corners: (i,j) (i+1,j) (i+1,j+1) (i,j+1); edges bottom, right, top, left.
      std::optional<Point> e[4] = {edge(i, j, 0), edge(i + 1, j, 1), edge(i, j + 1, 0), edge(i, j, 1)};
      std::vector<Point> hits;
      for (auto& p : e) {
        if (p) hits.push_back(*p);
      }
      if (hits.size() == 2) {
        out.segments.push_back({hits[0], hits[1]});
      } else if (hits.size() == 4) {
        // Saddle: resolve with the mean of the four corners.
        const double mean = 0.25 * (v.at(i, j) + v.at(i + 1, j) + v.at(i + 1, j + 1) + v.at(i, j + 1));
        const bool corner_above = v.at(i, j) > level;
        if ((mean > level) == corner_above) {
          out.segments.push_back({*e[0], *e[1]});
          out.segments.push_back({*e[2], *e[3]});
        } else {
          out.segments.push_back({*e[0], *e[3]});
          out.segments.push_back({*e[1], *e[2]});
        }
      }
    }
  }
  // Edges on the last row/column that no square visited.
  for (int i = 0; i + 1 < nx; ++i) edge(i, ny - 1, 0);
  for (int j = 0; j + 1 < ny; ++j) edge(nx - 1, j, 1);

  if (out.crossings.empty()) throw ExtractionError("field does not cross the requested level");
  if (want_circle && out.crossings.size() >= 3) out.circle = fit_circle(out.crossings);
  return out;
}

void write_csv(const Field& f, std::ostream& out) {
  const Grid& g = f.grid();
  out << std::setprecision(17);
  if (g.dim() == 1) {
    out << "i,x,value\n";
    for (int i = 0; i < g.cells(0); ++i) out << i << ',' << g.center(i).x << ',' << f.at(i) << '\n';
    return;
  }
  out << "i,j,x,y,value\n";
  for (int j = 0; j < g.cells(1); ++j) {
    for (int i = 0; i < g.cells(0); ++i) {
      const Point p = g.center(i, j);
      out << i << ',' << j << ',' << p.x << ',' << p.y << ',' << f.at(i, j) << '\n';
    }
  }
}

void write_csv(const Field& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path + " for writing");
  write_csv(f, out);
}

namespace {

// FFTW planning is not thread-safe.
std::mutex& fftw_planning() {
  static std::mutex m;
  return m;
}

// Exact inverse of alpha I - beta Lap_h through the cosine transform that diagonalizes
// the mirrored-ghost Laplacian. Used as the CG preconditioner.
class DctInverse {
 public:
  DctInverse(const Grid& g, double alpha, double beta) : nx_(g.cells(0)), ny_(g.cells(1)), size_(g.size()) {
    auto eig = [](int n, double h) {
      std::vector<double> l(static_cast<std::size_t>(n));
      for (int k = 0; k < n; ++k) l[static_cast<std::size_t>(k)] = (2.0 - 2.0 * std::cos(M_PI * k / n)) / (h * h);
      return l;
    };
    const auto lx = eig(nx_, g.spacing(0));
    const auto ly = g.dim() == 2 ? eig(ny_, g.spacing(1)) : std::vector<double>(1, 0.0);
    // FFTW's REDFT10 / REDFT01 pair scales by 2n per axis.
    const double scale = (2.0 * nx_) * (g.dim() == 2 ? 2.0 * ny_ : 1.0);
    inv_.resize(size_);
    for (int j = 0; j < ny_; ++j) {
      for (int i = 0; i < nx_; ++i) {
        inv_[static_cast<std::size_t>(j) * nx_ + i] =
            1.0 / (scale * (alpha + beta * (lx[static_cast<std::size_t>(i)] + ly[static_cast<std::size_t>(j)])));
      }
    }
    buffer_ = fftw_alloc_real(size_);
    std::lock_guard<std::mutex> lock(fftw_planning());
    if (g.dim() == 2) {
      forward_ = fftw_plan_r2r_2d(ny_, nx_, buffer_, buffer_, FFTW_REDFT10, FFTW_REDFT10, FFTW_MEASURE);
      backward_ = fftw_plan_r2r_2d(ny_, nx_, buffer_, buffer_, FFTW_REDFT01, FFTW_REDFT01, FFTW_MEASURE);
    } else {
      forward_ = fftw_plan_r2r_1d(nx_, buffer_, buffer_, FFTW_REDFT10, FFTW_MEASURE);
      backward_ = fftw_plan_r2r_1d(nx_, buffer_, buffer_, FFTW_REDFT01, FFTW_MEASURE);
    }
  }
  ~DctInverse() {
    std::lock_guard<std::mutex> lock(fftw_planning());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(buffer_);
  }
  DctInverse(const DctInverse&) = delete;
  DctInverse& operator=(const DctInverse&) = delete;

  // Executing a plan is thread-safe, but each call needs its own buffer.
  void apply(const double* in, double* out) const {
    double* work = fftw_alloc_real(size_);
    std::copy(in, in + size_, work);
    fftw_execute_r2r(forward_, work, work);
    for (std::size_t k = 0; k < size_; ++k) work[k] *= inv_[k];
    fftw_execute_r2r(backward_, work, work);
    std::copy(work, work + size_, out);
    fftw_free(work);
  }

 private:
  int nx_, ny_;
  std::size_t size_;
  std::vector<double> inv_;
  double* buffer_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

// Eigen preconditioner interface around DctInverse.
class DctPreconditioner {
 public:
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

  DctPreconditioner() = default;
  template <typename M>
  explicit DctPreconditioner(const M&) {}
  template <typename M>
  DctPreconditioner& analyzePattern(const M&) { return *this; }
  template <typename M>
  DctPreconditioner& factorize(const M&) { return *this; }
  template <typename M>
  DctPreconditioner& compute(const M&) { return *this; }

  void set(const DctInverse* inverse) { inverse_ = inverse; }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x(b.size());
    inverse_->apply(b.data(), x.data());
    return x;
  }
  Eigen::ComputationInfo info() const { return Eigen::Success; }

 private:
  const DctInverse* inverse_ = nullptr;
};

}  // namespace

struct HelmholtzSolver::Impl {
  using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
  Grid grid;
  Matrix A;
  std::unique_ptr<DctInverse> inverse;
  Eigen::ConjugateGradient<Matrix, Eigen::Lower | Eigen::Upper, DctPreconditioner> cg;
  double tol = 1e-10;
  explicit Impl(const Grid& g) : grid(g) {}
};

HelmholtzSolver::HelmholtzSolver(const Grid& g, double alpha, double beta, double tol, int max_iterations)
    : impl_(std::make_unique<Impl>(g)) {
  if (!(alpha > 0.0) || !(beta >= 0.0)) throw InputError("Helmholtz operator needs alpha > 0, beta >= 0");
  const int nx = g.cells(0), ny = g.cells(1);
  const double cx = beta / (g.spacing(0) * g.spacing(0));
  const double cy = g.dim() == 2 ? beta / (g.spacing(1) * g.spacing(1)) : 0.0;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(g.size() * 5);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int k = static_cast<int>(g.index(i, j));
      double diag = alpha;
      auto link = [&](int other, double c) {
        trip.emplace_back(k, other, -c);
        diag += c;
      };
      if (i > 0) link(k - 1, cx);
      if (i < nx - 1) link(k + 1, cx);
      if (g.dim() == 2) {
        if (j > 0) link(k - nx, cy);
        if (j < ny - 1) link(k + nx, cy);
      }
      trip.emplace_back(k, k, diag);
    }
  }
  impl_->A.resize(static_cast<int>(g.size()), static_cast<int>(g.size()));
  impl_->A.setFromTriplets(trip.begin(), trip.end());
  impl_->A.makeCompressed();
  impl_->tol = tol;
  impl_->inverse = std::make_unique<DctInverse>(g, alpha, beta);
  impl_->cg.setTolerance(tol);
  impl_->cg.setMaxIterations(max_iterations);
  impl_->cg.compute(impl_->A);
  impl_->cg.preconditioner().set(impl_->inverse.get());
}

HelmholtzSolver::~HelmholtzSolver() = default;
HelmholtzSolver::HelmholtzSolver(HelmholtzSolver&&) noexcept = default;
HelmholtzSolver& HelmholtzSolver::operator=(HelmholtzSolver&&) noexcept = default;

const Grid& HelmholtzSolver::grid() const { return impl_->grid; }

SolveStats HelmholtzSolver::solve(const std::vector<double>& b, std::vector<double>& x) const {
  if (b.size() != impl_->grid.size() || x.size() != b.size()) throw ShapeError("solver vector length mismatch");
  Eigen::Map<const Eigen::VectorXd> bm(b.data(), static_cast<Eigen::Index>(b.size()));
  Eigen::Map<Eigen::VectorXd> xm(x.data(), static_cast<Eigen::Index>(x.size()));
  if (bm.squaredNorm() == 0.0) {
    xm.setZero();
    return {};
  }
  // The transform inverse is exact up to rounding, so CG usually only confirms it.
  Eigen::VectorXd guess(bm.size());
  impl_->inverse->apply(b.data(), guess.data());
  xm = impl_->cg.solveWithGuess(bm, guess);
  SolveStats stats{static_cast<int>(impl_->cg.iterations()), impl_->cg.error()};
  if (impl_->cg.info() != Eigen::Success || !(stats.residual <= impl_->tol)) {
    std::ostringstream msg;
    msg << "conjugate gradient did not converge (relative residual " << stats.residual << ")";
    throw NumericError(msg.str(), stats.residual);
  }
  return stats;
}

}  // namespace wmcf::grid
