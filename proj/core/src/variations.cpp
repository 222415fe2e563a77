#include "wmcf/variations.hpp"

#include "wmcf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace wmcf::variations {

using grid::Field;
using grid::Grid;

namespace {

void check_resolution(const Grid& g, double eps) {
  if (eps < 4.0 * g.max_spacing() * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg << "eps = " << eps << " is below 4h = " << 4.0 * g.max_spacing();
    throw ResolutionError(msg.str());
  }
}

double interface_clearance(const sharp::SharpInterface& A, const Grid& g) {
  if (A.kind == sharp::InterfaceKind::point1d) return std::min(A.center.x - g.lower(0), g.upper(0) - A.center.x);
  double d = std::min({A.center.x - g.lower(0), g.upper(0) - A.center.x});
  if (g.dim() == 2) d = std::min({d, A.center.y - g.lower(1), g.upper(1) - A.center.y});
  return d - A.radius;
}

}  // namespace

Field gradient_magnitude(const Field& u) {
  Field e = grid::gradient_energy_density(u);
  for (double& v : e.values()) v = std::sqrt(v);
  return e;
}

RecoveryState build_recovery(const sharp::SharpInterface& A, const wells::WellSpec& spec, const Grid& g, double eps,
                             const SmoothScalar& sigma, const RecoveryOptions& options) {
  if (!(eps > 0.0)) throw InputError("interface width eps must be positive");
  if (A.dim() != g.dim()) throw GeometryError("interface and grid dimensions differ");
  check_resolution(g, eps);
  const double clearance = interface_clearance(A, g);
  if (clearance < options.boundary_layers * eps) {
    std::ostringstream msg;
    msg << "interface is " << clearance << " from the boundary; need " << options.boundary_layers * eps;
    throw GeometryError(msg.str());
  }

  const Point mid = g.center_of(g.size() / 2);
  const wells::ProfileSampler profile(spec, A.project(mid));
  Field u(g);
#pragma omp parallel for schedule(dynamic, 256) if (g.size() > 4096)
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.center_of(k);
    const double a = spec.a(x);
    u[k] = a + (spec.b(x) - a) * profile(x, A.sdist(x) / eps);
  }

  RecoveryState out{A, eps, flow::PhaseState{std::move(u), eps, 0.0}, 0.0, 0.0};
  out.energy = flow::energy(out.state, spec);
  out.energy_sharp = sharp::weighted_perimeter(A, sigma);
  if (options.check_energy &&
      std::abs(out.energy - out.energy_sharp) > options.energy_factor * eps * std::max(1.0, out.energy_sharp)) {
    std::ostringstream msg;
    msg << "recovery energy " << out.energy << " is not within O(eps) of the weighted perimeter " << out.energy_sharp;
    throw NumericError(msg.str(), std::abs(out.energy - out.energy_sharp));
  }
  return out;
}

RecoveryState build_recovery(const sharp::SharpInterface& A, const wells::WellSpec& spec, const Grid& g, double eps,
                             const RecoveryOptions& options) {
  return build_recovery(A, spec, g, eps, wells::sigma_field(spec), options);
}

double equipartition_defect(const flow::PhaseState& state, const wells::WellSpec& spec) {
  const Grid& g = state.u.grid();
  const Field grad = gradient_magnitude(state.u);
  const double se = std::sqrt(state.eps);
  long double s = 0.0L;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double w = std::max(spec.W(g.center_of(k), state.u[k]), 0.0);
    const double d = se * grad[k] - std::sqrt(2.0 * w) / se;
    s += static_cast<long double>(d) * d;
  }
  return static_cast<double>(s) * g.cell_volume();
}

double measure_pairing(const flow::PhaseState& state, const wells::WellSpec& spec, Density which, const Field& psi) {
  const Grid& g = state.u.grid();
  grid::require_same_grid(g, psi.grid());
  const Field grad = gradient_magnitude(state.u);
  Field density(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double w = std::max(spec.W(g.center_of(k), state.u[k]), 0.0);
    switch (which) {
      case Density::potential: density[k] = 2.0 * w / state.eps; break;
      case Density::gradient: density[k] = state.eps * grad[k] * grad[k]; break;
      case Density::geometric: density[k] = std::sqrt(2.0 * w) * grad[k]; break;
    }
  }
  return grid::pair_density(density, psi);
}

double geometric_energy(const flow::PhaseState& state, const wells::WellSpec& spec) {
  return measure_pairing(state, spec, Density::geometric, Field(state.u.grid(), 1.0));
}

FirstVariation diffuse_first_variation(const flow::PhaseState& state, const wells::WellSpec& spec,
                                       const TestVectorField& psi) {
  const Grid& g = state.u.grid();
  const double eps = state.eps;
  const std::size_t n = g.size();
  Field v(g);
  std::vector<double> a(n), gam(n);
  std::vector<Point> x(n);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = g.center_of(k);
    a[k] = spec.a(x[k]);
    gam[k] = spec.b(x[k]) - a[k];
    v[k] = (state.u[k] - a[k]) / gam[k];
  }
  const grid::VectorField gv = grid::gradient_neumann(v);
  const Field lap = grid::laplacian_neumann(state.u);

  long double direct = 0.0L, reassembled = 0.0L;
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 dv = gv[k];
    const Vec2 p = psi.value(x[k]);
    const Mat2 J = psi.jacobian(x[k]);
    const double u = state.u[k];
    const double dWdu = spec.dW_du(x[k], u);

    // Discrete gradient of E applied to phi = gamma grad v . Psi.
    const double phi = gam[k] * dot(dv, p);
    direct += phi * (dWdu / eps - eps * lap[k]);

    const double dv2 = dot(dv, dv);
    const double mu = eps * gam[k] * gam[k] * dv2;
    const double dvn = std::sqrt(dv2);
    const Vec2 nrm = dvn < 1e-12 ? Vec2{} : (1.0 / dvn) * dv;
    const double tangential = J.trace() - dot(nrm, J.apply(nrm));
    const Vec2 grad_gamma = spec.grad_b(x[k]) - spec.grad_a(x[k]);
    const double wn = spec.W(x[k], u);
    // d_x W_n(x, v) = d_x W(x, a + gamma v) + d_u W (grad a + v grad gamma)
    const Vec2 dxWn = spec.dW_dx(x[k], u) + dWdu * (spec.grad_a(x[k]) + v[k] * grad_gamma);
    reassembled += -mu * tangential - mu * dot(grad_gamma, p) / gam[k] +
                   (0.5 * eps * gam[k] * gam[k] * dv2 - wn / eps) * J.trace() - dot(dxWn, p) / eps;
  }
  FirstVariation out;
  out.direct = static_cast<double>(direct) * g.cell_volume();
  out.reassembled = static_cast<double>(reassembled) * g.cell_volume();
  out.gap = std::abs(out.direct - out.reassembled);
  return out;
}

std::vector<Grid> sweep_grids(const sharp::SharpInterface& A, const std::vector<double>& eps,
                              const ResolutionPolicy& policy) {
  if (eps.empty()) return {};
  std::vector<double> sorted = eps;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  auto domain_for = [&](double e) -> Box {
    if (policy.fixed_domain) return *policy.fixed_domain;
    const double margin = policy.boundary_layers * e + policy.pad;
    if (A.kind == sharp::InterfaceKind::point1d) {
      return {{A.center.x - margin, 0.0}, {A.center.x + margin, 1.0}, 1};
    }
    const double half = A.radius + margin;
    return {{A.center.x - half, A.center.y - half}, {A.center.x + half, A.center.y + half}, 2};
  };
  auto width = [](const Box& b) {
    return b.dim == 1 ? b.upper.x - b.lower.x : std::max(b.upper.x - b.lower.x, b.upper.y - b.lower.y);
  };

  const double e_min = sorted.back();
  const double rho_max = policy.max_cells * e_min / width(domain_for(e_min));
  const double rho_min = policy.min_points_per_eps;
  if (rho_max < rho_min * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg << "eps = " << e_min << " needs more than " << policy.max_cells << " cells per axis";
    throw ResolutionError(msg.str());
  }
  const std::size_t m = sorted.size();
  std::vector<Grid> by_sorted;
  for (std::size_t k = 0; k < m; ++k) {
    const double e = sorted[k];
    const Box box = domain_for(e);
    const double frac = m == 1 ? 1.0 : static_cast<double>(k) / (m - 1);
    const double rho = rho_min * std::pow(rho_max / rho_min, frac);
    auto cells_along = [&](double len) {
      return std::clamp(static_cast<int>(std::ceil(rho * len / e - 1e-9)), 8, policy.max_cells);
    };
    if (box.dim == 1) {
      by_sorted.push_back(Grid::line(cells_along(box.upper.x - box.lower.x), box.lower.x, box.upper.x));
    } else {
      by_sorted.push_back(Grid::rect(cells_along(box.upper.x - box.lower.x), cells_along(box.upper.y - box.lower.y),
                                     box.lower, box.upper));
    }
  }
  // Return in the caller's eps order.
  std::vector<Grid> out;
  for (double e : eps) {
    const auto it = std::find(sorted.begin(), sorted.end(), e);
    out.push_back(by_sorted[static_cast<std::size_t>(it - sorted.begin())]);
  }
  return out;
}

bool strictly_decreasing(const std::vector<double>& values) {
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (!(values[k] < values[k - 1])) return false;
  }
  return true;
}

bool SweepTable::gaps_decreasing() const {
  std::vector<double> g;
  for (const auto& r : rows) g.push_back(r.gap);
  return strictly_decreasing(g);
}

bool SweepTable::defects_decreasing() const {
  std::vector<double> d;
  for (const auto& r : rows) d.push_back(r.defect);
  return strictly_decreasing(d);
}

void SweepTable::write_csv(std::ostream& out) const {
  out << std::setprecision(17) << "eps,diffuse,sharp,gap,defect,energy,energy_sharp\n";
  for (const auto& r : rows) {
    out << r.eps << ',' << r.diffuse << ',' << r.sharp << ',' << r.gap << ',' << r.defect << ',' << r.energy << ','
        << r.energy_sharp << '\n';
  }
}

SweepTable first_variation_convergence(const std::vector<double>& eps, const sharp::SharpInterface& A,
                                       const wells::WellSpec& spec, const TestVectorField& psi,
                                       const SmoothScalar& sigma, const ResolutionPolicy& policy) {
  const std::vector<Grid> grids = sweep_grids(A, eps, policy);
  const double sharp_value = sharp::sharp_first_variation(A, sigma, psi);
  RecoveryOptions ropt;
  ropt.boundary_layers = policy.boundary_layers;
  SweepTable table;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    if (!is_admissible(psi, grids[k])) throw InputError("test vector field is not tangential on the boundary");
    const RecoveryState rec = build_recovery(A, spec, grids[k], eps[k], sigma, ropt);
    const FirstVariation fv = diffuse_first_variation(rec.state, spec, psi);
    SweepRow row;
    row.eps = eps[k];
    row.diffuse = fv.direct;
    row.reassembled = fv.reassembled;
    row.sharp = sharp_value;
    row.gap = std::abs(fv.direct - sharp_value);
    row.defect = equipartition_defect(rec.state, spec);
    row.energy = rec.energy;
    row.energy_sharp = rec.energy_sharp;
    row.spacing = grids[k].max_spacing();
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace wmcf::variations
