#include "wmcf/flow.hpp"

#include "wmcf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace wmcf::flow {

using grid::Field;
using grid::Grid;

namespace {

std::vector<Point> cell_centers(const Grid& g) {
  std::vector<Point> x(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) x[k] = g.center_of(k);
  return x;
}

double second_derivative(const wells::WellSpec& spec, Point x, double u) {
  if (spec.d2W_du2) return spec.d2W_du2(x, u);
  constexpr double h = 1e-6;
  return (spec.dW_du(x, u + h) - spec.dW_du(x, u - h)) / (2 * h);
}

// Volume-weighted sums with long double accumulation; objective differences in
// the descent loops are compared at the 1e-15 level.
double weighted_dot(const std::vector<double>& a, const std::vector<double>& b, double vol) {
  long double s = 0.0L;
  for (std::size_t k = 0; k < a.size(); ++k) s += static_cast<long double>(a[k]) * b[k];
  return static_cast<double>(s) * vol;
}

double mean_of(const std::vector<double>& a) {
  long double s = 0.0L;
  for (double v : a) s += v;
  return static_cast<double>(s / a.size());
}

void check_state(const PhaseState& s) {
  if (!(s.eps > 0.0)) throw InputError("interface width eps must be positive");
  if (!s.u.all_finite()) throw NumericError("phase field contains non-finite values", 0.0);
}

struct Energetics {
  const wells::WellSpec& spec;
  Grid grid;
  double eps;
  std::vector<Point> x;

  Energetics(const wells::WellSpec& s, const Grid& g, double e) : spec(s), grid(g), eps(e), x(cell_centers(g)) {}

  double energy(const std::vector<double>& u) const {
    const Field f(grid, u);
    const Field grad = grid::gradient_energy_density(f);
    long double s = 0.0L;
    for (std::size_t k = 0; k < u.size(); ++k) {
      s += spec.W(x[k], u[k]) / eps + 0.5 * eps * grad[k];
    }
    return static_cast<double>(s) * grid.cell_volume();
  }

  std::vector<double> reaction(const std::vector<double>& u) const {
    std::vector<double> r(u.size());
#pragma omp parallel for if (u.size() > 4096)
    for (std::size_t k = 0; k < u.size(); ++k) r[k] = spec.dW_du(x[k], u[k]);
    return r;
  }
};

}  // namespace

double DissipationLedger::dissipation_total() const {
  double s = 0.0;
  for (const auto& r : records) s += r.dissipation_increment;
  return s;
}

double DissipationLedger::final_energy() const { return records.empty() ? initial_energy : records.back().energy; }

double DissipationLedger::final_defect() const { return records.empty() ? 0.0 : records.back().defect; }

void DissipationLedger::write_csv(std::ostream& out) const {
  out << std::setprecision(17) << "step,time,energy,dissipation_increment,defect,inner_residual\n";
  out << 0 << ',' << initial_time << ',' << initial_energy << ",0,0,0\n";
  for (const auto& r : records) {
    out << r.step << ',' << r.time << ',' << r.energy << ',' << r.dissipation_increment << ',' << r.defect << ','
        << r.inner_residual << '\n';
  }
}

double energy(const PhaseState& state, const wells::WellSpec& spec) {
  check_state(state);
  return Energetics(spec, state.u.grid(), state.eps).energy(state.u.values());
}

Field potential_density(const PhaseState& state, const wells::WellSpec& spec) {
  const Grid& g = state.u.grid();
  Field out(g);
  for (std::size_t k = 0; k < g.size(); ++k) out[k] = spec.W(g.center_of(k), state.u[k]) / state.eps;
  return out;
}

Field reaction(const PhaseState& state, const wells::WellSpec& spec) {
  const Grid& g = state.u.grid();
  return Field(g, Energetics(spec, g, state.eps).reaction(state.u.values()));
}

double reaction_lipschitz(const wells::WellSpec& spec, const Grid& g, double u_min, double u_max, int u_samples) {
  double L = 0.0;
  const int n = std::max(u_samples, 2);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.center_of(k);
    for (int s = 0; s < n; ++s) {
      const double u = u_min + (u_max - u_min) * s / (n - 1);
      L = std::max(L, std::abs(second_derivative(spec, x, u)));
    }
  }
  return L;
}

double semi_implicit_dt_bound(const PhaseState& state, const wells::WellSpec& spec) {
  const Grid& g = state.u.grid();
  double lo = *std::min_element(state.u.values().begin(), state.u.values().end());
  double hi = *std::max_element(state.u.values().begin(), state.u.values().end());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.center_of(k);
    lo = std::min(lo, spec.a(x));
    hi = std::max(hi, spec.b(x));
  }
  const double L = reaction_lipschitz(spec, g, lo, hi);
  if (L == 0.0) return std::numeric_limits<double>::infinity();
  return state.eps * state.eps / L;
}

struct SemiImplicitStepper::Impl {
  Energetics en;
  double dt;
  grid::HelmholtzSolver solver;
  mutable double residual = 0.0;
  Impl(const Grid& g, const wells::WellSpec& spec, double eps, double step, double tol)
      : en(spec, g, eps), dt(step), solver(g, 1.0, step, tol) {}
};

SemiImplicitStepper::SemiImplicitStepper(const Grid& g, const wells::WellSpec& spec, double eps, double dt, double tol)
    : impl_(std::make_unique<Impl>(g, spec, eps, dt, tol)) {
  if (!(dt > 0.0)) throw InputError("time step must be positive");
}

SemiImplicitStepper::~SemiImplicitStepper() = default;
SemiImplicitStepper::SemiImplicitStepper(SemiImplicitStepper&&) noexcept = default;

double SemiImplicitStepper::dt() const { return impl_->dt; }
double SemiImplicitStepper::last_residual() const { return impl_->residual; }

PhaseState SemiImplicitStepper::step(const PhaseState& state) const {
  check_state(state);
  grid::require_same_grid(state.u.grid(), impl_->solver.grid());
  const auto& u = state.u.values();
  const std::vector<double> r = impl_->en.reaction(u);
  const double c = impl_->dt / (state.eps * state.eps);
  std::vector<double> rhs(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) rhs[k] = u[k] - c * r[k];
  std::vector<double> next = u;
  impl_->residual = impl_->solver.solve(rhs, next).residual;
  return {Field(state.u.grid(), std::move(next)), state.eps, state.time + impl_->dt};
}

PhaseState step_semiimplicit(const PhaseState& state, const wells::WellSpec& spec, double dt) {
  return SemiImplicitStepper(state.u.grid(), spec, state.eps, dt).step(state);
}

namespace {

// Preconditioned Barzilai-Borwein descent with Armijo backtracking. The objective
// and its L2 gradient are supplied by the caller; P = alpha I - beta Lap_h.
struct DescentProblem {
  std::function<double(const std::vector<double>&)> objective;
  std::function<void(const std::vector<double>&, std::vector<double>&)> gradient;
  std::function<bool(const std::vector<double>& u, const std::vector<double>& g, double f_old, double f_new)> converged;
  bool project_mean = false;
};

struct DescentOutcome {
  std::vector<double> u;
  double objective = 0.0;
  std::vector<double> gradient;
  int iterations = 0;
  bool stagnated = false;
};

DescentOutcome descend(const DescentProblem& prob, const Grid& g, std::vector<double> u, double alpha, double beta,
                       int max_iterations, double armijo, double cg_tol) {
  const double vol = g.cell_volume();
  const grid::HelmholtzSolver precond(g, alpha, beta, cg_tol);
  auto apply_P = [&](const std::vector<double>& s) {
    const Field lap = grid::laplacian_neumann(Field(g, s));
    std::vector<double> out(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) out[k] = alpha * s[k] - beta * lap[k];
    return out;
  };
  auto remove_mean = [&](std::vector<double>& v) {
    const double m = mean_of(v);
    for (double& x : v) x -= m;
  };

  DescentOutcome out;
  double f = prob.objective(u);
  std::vector<double> grad(u.size());
  prob.gradient(u, grad);
  if (prob.project_mean) remove_mean(grad);
  if (prob.converged(u, grad, std::numeric_limits<double>::infinity(), f)) {
    return {std::move(u), f, std::move(grad), 0, false};
  }

  std::vector<double> d(u.size(), 0.0), trial(u.size()), grad_new(u.size()), s(u.size()), y(u.size());
  double step = 1.0;
  for (int it = 1; it <= max_iterations; ++it) {
    std::fill(d.begin(), d.end(), 0.0);
    std::vector<double> neg(grad.size());
    for (std::size_t k = 0; k < grad.size(); ++k) neg[k] = -grad[k];
    precond.solve(neg, d);
    if (prob.project_mean) remove_mean(d);
    const double slope = weighted_dot(grad, d, vol);
    if (!(slope < 0.0)) {
      out = {std::move(u), f, std::move(grad), it, true};
      return out;
    }

    double a = std::clamp(step, 1e-4, 1e4);
    double f_new = f;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t k = 0; k < u.size(); ++k) trial[k] = u[k] + a * d[k];
      f_new = prob.objective(trial);
      if (std::isfinite(f_new) && f_new <= f + armijo * a * slope) {
        accepted = true;
        break;
      }
      a *= 0.5;
    }
    if (!accepted) {
      out = {std::move(u), f, std::move(grad), it, true};
      return out;
    }

    prob.gradient(trial, grad_new);
    if (prob.project_mean) remove_mean(grad_new);
    for (std::size_t k = 0; k < u.size(); ++k) {
      s[k] = trial[k] - u[k];
      y[k] = grad_new[k] - grad[k];
    }
    const double sy = weighted_dot(s, y, vol);
    const double sPs = weighted_dot(s, apply_P(s), vol);
    step = sy > 0.0 ? sPs / sy : 1.0;

    const double f_old = f;
    u.swap(trial);
    grad.swap(grad_new);
    f = f_new;
    if (prob.converged(u, grad, f_old, f)) {
      out = {std::move(u), f, std::move(grad), it, false};
      return out;
    }
  }
  std::ostringstream msg;
  msg << "descent did not converge in " << max_iterations << " iterations";
  throw DescentError(msg.str(), std::sqrt(weighted_dot(grad, grad, vol)), std::move(u));
}

}  // namespace

MinMovStep step_minmov(const PhaseState& state, const wells::WellSpec& spec, double h, std::optional<double> trunc,
                       const DescentOptions& options) {
  check_state(state);
  if (!(h > 0.0)) throw InputError("minimizing movements step must be positive");
  const Grid& g = state.u.grid();
  const double eps = state.eps;
  const double vol = g.cell_volume();
  const Energetics en(spec, g, eps);
  const std::vector<double>& prev = state.u.values();

  auto movement = [&](const std::vector<double>& u) {
    long double s = 0.0L;
    for (std::size_t k = 0; k < u.size(); ++k) s += static_cast<long double>(u[k] - prev[k]) * (u[k] - prev[k]);
    return static_cast<double>(s) * vol;
  };

  DescentProblem prob;
  prob.objective = [&](const std::vector<double>& u) { return en.energy(u) / eps + movement(u) / (2.0 * h); };
  prob.gradient = [&](const std::vector<double>& u, std::vector<double>& out) {
    const std::vector<double> r = en.reaction(u);
    const Field lap = grid::laplacian_neumann(Field(g, u));
    for (std::size_t k = 0; k < u.size(); ++k) out[k] = r[k] / (eps * eps) - lap[k] + (u[k] - prev[k]) / h;
  };
  prob.converged = [&](const std::vector<double>&, const std::vector<double>& gr, double f_old, double f_new) {
    if (std::sqrt(weighted_dot(gr, gr, vol)) < options.gradient_tol) return true;
    return std::isfinite(f_old) && f_old - f_new < options.rel_decrease_tol * std::abs(f_new);
  };

  // Reaction curvature at the wells sets the preconditioner shift.
  double lo = *std::min_element(prev.begin(), prev.end()), hi = *std::max_element(prev.begin(), prev.end());
  for (const Point& x : en.x) {
    lo = std::min(lo, spec.a(x));
    hi = std::max(hi, spec.b(x));
  }
  const double L = reaction_lipschitz(spec, g, lo, hi, 9);
  const double alpha = 1.0 / h + L / (eps * eps);
  DescentOutcome res = descend(prob, g, prev, alpha, 1.0, options.max_iterations, options.armijo, options.cg_tol);

  MinMovStep out{PhaseState{Field(g, res.u), eps, state.time + h}, {}, res.iterations, false, 0.0};
  if (trunc) {
    const double c0 = *trunc;
    std::vector<double> clipped = res.u;
    bool outside = false;
    for (double& v : clipped) {
      if (v > c0 || v < -c0) outside = true;
      v = std::clamp(v, -c0, c0);
    }
    if (outside) {
      const double f_clip = prob.objective(clipped);
      out.clamp_energy_change = en.energy(clipped) - en.energy(res.u);
      if (f_clip < res.objective) {
        out.state.u = Field(g, std::move(clipped));
        out.clamped = true;
      }
    }
  }

  const double e_prev = en.energy(prev);
  const double e_new = en.energy(out.state.u.values());
  const double move = movement(out.state.u.values());
  out.record.time = out.state.time;
  out.record.energy = e_new;
  out.record.dissipation_increment = eps * move / h;
  out.record.inner_residual = std::sqrt(weighted_dot(res.gradient, res.gradient, vol));
  out.record.minimality_slack = e_prev - e_new - eps * move / (2.0 * h);
  return out;
}

RunResult run(const PhaseState& state, const wells::WellSpec& spec, Scheme scheme, double dt, double t_end,
              const RunOptions& options) {
  check_state(state);
  if (!(t_end > state.time)) throw InputError("t_end must exceed the current time");
  if (!(dt > 0.0)) throw InputError("time step must be positive");
  if (scheme == Scheme::semi_implicit && options.enforce_stability) {
    const double bound = semi_implicit_dt_bound(state, spec);
    if (dt > bound * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "dt = " << dt << " exceeds the semi-implicit stability bound " << bound;
      throw InputError(msg.str());
    }
  }

  const Grid& g = state.u.grid();
  const double vol = g.cell_volume();
  RunResult out{state, {}};
  out.ledger.initial_time = state.time;
  out.ledger.initial_energy = energy(state, spec);

  std::vector<double> marks;
  for (double c : options.checkpoints) {
    if (c > state.time && c < t_end) marks.push_back(c);
  }
  marks.push_back(t_end);
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
  auto requested = [&](double t) {
    return std::find(options.checkpoints.begin(), options.checkpoints.end(), t) != options.checkpoints.end();
  };
  std::size_t next_mark = 0;

  std::optional<SemiImplicitStepper> full;
  if (scheme == Scheme::semi_implicit) full.emplace(g, spec, state.eps, dt);
  const double t_tol = 1e-12 * std::max(1.0, t_end);
  double dissipated = 0.0;
  int step = 0;
  while (out.state.time < t_end - t_tol) {
    const double target = marks[next_mark];
    double h = std::min(dt, target - out.state.time);
    const bool lands = target - out.state.time <= dt + t_tol;
    if (lands) h = target - out.state.time;

    PhaseState next{out.state};
    LedgerRecord rec;
    if (scheme == Scheme::semi_implicit) {
      if (std::abs(h - dt) <= t_tol) {
        next = full->step(out.state);
        rec.inner_residual = full->last_residual();
      } else {
        SemiImplicitStepper partial(g, spec, state.eps, h);
        next = partial.step(out.state);
        rec.inner_residual = partial.last_residual();
      }
      if (options.record_energy) {
        rec.energy = energy(next, spec);
        double move = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) move += std::pow(next.u[k] - out.state.u[k], 2);
        rec.dissipation_increment = state.eps * move * vol / h;
      } else {
        rec.energy = std::numeric_limits<double>::quiet_NaN();
      }
    } else {
      MinMovStep mm = step_minmov(out.state, spec, h, options.trunc, options.descent);
      next = std::move(mm.state);
      rec = mm.record;
    }
    if (lands) next.time = target;
    rec.step = ++step;
    rec.time = next.time;
    dissipated += rec.dissipation_increment;
    rec.defect = std::abs(out.ledger.initial_energy - rec.energy - dissipated);
    out.ledger.records.push_back(rec);
    out.state = std::move(next);
    if (lands) {
      if (options.on_checkpoint && requested(target)) options.on_checkpoint(out.state);
      if (++next_mark >= marks.size()) break;
    }
  }
  return out;
}

std::pair<double, double> euler_lagrange_stats(const PhaseState& state, const wells::WellSpec& spec) {
  const Grid& g = state.u.grid();
  const Energetics en(spec, g, state.eps);
  const std::vector<double> r = en.reaction(state.u.values());
  const Field lap = grid::laplacian_neumann(state.u);
  std::vector<double> el(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) el[k] = state.eps * lap[k] - r[k] / state.eps;
  const double mean = mean_of(el);
  long double ss = 0.0L;
  for (double v : el) ss += static_cast<long double>(v - mean) * (v - mean);
  return {mean, std::sqrt(static_cast<double>(ss / el.size()))};
}

ConstrainedResult minimize_constrained(const wells::WellSpec& spec, const Grid& g, double eps, double m,
                                       const Field& init, const ConstrainedOptions& options) {
  if (!(eps > 0.0)) throw InputError("interface width eps must be positive");
  grid::require_same_grid(g, init.grid());
  double mean_a = 0.0, mean_b = 0.0, L = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.center_of(k);
    mean_a += spec.a(x);
    mean_b += spec.b(x);
    L = std::max({L, std::abs(second_derivative(spec, x, spec.a(x))), std::abs(second_derivative(spec, x, spec.b(x)))});
  }
  mean_a /= g.size();
  mean_b /= g.size();
  const bool on_well = std::abs(m - mean_b) <= 1e-14 * std::max(1.0, std::abs(m)) ||
                       std::abs(m - mean_a) <= 1e-14 * std::max(1.0, std::abs(m));
  if (!(m > mean_a && m < mean_b) && !on_well) {
    std::ostringstream msg;
    msg << "mass " << m << " outside the admissible range (" << mean_a << ", " << mean_b << ")";
    throw InputError(msg.str());
  }

  const Energetics en(spec, g, eps);
  std::vector<double> u = init.values();
  const double shift = m - mean_of(u);
  for (double& v : u) v += shift;

  auto std_of = [](const std::vector<double>& v) {
    const double mu = mean_of(v);
    long double ss = 0.0L;
    for (double x : v) ss += static_cast<long double>(x - mu) * (x - mu);
    return std::sqrt(static_cast<double>(ss / v.size()));
  };

  DescentProblem prob;
  prob.project_mean = true;
  prob.objective = [&](const std::vector<double>& v) { return en.energy(v); };
  prob.gradient = [&](const std::vector<double>& v, std::vector<double>& out) {
    const std::vector<double> r = en.reaction(v);
    const Field lap = grid::laplacian_neumann(Field(g, v));
    for (std::size_t k = 0; k < v.size(); ++k) out[k] = r[k] / eps - eps * lap[k];
  };
  prob.converged = [&](const std::vector<double>&, const std::vector<double>& gr, double, double) {
    return std_of(gr) < options.residual_tol;
  };

  const double alpha = (L > 0.0 ? L : 1.0) / eps;
  DescentOutcome res = descend(prob, g, std::move(u), alpha, eps, options.max_iterations, options.armijo, options.cg_tol);

  ConstrainedResult out{PhaseState{Field(g, std::move(res.u)), eps, 0.0}, 0.0, 0.0, res.iterations};
  // Re-impose the constraint exactly after floating-point drift.
  const double drift = m - mean_of(out.state.u.values());
  for (double& v : out.state.u.values()) v += drift;
  const auto [lambda, residual] = euler_lagrange_stats(out.state, spec);
  out.lambda = lambda;
  out.residual = residual;
  if (res.stagnated && residual > 100.0 * options.residual_tol) {
    std::ostringstream msg;
    msg << "constrained descent stalled with stationarity residual " << residual;
    throw DescentError(msg.str(), residual, out.state.u.values());
  }
  return out;
}

}  // namespace wmcf::flow
