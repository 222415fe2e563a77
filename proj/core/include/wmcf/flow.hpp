#pragma once

#include "wmcf/grid.hpp"
#include "wmcf/wells.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

namespace wmcf::flow {

struct PhaseState {
  grid::Field u;
  double eps = 0.0;
  double time = 0.0;
};

struct LedgerRecord {
  int step = 0;
  double time = 0.0;
  double energy = 0.0;
  // eps * ||(u_i - u_{i-1}) / dt||^2 * dt
  double dissipation_increment = 0.0;
  // |E(0) - E(t_i) - sum of increments|
  double defect = 0.0;
  double inner_residual = 0.0;
  // Minimizing movements only: E[u_{i-1}] - E[u_i] - (eps / 2h) ||u_i - u_{i-1}||^2.
  double minimality_slack = 0.0;
};

struct DissipationLedger {
  double initial_time = 0.0;
  double initial_energy = 0.0;
  std::vector<LedgerRecord> records;

  double dissipation_total() const;
  double final_energy() const;
  double final_defect() const;
  void write_csv(std::ostream& out) const;
};

double energy(const PhaseState& state, const wells::WellSpec& spec);

// Cellwise energy densities on the state's grid.
grid::Field potential_density(const PhaseState& state, const wells::WellSpec& spec);  // W / eps
grid::Field reaction(const PhaseState& state, const wells::WellSpec& spec);           // dW/du

// max |d^2W/du^2| over grid cells and u in [u_min, u_max].
double reaction_lipschitz(const wells::WellSpec& spec, const grid::Grid& g, double u_min, double u_max,
                          int u_samples = 33);
// eps^2 / L_W on the box spanned by the state and the wells.
double semi_implicit_dt_bound(const PhaseState& state, const wells::WellSpec& spec);

// Holds the implicit operator for repeated steps with a fixed dt. Keeps a
// reference to spec.
class SemiImplicitStepper {
 public:
  SemiImplicitStepper(const grid::Grid& g, const wells::WellSpec& spec, double eps, double dt, double tol = 1e-10);
  ~SemiImplicitStepper();
  SemiImplicitStepper(SemiImplicitStepper&&) noexcept;

  PhaseState step(const PhaseState& state) const;
  double dt() const;
  double last_residual() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// (I - dt Lap_h) u_new = u_old - (dt / eps^2) dW/du(x, u_old).
PhaseState step_semiimplicit(const PhaseState& state, const wells::WellSpec& spec, double dt);

struct DescentOptions {
  double rel_decrease_tol = 1e-12;
  double gradient_tol = 1e-9;
  int max_iterations = 5000;
  double armijo = 1e-4;
  double cg_tol = 1e-10;
};

struct MinMovStep {
  PhaseState state;
  LedgerRecord record;
  int iterations = 0;
  bool clamped = false;
  // Energy of clamp(u) minus energy of u for the unclamped candidate (<= 0 expected).
  double clamp_energy_change = 0.0;
};

// Approximate argmin of (1/eps) E[u] + (1/2h) ||u - u_prev||^2 by preconditioned
// Barzilai-Borwein descent with Armijo backtracking, started at u_prev.
MinMovStep step_minmov(const PhaseState& state, const wells::WellSpec& spec, double h,
                       std::optional<double> trunc = std::nullopt, const DescentOptions& options = {});

enum class Scheme { semi_implicit, minimizing_movements };

struct RunOptions {
  // Steps are shortened to land on these times; the callback sees the state there.
  std::vector<double> checkpoints;
  std::function<void(const PhaseState&)> on_checkpoint;
  std::optional<double> trunc;
  DescentOptions descent;
  bool enforce_stability = true;
  // Semi-implicit only: false skips the per-step energy, leaving NaN ledger energies.
  bool record_energy = true;
};

struct RunResult {
  PhaseState state;
  DissipationLedger ledger;
};

RunResult run(const PhaseState& state, const wells::WellSpec& spec, Scheme scheme, double dt, double t_end,
              const RunOptions& options = {});

struct ConstrainedOptions {
  double residual_tol = 1e-6;
  int max_iterations = 20000;
  double armijo = 1e-4;
  double cg_tol = 1e-10;
};

struct ConstrainedResult {
  PhaseState state;
  double lambda = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

// Mean-projected descent on E_eps subject to mean(u) = m.
ConstrainedResult minimize_constrained(const wells::WellSpec& spec, const grid::Grid& g, double eps, double m,
                                       const grid::Field& init, const ConstrainedOptions& options = {});

// Mean and standard deviation of eps Lap_h u - (1/eps) dW/du(x, u).
std::pair<double, double> euler_lagrange_stats(const PhaseState& state, const wells::WellSpec& spec);

}  // namespace wmcf::flow
