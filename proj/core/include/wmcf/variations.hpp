#pragma once

#include "wmcf/flow.hpp"
#include "wmcf/grid.hpp"
#include "wmcf/sharp.hpp"
#include "wmcf/test_fields.hpp"
#include "wmcf/wells.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace wmcf::variations {

using sharp::sharp_first_variation;

struct RecoveryState {
  sharp::SharpInterface interface;
  double eps = 0.0;
  flow::PhaseState state;
  double energy = 0.0;
  double energy_sharp = 0.0;
};

struct RecoveryOptions {
  // Required distance from the interface to the boundary, in units of eps.
  double boundary_layers = 8.0;
  // |E_eps - E_sharp| <= energy_factor * eps * max(1, E_sharp), else NumericError.
  double energy_factor = 10.0;
  bool check_energy = true;
};

// u = a + gamma * optimal_profile(x, sdist / eps) with the analytic signed distance.
RecoveryState build_recovery(const sharp::SharpInterface& A, const wells::WellSpec& spec, const grid::Grid& g,
                             double eps, const SmoothScalar& sigma, const RecoveryOptions& options = {});
RecoveryState build_recovery(const sharp::SharpInterface& A, const wells::WellSpec& spec, const grid::Grid& g,
                             double eps, const RecoveryOptions& options = {});

// Cellwise |grad u| from the face-difference energy density.
grid::Field gradient_magnitude(const grid::Field& u);

double equipartition_defect(const flow::PhaseState& state, const wells::WellSpec& spec);

enum class Density { potential, gradient, geometric };

// int psi dmu with mu = (2/eps) W, eps |grad u|^2 or sqrt(2W) |grad u|.
double measure_pairing(const flow::PhaseState& state, const wells::WellSpec& spec, Density which,
                       const grid::Field& psi);
// int sqrt(2W) |grad u|
double geometric_energy(const flow::PhaseState& state, const wells::WellSpec& spec);

struct FirstVariation {
  double direct = 0.0;       // dE[u](gamma grad v . Psi)
  double reassembled = 0.0;  // tangential/equipartition form
  double gap = 0.0;
};

FirstVariation diffuse_first_variation(const flow::PhaseState& state, const wells::WellSpec& spec,
                                       const TestVectorField& psi);

// Grid selection for eps sweeps. Each eps gets a square (or interval) domain that
// keeps boundary_layers * eps + pad between interface and boundary. Points per eps
// grow geometrically from min_points_per_eps at the largest eps to the finest
// value max_cells allows at the smallest eps.
struct ResolutionPolicy {
  int max_cells = 512;
  double min_points_per_eps = 4.0;
  double boundary_layers = 8.0;
  double pad = 0.02;
  std::optional<Box> fixed_domain;
};

std::vector<grid::Grid> sweep_grids(const sharp::SharpInterface& A, const std::vector<double>& eps,
                                    const ResolutionPolicy& policy);

struct SweepRow {
  double eps = 0.0;
  double diffuse = 0.0;
  double sharp = 0.0;
  double gap = 0.0;
  double defect = 0.0;
  double energy = 0.0;
  double energy_sharp = 0.0;
  double reassembled = 0.0;
  double spacing = 0.0;
};

struct SweepTable {
  std::vector<SweepRow> rows;

  bool gaps_decreasing() const;
  bool defects_decreasing() const;
  void write_csv(std::ostream& out) const;
};

SweepTable first_variation_convergence(const std::vector<double>& eps, const sharp::SharpInterface& A,
                                       const wells::WellSpec& spec, const TestVectorField& psi,
                                       const SmoothScalar& sigma, const ResolutionPolicy& policy = {});

// Strictly decreasing sequence check used by sweeps.
bool strictly_decreasing(const std::vector<double>& values);

}  // namespace wmcf::variations
