#include "wmcf/errors.hpp"
#include "wmcf/flow.hpp"
#include "wmcf/grid.hpp"
#include "wmcf/wells.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace wmcf;
using flow::PhaseState;
using flow::Scheme;
using grid::Field;
using grid::Grid;

namespace {

const double kSigma = std::sqrt(2.0) / 6.0;

double logistic(double s) { return 1.0 / (1.0 + std::exp(-std::sqrt(2.0) * s)); }

PhaseState profile_1d(const Grid& g, double eps, double p, double width = 1.0) {
  return {Field::sample(g, [&](Point x) { return logistic((x.x - p) / (width * eps)); }), eps, 0.0};
}

double crossing(const PhaseState& s) { return grid::extract_levelset(s.u).crossings.at(0).x; }

double l2_distance(const Field& a, const Field& b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(sum * a.grid().cell_volume());
}

double defect_at(double dt) {
  const auto spec = wells::canonical_quartic();
  const Grid g = Grid::line(256, 0.0, 1.0);
  const PhaseState s0 = profile_1d(g, 0.05, 0.5, 1.5);
  return flow::run(s0, spec, Scheme::semi_implicit, dt, 0.02).ledger.final_defect();
}

}  // namespace

TEST(Energy, ZeroInAWell) {
  const auto spec = wells::canonical_quartic(0.2, 1.3);
  const Grid g = Grid::rect(16, 16, {0.0, 0.0}, {1.0, 1.0});
  EXPECT_EQ(flow::energy({Field(g, 0.2), 0.1, 0.0}, spec), 0.0);
  EXPECT_EQ(flow::energy({Field(g, 1.3), 0.1, 0.0}, spec), 0.0);
}

TEST(Energy, ExactProfileCarriesSigma) {
  const double eps = 0.05;
  const Grid g = Grid::line(1024, 0.0, 1.0);
  const double e = flow::energy(profile_1d(g, eps, 0.5), wells::canonical_quartic());
  EXPECT_LE(std::abs(e - kSigma), 1e-3 * kSigma);
}

TEST(Energy, DoublingEpsLowersPotentialDominatedEnergy) {
  const auto spec = wells::canonical_quartic();
  const Grid g = Grid::line(64, 0.0, 1.0);
  const Field u = Field::sample(g, [](Point p) { return 0.4 + 0.01 * std::cos(std::numbers::pi * p.x); });
  EXPECT_LT(flow::energy({u, 0.2, 0.0}, spec), flow::energy({u, 0.1, 0.0}, spec));
}

TEST(Energy, Nonnegative) {
  const auto spec = wells::canonical_quartic();
  const Grid g = Grid::rect(24, 24, {0.0, 0.0}, {1.0, 1.0});
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(-1.0, 2.0);
  for (int trial = 0; trial < 5; ++trial) {
    Field u(g);
    for (double& v : u.values()) v = unit(rng);
    EXPECT_GE(flow::energy({u, 0.1, 0.0}, spec), 0.0);
  }
}

TEST(SemiImplicit, WellIsFixedPoint) {
  const auto spec = wells::canonical_quartic();
  const Grid g = Grid::rect(16, 16, {0.0, 0.0}, {1.0, 1.0});
  const PhaseState s{Field(g, 1.0), 0.1, 0.0};
  const PhaseState next = flow::step_semiimplicit(s, spec, 1e-3);
  EXPECT_DOUBLE_EQ(next.time, 1e-3);
  for (double v : next.u.values()) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(SemiImplicit, SolvesTheImplicitSystem) {
  const auto spec = wells::canonical_quartic();
  const Grid g = Grid::rect(24, 20, {0.0, 0.0}, {1.0, 1.0});
  const double eps = 0.1, dt = 2e-3;
  const PhaseState s{Field::sample(g, [](Point p) { return 0.5 + 0.4 * std::sin(5.0 * p.x + 3.0 * p.y); }), eps, 0.0};
  const PhaseState next = flow::step_semiimplicit(s, spec, dt);
  const Field lap = grid::laplacian_neumann(next.u);
  const Field r = flow::reaction(s, spec);
  for (std::size_t k = 0; k < g.size(); ++k) {
    EXPECT_NEAR(next.u[k] - dt * lap[k], s.u[k] - dt / (eps * eps) * r[k], 1e-9);
  }
}

TEST(SemiImplicit, StandingProfileBarelyMoves) {
  const auto spec = wells::canonical_quartic();
  const double eps = 0.05;
  const Grid g = Grid::line(256, 0.0, 1.0);
  const PhaseState s0 = profile_1d(g, eps, 0.4);
  const double dt = 0.5 * flow::semi_implicit_dt_bound(s0, spec);
  const auto res = flow::run(s0, spec, Scheme::semi_implicit, dt, 1.0);
  EXPECT_LE(std::abs(crossing(res.state) - 0.4), eps);
}

TEST(SemiImplicit, SymmetricDataConservesMass) {
  const auto spec = wells::canonical_quartic();
  const Grid g = Grid::line(128, 0.0, 1.0);
  const double eps = 0.05;
  PhaseState s{Field::sample(g, [](Point p) { return 0.5 + 0.45 * std::tanh(8.0 * (p.x - 0.5)) + 0.1 * std::sin(6.0 * (p.x - 0.5)); }),
               eps, 0.0};
  const double m0 = grid::integrate(s.u);
  const double dt = 0.5 * flow::semi_implicit_dt_bound(s, spec);
  for (int k = 0; k < 50; ++k) {
    s = flow::step_semiimplicit(s, spec, dt);
    EXPECT_NEAR(grid::integrate(s.u), m0, 1e-10);
  }
}

TEST(Run, RejectsUnstableStep) {
  const auto spec = wells::canonical_quartic();
  const Grid g = Grid::line(64, 0.0, 1.0);
  const PhaseState s = profile_1d(g, 0.05, 0.5);
  const double bound = flow::semi_implicit_dt_bound(s, spec);
  EXPECT_THROW(flow::run(s, spec, Scheme::semi_implicit, 2.0 * bound, 10.0 * bound), InputError);
}

TEST(Run, StationaryWellHasZeroDefect) {
  const auto spec = wells::canonical_quartic();
  const Grid g = Grid::rect(16, 16, {0.0, 0.0}, {1.0, 1.0});
  const PhaseState s{Field(g, 0.0), 0.1, 0.0};
  for (Scheme scheme : {Scheme::semi_implicit, Scheme::minimizing_movements}) {
    const auto res = flow::run(s, spec, scheme, 1e-3, 1e-2);
    EXPECT_EQ(res.ledger.final_defect(), 0.0);
    EXPECT_EQ(res.ledger.dissipation_total(), 0.0);
  }
}

TEST(Run, DissipationDefectFirstOrderInDt) {
  const double d1 = defect_at(2e-4);
  const double d2 = defect_at(1e-4);
  const double d3 = defect_at(5e-5);
  EXPECT_GT(d1, d2);
  EXPECT_GT(d2, d3);
  EXPECT_GE(std::log2(d2 / d3), 0.9);
}

TEST(Run, ShrinkingDiskEnergyStrictlyDecreases) {
  const auto spec = wells::canonical_quartic();
  const double eps = 0.05;
  const Grid g = Grid::rect(128, 128, {-0.5, -0.5}, {0.5, 0.5});
  const PhaseState s0{Field::sample(g, [&](Point p) { return logistic((0.3 - norm(p)) / eps); }), eps, 0.0};
  const double dt = 0.5 * flow::semi_implicit_dt_bound(s0, spec);
  const auto res = flow::run(s0, spec, Scheme::semi_implicit, dt, 60 * dt);
  double last = res.ledger.initial_energy;
  for (const auto& rec : res.ledger.records) {
    EXPECT_LT(rec.energy, last) << "step " << rec.step;
    last = rec.energy;
  }
}

TEST(Run, CheckpointsAreHitExactly) {
  const auto spec = wells::canonical_quartic();
  const Grid g = Grid::line(64, 0.0, 1.0);
  flow::RunOptions opt;
  opt.checkpoints = {0.0031, 0.007};
  std::vector<double> seen;
  opt.on_checkpoint = [&](const PhaseState& s) { seen.push_back(s.time); };
  flow::run(profile_1d(g, 0.1, 0.5), spec, Scheme::semi_implicit, 1e-3, 0.01, opt);
  ASSERT_GE(seen.size(), 2u);
  EXPECT_NEAR(seen[0], 0.0031, 1e-12);
  EXPECT_NEAR(seen[1], 0.007, 1e-12);
}

TEST(Schemes, AgreeToFirstOrderInDt) {
  const auto spec = wells::canonical_quartic();
  const Grid g = Grid::line(128, 0.0, 1.0);
  const PhaseState s0 = profile_1d(g, 0.1, 0.45, 1.5);
  auto gap = [&](double dt) {
    const auto a = flow::run(s0, spec, Scheme::semi_implicit, dt, 0.01);
    const auto b = flow::run(s0, spec, Scheme::minimizing_movements, dt, 0.01);
    return l2_distance(a.state.u, b.state.u);
  };
  const double g1 = gap(1e-3), g2 = gap(5e-4), g3 = gap(2.5e-4);
  EXPECT_GT(g1, g2);
  EXPECT_GT(g2, g3);
  EXPECT_GE(std::log2(g2 / g3), 0.8);
}

TEST(MinMov, WellStateIsReturned) {
  const auto spec = wells::canonical_quartic();
  const Grid g = Grid::rect(16, 16, {0.0, 0.0}, {1.0, 1.0});
  const PhaseState s{Field(g, 1.0), 0.1, 0.0};
  const auto step = flow::step_minmov(s, spec, 1e-2);
  for (double v : step.state.u.values()) EXPECT_NEAR(v, 1.0, 1e-12);
  EXPECT_NEAR(step.state.time, 1e-2, 1e-15);
}

TEST(MinMov, EveryStepIsMinimal) {
  const auto spec = wells::canonical_quartic();
  const Grid g = Grid::rect(32, 32, {0.0, 0.0}, {1.0, 1.0});
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PhaseState s{Field(g), 0.1, 0.0};
  for (double& v : s.u.values()) v = unit(rng);
  for (int k = 0; k < 20; ++k) {
    const auto step = flow::step_minmov(s, spec, 1e-3);
    EXPECT_GE(step.record.minimality_slack, -1e-10);
    EXPECT_LE(flow::energy(step.state, spec), flow::energy(s, spec) + 1e-10);
    s = step.state;
  }
}

TEST(MinMov, MaximumPrincipleWithTruncation) {
  const auto spec = wells::canonical_quartic();
  const Grid g = Grid::rect(32, 32, {0.0, 0.0}, {1.0, 1.0});
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  PhaseState s{Field(g), 0.1, 0.0};
  for (double& v : s.u.values()) v = unit(rng);
  for (int k = 0; k < 10; ++k) {
    const auto step = flow::step_minmov(s, spec, 5e-3, 1.0);
    EXPECT_LE(step.clamp_energy_change, 1e-12);
    for (double v : step.state.u.values()) {
      EXPECT_LE(v, 1.0);
      EXPECT_GE(v, -1.0);
    }
    s = step.state;
  }
}

TEST(MinMov, RejectsNonpositiveStep) {
  const auto spec = wells::canonical_quartic();
  const PhaseState s{Field(Grid::line(16, 0.0, 1.0), 0.5), 0.1, 0.0};
  EXPECT_THROW(flow::step_minmov(s, spec, 0.0), InputError);
}

TEST(Constrained, UpperWellMassGivesZeroMultiplier) {
  const auto spec = wells::canonical_quartic();
  const Grid g = Grid::rect(32, 32, {0.0, 0.0}, {1.0, 1.0});
  const Field init = Field::sample(g, [](Point p) { return 0.9 + 0.05 * std::cos(std::numbers::pi * p.x); });
  const auto r = flow::minimize_constrained(spec, g, 0.1, 1.0, init);
  for (double v : r.state.u.values()) EXPECT_NEAR(v, 1.0, 1e-6);
  EXPECT_NEAR(r.lambda, 0.0, 1e-6);
  EXPECT_LE(r.residual, 1e-6);
}

TEST(Constrained, MassOutsideAdmissibleRange) {
  const auto spec = wells::canonical_quartic();
  const Grid g = Grid::rect(16, 16, {0.0, 0.0}, {1.0, 1.0});
  EXPECT_THROW(flow::minimize_constrained(spec, g, 0.1, 1.2, Field(g, 0.5)), InputError);
  EXPECT_THROW(flow::minimize_constrained(spec, g, 0.1, -0.1, Field(g, 0.5)), InputError);
}

TEST(Constrained, DiskOfUpperPhaseHasNegativeMultiplier) {
  const auto spec = wells::canonical_quartic();
  const double eps = 0.04;
  const Grid g = Grid::rect(128, 128, {-0.5, -0.5}, {0.5, 0.5});
  const Field init = Field::sample(g, [&](Point p) { return logistic((0.25 - norm(p)) / eps); });
  double m = 0.0;
  for (double v : init.values()) m += v;
  m /= g.size();
  const auto r = flow::minimize_constrained(spec, g, eps, m, init);
  EXPECT_LT(r.lambda, 0.0);
  EXPECT_LE(r.residual, 1e-3);
  double mean = 0.0;
  for (double v : r.state.u.values()) mean += v;
  EXPECT_NEAR(mean / g.size(), m, 1e-12);
}

TEST(Ledger, CsvHeader) {
  const auto spec = wells::canonical_quartic();
  const auto res = flow::run(profile_1d(Grid::line(32, 0.0, 1.0), 0.1, 0.5), spec, Scheme::semi_implicit, 1e-3, 3e-3);
  std::ostringstream out;
  res.ledger.write_csv(out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "step,time,energy,dissipation_increment,defect,inner_residual");
}
