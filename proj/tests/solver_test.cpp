#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "rdalab/coefficients.hpp"
#include "rdalab/grid.hpp"
#include "rdalab/kinetics.hpp"
#include "rdalab/solver.hpp"
#include "rdalab/sparse.hpp"

using namespace rdalab;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<double> sample(const Grid& g, const std::function<double(const Point&)>& f) {
  std::vector<double> v(g.cell_count());
  for (std::size_t c = 0; c < v.size(); ++c) v[c] = f(g.center(c));
  return v;
}

SimulationConfig heat_config(std::size_t n, double dt, double T) {
  SimulationConfig cfg;
  cfg.grid = Grid::line(1.0, n);
  cfg.transport = {SpeciesTransport{TensorField::isotropic(1.0, 1), AdvectionField::zero()}};
  cfg.kinetics = Kinetics::none(1);
  cfg.initial = {Field{0, sample(cfg.grid, [](const Point& x) { return 1.0 + std::cos(pi * x[0]); })}};
  cfg.T = T;
  cfg.dt_init = dt;
  return cfg;
}

double heat_exact(std::size_t, double t, const Point& x) { return 1.0 + std::exp(-pi * pi * t) * std::cos(pi * x[0]); }

} // namespace

// ---------------------------------------------------------------------------
// Grid and snapshots

TEST(Grid, RectangleIndexingAndCenters) {
  const auto g = Grid::rectangle(2.0, 1.0, 4, 2);
  EXPECT_EQ(g.cell_count(), 8u);
  EXPECT_DOUBLE_EQ(g.h(0), 0.5);
  EXPECT_EQ(g.index(3, 1), 7u);
  EXPECT_EQ(g.ix(7), 3u);
  EXPECT_EQ(g.iy(7), 1u);
  EXPECT_DOUBLE_EQ(g.center(7)[0], 1.75);
  EXPECT_DOUBLE_EQ(g.center(7)[1], 0.75);
  EXPECT_DOUBLE_EQ(g.domain_volume(), 2.0);
}

TEST(Grid, RejectsDegenerateAxes) {
  EXPECT_THROW(Grid::line(1.0, 1), DomainError);
  EXPECT_THROW(Grid::rectangle(1.0, -1.0, 4, 4), DomainError);
}

TEST(Grid, IntegrateConstant) {
  const auto g = Grid::rectangle(2.0, 3.0, 5, 7);
  EXPECT_NEAR(integrate(g, std::vector<double>(g.cell_count(), 2.0)), 12.0, 1e-12);
}

TEST(Snapshot, RoundTripIsExact) {
  const auto g = Grid::rectangle(1.0, 0.5, 3, 2);
  State s = make_state(2, g.cell_count());
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    s[0].values[c] = 1.0 / (3.0 + c);
    s[1].values[c] = std::sqrt(2.0) * c;
  }
  std::stringstream buf;
  write_snapshot(buf, g, 0.125, s);
  const auto back = read_snapshot(buf);
  EXPECT_EQ(back.grid, g);
  EXPECT_EQ(back.time, 0.125);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(back.state[i].values, s[i].values);
}

// ---------------------------------------------------------------------------
// Coefficients

TEST(Coefficients, ScalarExpressions) {
  EXPECT_DOUBLE_EQ(ScalarExpr("const:2.5")(0.3, {0.1, 0.2}), 2.5);
  EXPECT_DOUBLE_EQ(ScalarExpr("affine:1,2,3,4")(0.5, {0.25, 0.5}), 1 + 0.5 + 1.5 + 2);
  EXPECT_THROW(ScalarExpr("bogus:1"), ConfigError);
}

TEST(Coefficients, EllipticityOfConstantTensor) {
  const TensorField d([](double, const Point&) { return Tensor{{{1.0, 0.5}, {0.5, 1.0}}}; }, 0.5, 1.5);
  const auto [lo, hi] = ellipticity_scan(d, Grid::rectangle(1, 1, 8, 8), {0.0, 1.0});
  EXPECT_NEAR(lo, 0.5, 1e-14);
  EXPECT_NEAR(hi, 1.5, 1e-14);
}

TEST(Coefficients, EllipticityViolationThrows) {
  const TensorField d([](double, const Point&) { return Tensor{{{1.0, 0.9}, {0.9, 1.0}}}; }, 0.5, 2.0);
  EXPECT_THROW(ellipticity_scan(d, Grid::rectangle(1, 1, 4, 4), {0.0}), EllipticityViolation);
}

TEST(Coefficients, ModulusOfLinearFunction) {
  const auto g = Grid::line(1.0, 64);
  const auto omega = modulus_of_continuity([](double, const Point& x) { return x[0]; }, g, {0.0}, {0.1, 0.5, 2.0});
  ASSERT_EQ(omega.size(), 3u);
  EXPECT_NEAR(omega[0], 0.1, 1.0 / 64);
  EXPECT_NEAR(omega[1], 0.5, 1.0 / 64);
  EXPECT_NEAR(omega[2], 1.0, 1.0 / 64);
}

TEST(Coefficients, SymmetrizeExample) {
  const TensorFunction d = [](double, const Point& x) { return Tensor{{{1.0, x[1]}, {0.0, 1.0}}}; };
  const auto s = symmetrize(d, Grid::rectangle(1, 1, 16, 16), 0.4, 1.6);
  const auto u = s.drift(0.0, {0.3, 0.7});
  EXPECT_NEAR(u[0], 0.5, 1e-12);
  EXPECT_NEAR(u[1], 0.0, 1e-12);
  const auto m = s.symmetric(0.0, {0.3, 0.7});
  EXPECT_DOUBLE_EQ(m[0][1], 0.35);
  EXPECT_DOUBLE_EQ(m[1][0], 0.35);
}

// ---------------------------------------------------------------------------
// Sparse algebra

TEST(Sparse, DuplicatesAreSummed) {
  SparseMatrix a(2, {{0, 0, 1.0}, {1, 0, 2.0}, {0, 0, 3.0}, {0, 1, -1.0}});
  EXPECT_EQ(a.nonzeros(), 3u);
  EXPECT_DOUBLE_EQ(a.at(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(a.at(1, 1), 0.0);
  EXPECT_FALSE(a.is_symmetric());
}

TEST(Sparse, ConjugateGradientOnLaplacian) {
  const std::size_t n = 50;
  std::vector<SparseMatrix::Triplet> t;
  for (std::size_t i = 0; i < n; ++i) {
    t.push_back({i, i, 2.5});
    if (i > 0) t.push_back({i, i - 1, -1.0});
    if (i + 1 < n) t.push_back({i, i + 1, -1.0});
  }
  SparseMatrix a(n, t);
  ASSERT_TRUE(a.is_symmetric());
  std::vector<double> x_true(n), b(n), x(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) x_true[i] = std::sin(0.3 * i);
  a.multiply(x_true, b);
  const auto stats = solve_linear(a, b, x, 1e-12, true);
  EXPECT_FALSE(stats.used_fallback);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(x[i], x_true[i], 1e-10);
}

TEST(Sparse, NormalEquationsOnNonsymmetric) {
  SparseMatrix a(3, {{0, 0, 3.0}, {0, 1, 1.0}, {1, 1, 4.0}, {1, 2, -1.0}, {2, 0, 0.5}, {2, 2, 2.0}});
  const std::vector<double> x_true{1.0, -2.0, 0.5};
  std::vector<double> b(3), x(3, 0.0);
  a.multiply(x_true, b);
  solve_linear(a, b, x, 1e-13, false);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(x[i], x_true[i], 1e-10);
}

// ---------------------------------------------------------------------------
// Spatial operators

TEST(DiffusionOperator, AnnihilatesConstants) {
  const auto g = Grid::rectangle(1, 1, 9, 7);
  const TensorField d([](double, const Point& x) { return Tensor{{{1.0 + x[0], 0.3}, {0.3, 1.0 + x[1]}}}; }, 0.5, 2.5);
  const auto op = diffusion_operator(g, d, 0.0);
  const auto r = op.apply(std::vector<double>(g.cell_count(), 3.0));
  for (double v : r) EXPECT_NEAR(v, 0.0, 1e-11);
}

TEST(DiffusionOperator, CrossTermOnBilinearField) {
  const auto g = Grid::rectangle(1, 1, 16, 16);
  const TensorField d([](double, const Point&) { return Tensor{{{1.0, 0.5}, {0.5, 1.0}}}; }, 0.5, 1.5);
  const auto op = diffusion_operator(g, d, 0.0);
  const auto c = sample(g, [](const Point& x) { return x[0] * x[1]; });
  const auto ac = op.apply(c);
  for (std::size_t cell = 0; cell < g.cell_count(); ++cell) {
    const auto i = g.ix(cell), j = g.iy(cell);
    if (i == 0 || j == 0 || i + 1 == g.cells(0) || j + 1 == g.cells(1)) continue;
    EXPECT_NEAR(-ac[cell], 1.0, 1e-9);
  }
}

TEST(DiffusionOperator, ColumnSumsVanish) {
  // Zero column sums of A are what make the implicit solve conservative.
  const auto g = Grid::rectangle(1, 1, 6, 5);
  const TensorField d([](double, const Point& x) { return Tensor{{{1.0, 0.4 * x[0]}, {0.4 * x[0], 2.0}}}; }, 0.5, 2.5);
  const auto a = diffusion_operator(g, d, 0.0).implicit_matrix();
  std::vector<double> ones(g.cell_count(), 1.0), sums(g.cell_count());
  a.multiply_transpose(ones, sums);
  for (double v : sums) EXPECT_NEAR(v, 0.0, 1e-11);
}

TEST(DiffusionOperator, StrongCrossFacesGoExplicit) {
  const auto g = Grid::rectangle(1, 1, 4, 4);
  const TensorField d([](double, const Point&) { return Tensor{{{1.0, 0.9}, {0.9, 0.5}}}; }, 0.01, 2.0);
  const auto op = diffusion_operator(g, d, 0.0);
  EXPECT_FALSE(op.explicit_terms.empty());
  EXPECT_TRUE(op.symmetric);
}

TEST(Advection, UpwindFluxesConserveMass) {
  const auto g = Grid::rectangle(1, 1, 8, 8);
  const AdvectionField u([](double, const Point& x) { return Vec{std::sin(pi * x[0]) + 0.3, -0.7 * x[1]}; });
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(0.0, 2.0);
  std::vector<double> c(g.cell_count());
  for (auto& v : c) v = dist(rng);
  const auto rate = advection_rate(g, u, c, 0.0);
  EXPECT_NEAR(integrate(g, rate), 0.0, 1e-12);
}

TEST(Advection, UpwindPicksDonorCell) {
  const auto g = Grid::line(1.0, 4);
  const AdvectionField u([](double, const Point&) { return Vec{-2.0, 0.0}; });
  const std::vector<double> c{1.0, 2.0, 3.0, 4.0};
  const auto f = advection_flux(g, u, c, 0.0);
  EXPECT_DOUBLE_EQ(f.x_faces[0], -4.0);
  EXPECT_DOUBLE_EQ(f.x_faces[2], -8.0);
  EXPECT_DOUBLE_EQ(f.x_faces[3], 0.0);
}

// ---------------------------------------------------------------------------
// Time stepping

TEST(Integrator, HeatEquationAgainstExactSolution) {
  const double h = 1.0 / 128;
  const auto cfg = heat_config(128, h * h, 0.1);
  const auto traj = run(cfg);
  EXPECT_DOUBLE_EQ(traj.final_time(), 0.1);
  EXPECT_LE(max_error(traj, traj.states.size() - 1, heat_exact), 1e-3);
}

TEST(Integrator, ConstantStateIsStationary) {
  auto cfg = heat_config(16, 0.01, 0.1);
  cfg.initial[0].values.assign(16, 2.0);
  const auto traj = run(cfg);
  for (double v : traj.final_state()[0].values) EXPECT_NEAR(v, 2.0, 1e-12);
}

TEST(Integrator, LandsOnSnapshotTimes) {
  auto cfg = heat_config(16, 0.03, 0.1);
  cfg.snapshot_times = {0.05, 0.1};
  const auto traj = run(cfg);
  ASSERT_EQ(traj.snapshot_indices.size(), 3u);
  EXPECT_EQ(traj.times[traj.snapshot_indices[1]], 0.05);
  EXPECT_EQ(traj.times[traj.snapshot_indices[2]], 0.1);
}

TEST(Integrator, MassConservedWithAnisotropyAndAdvection) {
  SimulationConfig cfg;
  cfg.grid = Grid::rectangle(1, 1, 12, 12);
  const TensorField d([](double, const Point& x) { return Tensor{{{1.0, 0.4 * x[0]}, {0.4 * x[0], 0.8}}}; }, 0.3, 1.5);
  const AdvectionField u([](double, const Point& x) { return Vec{std::sin(pi * x[0]) * std::cos(pi * x[1]), 0.0}; });
  cfg.transport = {SpeciesTransport{d, u}};
  cfg.kinetics = Kinetics::none(1);
  cfg.initial = {Field{0, sample(cfg.grid, [](const Point& x) { return std::exp(-10 * (x[0] - 0.3) * (x[0] - 0.3)); })}};
  cfg.T = 0.05;
  cfg.dt_init = 0.005;
  cfg.conservation = std::vector<double>{1.0};
  const auto traj = run(cfg);
  for (const auto& e : traj.ledger) EXPECT_LE(e.conservation_drift, 1e-10);
  EXPECT_GE(traj.min_value(), -1e-12);
}

TEST(Integrator, StiffReactionTriggersHalving) {
  SimulationConfig cfg;
  cfg.grid = Grid::line(1.0, 8);
  cfg.transport = {SpeciesTransport{TensorField::isotropic(0.1, 1), AdvectionField::zero()}};
  cfg.kinetics = Kinetics(1, [](std::span<const double> c, std::span<double> f) { f[0] = -50.0 * c[0]; }, "decay");
  cfg.initial = {Field{0, std::vector<double>(8, 1.0)}};
  cfg.T = 0.2;
  cfg.dt_init = 0.1;
  const auto traj = run(cfg);
  std::size_t rejections = 0;
  for (const auto& e : traj.ledger) rejections += e.rejections;
  EXPECT_GT(rejections, 0u);
  EXPECT_GE(traj.min_value(), -1e-12);
  EXPECT_DOUBLE_EQ(traj.final_time(), 0.2);
}

TEST(Integrator, StepFailureWhenHalvingCannotHelp) {
  SimulationConfig cfg;
  cfg.grid = Grid::line(1.0, 4);
  cfg.transport = {SpeciesTransport{TensorField::isotropic(1.0, 1), AdvectionField::zero()}};
  cfg.kinetics = Kinetics(1, [](std::span<const double>, std::span<double> f) { f[0] = -1.0; }, "sink");
  cfg.initial = {Field{0, std::vector<double>(4, 0.0)}};
  cfg.T = 0.1;
  cfg.options.max_halvings = 5;
  EXPECT_THROW(run(cfg), StepFailure);
}

TEST(Integrator, CflLimitsTheStep) {
  SimulationConfig cfg;
  cfg.grid = Grid::line(1.0, 10);
  cfg.transport = {SpeciesTransport{TensorField::isotropic(0.01, 1),
                                    AdvectionField([](double, const Point&) { return Vec{2.0, 0.0}; })}};
  cfg.kinetics = Kinetics::none(1);
  cfg.initial = {Field{0, std::vector<double>(10, 1.0)}};
  cfg.dt_init = 1.0;
  cfg.cfl = 0.5;
  EXPECT_NEAR(Integrator(cfg).nominal_dt(0.0), 0.5 / 20.0, 1e-15);
}

TEST(Integrator, ExchangeKineticsStayNonnegative) {
  SimulationConfig cfg;
  cfg.grid = Grid::line(1.0, 16);
  cfg.transport = {SpeciesTransport{TensorField::isotropic(1.0, 1), AdvectionField::zero()},
                   SpeciesTransport{TensorField::isotropic(0.1, 1), AdvectionField::zero()}};
  cfg.kinetics = exchange_pair_kinetics();
  cfg.initial = {Field{0, sample(cfg.grid, [](const Point& x) { return 1.0 + x[0]; })},
                 Field{1, sample(cfg.grid, [](const Point& x) { return 2.0 * x[0] * x[0]; })}};
  cfg.T = 0.5;
  cfg.dt_init = 0.01;
  const auto traj = run(cfg);
  EXPECT_GE(traj.min_value(), -1e-12);
}

TEST(Integrator, DeterministicTrajectories) {
  const auto cfg = heat_config(32, 1e-3, 0.05);
  const auto a = run(cfg);
  const auto b = run(cfg);
  EXPECT_EQ(a.times, b.times);
  EXPECT_EQ(a.final_state()[0].values, b.final_state()[0].values);
}

// ---------------------------------------------------------------------------
// Diagnostics

TEST(Diagnostics, ManufacturedErrorOfExactTrajectoryIsZero) {
  SolutionTrajectory traj;
  traj.grid = Grid::line(1.0, 8);
  for (double t : {0.0, 0.1, 0.2}) {
    traj.times.push_back(t);
    traj.states.push_back({Field{0, sample(traj.grid, [t](const Point& x) { return heat_exact(0, t, x); })}});
  }
  EXPECT_DOUBLE_EQ(manufactured_error(traj, heat_exact), 0.0);
}

TEST(Diagnostics, WeakResidualShrinksUnderRefinement) {
  double previous = 0;
  for (std::size_t n : {16u, 32u, 64u}) {
    const double h = 1.0 / n;
    const auto cfg = heat_config(n, h * h, 0.1);
    const auto traj = run(cfg);
    double worst = 0;
    for (const auto& psi : test_function_catalog(cfg.grid, cfg.T)) worst = std::max(worst, weak_residual(traj, cfg, psi)[0]);
    if (previous > 0) {
      EXPECT_LE(worst / previous, 0.6);
    }
    previous = worst;
  }
}

TEST(Diagnostics, ManufacturedForcingReproducesSolution) {
  SimulationConfig cfg;
  cfg.grid = Grid::line(1.0, 64);
  cfg.transport = {SpeciesTransport{TensorField([](double, const Point& x) { return Tensor{{{1.0 + 0.5 * x[0], 0.0}, {0.0, 1.0}}}; }, 1.0, 1.5, 1),
                                    AdvectionField::zero()}};
  cfg.kinetics = Kinetics::none(1);
  const ExactSolution exact = [](std::size_t, double t, const Point& x) { return 2.0 + std::exp(-t) * std::cos(pi * x[0]); };
  cfg.forcing = manufactured_forcing(exact, cfg.transport, cfg.kinetics, 1);
  cfg.initial = {Field{0, sample(cfg.grid, [&](const Point& x) { return exact(0, 0.0, x); })}};
  cfg.T = 0.1;
  cfg.dt_init = 1.0 / 4096;
  const auto traj = run(cfg);
  EXPECT_LE(max_error(traj, traj.states.size() - 1, exact), 5e-3);
}

TEST(DiffusionOperator, ModerateCrossTermGivesMMatrix) {
  const auto g = Grid::rectangle(1, 1, 12, 12);
  const TensorField d(
      [](double, const Point& x) {
        const double a = 0.5 * std::sin(pi * x[0]), b = 0.25 * std::cos(pi * x[1]);
        return Tensor{{{1 + a, b}, {b, 1 - a}}};
      },
      0.4, 1.6);
  const auto op = diffusion_operator(g, d, 0.0);
  ASSERT_TRUE(op.explicit_terms.empty());
  const auto a = op.implicit_matrix();
  for (std::size_t i = 0; i < g.cell_count(); ++i)
    for (std::size_t j = 0; j < g.cell_count(); ++j)
      if (i != j) {
        EXPECT_LE(a.at(i, j), 1e-12) << i << "," << j;
      }
}

TEST(Integrator, SharpPlateauUnderAnisotropyStaysNonnegative) {
  SimulationConfig cfg;
  cfg.grid = Grid::rectangle(1, 1, 16, 16);
  const TensorField d([](double, const Point&) { return Tensor{{{1.0, 0.4}, {0.4, 0.6}}}; }, 0.3, 1.3);
  cfg.transport = {SpeciesTransport{d, AdvectionField::zero()}};
  cfg.kinetics = Kinetics::none(1);
  std::vector<double> c0(256, 0.0);
  for (std::size_t i = 6; i < 10; ++i)
    for (std::size_t j = 6; j < 10; ++j) c0[cfg.grid.index(i, j)] = 16.0;
  cfg.initial = {Field{0, c0}};
  cfg.T = 0.02;
  cfg.dt_init = 0.005;
  const auto traj = run(cfg);
  EXPECT_EQ(traj.steps(), 4u);
  EXPECT_GE(traj.min_value(), -1e-12);
}
