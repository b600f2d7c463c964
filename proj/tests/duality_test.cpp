#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rdalab/duality.hpp"

using namespace rdalab;

namespace {

constexpr double pi = std::numbers::pi;

ScalarFunction constant(double v) {
  return [v](double, const Point&) { return v; };
}

} // namespace

TEST(Dual, ZeroSourceGivesZero) {
  DualProblem dp{constant(1.0), 1.0, 1.0, [](double, const Point&) { return Vec{0.3, 0.0}; }, constant(0.0), 1.0};
  const auto psi = solve_dual(dp, Grid::line(1, 16), 20);
  for (const auto& s : psi.states)
    for (double v : s[0].values) EXPECT_EQ(v, 0.0);
}

TEST(Dual, ConstantSourceIsLinearInTime) {
  DualProblem dp;
  dp.A = constant(1.0);
  dp.theta = constant(2.0);
  dp.T = 1.0;
  const auto psi = solve_dual(dp, Grid::line(1, 8), 10);
  ASSERT_EQ(psi.times.size(), 11u);
  for (std::size_t k = 0; k < psi.times.size(); ++k)
    for (double v : psi.states[k][0].values) EXPECT_NEAR(v, 2.0 * (1.0 - psi.times[k]), 1e-10);
  for (double v : psi.states.back()[0].values) EXPECT_EQ(v, 0.0);
}

TEST(Dual, SeparableCosineMode) {
  // Theta = cos(pi x): Psi = (1 - exp(-pi^2 (T - t))) / pi^2 cos(pi x).
  DualProblem dp;
  dp.A = constant(1.0);
  dp.theta = [](double, const Point& x) { return 1.0 + std::cos(pi * x[0]); };
  dp.T = 0.2;
  const double h = 1.0 / 128;
  const auto psi = solve_dual(dp, Grid::line(1, 128), static_cast<std::size_t>(std::llround(dp.T / (h * h))));
  double worst = 0;
  for (std::size_t k = 0; k < psi.times.size(); k += 50)
    for (std::size_t c = 0; c < 128; ++c) {
      const double t = psi.times[k];
      const double x = psi.grid.center(c)[0];
      const double exact = (dp.T - t) + (1 - std::exp(-pi * pi * (dp.T - t))) / (pi * pi) * std::cos(pi * x);
      worst = std::max(worst, std::abs(psi.states[k][0].values[c] - exact));
    }
  EXPECT_LE(worst, 1e-3);
}

TEST(Dual, ComparisonPrinciple) {
  std::mt19937_64 rng(11);
  DualityEnsembleSettings s;
  for (int i = 0; i < 5; ++i) {
    const auto m = draw_member(rng, s);
    const auto psi = solve_dual(dual_of(m, s), Grid::line(1, 32), 32);
    EXPECT_GE(psi.min_value(), -1e-12);
  }
}

TEST(Dual, RejectsCoefficientOutsideBounds) {
  DualProblem dp;
  dp.A = constant(3.0);
  dp.a_lo = 0.5;
  dp.a_hi = 2.0;
  dp.theta = constant(1.0);
  EXPECT_THROW(solve_dual(dp, Grid::line(1, 4), 2), DomainError);
}

TEST(Primal, ZeroDataStaysZero) {
  PrimalProblem pp;
  pp.A = constant(1.5);
  pp.a_hi = 2;
  pp.H = constant(0.0);
  pp.W0.assign(8, 0.0);
  const auto w = solve_primal(pp, Grid::line(1, 8), 10);
  EXPECT_EQ(lemma_ratio(w, pp.H), 0.0);
}

TEST(Primal, ConstantSolutionRatioIsRootT) {
  PrimalProblem pp;
  pp.A = constant(1.0);
  pp.H = constant(0.0);
  pp.W0.assign(16, 1.0);
  pp.T = 0.5;
  const auto w = solve_primal(pp, Grid::line(1, 16), 25);
  for (double v : w.states.back()[0].values) EXPECT_NEAR(v, 1.0, 1e-12);
  EXPECT_NEAR(lemma_ratio(w, pp.H), std::sqrt(0.5), 1e-12);
}

TEST(Primal, ConservesMassWithoutSource) {
  std::mt19937_64 rng(5);
  DualityEnsembleSettings s;
  const auto m = draw_member(rng, s);
  auto pp = primal_of(m, s, Grid::line(1, 40));
  pp.H = constant(0.0);
  const auto w = solve_primal(pp, Grid::line(1, 40), 40);
  EXPECT_NEAR(integrate(w.grid, w.states.back()[0].values), integrate(w.grid, pp.W0), 1e-10);
  EXPECT_GE(w.min_value(), 0.0);
}

TEST(Pairing, ConstantCaseIsStrict) {
  // H = 0, W0 = 1, A = 1, u = 0, Theta = 1 + cos(pi x):
  // lhs = T, rhs = ||Psi(0)||, and the inequality is strict.
  const Grid g = Grid::line(1, 64);
  PrimalProblem pp;
  pp.A = constant(1.0);
  pp.H = constant(0.0);
  pp.W0.assign(64, 1.0);
  pp.T = 0.5;
  DualProblem dp;
  dp.A = constant(1.0);
  dp.theta = [](double, const Point& x) { return 1.0 + std::cos(pi * x[0]); };
  dp.T = 0.5;
  const auto w = solve_primal(pp, g, 200);
  const auto psi = solve_dual(dp, g, 200);
  const auto r = duality_pairing_check(w, psi, dp.theta, pp.H);
  EXPECT_NEAR(r.lhs, 0.5, 1e-12);
  EXPECT_LT(r.lhs, r.rhs);
  EXPECT_TRUE(r.holds());
}

TEST(Pairing, ZeroThetaIsTrivial) {
  const Grid g = Grid::line(1, 8);
  PrimalProblem pp;
  pp.A = constant(1.0);
  pp.H = constant(0.3);
  pp.W0.assign(8, 1.0);
  DualProblem dp;
  dp.A = constant(1.0);
  dp.theta = constant(0.0);
  const auto r = duality_pairing_check(solve_primal(pp, g, 5), solve_dual(dp, g, 5), dp.theta, pp.H);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_TRUE(r.holds());
}

TEST(Lemma, SmallEnsembleRuns) {
  const auto r = verify_lemma5(6, 42, {16, 32, 64});
  EXPECT_EQ(r.members.size(), 36u);
  EXPECT_TRUE(r.positivity_ok);
  EXPECT_GT(r.fitted_constant.back(), 0.0);
  for (double d : r.defect_ratios) EXPECT_LE(d, 0.6);
}

TEST(Lemma, FittedConstantGrowsWithEnsemble) {
  // Training members are drawn first, so a larger ensemble is a superset.
  const auto small = verify_lemma5(3, 7, {16, 32});
  const auto large = verify_lemma5(8, 7, {16, 32});
  EXPECT_GE(large.fitted_constant.back(), small.fitted_constant.back());
}
