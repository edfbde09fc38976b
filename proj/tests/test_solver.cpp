#include <gtest/gtest.h>

#include <cmath>

#include "nehari/radial.hpp"
#include "nehari/solver.hpp"
#include "nehari/study.hpp"

using namespace nehari;

namespace {

Params single(double mu = 1.0, double p = 2.0) {
  Params pr;
  pr.mu = {mu};
  pr.p = p;
  pr.eps = 0.0;
  return pr;
}

Params pair_at(Point c1, Point c2, double eps, double lambda = -1.0) {
  Params pr;
  pr.ell = 2;
  pr.mu = {1.0, 1.0};
  pr.lambda = {{0.0, lambda}, {lambda, 0.0}};
  pr.centers = {std::move(c1), std::move(c2)};
  pr.eps = eps;
  return pr;
}

std::shared_ptr<const Problem> limit_equation(int n = 32, double L = 6.0, double mu = 1.0) {
  return make_problem(single(mu), ProblemKind::limit_equation(0), Grid::cube(3, L, n));
}

SolverConfig quick() {
  SolverConfig c;
  c.max_iters = 2000;
  return c;
}

double relative(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(SolverConfig, ValidateFlagsEachBadValue) {
  EXPECT_TRUE(validate(SolverConfig{}).empty());
  SolverConfig c;
  c.grad_tol = 0.0;
  c.armijo_c = 1.5;
  c.threads = 0;
  c.restarts = 0;
  EXPECT_EQ(validate(c).size(), 4u);
}

TEST(InitBumps, NormalisedNonnegativeAndInsideTheirBalls) {
  const double eps = 0.5;
  auto pr = make_problem(pair_at({1.0, 0.0, 0.0}, {-1.0, 0.0, 0.0}, eps), ProblemKind::rescaled(),
                         Grid::box(0.25, {72, 40, 40}));
  const auto s = init_bumps(pr, 7);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(norm_h1(s.comps[i], eps), 1.0, 1e-12);
    EXPECT_TRUE(s.comps[i].nonnegative());
    const Point c = pr->weight_center(i);
    for (std::size_t k = 0; k < s.comps[i].size(); ++k) {
      if (s.comps[i][k] != 0.0) {
        ASSERT_LT(pr->grid().node_radius2(k, c), 1.0);
      }
    }
  }
  for (std::size_t k = 0; k < s.comps[0].size(); ++k) ASSERT_EQ(s.comps[0][k] * s.comps[1][k], 0.0);
}

TEST(InitBumps, SharedCentreStillGivesDisjointSupports) {
  auto pr = make_problem(pair_at({0, 0, 0}, {0, 0, 0}, 0.0), ProblemKind::limit_system(), Grid::cube(3, 4.0, 40));
  const auto s = init_bumps(pr, 1);
  EXPECT_FALSE(s.comps[0].is_zero());
  EXPECT_FALSE(s.comps[1].is_zero());
  for (std::size_t k = 0; k < s.comps[0].size(); ++k) ASSERT_EQ(s.comps[0][k] * s.comps[1][k], 0.0);
  EXPECT_TRUE(projectable(nehari_coeffs(s)));
}

TEST(InitBumps, SeedDeterminesTheNoise) {
  auto pr = limit_equation();
  const auto a = init_bumps(pr, 3), b = init_bumps(pr, 3), c = init_bumps(pr, 4);
  EXPECT_EQ(a.comps[0].values, b.comps[0].values);
  EXPECT_NE(a.comps[0].values, c.comps[0].values);
}

TEST(InitBumps, BallOutsideTheBoxIsAGeometryError) {
  Params pr = single();
  pr.eps = 1.0;
  pr.centers = {{3.5, 0.0, 0.0}};
  auto problem = make_problem(pr, ProblemKind::original(), Grid::cube(3, 4.0, 16));
  EXPECT_THROW(init_bumps(problem, 1), GeometryError);
  EXPECT_THROW(test_function_energy(problem), GeometryError);
}

TEST(InitBumps, UnresolvedBumpIsAGeometryError) {
  Params pr = single();
  pr.eps = 0.05;
  auto problem = make_problem(pr, ProblemKind::original(), Grid::cube(3, 2.0, 4));  // no node near the origin
  EXPECT_THROW(init_bumps(problem, 1), GeometryError);
}

TEST(TestFunction, MatchesClosedFormScaling) {
  auto pr = limit_equation();
  const auto s = bump_state(pr);
  const auto c = nehari_coeffs(s);
  const double t = std::pow(c.a[0] / c.b[0], 0.5);  // p = 2
  EXPECT_NEAR(test_function_energy(pr), 0.25 * t * t * c.a[0], 1e-12 * t * t * c.a[0]);
  // it is the energy of the scaled bump
  SystemState scaled = s;
  for (double& v : scaled.comps[0].values) v *= t;
  EXPECT_NEAR(energy(scaled), test_function_energy(pr), 1e-10);
}

class LimitEquationSolve : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { rep_ = new SolveReport(solve(limit_equation(), quick())); }
  static void TearDownTestSuite() { delete rep_; }
  static SolveReport* rep_;
};
SolveReport* LimitEquationSolve::rep_ = nullptr;

TEST_F(LimitEquationSolve, ConvergesToANonnegativeNehariPoint) {
  const auto& r = *rep_;
  ASSERT_TRUE(r.converged()) << to_string(r.status);
  EXPECT_TRUE(r.nonnegative);
  EXPECT_TRUE(r.projectable_throughout);
  EXPECT_LE(r.stationarity, quick().grad_tol);
  const auto res = nehari_residuals(r.state);
  const auto c = nehari_coeffs(r.state);
  EXPECT_LE(std::abs(res[0]) / c.a[0], 1e-8);
  EXPECT_NEAR(energy(r.state), r.energy, 1e-10 * r.energy);
  EXPECT_NEAR(r.energy, 0.25 * c.a[0], 1e-8 * r.energy);
}

TEST_F(LimitEquationSolve, HistoryIsNonincreasing) {
  const auto& h = rep_->history;
  ASSERT_GT(h.size(), 2u);
  for (std::size_t k = 1; k < h.size(); ++k) ASSERT_LE(h[k].energy, h[k - 1].energy + 1e-12 * std::abs(h[k - 1].energy));
}

TEST_F(LimitEquationSolve, LevelBelowTestFunctionEnergy) {
  EXPECT_LT(rep_->energy, test_function_energy(rep_->state.problem));
}

TEST_F(LimitEquationSolve, RestartFromMinimiserStopsImmediately) {
  const auto again = minimize(rep_->state, quick());
  EXPECT_TRUE(again.converged());
  EXPECT_LE(again.iterations, 2);
  EXPECT_LE(relative(again.energy, rep_->energy), 1e-10);
}

TEST_F(LimitEquationSolve, MaximumSitsInTheAttractionBall) {
  const auto s = sup_location(rep_->state.comps[0], *rep_->state.problem, 0);
  EXPECT_TRUE(s.inside_attraction);
}

TEST_F(LimitEquationSolve, OtherSeedReachesTheSameLevel) {
  SolverConfig c = quick();
  c.seed = 99;
  const auto other = solve(limit_equation(), c);
  ASSERT_TRUE(other.converged());
  EXPECT_LE(relative(other.energy, rep_->energy), 1e-6);
}

TEST_F(LimitEquationSolve, ConjugateGradientPreconditionerAgrees) {
  SolverConfig c = quick();
  c.preconditioner = Preconditioner::cg;
  const auto other = solve(limit_equation(), c);
  ASSERT_TRUE(other.converged());
  EXPECT_LE(relative(other.energy, rep_->energy), 1e-6);
}

TEST(Solve, ThreadCountDoesNotChangeTheResult) {
  auto pr = make_problem(pair_at({0, 0, 0}, {0, 0, 0}, 0.0, -5.0), ProblemKind::limit_system(), Grid::cube(3, 5.0, 28));
  SolverConfig one = quick(), two = quick();
  two.threads = 2;
  const auto a = solve(pr, one), b = solve(pr, two);
  EXPECT_EQ(a.energy, b.energy);
  EXPECT_EQ(a.iterations, b.iterations);
  for (int i = 0; i < 2; ++i) EXPECT_EQ(a.state.comps[i].values, b.state.comps[i].values);
}

TEST(Solve, RestartsKeepTheLowestLevel) {
  auto pr = limit_equation(24, 5.0);
  SolverConfig c = quick();
  c.restarts = 3;
  const auto best = solve(pr, c);
  for (int r = 0; r < 3; ++r) {
    SolverConfig one = quick();
    one.seed = c.seed + r;
    EXPECT_LE(best.energy, solve(pr, one).energy);
  }
}

TEST(Solve, MinimiserIsSymmetricUnderTheCubeGroup) {
  auto pr = limit_equation(24, 5.0);
  SolverConfig c = quick();
  c.grad_tol = 1e-8;
  c.max_iters = 5000;
  const auto rep = solve(pr, c);
  const Field& u = rep.state.comps[0];
  const Grid& g = u.grid;
  const int n = g.count(0);
  double defect = 0.0, sup = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const int i = g.axis_index(k, 0), j = g.axis_index(k, 1), l = g.axis_index(k, 2);
    const std::size_t flip = (n - 1 - i) * g.stride(0) + j * g.stride(1) + l;
    const std::size_t swap = j * g.stride(0) + i * g.stride(1) + l;
    const std::size_t rot = l * g.stride(0) + i * g.stride(1) + j;
    defect = std::max({defect, std::abs(u[k] - u[flip]), std::abs(u[k] - u[swap]), std::abs(u[k] - u[rot])});
    sup = std::max(sup, std::abs(u[k]));
  }
  EXPECT_LE(defect / sup, 1e-4);
}

TEST(Solve, DisjointCentresDecoupleIntoSingleLevels) {
  const double eps = 0.25;
  Params pr = pair_at({0.75, 0, 0}, {-0.75, 0, 0}, eps, -1.0);
  const Grid grid = Grid::box(0.3, {48, 28, 28});
  const auto sys = solve(make_problem(pr, ProblemKind::rescaled(), grid), quick());
  ASSERT_TRUE(sys.converged());
  Params one = single();
  one.eps = eps;
  one.centers = {{0.0, 0.0, 0.0}};
  const auto lone = solve(make_problem(one, ProblemKind::rescaled(), Grid::box(0.3, {28, 28, 28})), quick());
  ASSERT_TRUE(lone.converged());
  // the boxes differ beyond the far wall, so only closeness is asserted
  EXPECT_LE(relative(sys.energy, 2 * lone.energy), 2e-2);
}

TEST(Radial, ProfileIsPositiveAndNonincreasing) {
  const auto r = solve_radial_limit_equation(1.0, 2.0, 3, 8.0, 512);
  ASSERT_TRUE(r.converged());
  for (std::size_t k = 0; k < r.profile.size(); ++k) ASSERT_GT(r.profile[k], 0.0);
  for (std::size_t k = 1; k < r.profile.size(); ++k) ASSERT_LE(r.profile[k], r.profile[k - 1] * (1 + 1e-12));
}

TEST(Radial, OutsideTheBallTheProfileIsHarmonic) {
  // -Δw = -μ w³ < 0 outside the unit ball, so w is subharmonic there; with the zero
  // boundary value at R this puts w under the harmonic interpolant w(1)(r^{-1} - R^{-1}) / (1 - R^{-1}).
  const double R = 8.0;
  const auto r = solve_radial_limit_equation(1.0, 2.0, 3, R, 1024);
  ASSERT_TRUE(r.converged());
  double w1 = 0.0;
  for (std::size_t k = 0; k < r.radii.size(); ++k)
    if (r.radii[k] >= 1.0) {
      w1 = r.profile[k];
      const double r1 = r.radii[k];
      for (std::size_t m = k; m < r.radii.size(); ++m) {
        const double s = r.radii[m];
        const double bound = w1 * (1 / s - 1 / R) / (1 / r1 - 1 / R);
        ASSERT_LE(r.profile[m], bound * (1 + 1e-3) + 1e-9) << "r = " << s;
      }
      break;
    }
  EXPECT_GT(w1, 0.0);
}

TEST(Radial, LevelScalesWithMu) {
  // w solves the μ-problem iff μ^{1/(2p-2)} w solves the μ = 1 problem.
  const double p = 1.5;
  const auto k1 = solve_radial_limit_equation(1.0, p, 3, 6.0, 512).kappa;
  const auto k3 = solve_radial_limit_equation(3.0, p, 3, 6.0, 512).kappa;
  EXPECT_NEAR(k3, k1 * std::pow(3.0, -1.0 / (p - 1)), 1e-6 * k1);
}

TEST(Radial, InvalidInputsAreConfigErrors) {
  EXPECT_THROW(solve_radial_limit_equation(1.0, 3.5, 3, 8.0, 64), ConfigError);
  EXPECT_THROW(solve_radial_limit_equation(1.0, 2.0, 3, 0.5, 64), ConfigError);
  EXPECT_THROW(solve_radial_limit_equation(-1.0, 2.0, 3, 8.0, 64), ConfigError);
  EXPECT_THROW(solve_radial_limit_equation(1.0, 2.0, 2, 8.0, 64), ConfigError);
}

TEST(Radial, GridLevelApproachesTheRadialLevel) {
  const auto kappa = solve_radial_limit_equation(1.0, 2.0, 3, 6.0, 1024).kappa;
  const auto grid = solve(limit_equation(40, 6.0), quick());
  ASSERT_TRUE(grid.converged());
  EXPECT_LE(relative(grid.energy, kappa), 0.1);
}
