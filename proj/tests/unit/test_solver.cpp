#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"

using namespace fnle;
using std::numbers::pi;

namespace {

ProblemSpec monge_ampere_1d(const ScalarField& h) {
  const Metric alpha = Metric::scaled_identity(1, 1.0);
  return ProblemSpec{SymmetricOperator::monge_ampere(1), alpha, scaled_background(h.grid(), alpha, 1.0), h,
                     PathKind::none, Normalization::mean_zero};
}

}  // namespace

TEST(Residual, PathAnchors) {
  const auto g = PeriodicGrid::complex_tube(2, 8);
  const Metric alpha = Metric::scaled_identity(2, 1.0);
  const MatrixField chi = perturbed_background(g, alpha, 1.0, 0.3, 2);
  ProblemSpec hess{SymmetricOperator::log_sigma_k(2, 1), alpha, chi, random_smooth_field(g, 4), PathKind::hessian,
                   Normalization::mean_zero};
  EXPECT_LT(residual(hess, ScalarField(g), 0.0, 0.0).sup_norm(), 1e-14);

  const auto gr = PeriodicGrid::real(2, 8);
  const Metric ar = Metric::scaled_identity(2, 1.0);
  ProblemSpec riem{SymmetricOperator::log_sigma_k(2, 2), ar, perturbed_background(gr, ar, 2.0, 0.5, 3), ScalarField(gr),
                   PathKind::riemannian, Normalization::mean_zero};
  EXPECT_LT(residual(riem, ScalarField(gr), 0.0, 0.0).sup_norm(), 1e-14);
}

TEST(Residual, QuotientManufacturedSolution) {
  const auto g = PeriodicGrid::complex_tube(2, 16);
  const Metric alpha = Metric::scaled_identity(2, 1.0);
  const ScalarField ustar = 0.4 * random_potential(g, alpha, 8);
  // chi chosen so that chi + Hess u* = 2 alpha, which solves the quotient equation with c = 1/2.
  const MatrixField chi = scaled_background(g, alpha, 2.0) + (-1.0) * hessian_field(ustar);
  ProblemSpec q{SymmetricOperator::hessian_quotient(2, 1, 2), alpha, chi, ScalarField(g), PathKind::quotient,
                Normalization::mean_zero};
  EXPECT_LT(residual(q, ustar, 0.5, 1.0).sup_norm(), 1e-9);
  EXPECT_NEAR(compute_c(chi, alpha, 1, 2), 0.5, 1e-12);
}

TEST(Residual, InadmissibleThrowsWithPoint) {
  const auto g = PeriodicGrid::complex_full(1, 8);
  ScalarField h(g);
  const auto spec = monge_ampere_1d(h);
  const ScalarField u = ScalarField::from_function(g, [](std::span<const double> x) { return std::cos(2 * pi * x[0]); });
  try {
    residual(spec, u, 0.0, 1.0);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_GE(e.grid_index(), 0);
    EXPECT_LT(e.margin(), 0.0);
  }
}

TEST(Linearization, Examples) {
  const auto g = PeriodicGrid::complex_full(1, 8);
  const auto spec = monge_ampere_1d(random_smooth_field(g, 1));
  SolveState st(ScalarField{g});
  st.t = 1.0;
  EXPECT_LT(linearized_apply(spec, st, ScalarField::constant(g, 4.0), 0.0).sup_norm(), 1e-12);
  const ScalarField one = linearized_apply(spec, st, ScalarField(g), 1.0);
  EXPECT_NEAR(one.max(), -1.0, 1e-15);
  EXPECT_NEAR(one.min(), -1.0, 1e-15);
}

TEST(Linearization, MatchesFiniteDifferencesOfResidual) {
  struct Case {
    PeriodicGrid grid;
    SymmetricOperator op;
    PathKind path;
  };
  const std::vector<Case> cases{
      {PeriodicGrid::complex_full(1, 16), SymmetricOperator::monge_ampere(1), PathKind::none},
      {PeriodicGrid::complex_full(2, 8), SymmetricOperator::log_sigma_k(2, 2), PathKind::hessian},
      {PeriodicGrid::complex_tube(3, 8), SymmetricOperator::log_sigma_k(3, 2), PathKind::hessian},
      {PeriodicGrid::complex_tube(2, 8), SymmetricOperator::hessian_quotient(2, 1, 2), PathKind::quotient},
      {PeriodicGrid::complex_tube(2, 8), SymmetricOperator::composed_with_t(SymmetricOperator::monge_ampere(2)),
       PathKind::hessian},
      {PeriodicGrid::real(3, 8), SymmetricOperator::log_sigma_k(3, 2), PathKind::riemannian},
  };
  for (const auto& cs : cases) {
    const int n = cs.grid.dimension();
    const Metric alpha = Metric::scaled_identity(n, 1.0);
    const PathProblem problem(ProblemSpec{cs.op, alpha, perturbed_background(cs.grid, alpha, 2.0, 0.5, 6),
                                          0.3 * random_smooth_field(cs.grid, 7), cs.path, Normalization::mean_zero});
    SolveState st(0.2 * random_potential(cs.grid, alpha, 9));
    st.c = 0.1;
    st.t = 0.6;
    const ScalarField v = random_smooth_field(cs.grid, 10);
    const double dc = 0.7;
    const ScalarField lin = linearized_apply(problem, st, v, dc);
    double errs[2];
    int i = 0;
    for (double eps : {1e-4, 1e-5}) {
      const ScalarField plus = residual(problem, st.u + eps * v, st.c + eps * dc, st.t);
      const ScalarField minus = residual(problem, st.u - eps * v, st.c - eps * dc, st.t);
      errs[i++] = ((1.0 / (2 * eps)) * (plus - minus) - lin).sup_norm();
    }
    EXPECT_LT(errs[1], 1e-6 * (1 + lin.sup_norm())) << cs.op.name();
    EXPECT_LE(errs[1], errs[0] + 1e-7) << cs.op.name();
  }
}

TEST(Newton, ManufacturedMongeAmpereOneDimension) {
  const auto g = PeriodicGrid::complex_full(1, 64);
  const ScalarField ustar =
      ScalarField::from_function(g, [](std::span<const double> x) { return -0.3 / (pi * pi) * std::cos(2 * pi * x[0]); });
  ScalarField h(g);
  const MatrixField a = endomorphism_field(Metric::scaled_identity(1, 1.0), scaled_background(g, Metric::scaled_identity(1, 1.0), 1.0), ustar);
  for (std::size_t p = 0; p < g.size(); ++p) h[p] = std::log(std::real(a[p](0, 0)));
  const auto spec = monge_ampere_1d(h);
  const PathProblem problem(spec);
  const SolveState s = newton_solve(problem, 1.0, initial_state(problem, 1.0));
  EXPECT_LE(s.iterations, 8);
  EXPECT_LT((normalize(s.u, Normalization::mean_zero) - ustar).sup_norm(), 1e-8);
  EXPECT_NEAR(s.c, 0.0, 1e-10);
}

TEST(Newton, ConvergedWarmStartIsReturnedUnchanged) {
  const auto g = PeriodicGrid::complex_full(1, 16);
  const auto spec = monge_ampere_1d(ScalarField(g));
  SolveState warm(ScalarField{g});
  const SolveState s = newton_solve(spec, 1.0, warm);
  EXPECT_EQ(s.iterations, 0);
  EXPECT_EQ(s.u.sup_norm(), 0.0);
}

TEST(Newton, InadmissibleWarmStartThrows) {
  const auto g = PeriodicGrid::complex_full(1, 8);
  const Metric alpha = Metric::scaled_identity(1, 1.0);
  ProblemSpec spec{SymmetricOperator::monge_ampere(1), alpha, scaled_background(g, alpha, -1.0), ScalarField(g),
                   PathKind::none, Normalization::mean_zero};
  EXPECT_THROW(newton_solve(spec, 1.0, SolveState(ScalarField{g})), DomainError);
}

TEST(Newton, IterationCapRaisesStagnation) {
  const auto g = PeriodicGrid::complex_full(1, 32);
  const auto spec = monge_ampere_1d(0.8 * random_smooth_field(g, 2));
  SolverOptions opt;
  opt.max_iterations = 1;
  try {
    newton_solve(spec, 1.0, SolveState(ScalarField{g}), opt);
    FAIL();
  } catch (const StagnationError& e) {
    EXPECT_FALSE(e.residual_history().empty());
  }
}

TEST(Continuity, QuotientPathRecoversConstant) {
  const auto g = PeriodicGrid::complex_tube(2, 16);
  const Metric alpha = Metric::scaled_identity(2, 1.0);
  ProblemSpec spec{SymmetricOperator::hessian_quotient(2, 1, 2), alpha, perturbed_background(g, alpha, 2.0, 0.1, 3),
                   ScalarField(g), PathKind::quotient, Normalization::mean_zero};
  const SolveReport r = run_continuity(spec, uniform_schedule(11));
  ASSERT_TRUE(r.completed) << r.abort_reason;
  EXPECT_NEAR(r.c, *r.quotient_c, 1e-6);
  EXPECT_TRUE(r.bounds_ok);
  EXPECT_NEAR(r.u->mean(), 0.0, 1e-14);
}

TEST(Continuity, HessianPathTopDegreeMatchesDirectSolve) {
  const auto g = PeriodicGrid::complex_full(2, 8);
  const Metric alpha = Metric::scaled_identity(2, 1.0);
  const MatrixField chi = scaled_background(g, alpha, 1.0);
  const ScalarField H = 0.3 * random_smooth_field(g, 12);
  const auto op = SymmetricOperator::log_sigma_k(2, 2);
  const SolveReport path = run_continuity(ProblemSpec{op, alpha, chi, H, PathKind::hessian, Normalization::mean_zero},
                                          uniform_schedule(5));
  ASSERT_TRUE(path.completed);
  const auto ma = SymmetricOperator::monge_ampere(2);
  const PathProblem direct(ProblemSpec{ma, alpha, chi, H, PathKind::none, Normalization::mean_zero});
  const SolveState s = newton_solve(direct, 1.0, initial_state(direct, 1.0));
  EXPECT_LT((*path.u - normalize(s.u, Normalization::mean_zero)).sup_norm(), 1e-8);
  EXPECT_NEAR(path.c, s.c, 1e-9);
  // Nyquist content of u keeps the discrete mixed terms from integrating to zero exactly.
  EXPECT_NEAR(path.c, hessian_constant(chi, alpha, 2, H), 1e-6);
}

TEST(Continuity, ScheduleValidation) {
  const auto g = PeriodicGrid::complex_full(1, 8);
  const auto spec = monge_ampere_1d(ScalarField(g));
  EXPECT_THROW(run_continuity(spec, {0.0, 0.5}), ArgumentError);
  EXPECT_THROW(run_continuity(spec, {0.0, 0.7, 0.5, 1.0}), ArgumentError);
  EXPECT_THROW(uniform_schedule(1), ArgumentError);
}

TEST(Normalize, Examples) {
  const auto g = PeriodicGrid::real(1, 16);
  EXPECT_EQ(normalize(ScalarField::constant(g, 5.0), Normalization::sup_zero).sup_norm(), 0.0);
  const auto s = ScalarField::from_function(g, [](std::span<const double> x) { return std::sin(2 * pi * x[0]); });
  EXPECT_LT((normalize(s, Normalization::mean_zero) - s).sup_norm(), 1e-14);
  EXPECT_NEAR(normalize(s, Normalization::sup_zero).max(), 0.0, 0.0);
}

TEST(Gmres, SolvesSmallNonsymmetricSystem) {
  Matrix a(3, 3);
  a << 4, 1, 0, -1, 3, 1, 0.5, 0, 2;
  const Vector b(Vector::LinSpaced(3, 1, 3));
  auto apply = [&](const Vector& x) -> Vector { return a * x; };
  auto ident = [](const Vector& x) -> Vector { return x; };
  const GmresResult r = gmres(apply, ident, b, 1e-12, 10, 50);
  EXPECT_LT((a * r.x - b).norm(), 1e-10);
}
