#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "stefan/solvers.hpp"
#include "stefan/timestepper.hpp"

using namespace stefan;

namespace {

GdPtr gd_for(int level) { return build_gd(std::make_shared<const Mesh>(generate_mesh(level))); }

// One step of the deterministic test on `level`: data at step 1.
struct StepData {
  GdPtr gd;
  Vector init, rhs;
  double dt;
};

StepData first_step(int level, std::size_t steps) {
  const Simulation sim(deterministic_spec(level, steps, Strategy::newton));
  StepData d{sim.gd_ptr(), sim.initial_u(), {}, sim.dt()};
  d.rhs = sim.gd().lumped_mass().cwiseProduct(d.init);
  sim.apply_boundary(d.init, sim.spec().time.time(1));
  return d;
}

SolverConfig config(Strategy s, double tol, double L = 0.0, double eps = 0.0) {
  SolverConfig c;
  c.strategy = s;
  c.tolerance = tol;
  c.L = L;
  c.epsilon = eps;
  return c;
}

}  // namespace

TEST(Residual, DenseOracle) {
  const GdPtr gd = gd_for(1);
  const Eigen::MatrixXd K = oracle::dense_stiffness(gd->mesh());
  const Vector M = oracle::dense_lumped_mass(gd->mesh());
  const Nonlinearity z = stefan_zeta();
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(-1.5, 2.5);
  const auto n = static_cast<Eigen::Index>(gd->num_dofs());
  for (int trial = 0; trial < 5; ++trial) {
    Vector u(n), rhs(n), zu(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      u[i] = U(rng);
      rhs[i] = U(rng) * M[i];
      zu[i] = z(u[i]);
    }
    const double dt = 0.07;
    const Vector ref = M.cwiseProduct(u) + dt * K * zu - rhs;
    const Vector r = residual_vector(*gd, z, u, rhs, dt);
    double norm2 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (gd->is_dirichlet(static_cast<std::size_t>(i))) {
        EXPECT_EQ(r[i], 0.0);
        continue;
      }
      EXPECT_NEAR(r[i], ref[i], 1e-12);
      norm2 += ref[i] * ref[i] / M[i];
    }
    EXPECT_NEAR(residual(*gd, z, u, rhs, dt), std::sqrt(norm2), 1e-12);
  }
}

TEST(Residual, StationaryStep) {
  const GdPtr gd = gd_for(1);
  const Vector u = interpolate(gd, [](double x, double y) { return 3 * x - y; }).values();
  EXPECT_EQ(residual(*gd, stefan_zeta(), u, gd->lumped_mass().cwiseProduct(u), 0.0), 0.0);
}

TEST(Residual, SizeMismatch) {
  const GdPtr gd = gd_for(1);
  EXPECT_THROW(residual(*gd, stefan_zeta(), Vector::Zero(3), Vector::Zero(3), 0.1), std::invalid_argument);
}

TEST(Strategy, Names) {
  for (Strategy s : {Strategy::newton, Strategy::l_scheme, Strategy::r_scheme, Strategy::rgs_inverse})
    EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_EQ(parse_strategy("N"), Strategy::newton);
  EXPECT_EQ(parse_strategy("RGS"), Strategy::rgs_inverse);
  EXPECT_THROW(parse_strategy("picard"), std::invalid_argument);
}

TEST(SolverConfig, Admissibility) {
  EXPECT_THROW(validate(config(Strategy::l_scheme, 1e-6, 0.4), 1.0), std::invalid_argument);
  EXPECT_NO_THROW(validate(config(Strategy::l_scheme, 1e-6, 0.5), 1.0));
  EXPECT_THROW(validate(config(Strategy::r_scheme, 1e-6, 1.0, 0.0), 1.0), std::invalid_argument);
  EXPECT_THROW(validate(config(Strategy::rgs_inverse, 1e-6, 5.0, 0.1), 1.0), std::invalid_argument);
  EXPECT_NO_THROW(validate(config(Strategy::rgs_inverse, 1e-6, 10.0, 0.1), 1.0));
  EXPECT_THROW(validate(config(Strategy::newton, 0.0), 1.0), std::invalid_argument);
  EXPECT_DOUBLE_EQ(effective_L(config(Strategy::l_scheme, 1e-6), 2.0), 2.0);
  EXPECT_DOUBLE_EQ(effective_L(config(Strategy::rgs_inverse, 1e-6, 0.0, 0.05), 1.0), 20.0);
}

TEST(LinearBackend, SolveAccuracyAndCounters) {
  const GdPtr gd = gd_for(2);
  auto counters = std::make_shared<BackendCounters>();
  const auto backend = make_l_backend(gd, 0.01, 1.0, counters);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N;
  Vector b(backend->matrix().rows());
  for (auto& x : b) x = N(rng);
  const Vector x = backend->solve(b);
  EXPECT_LE((backend->matrix() * x - b).norm(), 1e-10 * b.norm());
  EXPECT_EQ(counters->assembly.load(), 1u);
  EXPECT_EQ(counters->factorisation.load(), 1u);
  EXPECT_EQ(counters->solve.load(), 1u);
  const auto rgs = make_rgs_backend(gd, 0.1, 10.0);
  EXPECT_DOUBLE_EQ(rgs->mass_weight(), 10.0);
  EXPECT_DOUBLE_EQ(rgs->stiffness_weight(), 0.1);
}

TEST(IdentityZeta, EveryStrategyTakesOneIteration) {
  const GdPtr gd = gd_for(2);
  const Nonlinearity id = identity_zeta();
  const Vector u0 = interpolate(gd, [](double x, double y) { return std::sin(3 * x) * y * (1 - y) * x * (1 - x); }).values();
  const Vector rhs = gd->lumped_mass().cwiseProduct(u0);
  const double dt = 0.05;

  NewtonWorkspace ws(gd);
  const StepResult n = newton_solve(*gd, id, u0, rhs, dt, config(Strategy::newton, 1e-12), ws);
  EXPECT_EQ(n.iterations, 1u);
  EXPECT_TRUE(n.converged);
  EXPECT_LE(residual(*gd, id, n.solution, rhs, dt), 1e-10);

  const auto lb = make_l_backend(gd, dt, 1.0);
  const StepResult l = l_scheme_solve(*gd, id, u0, rhs, dt, config(Strategy::l_scheme, 1e-12, 1.0), *lb);
  EXPECT_EQ(l.iterations, 1u);
  EXPECT_LE((l.solution - n.solution).cwiseAbs().maxCoeff(), 1e-13);

  const RegularisedNonlinearity ze = regularise(id, 1.0);
  const StepResult r = r_scheme_solve(*gd, ze, u0, rhs, dt, config(Strategy::r_scheme, 1e-12, 1.0, 1.0), *lb);
  EXPECT_EQ(r.iterations, 1u);

  const auto rb = make_rgs_backend(gd, dt, 1.0);
  const StepResult g = rgs_inverse_solve(*gd, ze, u0, rhs, dt, config(Strategy::rgs_inverse, 1e-12, 1.0, 1.0), *rb);
  EXPECT_EQ(g.iterations, 1u);
  EXPECT_LE((g.solution - n.solution).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(StepResult, ConvergedMeansBelowTolerance) {
  const StepData d = first_step(2, 100);
  const Nonlinearity z = stefan_zeta();
  const auto lb = make_l_backend(d.gd, d.dt, 1.0);
  for (double tol : {1e-3, 1e-6, 1e-9}) {
    const StepResult r = l_scheme_solve(*d.gd, z, d.init, d.rhs, d.dt, config(Strategy::l_scheme, tol, 1.0), *lb);
    ASSERT_TRUE(r.converged);
    EXPECT_LE(r.final_residual(), tol);
    EXPECT_EQ(r.residual_history.size(), r.iterations + 1);
    EXPECT_NEAR(r.final_residual(), residual(*d.gd, z, r.solution, d.rhs, d.dt), 1e-15);
  }
  // At dt = 0.01 the first step stays on one branch of zeta and L = 1 solves
  // it in one iteration; dt = 0.1 crosses the plateau.
  const StepData c = first_step(2, 10);
  const auto cb = make_l_backend(c.gd, c.dt, 1.0);
  SolverConfig capped = config(Strategy::l_scheme, 1e-14, 1.0);
  capped.max_iterations = 2;
  const StepResult r = l_scheme_solve(*c.gd, z, c.init, c.rhs, c.dt, capped, *cb);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 2u);
}

TEST(Solvers, DirichletValuesKept) {
  const StepData d = first_step(1, 10);
  NewtonWorkspace ws(d.gd);
  const StepResult r = newton_solve(*d.gd, stefan_zeta(), d.init, d.rhs, d.dt, config(Strategy::newton, 1e-10), ws);
  for (int i : d.gd->dirichlet_dofs()) EXPECT_EQ(r.solution[i], d.init[i]);
}

TEST(Solvers, CrossSolverAgreement) {
  const StepData d = first_step(2, 100);
  const Nonlinearity z = stefan_zeta();
  const double tol = 1e-8;
  NewtonWorkspace ws(d.gd);
  const StepResult n = newton_solve(*d.gd, z, d.init, d.rhs, d.dt, config(Strategy::newton, tol), ws);
  const auto lb = make_l_backend(d.gd, d.dt, 1.0);
  const StepResult l = l_scheme_solve(*d.gd, z, d.init, d.rhs, d.dt, config(Strategy::l_scheme, tol, 1.0), *lb);
  ASSERT_TRUE(n.converged && l.converged);
  EXPECT_LE(l2_norm(*d.gd, n.solution - l.solution), 10 * tol);
}

TEST(Solvers, InsensitiveToInitialGuess) {
  const StepData d = first_step(2, 100);
  const Nonlinearity z = stefan_zeta();
  const double tol = 1e-8;
  Vector zero = d.init.cwiseProduct(Vector::Ones(d.init.size()) - d.gd->free_mask());
  const auto lb = make_l_backend(d.gd, d.dt, 1.0);
  const StepResult a = l_scheme_solve(*d.gd, z, d.init, d.rhs, d.dt, config(Strategy::l_scheme, tol, 1.0), *lb);
  const StepResult b = l_scheme_solve(*d.gd, z, zero, d.rhs, d.dt, config(Strategy::l_scheme, tol, 1.0), *lb);
  ASSERT_TRUE(a.converged && b.converged);
  EXPECT_LE(l2_norm(*d.gd, a.solution - b.solution), 10 * tol);
}

TEST(Solvers, NewtonCountersPerIteration) {
  const StepData d = first_step(2, 10);
  auto counters = std::make_shared<BackendCounters>();
  NewtonWorkspace ws(d.gd, counters);
  const StepResult r = newton_solve(*d.gd, stefan_zeta(), d.init, d.rhs, d.dt, config(Strategy::newton, 1e-10), ws);
  EXPECT_GT(r.iterations, 0u);
  EXPECT_EQ(counters->assembly.load(), r.iterations);
  EXPECT_EQ(counters->factorisation.load(), r.iterations);
}

TEST(Solvers, NewtonCellAverageJacobian) {
  // With zeta' = 1 the cell-averaged Jacobian is exact.
  const StepData d = first_step(2, 100);
  NewtonWorkspace ws(d.gd);
  SolverConfig c = config(Strategy::newton, 1e-12);
  c.newton_jacobian = NewtonJacobian::cell_average;
  const StepResult id = newton_solve(*d.gd, identity_zeta(), d.init, d.rhs, d.dt, c, ws);
  EXPECT_TRUE(id.converged);
  EXPECT_EQ(id.iterations, 1u);
  // On a step across the plateau it is an inexact Newton and does not settle
  // below the tolerance, unlike the exact Jacobian.
  const StepData s = first_step(2, 10);
  c.tolerance = 1e-8;
  c.max_iterations = 40;
  EXPECT_FALSE(newton_solve(*s.gd, stefan_zeta(), s.init, s.rhs, s.dt, c, ws).converged);
  c.newton_jacobian = NewtonJacobian::exact;
  EXPECT_TRUE(newton_solve(*s.gd, stefan_zeta(), s.init, s.rhs, s.dt, c, ws).converged);
}

TEST(Solvers, NewtonLocallyQuadratic) {
  // Transitions with residual in [10 tol, 1e3 tol]: r_{i+1} <= C r_i^2 with C
  // fitted as ten times the median ratio, on at least 90% of them.
  const Simulation sim([] {
    RunSpec s = deterministic_spec(2, 100, Strategy::newton);
    s.lean = false;
    return s;
  }());
  const Trajectory t = sim.run(1);
  const double tol = 1e-6;
  NewtonWorkspace ws(sim.gd_ptr());
  SolverConfig c = config(Strategy::newton, 1e-14);
  std::vector<double> ratios;
  for (std::size_t n = 1; n <= 100; ++n) {
    Vector init = t.u[n - 1];
    sim.apply_boundary(init, sim.spec().time.time(n));
    const Vector rhs = sim.gd().lumped_mass().cwiseProduct(t.u[n - 1]);
    const auto h = newton_solve(sim.gd(), sim.zeta(), init, rhs, sim.dt(), c, ws).residual_history;
    for (std::size_t i = 0; i + 1 < h.size(); ++i)
      if (h[i] >= 10 * tol && h[i] <= 1e3 * tol) ratios.push_back(h[i + 1] / (h[i] * h[i]));
  }
  ASSERT_FALSE(ratios.empty());
  std::vector<double> sorted = ratios;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double C = 10 * std::max(sorted[sorted.size() / 2], 1e-300);
  const auto ok = std::count_if(ratios.begin(), ratios.end(), [&](double r) { return r <= C; });
  EXPECT_GE(static_cast<double>(ok), 0.9 * static_cast<double>(ratios.size()));
}

TEST(ContractionAlpha, Values) {
  EXPECT_NEAR(contraction_alpha(10, 1, 0.01, 0.2), 0.88896, 5e-6);
  EXPECT_NEAR(contraction_alpha(10, 1, 0.01, 0.2), 9 / std::sqrt(10 * 10.25), 1e-15);
  EXPECT_EQ(contraction_alpha(1, 1, 0.1, 0.2), 0.0);
  EXPECT_DOUBLE_EQ(contraction_alpha(4, 1, 0.0, 0.2), 0.75);
  EXPECT_THROW(contraction_alpha(0, 1, 0.1, 0.2), std::invalid_argument);
  EXPECT_THROW(contraction_alpha(1, 1, 0.1, 0.0), std::invalid_argument);
  EXPECT_THROW(contraction_alpha(1, 1, -0.1, 0.2), std::invalid_argument);
  EXPECT_THROW(contraction_alpha(0.5, 1, 0.1, 0.2), std::invalid_argument);
}

TEST(SolverReport, CsvRoundTrip) {
  std::vector<StepRecord> recs{{1, 3, 1.2345678901234567e-7, 1, 1, 12345}, {2, 0, 0.0, 1, 1, 7},
                               {3, 17, 3.3e-300, 41, 41, 999999999}};
  std::stringstream ss;
  write_solver_report(ss, recs);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')),
            "step,iterations,final_residual,assembly_count,factorisation_count,wall_ns");
  EXPECT_EQ(read_solver_report(ss), recs);
}
