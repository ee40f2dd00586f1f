#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "stefan/experiments.hpp"
#include "stefan/timestepper.hpp"

using namespace stefan;

namespace {

double E_zeta(const RunSpec& spec) {
  const Simulation sim(spec);
  const Trajectory t = sim.run(1);
  return error_norms_from_zeta(sim.gd(), sim.zeta_field(t, t.u.size() - 1), spec.time.t_final).E_zeta;
}

}  // namespace

TEST(TimeGrid, Spacing) {
  const TimeGrid g{1.0, 7};
  EXPECT_NEAR(g.dt() * 7, 1.0, 1e-14);
  EXPECT_EQ(g.time(0), 0.0);
  EXPECT_EQ(g.time(7), 1.0);
}

TEST(TolerancePolicy, Examples) {
  EXPECT_NEAR(tolerance_policy(0.01, 0.125, 100, 1).tolerance, 1e-6, 1e-20);
  const Tolerances t = tolerance_policy(1, 1, 1, 1);
  EXPECT_EQ(t.tolerance, 1.0);
  EXPECT_EQ(t.epsilon, 1.0);
  EXPECT_DOUBLE_EQ(tolerance_policy(0.1, 0.25, 1, 1).epsilon, 0.1);
  EXPECT_THROW(tolerance_policy(0.0, 0.1, 1, 1), std::invalid_argument);
}

TEST(Simulation, PolicyDrivesSolverSettings) {
  const Simulation sim(deterministic_spec(2, 100, Strategy::r_scheme, 100, 10));
  EXPECT_NEAR(sim.solver().tolerance, 1e-6, 1e-20);
  EXPECT_NEAR(sim.solver().epsilon, 1e-3, 1e-18);
  ASSERT_NE(sim.zeta_eps(), nullptr);
  EXPECT_DOUBLE_EQ(sim.L(), 1.0);
  // Large dt and h: epsilon is clamped to L_zeta.
  const Simulation coarse(deterministic_spec(1, 1, Strategy::r_scheme, 1, 0.1));
  EXPECT_DOUBLE_EQ(coarse.solver().epsilon, 1.0);
}

TEST(Trajectory, SnapshotCounts) {
  RunSpec s = deterministic_spec(1, 10, Strategy::l_scheme);
  s.lean = false;
  const Trajectory full = Simulation(s).run(1);
  EXPECT_EQ(full.u.size(), 11u);
  EXPECT_EQ(full.records.size(), 10u);
  s.lean = true;
  const Trajectory lean = Simulation(s).run(1);
  EXPECT_EQ(lean.u.size(), 2u);
  EXPECT_EQ(lean.final_u(), full.final_u());
}

TEST(Trajectory, InitialInterpolantAndBoundary) {
  const Simulation sim(deterministic_spec(1, 10, Strategy::newton));
  const Trajectory t = sim.run(1);
  const Mesh& m = sim.gd().mesh();
  for (std::size_t i = 0; i < m.num_vertices(); ++i)
    EXPECT_EQ(t.u[0][static_cast<Eigen::Index>(i)], exact_u(m.vertex(i).x, m.vertex(i).y, 0.0));
  for (int d : sim.gd().dirichlet_dofs())
    EXPECT_EQ(t.final_u()[d], exact_u(m.vertex(d).x, m.vertex(d).y, 1.0));
}

TEST(RunGs, HeatDecay) {
  RunSpec s;
  s.mesh_level = 3;
  s.time = {0.05, 50};
  s.solver.strategy = Strategy::l_scheme;
  s.zeta = ZetaKind::identity;
  s.boundary = BoundaryData::homogeneous;
  s.initial = InitialData::eigenmode;
  s.noise.mode = NoiseMode::zero;
  const Simulation sim(s);
  const Trajectory t = run_gs(sim);
  const double pi = std::acos(-1.0);
  const Vector expected = std::exp(-2 * pi * pi * 0.05) * t.u[0];
  EXPECT_LE(l2_norm(sim.gd(), t.final_u() - expected) / l2_norm(sim.gd(), expected), 0.10);
  EXPECT_THROW(run_rgs(sim), std::invalid_argument);
}

TEST(RunGs, ZeroModeEqualsZeroIntensity) {
  RunSpec a = stochastic_spec(2, 10, 0.5, Strategy::l_scheme, 1, 3);
  a.noise.mode = NoiseMode::zero;
  RunSpec b = stochastic_spec(2, 10, 0.5, Strategy::l_scheme, 1, 3);
  b.noise.intensity = 0.0;
  a.lean = b.lean = false;
  EXPECT_EQ(Simulation(a).run(1).u, Simulation(b).run(1).u);
}

TEST(RunGs, DeterministicErrorDecreasesWithMesh) {
  const double e1 = E_zeta(deterministic_spec(1, 100, Strategy::newton));
  const double e2 = E_zeta(deterministic_spec(2, 100, Strategy::newton));
  const double e3 = E_zeta(deterministic_spec(3, 100, Strategy::newton));
  EXPECT_LT(e2, 0.05);
  EXPECT_LT(e2, e1);
  EXPECT_LE(e3, e2);
}

TEST(RunGs, NoiseIsExplicit) {
  // A run to T/2 with half the steps reproduces the first half of the full
  // run bit for bit, so step n never reads later data.
  RunSpec full = stochastic_spec(2, 10, 1.0, Strategy::l_scheme, 1, 9);
  full.lean = false;
  RunSpec half = stochastic_spec(2, 5, 0.5, Strategy::l_scheme, 1, 9);
  half.lean = false;
  const Trajectory a = Simulation(full).run(2), b = Simulation(half).run(2);
  for (std::size_t n = 0; n <= 5; ++n) EXPECT_EQ(a.u[n], b.u[n]) << n;
}

TEST(RunGs, StochasticRunsDependOnRealisation) {
  const Simulation sim(stochastic_spec(2, 10, 0.5, Strategy::l_scheme, 2, 1));
  EXPECT_NE(sim.run(1).final_u(), sim.run(2).final_u());
  EXPECT_EQ(sim.run(1).final_u(), sim.run(1).final_u());
}

TEST(RunRgs, IdentityMatchesLScheme) {
  RunSpec l;
  l.mesh_level = 2;
  l.time = {0.2, 10};
  l.zeta = ZetaKind::identity;
  l.boundary = BoundaryData::homogeneous;
  l.initial = InitialData::eigenmode;
  l.noise.mode = NoiseMode::zero;
  l.policy = false;
  l.lean = false;
  l.solver.strategy = Strategy::l_scheme;
  l.solver.tolerance = 1e-12;
  l.solver.L = 1.0;
  RunSpec g = l;
  g.solver.strategy = Strategy::rgs_inverse;
  g.solver.epsilon = 1.0;
  g.solver.L = 0.0;
  const Simulation gs(g);
  EXPECT_DOUBLE_EQ(gs.L(), 1.0);
  const Trajectory a = Simulation(l).run(1), b = run_rgs(gs);
  ASSERT_EQ(a.u.size(), b.u.size());
  for (std::size_t n = 0; n < a.u.size(); ++n) EXPECT_LE((a.u[n] - b.u[n]).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_EQ(b.v.size(), b.u.size());
}

TEST(RunRgs, SmallerEpsilonCloserToExact) {
  auto error = [](double eps) {
    RunSpec s = deterministic_spec(2, 10, Strategy::rgs_inverse);
    s.policy = false;
    s.solver.epsilon = eps;
    s.solver.tolerance = 1e-8;
    s.solver.max_iterations = 20000;
    const Simulation sim(s);
    const Trajectory t = sim.run(1);
    Vector ex(t.v.back().size());
    const Mesh& m = sim.gd().mesh();
    for (std::size_t i = 0; i < m.num_vertices(); ++i)
      ex[static_cast<Eigen::Index>(i)] = exact_zeta(m.vertex(i).x, m.vertex(i).y, 1.0);
    EXPECT_TRUE(t.flagged.empty());
    return l2_norm(sim.gd(), t.v.back() - ex);
  };
  EXPECT_LT(error(0.05), error(0.1));
}

TEST(RunRgs, VInRangeOfRegularisation) {
  RunSpec s = deterministic_spec(1, 10, Strategy::rgs_inverse);
  s.lean = false;
  const Simulation sim(s);
  const Trajectory t = sim.run(1);
  const RegularisedNonlinearity& ze = *sim.zeta_eps();
  for (std::size_t n = 0; n < t.v.size(); ++n)
    for (Eigen::Index i = 0; i < t.v[n].size(); ++i) {
      EXPECT_TRUE(std::isfinite(t.u[n][i]));
      EXPECT_NEAR(ze.eval(t.u[n][i]), t.v[n][i], 1e-12);
    }
}

TEST(RScheme, EpsilonConsistency) {
  auto newton = [] {
    const Simulation sim(deterministic_spec(2, 10, Strategy::newton));
    const Trajectory t = sim.run(1);
    return std::make_pair(sim.zeta_field(t, 1), sim.gd_ptr());
  }();
  double prev = 1e300;
  for (double eps : {0.1, 0.05, 0.025}) {
    RunSpec s = deterministic_spec(2, 10, Strategy::r_scheme);
    s.policy = false;
    s.solver.epsilon = eps;
    s.solver.tolerance = 1e-6;
    const Simulation sim(s);
    const Trajectory t = sim.run(1);
    Vector zu(t.final_u().size());
    for (Eigen::Index i = 0; i < zu.size(); ++i) zu[i] = sim.zeta_eps()->eval(t.final_u()[i]);
    const double d = l2_norm(*newton.second, zu - newton.first);
    EXPECT_LT(d, prev) << eps;
    prev = d;
  }
}

TEST(Ensemble, SingleRealisationEqualsRun) {
  const Simulation sim(stochastic_spec(1, 10, 0.5, Strategy::r_scheme, 1, 5));
  const EnsembleResult e = run_ensemble(sim, 1);
  EXPECT_EQ(e.mean.final_u(), sim.run(1).final_u());
  EXPECT_EQ(e.realisations.size(), 1u);
}

TEST(Ensemble, ThreadCountDoesNotChangeResult) {
  const Simulation sim(stochastic_spec(2, 10, 0.5, Strategy::newton, 7, 5));
  const EnsembleResult a = run_ensemble(sim, 1), b = run_ensemble(sim, 3);
  EXPECT_EQ(a.mean_zeta, b.mean_zeta);
  EXPECT_EQ(a.mean_xi, b.mean_xi);
  EXPECT_EQ(a.total_iterations, b.total_iterations);
}

TEST(Ensemble, ZeroNoiseIsDeterministic) {
  RunSpec s = deterministic_spec(2, 20, Strategy::l_scheme);
  s.realisations = 5;
  s.lean = false;
  const Simulation sim(s);
  const EnsembleResult e = run_ensemble(sim);
  EXPECT_EQ(e.mean.u, sim.run(1).u);
}

TEST(Ensemble, FactoriseOnceAcrossRealisations) {
  for (Strategy st : {Strategy::l_scheme, Strategy::r_scheme, Strategy::rgs_inverse}) {
    const Simulation sim(stochastic_spec(1, 10, 1.0, st, 5, 2));
    run_ensemble(sim);
    EXPECT_EQ(sim.counters().factorisation.load(), 1u) << to_string(st);
    EXPECT_EQ(sim.counters().assembly.load(), 1u) << to_string(st);
  }
}

TEST(Ensemble, WorkerCountFromEnvironment) {
  ::setenv("STEFAN_THREADS", "3", 1);
  EXPECT_EQ(worker_count(10), 3u);
  EXPECT_EQ(worker_count(2), 2u);
  ::unsetenv("STEFAN_THREADS");
  EXPECT_GE(worker_count(10), 1u);
}

TEST(Config, ParsesKeys) {
  std::istringstream is(R"(# comment
mesh.level = 3
time.steps = 40
time.T = 0.5
solver.strategy = R
solver.L = 2
solver.C_tol = 10   # trailing comment
solver.C_eps = 10
solver.max_iterations = 77
noise.mode = multiplicative_zeta
noise.rank = 4
noise.intensity = 0.5
noise.decay_exponent = 2
run.realisations = 6
run.seed = 99
output.dir = out/x
)");
  const RunSpec s = parse_run_config(is);
  EXPECT_EQ(s.mesh_level, 3);
  EXPECT_EQ(s.time.steps, 40u);
  EXPECT_EQ(s.time.t_final, 0.5);
  EXPECT_EQ(s.solver.strategy, Strategy::r_scheme);
  EXPECT_EQ(s.solver.L, 2.0);
  EXPECT_EQ(s.C_tol, 10.0);
  EXPECT_EQ(s.C_eps, 10.0);
  EXPECT_EQ(s.solver.max_iterations, 77u);
  EXPECT_EQ(s.noise.mode, NoiseMode::multiplicative_zeta);
  EXPECT_EQ(s.noise.rank, 4u);
  EXPECT_EQ(s.noise.intensity, 0.5);
  EXPECT_EQ(s.noise.decay_exponent, 2.0);
  EXPECT_EQ(s.realisations, 6u);
  EXPECT_EQ(s.seed, 99u);
  EXPECT_EQ(s.output_dir, "out/x");
  EXPECT_TRUE(s.policy);
}

TEST(Config, ExplicitToleranceDisablesPolicy) {
  std::istringstream is("solver.strategy=newton\nsolver.tolerance=1e-9\n");
  const RunSpec s = parse_run_config(is);
  EXPECT_FALSE(s.policy);
  EXPECT_EQ(s.solver.tolerance, 1e-9);
  EXPECT_EQ(Simulation(s).solver().tolerance, 1e-9);
}

TEST(Config, Errors) {
  for (const char* text : {"mesh.level = x\n", "bogus.key = 1\n", "no equals sign\n", "solver.strategy = picard\n",
                           "mesh.level = 9\n", "time.steps = 0\n", "noise.mode = white\n",
                           "solver.strategy = R\nsolver.tolerance = 1e-6\n", "run.lean = maybe\n"}) {
    std::istringstream is(text);
    EXPECT_THROW(parse_run_config(is), ConfigError) << text;
  }
  EXPECT_THROW(load_run_config("/nonexistent/run.cfg"), ConfigError);
}

TEST(FieldCsv, Format) {
  const Simulation sim(deterministic_spec(1, 1, Strategy::newton));
  std::ostringstream os;
  write_field_csv(os, sim.gd().mesh(), sim.initial_u());
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "vertex_index,x,y,value");
  std::size_t rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, sim.gd().num_dofs());
}
