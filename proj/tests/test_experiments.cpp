#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "stefan/experiments.hpp"

using namespace stefan;

TEST(ExactSolution, Values) {
  EXPECT_NEAR(exact_u(0.5, 0.3, 1.0), 2 * std::exp(0.5) - 1, 1e-15);
  EXPECT_NEAR(exact_u(0.5, 0.3, 1.0), 2.29744, 1e-5);
  EXPECT_NEAR(exact_u(0.8, 0.0, 0.2), std::exp(-0.6) - 1, 1e-15);
  // Continuous zeta across the front; u jumps from 1 to 0.
  EXPECT_NEAR(exact_zeta(0.5 - 1e-12, 0.1, 0.5), exact_zeta(0.5, 0.1, 0.5), 1e-10);
  EXPECT_EQ(exact_zeta(0.5, 0.1, 0.5), 0.0);
  EXPECT_LT(exact_u(0.9, 0.0, 0.1), 0.0);
  EXPECT_GT(exact_u(0.1, 0.0, 0.9), 1.0);
  EXPECT_EQ(exact_u(0.3, 0.0, 0.5), exact_u(0.3, 0.9, 0.5));
}

TEST(ErrorNorms, ExactAndScaled) {
  const GdPtr gd = discretisation_for_level(2);
  const Mesh& m = gd->mesh();
  Vector z(static_cast<Eigen::Index>(m.num_vertices()));
  for (std::size_t i = 0; i < m.num_vertices(); ++i)
    z[static_cast<Eigen::Index>(i)] = exact_zeta(m.vertex(i).x, m.vertex(i).y, 0.7);
  const ErrorNorms zero = error_norms_from_zeta(*gd, z, 0.7);
  EXPECT_EQ(zero.E_zeta, 0.0);
  EXPECT_EQ(zero.E_grad_zeta, 0.0);
  const ErrorNorms twice = error_norms_from_zeta(*gd, 2.0 * z, 0.7);
  EXPECT_NEAR(twice.E_zeta, 1.0, 1e-14);
  EXPECT_NEAR(twice.E_grad_zeta, 1.0, 1e-14);
  const ErrorNorms abs = relative_errors(*gd, Vector::Zero(z.size()), z);
  EXPECT_NEAR(abs.E_zeta, l2_norm(*gd, z), 1e-15);
}

TEST(Sweep, CsvRoundTripAndDeterminism) {
  SweepGrid g;
  g.levels = {1};
  g.steps = {10};
  g.C_tol = {1, 100};
  g.C_eps = {1, 10};
  const auto a = sensitivity_sweep(g);
  ASSERT_EQ(a.size(), 2u + 2u + 4u);
  EXPECT_EQ(a, sensitivity_sweep(g, 2));
  std::stringstream ss;
  write_sweep_csv(ss, a);
  std::string header;
  std::istringstream hs(ss.str());
  std::getline(hs, header);
  EXPECT_EQ(header, kSweepHeader);
  const auto back = read_sweep_csv(ss);
  ASSERT_EQ(back.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(back[i].strategy, a[i].strategy);
    EXPECT_EQ(back[i].iters_total, a[i].iters_total);
    EXPECT_DOUBLE_EQ(back[i].E_zeta, a[i].E_zeta);
  }
  std::ostringstream again;
  write_sweep_csv(again, sensitivity_sweep(g));
  EXPECT_EQ(again.str(), ss.str());
}

TEST(Sweep, NewtonSaturatesAndLSchemeCostGrows) {
  SweepGrid g;
  g.strategies = {Strategy::newton, Strategy::l_scheme};
  g.levels = {2};
  g.steps = {10};
  g.C_tol = {1, 10, 100, 1000};
  g.C_eps = {1};
  const auto r = sensitivity_sweep(g);
  ASSERT_EQ(r.size(), 8u);
  for (std::size_t i = 1; i < 4; ++i) {
    EXPECT_LT(std::abs(r[i].E_zeta - r[i - 1].E_zeta) / r[i].E_zeta, 1e-6);
    EXPECT_GE(r[4 + i].iters_total, r[4 + i - 1].iters_total);
  }
  for (const auto& rec : r) EXPECT_EQ(rec.flagged_steps, 0u);
}

TEST(Sweep, RegularisedErrorApproachesNewton) {
  const double newton = error_record(deterministic_spec(2, 10, Strategy::newton)).E_zeta;
  double prev = 1e300;
  for (double c : {1.0, 10.0, 100.0}) {
    const double e = error_record(deterministic_spec(2, 10, Strategy::r_scheme, 100, c)).E_zeta;
    EXPECT_LT(std::abs(e - newton), prev) << c;
    prev = std::abs(e - newton);
  }
  EXPECT_LT(prev / newton, 0.1);
}

TEST(Bench, CsvAndCumulativeTimes) {
  BenchPlan p;
  p.levels = {1, 2};
  p.steps = {1, 10};
  p.repetitions = 1;
  const auto r = bench(p);
  ASSERT_EQ(r.size(), 3u * 2u * 2u);
  for (Strategy s : p.strategies) {
    std::int64_t sum = 0;
    std::size_t sn = 0;
    for (const auto& b : r) {
      if (b.strategy != s) continue;
      EXPECT_EQ(b.sn, ++sn);
      EXPECT_GT(b.cpu_ns_min, 0);
      sum += b.cpu_ns_min;
      EXPECT_EQ(b.cpu_ns_cumulative, sum);
    }
    EXPECT_EQ(sn, 4u);
  }
  std::stringstream ss;
  write_bench_csv(ss, r);
  EXPECT_EQ(ss.str().substr(0, std::string(kBenchHeader).size()), kBenchHeader);
  EXPECT_EQ(read_bench_csv(ss), r);
}

TEST(Reference, Restriction) {
  const Mesh& m1 = discretisation_for_level(1)->mesh();
  const Mesh& m2 = discretisation_for_level(2)->mesh();
  const Vector f = Vector::LinSpaced(static_cast<Eigen::Index>(m2.num_vertices()), 0, 1);
  const Vector r = restrict_to_coarse(m2, m1, f);
  EXPECT_EQ(r, f.head(static_cast<Eigen::Index>(m1.num_vertices())));
  EXPECT_THROW(restrict_to_coarse(m1, m2, r), std::invalid_argument);
  const Mesh shifted({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
  EXPECT_THROW(restrict_to_coarse(m2, shifted, Vector::Zero(3)), std::invalid_argument);
}

TEST(Reference, SelfComparisonIsZero) {
  const Simulation sim(stochastic_spec(2, 5, 0.2, Strategy::l_scheme, 3, 1));
  const EnsembleSummary s = summarise(sim, run_ensemble(sim, 1));
  const auto e = reference_errors({s}, s);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0].E_zeta, 0.0);
  EXPECT_EQ(e[0].E_grad_zeta, 0.0);
  EXPECT_EQ(e[0].E_xi, 0.0);
}

TEST(Reference, ZeroNoiseMatchesDeterministicComparison) {
  // With the noise switched off the ensemble of one realisation is the
  // deterministic solution, so the mean-based errors equal the direct ones.
  auto spec = [](int level) {
    RunSpec s = stochastic_spec(level, 10, 0.2, Strategy::newton, 1, 4);
    s.noise.mode = NoiseMode::zero;
    return s;
  };
  const Simulation c(spec(1)), f(spec(3));
  const EnsembleSummary sc = summarise(c, run_ensemble(c)), sf = summarise(f, run_ensemble(f));
  const auto e = reference_errors({sc}, sf);
  const Trajectory tc = c.run(1), tf = f.run(1);
  const Vector ref = restrict_to_coarse(f.gd().mesh(), c.gd().mesh(), f.zeta_field(tf, 1));
  const ErrorNorms direct = relative_errors(c.gd(), ref, c.zeta_field(tc, 1));
  EXPECT_DOUBLE_EQ(e[0].E_zeta, direct.E_zeta);
  EXPECT_DOUBLE_EQ(e[0].E_grad_zeta, direct.E_grad_zeta);
}

TEST(Reference, ErrorsDecreaseWithMesh) {
  std::vector<EnsembleSummary> coarse;
  for (int l : {1, 2}) {
    const Simulation sim(stochastic_spec(l, 20, 0.2, Strategy::l_scheme, 4, 11));
    coarse.push_back(summarise(sim, run_ensemble(sim)));
  }
  const Simulation ref(stochastic_spec(3, 20, 0.2, Strategy::l_scheme, 4, 11));
  const auto e = reference_errors(coarse, summarise(ref, run_ensemble(ref)));
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0].mesh_level, 1);
  EXPECT_LT(e[1].E_zeta, e[0].E_zeta);
  EXPECT_LT(e[1].E_xi, e[0].E_xi);
}
