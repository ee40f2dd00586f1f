#include "stefan/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>

namespace stefan {

namespace {

template <class... Args>
std::string describe(const Args&... args) {
  std::ostringstream os;
  os.precision(6);
  (os << ... << args);
  return os.str();
}

PropertyResult result(std::string module, std::string name, bool pass, std::string detail) {
  return {std::move(module), std::move(name), pass, std::move(detail)};
}

std::span<const double> cspan(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> mspan(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

RunSpec replay_spec(int level, std::size_t steps, Strategy strategy) {
  RunSpec s = deterministic_spec(level, steps, strategy);
  s.lean = false;
  return s;
}

}  // namespace

PropertyResult check_appendix_inequalities(std::uint64_t seed, std::size_t samples) {
  const Nonlinearity zeta = stefan_zeta();
  const double Lz = zeta.lipschitz();
  const InequalityCheck a1 = check_linearisation_bound(zeta, Lz / 2.0, 4.0 * Lz, samples, seed);
  bool pass = a1.holds;
  std::string detail = describe("A.1 ", a1.samples, " samples ", a1.holds ? "ok" : "violated");
  if (!a1.holds) detail += describe(" at a=", a1.a, " b=", a1.b, " L=", a1.L);
  for (double eps : {0.1, 0.01}) {
    const RegularisedNonlinearity ze = regularise(zeta, eps);
    const InequalityCheck a2 = check_inverse_linearisation_bound(ze, 1.0 / eps, 4.0 / eps, samples, seed + 1);
    pass = pass && a2.holds;
    detail += describe("; A.2 eps=", eps, " ", a2.samples, " samples ", a2.holds ? "ok" : "violated");
    if (!a2.holds) detail += describe(" at a=", a2.a, " b=", a2.b, " L=", a2.L);
  }
  return result("nonlinearity", "appendix inequalities", pass, detail);
}

PropertyResult check_l_scheme_monotone(int level, std::size_t steps) {
  const Simulation sim(replay_spec(level, steps, Strategy::l_scheme));
  const Trajectory traj = sim.run(1);
  const GradientDiscretisation& gd = sim.gd();
  const double dt = sim.dt();
  const auto backend = make_l_backend(sim.gd_ptr(), dt, sim.L());
  NewtonWorkspace newton(sim.gd_ptr());

  SolverConfig fixed = sim.solver();
  fixed.strategy = Strategy::newton;
  fixed.tolerance = 1e-14;
  fixed.max_iterations = 50;
  SolverConfig lin = sim.solver();
  lin.tolerance = 1e-11;
  lin.max_iterations = 2000;

  std::size_t checked = 0, violations = 0;
  double worst = 0.0;
  for (std::size_t n = 1; n <= steps; ++n) {
    const Vector rhs = gd.lumped_mass().cwiseProduct(traj.u[n - 1]);
    Vector init = traj.u[n - 1];
    sim.apply_boundary(init, sim.spec().time.time(n));
    const Vector star = newton_solve(gd, sim.zeta(), init, rhs, dt, fixed, newton).solution;
    const double scale = std::max(1.0, l2_norm(gd, star));
    double prev = -1.0;
    l_scheme_solve(gd, sim.zeta(), init, rhs, dt, lin, *backend, [&](std::size_t, const Vector& u) {
      const double e = l2_norm(gd, u - star);
      if (prev >= 0.0) {
        ++checked;
        const double growth = e - prev;
        if (growth > 1e-13 * scale) ++violations;
        worst = std::max(worst, growth);
      }
      prev = e;
    });
  }
  return result("solvers", "l_scheme error monotone", checked > 0 && violations == 0,
                describe("M", level, " dt=", dt, ": ", checked, " transitions, ", violations,
                         " increases, largest change ", worst));
}

PropertyResult check_rgs_contraction(int level, std::size_t steps, double epsilon, double slack) {
  RunSpec spec = replay_spec(level, steps, Strategy::rgs_inverse);
  spec.policy = false;
  spec.solver.epsilon = epsilon;
  spec.solver.L = 1.0 / epsilon;
  spec.solver.tolerance = 1e-10;
  spec.solver.max_iterations = 5000;
  const Simulation sim(spec);
  const Trajectory traj = sim.run(1);
  const GradientDiscretisation& gd = sim.gd();
  const RegularisedNonlinearity& ze = *sim.zeta_eps();
  const double dt = sim.dt(), L = sim.L();
  const double C_D = estimate_poincare_constant(gd);
  const double alpha = contraction_alpha(L, ze.lipschitz(), dt, C_D);
  const auto backend = make_rgs_backend(sim.gd_ptr(), dt, L);

  SolverConfig fixed = sim.solver();
  fixed.tolerance = 1e-15;
  fixed.max_iterations = 400;
  SolverConfig replay = sim.solver();

  std::size_t checked = 0;
  double worst = 0.0;
  Vector ub(static_cast<Eigen::Index>(gd.num_dofs()));
  for (std::size_t n = 1; n <= steps; ++n) {
    Vector u_prev(traj.v[n - 1].size());
    ze.inverse(cspan(traj.v[n - 1]), mspan(u_prev));
    const Vector rhs = gd.lumped_mass().cwiseProduct(u_prev);
    Vector init = traj.v[n - 1];
    sim.apply_boundary(ub, sim.spec().time.time(n));
    for (int d : gd.dirichlet_dofs()) init[d] = ze.eval(ub[d]);
    const Vector star = rgs_inverse_solve(gd, ze, init, rhs, dt, fixed, *backend).solution;
    const double floor = 1e-9 * std::max(1.0, x_norm_from_parts(l2_norm(gd, star), h1_seminorm(gd, star), L, dt, C_D));
    double prev = -1.0;
    rgs_inverse_solve(gd, ze, init, rhs, dt, replay, *backend, [&](std::size_t, const Vector& v) {
      const Vector e = v - star;
      const double x = x_norm_from_parts(l2_norm(gd, e), h1_seminorm(gd, e), L, dt, C_D);
      if (prev > floor) {
        ++checked;
        worst = std::max(worst, x / prev);
      }
      prev = x;
    });
  }
  return result("solvers", "rgs_inverse contraction", checked > 0 && worst <= alpha + slack,
                describe("M", level, " dt=", dt, " eps=", epsilon, " L=", L, " C_D=", C_D, ": alpha=", alpha,
                         ", largest ratio ", worst, " over ", checked, " iterations"));
}

PropertyResult check_newton_one_step(int level, std::size_t steps, double C_tol, double floor) {
  RunSpec spec = replay_spec(level, steps, Strategy::newton);
  spec.C_tol = C_tol;
  const Simulation sim(spec);
  const Trajectory traj = sim.run(1);
  const GradientDiscretisation& gd = sim.gd();
  const double dt = sim.dt(), tol = sim.solver().tolerance;
  NewtonWorkspace ws(sim.gd_ptr());
  SolverConfig tight = sim.solver();
  tight.tolerance = floor / 10.0;
  tight.max_iterations = 50;

  std::size_t crossings = 0, landed = 0;
  double worst = 0.0;
  for (std::size_t n = 1; n <= steps; ++n) {
    const Vector rhs = gd.lumped_mass().cwiseProduct(traj.u[n - 1]);
    Vector init = traj.u[n - 1];
    sim.apply_boundary(init, spec.time.time(n));
    const auto h = newton_solve(gd, sim.zeta(), init, rhs, dt, tight, ws).residual_history;
    for (std::size_t i = 0; i + 1 < h.size(); ++i) {
      if (h[i] > tol && h[i + 1] <= tol) {
        ++crossings;
        if (h[i + 1] < floor) ++landed;
        worst = std::max(worst, h[i + 1]);
      }
    }
  }
  return result("solvers", "newton reaches round-off after crossing tol", crossings > 0 && landed == crossings,
                describe("M", level, " dt=", dt, " tol=", tol, ": ", landed, "/", crossings,
                         " crossings below ", floor, ", largest ", worst));
}

PropertyResult check_factorise_once(Strategy strategy, int level, std::size_t steps, std::size_t realisations,
                                    std::uint64_t seed) {
  const Simulation sim(stochastic_spec(level, steps, 1.0, strategy, realisations, seed));
  const EnsembleResult ens = run_ensemble(sim);
  const std::size_t assembly = sim.counters().assembly.load(), factor = sim.counters().factorisation.load();
  const bool pass = strategy == Strategy::newton ? factor == ens.total_iterations && assembly == ens.total_iterations
                                                  : factor == 1 && assembly == 1;
  return result("solvers", describe("counters ", to_string(strategy)), pass,
                describe(realisations, " realisations x ", steps, " steps: assembly=", assembly,
                         " factorisation=", factor, " iterations=", ens.total_iterations));
}

PropertyResult check_zero_noise_ensemble(int level, std::size_t steps, std::size_t realisations) {
  RunSpec spec = stochastic_spec(level, steps, 1.0, Strategy::l_scheme, realisations, 3);
  spec.noise.mode = NoiseMode::zero;
  spec.lean = false;
  const Simulation sim(spec);
  const EnsembleResult ens = run_ensemble(sim);
  const Trajectory single = sim.run(1);
  bool same = ens.mean.u.size() == single.u.size();
  for (std::size_t s = 0; same && s < single.u.size(); ++s) same = ens.mean.u[s] == single.u[s];
  return result("timestepper", "zero noise ensemble is deterministic", same,
                describe("R=", realisations, ", ", single.u.size(), " snapshots ", same ? "identical" : "differ"));
}

PropertyResult check_increment_reproducibility(std::uint64_t seed) {
  const QWienerModel model = QWienerModel::laplace_modes(discretisation_for_level(1), 9);
  bool same = true;
  for (std::uint64_t r = 1; r <= 4; ++r)
    for (std::uint64_t n = 1; n <= 50; ++n)
      same = same && sample_increment(model, seed, r, n, 0.01).coefficients ==
                         sample_increment(model, seed, r, n, 0.01).coefficients;
  return result("noise", "increment reproducibility", same, same ? "200 increments regenerated identically" : "mismatch");
}

PropertyResult check_increment_variance(std::uint64_t seed, std::size_t draws, double rel) {
  const QWienerModel model = QWienerModel::laplace_modes(discretisation_for_level(1), 9);
  const double dt = 0.01;
  const std::size_t K = model.rank();
  std::vector<double> sum(K, 0.0), sum2(K, 0.0);
  for (std::size_t n = 1; n <= draws; ++n) {
    const WienerIncrement inc = sample_increment(model, seed, 1, n, dt);
    for (std::size_t k = 0; k < K; ++k) {
      sum[k] += inc.coefficients[k];
      sum2[k] += inc.coefficients[k] * inc.coefficients[k];
    }
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double d = static_cast<double>(draws);
    const double var = (sum2[k] - sum[k] * sum[k] / d) / (d - 1.0);
    const double q = model.sqrt_eigenvalues()[k] * model.sqrt_eigenvalues()[k];
    worst = std::max(worst, std::abs(var / (q * dt) - 1.0));
  }
  return result("noise", "increment variance", worst <= rel,
                describe(draws, " draws, largest relative variance error ", worst, " (limit ", rel, ")"));
}

PropertyResult check_increment_independence(std::uint64_t seed, std::size_t pairs) {
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t n = 1; n <= pairs; ++n) {
    const double x = standard_normal(seed, 1, n, 0), y = standard_normal(seed, 2, n, 0);
    sx += x, sy += y, sxx += x * x, syy += y * y, sxy += x * y;
  }
  const double m = static_cast<double>(pairs);
  const double cov = sxy / m - sx * sy / (m * m);
  const double corr = cov / std::sqrt((sxx / m - sx * sx / (m * m)) * (syy / m - sy * sy / (m * m)));
  return result("noise", "realisations independent", std::abs(corr) < 0.05,
                describe(pairs, " pairs, correlation ", corr));
}

PropertyResult check_ensemble_thread_invariance(std::uint64_t seed) {
  const Simulation sim(stochastic_spec(1, 10, 0.1, Strategy::l_scheme, 6, seed));
  const EnsembleResult one = run_ensemble(sim, 1), many = run_ensemble(sim, 4);
  const bool same = one.mean_zeta == many.mean_zeta && one.mean_xi == many.mean_xi && one.mean.u == many.mean.u;
  return result("timestepper", "ensemble independent of thread count", same,
                same ? "1 and 4 workers identical" : "1 and 4 workers differ");
}

PropertyResult check_mesh_counts(int max_level) {
  const auto& ref = reference_mesh_counts();
  bool pass = true;
  std::ostringstream os;
  for (int l = 1; l <= max_level; ++l) {
    const Mesh m = generate_mesh(l);
    const auto& r = ref[static_cast<std::size_t>(l - 1)];
    const bool row = m.num_cells() == r.cells && m.num_edges() == r.edges && m.num_vertices() == r.vertices &&
                     m.num_vertices() + m.num_cells() == m.num_edges() + 1;
    pass = pass && row;
    os << (l > 1 ? "; " : "") << 'M' << l << ' ' << m.num_cells() << ' ' << m.num_edges() << ' ' << m.num_vertices()
       << (row ? "" : " MISMATCH");
  }
  return result("mesh", "table counts and Euler formula", pass, os.str());
}

namespace {

PropertyResult check_regularisation(std::uint64_t seed) {
  const Nonlinearity zeta = stefan_zeta();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-5.0, 5.0);
  bool pass = true;
  double worst_inv = 0.0, worst_gap = 0.0;
  for (double eps : {0.5, 0.1, 0.01}) {
    const RegularisedNonlinearity ze = regularise(zeta, eps);
    for (int i = 0; i < 10000; ++i) {
      const double u = U(rng);
      worst_inv = std::max(worst_inv, std::abs(ze.inverse(ze.eval(u)) - u));
      worst_gap = std::max(worst_gap, std::abs(ze.eval(u) - zeta.eval(u)) / eps);
      const double d = ze.derivative(u);
      pass = pass && d >= eps && d <= zeta.lipschitz();
    }
  }
  pass = pass && worst_inv <= 1e-12 && worst_gap <= 1.0 + 1e-12;
  return result("nonlinearity", "regularisation invariants", pass,
                describe("inverse round-trip error ", worst_inv, ", sup|zeta_eps - zeta|/eps ", worst_gap));
}

PropertyResult check_poincare(std::uint64_t seed) {
  const GdPtr gd = discretisation_for_level(2);
  const double C_D = gd->poincare_constant();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  bool pass = true;
  double worst_p = 0.0, worst_d = 0.0;
  for (int i = 0; i < 100; ++i) {
    Vector v(static_cast<Eigen::Index>(gd->num_dofs()));
    for (auto& x : v) x = N(rng);
    v = v.cwiseProduct(gd->free_mask());
    const double l2 = l2_norm(*gd, v);
    worst_p = std::max(worst_p, l2 / (C_D * h1_seminorm(*gd, v)));
    worst_d = std::max(worst_d, dual_norm(*gd, v) / (C_D * l2));
  }
  pass = worst_p <= 1.0 + 1e-9 && worst_d <= 1.0 + 1e-9;
  return result("mesh", "Poincare and dual norm bounds", pass,
                describe("M2 C_D=", C_D, ": max |v|/(C_D|grad v|) ", worst_p, ", max |v|_*/(C_D|v|) ", worst_d));
}

PropertyResult check_alpha_below_one() {
  bool pass = true;
  for (double L : {1.0, 2.0, 10.0, 100.0})
    for (double dt : {0.0, 0.001, 0.1, 1.0}) {
      const double a = contraction_alpha(L, 1.0, dt, 0.2);
      pass = pass && a >= 0.0 && a < 1.0;
    }
  return result("solvers", "contraction constant in [0,1)", pass, describe("alpha(10,1,0.01,0.2)=",
                                                                          contraction_alpha(10.0, 1.0, 0.01, 0.2)));
}

}  // namespace

const std::vector<std::string>& property_modules() {
  static const std::vector<std::string> names{"all", "nonlinearity", "mesh", "noise", "solvers", "timestepper"};
  return names;
}

std::vector<PropertyResult> run_properties(std::string_view module, const PropertyOptions& o) {
  const auto& names = property_modules();
  if (std::find(names.begin(), names.end(), module) == names.end())
    throw std::invalid_argument("unknown module '" + std::string(module) + "'");
  const bool all = module == "all";
  std::vector<PropertyResult> out;
  if (all || module == "nonlinearity") {
    out.push_back(check_appendix_inequalities(o.seed, o.samples));
    out.push_back(check_regularisation(o.seed));
  }
  if (all || module == "mesh") {
    out.push_back(check_mesh_counts(6));
    out.push_back(check_poincare(o.seed));
  }
  if (all || module == "noise") {
    out.push_back(check_increment_reproducibility(o.seed));
    out.push_back(check_increment_variance(o.seed));
    out.push_back(check_increment_independence(o.seed));
  }
  if (all || module == "solvers") {
    out.push_back(check_alpha_below_one());
    out.push_back(check_l_scheme_monotone());
    out.push_back(check_rgs_contraction());
    out.push_back(check_newton_one_step());
    for (Strategy s : {Strategy::newton, Strategy::l_scheme, Strategy::r_scheme})
      out.push_back(check_factorise_once(s, 1, 10, 5, o.seed));
  }
  if (all || module == "timestepper") {
    out.push_back(check_zero_noise_ensemble());
    out.push_back(check_ensemble_thread_invariance(o.seed));
  }
  return out;
}

}  // namespace stefan
