#include "stefan/timestepper.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <boost/algorithm/string/trim.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/math/constants/constants.hpp>

#include "stefan/exact_solution.hpp"

namespace stefan {

RunSpec deterministic_spec(int level, std::size_t steps, Strategy strategy, double C_tol, double C_eps) {
  RunSpec s;
  s.mesh_level = level;
  s.time = {1.0, steps};
  s.solver.strategy = strategy;
  s.C_tol = C_tol;
  s.C_eps = C_eps;
  s.noise.mode = NoiseMode::zero;
  s.boundary = BoundaryData::exact;
  s.initial = InitialData::exact;
  return s;
}

RunSpec stochastic_spec(int level, std::size_t steps, double t_final, Strategy strategy, std::size_t realisations,
                        std::uint64_t seed) {
  RunSpec s;
  s.mesh_level = level;
  s.time = {t_final, steps};
  s.solver.strategy = strategy;
  s.noise.mode = NoiseMode::multiplicative_zeta;
  s.boundary = BoundaryData::homogeneous;
  s.initial = InitialData::exact;
  s.realisations = realisations;
  s.seed = seed;
  return s;
}

Tolerances tolerance_policy(double dt, double h, double C_tol, double C_eps) {
  if (!(dt > 0.0) || !(h > 0.0) || !(C_tol > 0.0) || !(C_eps > 0.0))
    throw std::invalid_argument("tolerance_policy: inputs must be positive");
  return {std::min(dt * dt, h * h) / C_tol, std::min(dt, h) / C_eps};
}

GdPtr discretisation_for_level(int level) {
  static std::mutex mutex;
  static std::map<int, GdPtr> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(level);
  if (it != cache.end()) return it->second;
  auto mesh = std::make_shared<const Mesh>(generate_mesh(level));
  GdPtr gd = build_gd(mesh);
  cache.emplace(level, gd);
  return gd;
}

namespace {

std::span<const double> cspan(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> mspan(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

Vector eval(const Nonlinearity& f, const Vector& x) {
  Vector y(x.size());
  f.eval(cspan(x), mspan(y));
  return y;
}

std::int64_t since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Simulation::Simulation(const RunSpec& spec) : Simulation(spec, discretisation_for_level(spec.mesh_level)) {}

Simulation::Simulation(const RunSpec& spec, GdPtr gd)
    : spec_(spec), gd_(std::move(gd)),
      zeta_(spec.zeta == ZetaKind::identity ? identity_zeta() : stefan_zeta()),
      counters_(std::make_shared<BackendCounters>()) {
  if (!gd_) throw std::invalid_argument("Simulation: null discretisation");
  if (spec_.time.steps == 0 || !(spec_.time.t_final > 0.0))
    throw std::invalid_argument("Simulation: time grid needs T > 0 and at least one step");
  if (spec_.realisations == 0) throw std::invalid_argument("Simulation: at least one realisation");

  solver_ = spec_.solver;
  const double dt = spec_.time.dt();
  if (spec_.policy) {
    const Tolerances t = tolerance_policy(dt, gd_->mesh().size_h(), spec_.C_tol, spec_.C_eps);
    solver_.tolerance = t.tolerance;
    solver_.epsilon = std::min(t.epsilon, zeta_.lipschitz());
  }
  validate(solver_, zeta_.lipschitz());
  L_ = effective_L(solver_, zeta_.lipschitz());
  if (solver_.strategy == Strategy::r_scheme || solver_.strategy == Strategy::rgs_inverse)
    zeta_eps_.emplace(regularise(zeta_, solver_.epsilon));

  noise_ = std::make_unique<QWienerModel>(
      QWienerModel::laplace_modes(gd_, std::max<std::size_t>(spec_.noise.rank, 1), spec_.noise.decay_exponent));

  const auto t0 = std::chrono::steady_clock::now();
  switch (solver_.strategy) {
    case Strategy::l_scheme:
    case Strategy::r_scheme: backend_ = make_l_backend(gd_, dt, L_, counters_); break;
    case Strategy::rgs_inverse: backend_ = make_rgs_backend(gd_, dt, L_, counters_); break;
    case Strategy::newton: break;
  }
  setup_ns_ = since(t0);
}

const Nonlinearity& Simulation::system_zeta() const { return zeta_eps_ ? zeta_eps_->regularised() : zeta_; }

Vector Simulation::initial_u() const {
  const Mesh& mesh = gd_->mesh();
  Vector u(static_cast<Eigen::Index>(mesh.num_vertices()));
  const double pi = boost::math::constants::pi<double>();
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    const auto& p = mesh.vertex(i);
    u[static_cast<Eigen::Index>(i)] = spec_.initial == InitialData::eigenmode
                                          ? std::sin(pi * p.x) * std::sin(pi * p.y)
                                          : exact_u(p.x, p.y, 0.0);
  }
  apply_boundary(u, 0.0);
  return u;
}

void Simulation::apply_boundary(Vector& u, double t) const {
  const Mesh& mesh = gd_->mesh();
  for (int d : gd_->dirichlet_dofs()) {
    const auto& p = mesh.vertex(static_cast<std::size_t>(d));
    u[d] = spec_.boundary == BoundaryData::exact ? exact_u(p.x, p.y, t) : 0.0;
  }
}

Trajectory Simulation::run(std::size_t realisation) const {
  return solver_.strategy == Strategy::rgs_inverse ? run_v_form(realisation) : run_u_form(realisation);
}

Trajectory Simulation::run_u_form(std::size_t realisation) const {
  const GradientDiscretisation& gd = *gd_;
  const Nonlinearity& nl = system_zeta();
  const double dt = spec_.time.dt();
  const std::size_t N = spec_.time.steps;
  const NoiseOperator op{spec_.noise.intensity, spec_.noise.mode};
  const Vector& mass = gd.lumped_mass();

  std::unique_ptr<NewtonWorkspace> workspace;
  if (solver_.strategy == Strategy::newton) workspace = std::make_unique<NewtonWorkspace>(gd_, counters_);

  Trajectory traj;
  Vector u = initial_u();
  traj.u.push_back(u);
  Vector rhs, noise;
  for (std::size_t n = 1; n <= N; ++n) {
    const auto t0 = std::chrono::steady_clock::now();
    rhs = mass.cwiseProduct(u);
    if (!op.vanishes()) {
      const WienerIncrement inc = sample_increment(*noise_, spec_.seed, realisation, n, dt);
      apply_noise(op, *noise_, eval(nl, u), inc, noise);
      rhs += mass.cwiseProduct(noise);
    }
    Vector init = u;
    apply_boundary(init, spec_.time.time(n));
    StepResult r;
    switch (solver_.strategy) {
      case Strategy::newton: r = newton_solve(gd, nl, init, rhs, dt, solver_, *workspace); break;
      case Strategy::l_scheme: r = l_scheme_solve(gd, nl, init, rhs, dt, solver_, *backend_); break;
      case Strategy::r_scheme: r = r_scheme_solve(gd, *zeta_eps_, init, rhs, dt, solver_, *backend_); break;
      case Strategy::rgs_inverse: throw std::logic_error("run_u_form: rgs_inverse");
    }
    u = std::move(r.solution);
    const std::int64_t ns = since(t0);
    traj.solve_ns += ns;
    traj.total_iterations += r.iterations;
    if (!r.converged) traj.flagged.push_back(n);
    traj.records.push_back({n, r.iterations, r.final_residual(), counters_->assembly.load(),
                            counters_->factorisation.load(), ns});
    if (!spec_.lean || n == N) traj.u.push_back(u);
  }
  return traj;
}

Trajectory Simulation::run_v_form(std::size_t realisation) const {
  const GradientDiscretisation& gd = *gd_;
  const RegularisedNonlinearity& ze = *zeta_eps_;
  const double dt = spec_.time.dt();
  const std::size_t N = spec_.time.steps;
  const NoiseOperator op{spec_.noise.intensity, spec_.noise.mode};
  const Vector& mass = gd.lumped_mass();

  auto to_u = [&](const Vector& v) {
    Vector u(v.size());
    ze.inverse(cspan(v), mspan(u));
    return u;
  };

  Trajectory traj;
  Vector v = eval(ze.regularised(), initial_u());
  traj.v.push_back(v);
  traj.u.push_back(to_u(v));
  Vector rhs, noise, ub(v.size());
  for (std::size_t n = 1; n <= N; ++n) {
    const auto t0 = std::chrono::steady_clock::now();
    rhs = mass.cwiseProduct(to_u(v));
    if (!op.vanishes()) {
      const WienerIncrement inc = sample_increment(*noise_, spec_.seed, realisation, n, dt);
      apply_noise(op, *noise_, v, inc, noise);
      rhs += mass.cwiseProduct(noise);
    }
    Vector init = v;
    apply_boundary(ub, spec_.time.time(n));
    for (int d : gd.dirichlet_dofs()) init[d] = ze.eval(ub[d]);
    StepResult r = rgs_inverse_solve(gd, ze, init, rhs, dt, solver_, *backend_);
    v = std::move(r.solution);
    const std::int64_t ns = since(t0);
    traj.solve_ns += ns;
    traj.total_iterations += r.iterations;
    if (!r.converged) traj.flagged.push_back(n);
    traj.records.push_back({n, r.iterations, r.final_residual(), counters_->assembly.load(),
                            counters_->factorisation.load(), ns});
    if (!spec_.lean || n == N) {
      traj.v.push_back(v);
      traj.u.push_back(to_u(v));
    }
  }
  return traj;
}

Vector Simulation::zeta_field(const Trajectory& traj, std::size_t snapshot) const {
  return eval(zeta_, traj.u.at(snapshot));
}

Vector Simulation::xi_field(const Trajectory& traj, std::size_t snapshot) const {
  const Vector& u = traj.u.at(snapshot);
  Vector out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = zeta_.primitive(u[i]);
  return out;
}

Trajectory run_gs(const Simulation& sim, std::size_t realisation) {
  if (sim.solver().strategy == Strategy::rgs_inverse)
    throw std::invalid_argument("run_gs: use run_rgs for rgs_inverse");
  return sim.run(realisation);
}

Trajectory run_rgs(const Simulation& sim, std::size_t realisation) {
  if (sim.solver().strategy != Strategy::rgs_inverse) throw std::invalid_argument("run_rgs: needs rgs_inverse");
  return sim.run(realisation);
}

std::size_t worker_count(std::size_t realisations) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("STEFAN_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) n = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max<std::size_t>(1, std::min(n, realisations));
}

EnsembleResult run_ensemble(const Simulation& sim, std::size_t threads) {
  const std::size_t R = sim.spec().realisations;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Trajectory> runs(R);
  std::vector<std::exception_ptr> errors(R);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r; (r = next.fetch_add(1)) < R;) {
      try {
        runs[r] = sim.run(r + 1);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const std::size_t nthreads = threads > 0 ? std::min(threads, R) : worker_count(R);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  EnsembleResult out;
  const std::size_t snapshots = runs.front().u.size();
  std::vector<Vector> column(R);
  auto mean_of = [&](auto&& pick) {
    for (std::size_t r = 0; r < R; ++r) column[r] = pick(r);
    return mc_expectation(std::span<const Vector>(column));
  };
  for (std::size_t s = 0; s < snapshots; ++s) {
    out.mean.u.push_back(mean_of([&](std::size_t r) { return runs[r].u[s]; }));
    if (!runs.front().v.empty()) out.mean.v.push_back(mean_of([&](std::size_t r) { return runs[r].v[s]; }));
  }
  out.mean_zeta = mean_of([&](std::size_t r) { return sim.zeta_field(runs[r], snapshots - 1); });
  out.mean_xi = mean_of([&](std::size_t r) { return sim.xi_field(runs[r], snapshots - 1); });
  for (const auto& t : runs) {
    out.total_iterations += t.total_iterations;
    out.flagged_steps += t.flagged.size();
    out.mean.solve_ns += t.solve_ns;
  }
  out.mean.total_iterations = out.total_iterations;
  out.realisations = std::move(runs);
  out.wall_ns = since(t0);
  return out;
}

namespace {

template <class T>
T parse_value(const std::string& key, const std::string& value) {
  try {
    return boost::lexical_cast<T>(value);
  } catch (const boost::bad_lexical_cast&) {
    throw ConfigError("invalid value '" + value + "' for " + key);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw ConfigError("invalid boolean '" + value + "' for " + key);
}

}  // namespace

RunSpec parse_run_config(std::istream& is) {
  RunSpec s;
  bool explicit_tolerance = false, explicit_epsilon = false;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"mesh.level", [&](auto& k, auto& v) { s.mesh_level = parse_value<int>(k, v); }},
      {"time.steps", [&](auto& k, auto& v) { s.time.steps = parse_value<std::size_t>(k, v); }},
      {"time.T", [&](auto& k, auto& v) { s.time.t_final = parse_value<double>(k, v); }},
      {"solver.strategy", [&](auto&, auto& v) { s.solver.strategy = parse_strategy(v); }},
      {"solver.L", [&](auto& k, auto& v) { s.solver.L = parse_value<double>(k, v); }},
      {"solver.C_tol", [&](auto& k, auto& v) { s.C_tol = parse_value<double>(k, v); }},
      {"solver.C_eps", [&](auto& k, auto& v) { s.C_eps = parse_value<double>(k, v); }},
      {"solver.max_iterations", [&](auto& k, auto& v) { s.solver.max_iterations = parse_value<std::size_t>(k, v); }},
      {"solver.tolerance",
       [&](auto& k, auto& v) {
         s.solver.tolerance = parse_value<double>(k, v);
         explicit_tolerance = true;
       }},
      {"solver.epsilon",
       [&](auto& k, auto& v) {
         s.solver.epsilon = parse_value<double>(k, v);
         explicit_epsilon = true;
       }},
      {"solver.newton_jacobian",
       [&](auto& k, auto& v) {
         if (v == "exact") s.solver.newton_jacobian = NewtonJacobian::exact;
         else if (v == "cell_average") s.solver.newton_jacobian = NewtonJacobian::cell_average;
         else throw ConfigError("invalid value '" + v + "' for " + k);
       }},
      {"noise.rank", [&](auto& k, auto& v) { s.noise.rank = parse_value<std::size_t>(k, v); }},
      {"noise.intensity", [&](auto& k, auto& v) { s.noise.intensity = parse_value<double>(k, v); }},
      {"noise.decay_exponent", [&](auto& k, auto& v) { s.noise.decay_exponent = parse_value<double>(k, v); }},
      {"noise.mode", [&](auto&, auto& v) { s.noise.mode = parse_noise_mode(v); }},
      {"seed", [&](auto& k, auto& v) { s.seed = parse_value<std::uint64_t>(k, v); }},
      {"run.seed", [&](auto& k, auto& v) { s.seed = parse_value<std::uint64_t>(k, v); }},
      {"run.realisations", [&](auto& k, auto& v) { s.realisations = parse_value<std::size_t>(k, v); }},
      {"run.lean", [&](auto& k, auto& v) { s.lean = parse_bool(k, v); }},
      {"run.strict", [&](auto& k, auto& v) { s.strict = parse_bool(k, v); }},
      {"output.dir", [&](auto&, auto& v) { s.output_dir = v; }},
      {"problem.zeta",
       [&](auto& k, auto& v) {
         if (v == "stefan") s.zeta = ZetaKind::stefan;
         else if (v == "identity") s.zeta = ZetaKind::identity;
         else throw ConfigError("invalid value '" + v + "' for " + k);
       }},
      {"problem.boundary",
       [&](auto& k, auto& v) {
         if (v == "exact") s.boundary = BoundaryData::exact;
         else if (v == "homogeneous") s.boundary = BoundaryData::homogeneous;
         else throw ConfigError("invalid value '" + v + "' for " + k);
       }},
      {"problem.initial",
       [&](auto& k, auto& v) {
         if (v == "exact") s.initial = InitialData::exact;
         else if (v == "eigenmode") s.initial = InitialData::eigenmode;
         else throw ConfigError("invalid value '" + v + "' for " + k);
       }},
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    boost::algorithm::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    boost::algorithm::trim(key);
    boost::algorithm::trim(value);
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    try {
      it->second(key, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (explicit_tolerance || explicit_epsilon) {
    if (!(explicit_tolerance && explicit_epsilon) &&
        (s.solver.strategy == Strategy::r_scheme || s.solver.strategy == Strategy::rgs_inverse))
      throw ConfigError("solver.tolerance and solver.epsilon must be given together for regularised strategies");
    s.policy = false;
  }
  if (s.mesh_level < 1 || s.mesh_level > 6) throw ConfigError("mesh.level must be in 1..6");
  if (s.time.steps == 0 || !(s.time.t_final > 0.0)) throw ConfigError("time.steps and time.T must be positive");
  if (s.realisations == 0) throw ConfigError("run.realisations must be positive");
  return s;
}

RunSpec load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_run_config(in);
}

void write_field_csv(std::ostream& os, const Mesh& mesh, const Vector& field) {
  os << "vertex_index,x,y,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    const auto& p = mesh.vertex(i);
    os << i << ',' << p.x << ',' << p.y << ',' << field[static_cast<Eigen::Index>(i)] << '\n';
  }
}

}  // namespace stefan
