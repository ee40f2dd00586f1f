#include "stefan/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>

#include <boost/algorithm/string/split.hpp>
#include <boost/lexical_cast.hpp>

namespace stefan {

ErrorNorms relative_errors(const GradientDiscretisation& gd, const Vector& reference, const Vector& computed) {
  const Vector diff = reference - computed;
  const double l2_ref = l2_norm(gd, reference);
  const double h1_ref = h1_seminorm(gd, reference);
  ErrorNorms e;
  e.E_zeta = l2_norm(gd, diff) / (l2_ref > 0.0 ? l2_ref : 1.0);
  e.E_grad_zeta = h1_seminorm(gd, diff) / (h1_ref > 0.0 ? h1_ref : 1.0);
  return e;
}

ErrorNorms error_norms_from_zeta(const GradientDiscretisation& gd, const Vector& zeta_computed, double t) {
  const Mesh& mesh = gd.mesh();
  Vector exact(static_cast<Eigen::Index>(mesh.num_vertices()));
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
    exact[static_cast<Eigen::Index>(i)] = exact_zeta(mesh.vertex(i).x, mesh.vertex(i).y, t);
  return relative_errors(gd, exact, zeta_computed);
}

ErrorNorms error_norms(const GradientDiscretisation& gd, const Nonlinearity& zeta, const Vector& u, double t) {
  Vector z(u.size());
  zeta.eval({u.data(), static_cast<std::size_t>(u.size())}, {z.data(), static_cast<std::size_t>(z.size())});
  return error_norms_from_zeta(gd, z, t);
}

ErrorRecord error_record(const RunSpec& spec, std::size_t repetitions) {
  ErrorRecord rec;
  rec.cpu_ns_min = repetitions > 0 ? std::numeric_limits<std::int64_t>::max() : 0;
  for (std::size_t rep = 0; rep < std::max<std::size_t>(1, repetitions); ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    const Simulation sim(spec);
    const Trajectory traj = sim.run(1);
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count();
    if (repetitions > 0) rec.cpu_ns_min = std::min<std::int64_t>(rec.cpu_ns_min, ns);
    if (rep > 0) continue;
    const ErrorNorms e = error_norms_from_zeta(sim.gd(), sim.zeta_field(traj, traj.u.size() - 1), spec.time.t_final);
    rec.strategy = spec.solver.strategy;
    rec.mesh_level = spec.mesh_level;
    rec.h = sim.gd().mesh().size_h();
    rec.dt = sim.dt();
    rec.C_tol = spec.C_tol;
    rec.C_eps = spec.C_eps;
    rec.tol = sim.solver().tolerance;
    rec.epsilon = sim.solver().epsilon;
    rec.E_zeta = e.E_zeta;
    rec.E_grad_zeta = e.E_grad_zeta;
    rec.iters_total = traj.total_iterations;
    rec.flagged_steps = traj.flagged.size();
  }
  return rec;
}

std::vector<ErrorRecord> sensitivity_sweep(const SweepGrid& grid, std::size_t threads) {
  std::vector<RunSpec> specs;
  for (Strategy s : grid.strategies)
    for (int level : grid.levels)
      for (std::size_t steps : grid.steps)
        for (double ct : grid.C_tol) {
          const bool regularised = s == Strategy::r_scheme || s == Strategy::rgs_inverse;
          for (std::size_t e = 0; e < grid.C_eps.size(); ++e) {
            if (!regularised && e > 0) break;
            specs.push_back(deterministic_spec(level, steps, s, ct, grid.C_eps[e]));
          }
        }
  std::vector<ErrorRecord> out(specs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < specs.size();) out[i] = error_record(specs[i], grid.repetitions);
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(threads, specs.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
  }
  return out;
}

namespace {

std::vector<std::string> split_csv(const std::string& line, std::size_t expected) {
  std::vector<std::string> f;
  boost::algorithm::split(f, line, [](char c) { return c == ','; });
  if (f.size() != expected) throw std::runtime_error("CSV: expected " + std::to_string(expected) + " fields");
  return f;
}

template <class T>
T field(const std::string& s) {
  return boost::lexical_cast<T>(s);
}

void expect_header(std::istream& is, const char* header) {
  std::string line;
  if (!std::getline(is, line) || line != header) throw std::runtime_error("CSV: unexpected header");
}

}  // namespace

void write_sweep_csv(std::ostream& os, const std::vector<ErrorRecord>& records) {
  os << kSweepHeader << '\n' << std::setprecision(17);
  for (const auto& r : records)
    os << to_string(r.strategy) << ',' << r.mesh_level << ',' << r.h << ',' << r.dt << ',' << r.C_tol << ','
       << r.C_eps << ',' << r.tol << ',' << r.epsilon << ',' << r.E_zeta << ',' << r.E_grad_zeta << ','
       << r.iters_total << ',' << r.flagged_steps << ',' << r.cpu_ns_min << '\n';
}

std::vector<ErrorRecord> read_sweep_csv(std::istream& is) {
  expect_header(is, kSweepHeader);
  std::vector<ErrorRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line, 13);
    ErrorRecord r;
    r.strategy = parse_strategy(f[0]);
    r.mesh_level = field<int>(f[1]);
    r.h = field<double>(f[2]);
    r.dt = field<double>(f[3]);
    r.C_tol = field<double>(f[4]);
    r.C_eps = field<double>(f[5]);
    r.tol = field<double>(f[6]);
    r.epsilon = field<double>(f[7]);
    r.E_zeta = field<double>(f[8]);
    r.E_grad_zeta = field<double>(f[9]);
    r.iters_total = field<std::size_t>(f[10]);
    r.flagged_steps = field<std::size_t>(f[11]);
    r.cpu_ns_min = field<std::int64_t>(f[12]);
    out.push_back(r);
  }
  return out;
}

std::int64_t time_run(const RunSpec& spec, std::size_t repetitions) {
  const GdPtr gd = discretisation_for_level(spec.mesh_level);
  gd->stiffness_free();
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for (std::size_t rep = 0; rep < std::max<std::size_t>(1, repetitions); ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    const Simulation sim(spec, gd);
    const Trajectory traj = sim.run(1);
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count();
    best = std::min<std::int64_t>(best, ns);
  }
  return best;
}

std::vector<BenchRecord> bench(const BenchPlan& plan) {
  std::vector<BenchRecord> out;
  for (Strategy s : plan.strategies) {
    std::size_t sn = 0;
    std::int64_t cumulative = 0;
    for (int level : plan.levels)
      for (std::size_t steps : plan.steps) {
        const RunSpec spec = deterministic_spec(level, steps, s, plan.C_tol, plan.C_eps);
        BenchRecord r;
        r.strategy = s;
        r.sn = ++sn;
        r.mesh_level = level;
        r.dt = spec.time.dt();
        r.cpu_ns_min = time_run(spec, plan.repetitions);
        cumulative += r.cpu_ns_min;
        r.cpu_ns_cumulative = cumulative;
        out.push_back(r);
      }
  }
  return out;
}

void write_bench_csv(std::ostream& os, const std::vector<BenchRecord>& records) {
  os << kBenchHeader << '\n' << std::setprecision(17);
  for (const auto& r : records)
    os << to_string(r.strategy) << ',' << r.sn << ',' << r.mesh_level << ',' << r.dt << ',' << r.cpu_ns_min << ','
       << r.cpu_ns_cumulative << '\n';
}

std::vector<BenchRecord> read_bench_csv(std::istream& is) {
  expect_header(is, kBenchHeader);
  std::vector<BenchRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line, 6);
    BenchRecord r;
    r.strategy = parse_strategy(f[0]);
    r.sn = field<std::size_t>(f[1]);
    r.mesh_level = field<int>(f[2]);
    r.dt = field<double>(f[3]);
    r.cpu_ns_min = field<std::int64_t>(f[4]);
    r.cpu_ns_cumulative = field<std::int64_t>(f[5]);
    out.push_back(r);
  }
  return out;
}

Vector restrict_to_coarse(const Mesh& fine, const Mesh& coarse, const Vector& fine_field) {
  if (coarse.num_vertices() > fine.num_vertices() ||
      fine_field.size() != static_cast<Eigen::Index>(fine.num_vertices()))
    throw std::invalid_argument("restrict_to_coarse: meshes are not nested");
  for (std::size_t i = 0; i < coarse.num_vertices(); ++i) {
    const auto &a = coarse.vertex(i), &b = fine.vertex(i);
    if (a.x != b.x || a.y != b.y) throw std::invalid_argument("restrict_to_coarse: meshes are not nested");
  }
  return fine_field.head(static_cast<Eigen::Index>(coarse.num_vertices()));
}

EnsembleSummary summarise(const Simulation& sim, const EnsembleResult& result) {
  return {sim.spec().mesh_level, sim.gd_ptr(), result.mean_zeta, result.mean_xi};
}

std::vector<ReferenceError> reference_errors(const std::vector<EnsembleSummary>& coarse,
                                             const EnsembleSummary& reference) {
  std::vector<ReferenceError> out;
  const Mesh& fine = reference.gd->mesh();
  for (const auto& c : coarse) {
    const GradientDiscretisation& gd = *c.gd;
    const Vector ref_zeta = restrict_to_coarse(fine, gd.mesh(), reference.mean_zeta);
    const Vector ref_xi = restrict_to_coarse(fine, gd.mesh(), reference.mean_xi);
    const ErrorNorms z = relative_errors(gd, ref_zeta, c.mean_zeta);
    const ErrorNorms x = relative_errors(gd, ref_xi, c.mean_xi);
    out.push_back({c.mesh_level, z.E_zeta, z.E_grad_zeta, x.E_zeta});
  }
  return out;
}

}  // namespace stefan
