// stefan: run, sweep, bench, reference, mesh and verify subcommands.
//
// Exit status: 0 success, 1 failed check or strict-mode non-convergence,
// 2 configuration or usage error.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stefan/experiments.hpp"
#include "stefan/simd/kernels.hpp"
#include "stefan/verify.hpp"

namespace fs = std::filesystem;
using namespace stefan;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kConfig = 2;

std::vector<Strategy> parse_strategies(const std::vector<std::string>& names) {
  std::vector<Strategy> out;
  for (const auto& n : names) out.push_back(parse_strategy(n));
  return out;
}

// Writes to `path`, or stdout when path is empty or "-".
template <class Fn>
void emit(const std::string& path, Fn&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  if (const auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write '" + path + "'");
  write(os);
}

bool deterministic_exact(const RunSpec& s) {
  const NoiseOperator op{s.noise.intensity, s.noise.mode};
  return op.vanishes() && s.boundary == BoundaryData::exact && s.initial == InitialData::exact &&
         s.zeta == ZetaKind::stefan && s.time.t_final <= 1.0;
}

struct RunArgs {
  std::string config;
  std::string out;
  std::size_t threads = 0;
};

int cmd_run(const RunArgs& a) {
  RunSpec spec = load_run_config(a.config);
  if (!a.out.empty()) spec.output_dir = a.out;
  const Simulation sim(spec);
  const EnsembleResult ens = run_ensemble(sim, a.threads);
  const auto& s = sim.solver();

  std::cout << "strategy " << to_string(s.strategy) << ", M" << spec.mesh_level << ", dt " << sim.dt() << ", tol "
            << s.tolerance;
  if (sim.zeta_eps()) std::cout << ", eps " << s.epsilon;
  if (s.strategy != Strategy::newton) std::cout << ", L " << sim.L();
  std::cout << "\nrealisations " << spec.realisations << ", iterations " << ens.total_iterations << ", flagged steps "
            << ens.flagged_steps << ", assemblies " << sim.counters().assembly.load() << ", factorisations "
            << sim.counters().factorisation.load() << ", wall " << ens.wall_ns * 1e-9 << " s\n";
  if (deterministic_exact(spec)) {
    const ErrorNorms e = error_norms_from_zeta(sim.gd(), ens.mean_zeta, spec.time.t_final);
    std::cout << std::setprecision(10) << "E_zeta " << e.E_zeta << ", E_grad_zeta " << e.E_grad_zeta << '\n';
  }

  if (!spec.output_dir.empty()) {
    const fs::path dir(spec.output_dir);
    fs::create_directories(dir);
    const Mesh& mesh = sim.gd().mesh();
    {
      std::ofstream os(dir / "final_u.csv");
      write_field_csv(os, mesh, ens.mean.final_u());
    }
    {
      std::ofstream os(dir / "final_zeta.csv");
      write_field_csv(os, mesh, ens.mean_zeta);
    }
    {
      std::ofstream os(dir / "final_xi.csv");
      write_field_csv(os, mesh, ens.mean_xi);
    }
    {
      std::ofstream os(dir / "solver_report.csv");
      write_solver_report(os, ens.realisations.front().records);
    }
  }
  return spec.strict && ens.flagged_steps > 0 ? kFailed : kOk;
}

struct SweepArgs {
  std::vector<std::string> strategies{"newton", "l_scheme", "r_scheme"};
  std::vector<int> levels{1, 2};
  std::vector<std::size_t> steps{10, 100};
  std::vector<double> C_tol{1, 10, 100, 1000, 10000};
  std::vector<double> C_eps{1, 10};
  std::size_t reps = 0;
  std::size_t threads = 0;
  std::string out;
};

int cmd_sweep(const SweepArgs& a) {
  SweepGrid g;
  g.strategies = parse_strategies(a.strategies);
  g.levels = a.levels;
  g.steps = a.steps;
  g.C_tol = a.C_tol;
  g.C_eps = a.C_eps;
  g.repetitions = a.reps;
  const std::size_t threads = a.reps > 0 ? 1 : (a.threads > 0 ? a.threads : worker_count(1u << 20));
  const auto records = sensitivity_sweep(g, threads);
  emit(a.out, [&](std::ostream& os) { write_sweep_csv(os, records); });
  return kOk;
}

struct BenchArgs {
  std::vector<std::string> strategies{"newton", "l_scheme", "r_scheme"};
  std::vector<int> levels{1, 2, 3, 4};
  std::vector<std::size_t> steps{1, 10, 100, 1000};
  double C_tol = 1.0;
  double C_eps = 1.0;
  std::size_t reps = 10;
  std::string out;
};

int cmd_bench(const BenchArgs& a) {
  BenchPlan p;
  p.strategies = parse_strategies(a.strategies);
  p.levels = a.levels;
  p.steps = a.steps;
  p.C_tol = a.C_tol;
  p.C_eps = a.C_eps;
  p.repetitions = a.reps;
  const auto records = bench(p);
  emit(a.out, [&](std::ostream& os) { write_bench_csv(os, records); });
  return kOk;
}

struct ReferenceArgs {
  std::vector<int> coarse{1, 2};
  int reference = 3;
  std::string strategy = "l_scheme";
  std::size_t steps = 20;
  double T = 0.2;
  std::size_t realisations = 4;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  std::string out;
};

int cmd_reference(const ReferenceArgs& a) {
  auto summary = [&](int level) {
    const Simulation sim(stochastic_spec(level, a.steps, a.T, parse_strategy(a.strategy), a.realisations, a.seed));
    return summarise(sim, run_ensemble(sim, a.threads));
  };
  const EnsembleSummary ref = summary(a.reference);
  std::vector<EnsembleSummary> coarse;
  for (int l : a.coarse) coarse.push_back(summary(l));
  const auto errors = reference_errors(coarse, ref);
  emit(a.out, [&](std::ostream& os) {
    os << "mesh_level,E_zeta,E_grad_zeta,E_xi\n" << std::setprecision(17);
    for (const auto& e : errors) os << e.mesh_level << ',' << e.E_zeta << ',' << e.E_grad_zeta << ',' << e.E_xi << '\n';
  });
  return kOk;
}

struct MeshArgs {
  int level = 1;
  bool check = false;
  std::string dump;
  std::string load;
};

int cmd_mesh(const MeshArgs& a) {
  Mesh mesh = [&] {
    if (a.load.empty()) return generate_mesh(a.level);
    std::ifstream is(a.load);
    if (!is) throw ConfigError("cannot open mesh file '" + a.load + "'");
    return read_mesh(is);
  }();
  if (!a.dump.empty()) emit(a.dump, [&](std::ostream& os) { write_mesh(os, mesh); });
  if (!a.check) return kOk;
  std::cout << mesh.num_cells() << ' ' << mesh.num_edges() << ' ' << mesh.num_vertices() << '\n';
  if (!a.load.empty()) return kOk;
  const auto& r = reference_mesh_counts()[static_cast<std::size_t>(a.level - 1)];
  return mesh.num_cells() == r.cells && mesh.num_edges() == r.edges && mesh.num_vertices() == r.vertices ? kOk
                                                                                                         : kFailed;
}

struct VerifyArgs {
  std::string module = "all";
  std::uint64_t seed = 7;
  std::size_t samples = 100000;
};

int cmd_verify(const VerifyArgs& a) {
  std::cout << "simd " << simd::isa_name(simd::active_isa()) << '\n';
  bool all = true;
  for (const auto& r : run_properties(a.module, {a.seed, a.samples})) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.module << ": " << r.name << " (" << r.detail << ")\n";
    all = all && r.pass;
  }
  return all ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic Stefan problem solvers"};
  app.require_subcommand(1);

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "Run one configuration file");
  c_run->add_option("--config,-c", run.config, "key=value configuration file")->required();
  c_run->add_option("--out", run.out, "Output directory (overrides output.dir)");
  c_run->add_option("--threads", run.threads, "Worker threads (0: STEFAN_THREADS or hardware)");

  SweepArgs sweep;
  auto* c_sweep = app.add_subcommand("sweep", "C_tol x C_eps sensitivity sweep (CSV)");
  c_sweep->add_option("--strategies", sweep.strategies)->delimiter(',');
  c_sweep->add_option("--levels", sweep.levels)->delimiter(',');
  c_sweep->add_option("--steps", sweep.steps, "Steps per unit time")->delimiter(',');
  c_sweep->add_option("--ctol", sweep.C_tol)->delimiter(',');
  c_sweep->add_option("--ceps", sweep.C_eps)->delimiter(',');
  c_sweep->add_option("--reps", sweep.reps, "Timing repetitions (0: no timing)");
  c_sweep->add_option("--threads", sweep.threads);
  c_sweep->add_option("--out,-o", sweep.out, "CSV path (default stdout)");

  BenchArgs bench_args;
  auto* c_bench = app.add_subcommand("bench", "Cumulative CPU time over the mesh and dt ladder (CSV)");
  c_bench->add_option("--strategies", bench_args.strategies)->delimiter(',');
  c_bench->add_option("--levels", bench_args.levels)->delimiter(',');
  c_bench->add_option("--steps", bench_args.steps)->delimiter(',');
  c_bench->add_option("--ctol", bench_args.C_tol);
  c_bench->add_option("--ceps", bench_args.C_eps);
  c_bench->add_option("--reps", bench_args.reps)->check(CLI::PositiveNumber);
  c_bench->add_option("--out,-o", bench_args.out);

  ReferenceArgs ref;
  auto* c_ref = app.add_subcommand("reference", "Stochastic errors against a reference mesh (CSV)");
  c_ref->add_option("--coarse", ref.coarse)->delimiter(',');
  c_ref->add_option("--reference", ref.reference);
  c_ref->add_option("--strategy", ref.strategy);
  c_ref->add_option("--steps", ref.steps);
  c_ref->add_option("--T", ref.T);
  c_ref->add_option("--realisations,-R", ref.realisations);
  c_ref->add_option("--seed", ref.seed);
  c_ref->add_option("--threads", ref.threads);
  c_ref->add_option("--out,-o", ref.out);

  MeshArgs mesh;
  auto* c_mesh = app.add_subcommand("mesh", "Generate, dump, load or check meshes");
  c_mesh->add_option("--level", mesh.level)->check(CLI::Range(1, 6));
  c_mesh->add_flag("--check", mesh.check, "Print 'cells edges vertices' and compare with the table");
  c_mesh->add_option("--dump", mesh.dump, "Write the mesh in text format");
  c_mesh->add_option("--load", mesh.load, "Read a mesh in text format instead of generating one");

  VerifyArgs verify;
  auto* c_verify = app.add_subcommand("verify", "Run the property suite");
  c_verify->add_option("--module", verify.module)->check(CLI::IsMember(property_modules()));
  c_verify->add_option("--seed", verify.seed);
  c_verify->add_option("--samples", verify.samples);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*c_run) return cmd_run(run);
    if (*c_sweep) return cmd_sweep(sweep);
    if (*c_bench) return cmd_bench(bench_args);
    if (*c_ref) return cmd_reference(ref);
    if (*c_mesh) return cmd_mesh(mesh);
    if (*c_verify) return cmd_verify(verify);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  }
  return kOk;
}
