// Error measurement, sensitivity sweeps, timing and reference-mesh
// comparisons for the deterministic and stochastic Stefan tests.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "stefan/exact_solution.hpp"
#include "stefan/gradient_discretisation.hpp"
#include "stefan/timestepper.hpp"

namespace stefan {

struct ErrorNorms {
  double E_zeta = 0.0;
  double E_grad_zeta = 0.0;
};

/// ||ref - computed|| / ||ref|| in the lumped L2 norm and the H1 seminorm.
/// A zero reference norm gives the absolute error.
ErrorNorms relative_errors(const GradientDiscretisation& gd, const Vector& reference, const Vector& computed);

/// Errors of a computed zeta field against the interpolated exact zeta at time t.
ErrorNorms error_norms_from_zeta(const GradientDiscretisation& gd, const Vector& zeta_computed, double t);
/// Same with zeta applied vertex-wise to the computed u.
ErrorNorms error_norms(const GradientDiscretisation& gd, const Nonlinearity& zeta, const Vector& u, double t);

struct ErrorRecord {
  Strategy strategy = Strategy::newton;
  int mesh_level = 1;
  double h = 0.0;
  double dt = 0.0;
  double C_tol = 0.0;
  double C_eps = 0.0;
  double tol = 0.0;
  double epsilon = 0.0;
  double E_zeta = 0.0;
  double E_grad_zeta = 0.0;
  std::size_t iters_total = 0;
  std::size_t flagged_steps = 0;
  std::int64_t cpu_ns_min = 0;

  bool operator==(const ErrorRecord&) const = default;
};

/// Runs a deterministic spec and records the final-time errors. With
/// repetitions > 0 the spec is run that many times and cpu_ns_min is the
/// minimum wall time; with 0 it runs once and cpu_ns_min stays 0, which keeps
/// sweep output reproducible byte for byte.
ErrorRecord error_record(const RunSpec& spec, std::size_t repetitions = 0);

struct SweepGrid {
  std::vector<Strategy> strategies{Strategy::newton, Strategy::l_scheme, Strategy::r_scheme};
  std::vector<int> levels{1, 2};
  /// Time steps per unit time; dt = 1/steps.
  std::vector<std::size_t> steps{10, 100};
  std::vector<double> C_tol{1, 10, 100, 1000, 10000};
  std::vector<double> C_eps{1, 10};
  /// Timing repetitions per grid point, 0 disables timing.
  std::size_t repetitions = 0;
};

/// One record per grid point, ordered strategy, level, steps, C_tol, C_eps.
/// C_eps only varies for regularised strategies (others use the first entry).
std::vector<ErrorRecord> sensitivity_sweep(const SweepGrid& grid, std::size_t threads = 1);

inline constexpr const char* kSweepHeader =
    "strategy,mesh_level,h,dt,C_tol,C_eps,tol,epsilon,E_zeta,E_grad_zeta,iters_total,flagged_steps,cpu_ns_min";
void write_sweep_csv(std::ostream& os, const std::vector<ErrorRecord>& records);
std::vector<ErrorRecord> read_sweep_csv(std::istream& is);

/// Minimum over `repetitions` of the wall time of Simulation setup plus one
/// realisation (mesh construction excluded).
std::int64_t time_run(const RunSpec& spec, std::size_t repetitions);

struct BenchRecord {
  Strategy strategy = Strategy::newton;
  std::size_t sn = 0;
  int mesh_level = 1;
  double dt = 0.0;
  std::int64_t cpu_ns_min = 0;
  std::int64_t cpu_ns_cumulative = 0;

  bool operator==(const BenchRecord&) const = default;
};

struct BenchPlan {
  std::vector<Strategy> strategies{Strategy::newton, Strategy::l_scheme, Strategy::r_scheme};
  std::vector<int> levels{1, 2, 3, 4};
  std::vector<std::size_t> steps{1, 10, 100, 1000};
  double C_tol = 1.0;
  double C_eps = 1.0;
  std::size_t repetitions = 10;
};

/// Simulation S1, S2, ... runs meshes coarse to fine, each over the steps
/// ladder; cumulative times are per strategy. Runs sequentially.
std::vector<BenchRecord> bench(const BenchPlan& plan);

inline constexpr const char* kBenchHeader = "strategy,sn,mesh_level,dt,cpu_ns_min,cpu_ns_cumulative";
void write_bench_csv(std::ostream& os, const std::vector<BenchRecord>& records);
std::vector<BenchRecord> read_bench_csv(std::istream& is);

/// Values of a fine-mesh field at the vertices of a nested coarse mesh
/// (coarse vertices are the leading fine vertices). Throws
/// std::invalid_argument when the meshes are not nested.
Vector restrict_to_coarse(const Mesh& fine, const Mesh& coarse, const Vector& fine_field);

struct EnsembleSummary {
  int mesh_level = 0;
  GdPtr gd;
  Vector mean_zeta;
  Vector mean_xi;
};
EnsembleSummary summarise(const Simulation& sim, const EnsembleResult& result);

struct ReferenceError {
  int mesh_level = 0;
  double E_zeta = 0.0;
  double E_grad_zeta = 0.0;
  double E_xi = 0.0;
};

/// Relative errors of each coarse ensemble mean against the reference mean
/// restricted to the coarse vertices.
std::vector<ReferenceError> reference_errors(const std::vector<EnsembleSummary>& coarse,
                                             const EnsembleSummary& reference);

}  // namespace stefan
