// Implicit Euler time loop for the u-form scheme (newton, l_scheme, r_scheme)
// and the v-form regularised scheme (rgs_inverse), single runs and Monte
// Carlo ensembles.
//
// Step n solves the per-step system with right-hand side
//   rhs = M u^{n-1} + M f^{n-1},  f^{n-1} = sigma * z^{n-1} .* sum_k c_k phi_k,
// where z^{n-1} is zeta(u^{n-1}) (newton, l_scheme), zeta_eps(u^{n-1})
// (r_scheme) or v^{n-1} (rgs_inverse, which uses M zeta_eps^{-1}(v^{n-1}) in
// place of M u^{n-1}). Dirichlet values are set before each solve.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stefan/gradient_discretisation.hpp"
#include "stefan/noise.hpp"
#include "stefan/nonlinearity.hpp"
#include "stefan/solvers.hpp"

namespace stefan {

struct TimeGrid {
  double t_final = 1.0;
  std::size_t steps = 100;

  double dt() const { return t_final / static_cast<double>(steps); }
  double time(std::size_t n) const { return t_final * static_cast<double>(n) / static_cast<double>(steps); }
};

enum class ZetaKind { stefan, identity };
/// exact: Dirichlet values from exact_u; homogeneous: zero.
enum class BoundaryData { exact, homogeneous };
/// exact: exact_u at t = 0; eigenmode: sin(pi x) sin(pi y).
enum class InitialData { exact, eigenmode };

struct RunSpec {
  int mesh_level = 2;
  TimeGrid time;
  SolverConfig solver;
  NoiseConfig noise{NoiseMode::zero};
  ZetaKind zeta = ZetaKind::stefan;
  BoundaryData boundary = BoundaryData::exact;
  InitialData initial = InitialData::exact;
  double C_tol = 100.0;
  double C_eps = 1.0;
  /// When true, solver.tolerance and solver.epsilon come from tolerance_policy.
  bool policy = true;
  std::size_t realisations = 1;
  std::uint64_t seed = 0;
  /// Keep only the first and last snapshot.
  bool lean = true;
  /// Exit with status 1 when a step fails to converge.
  bool strict = false;
  std::string output_dir;
};

/// Deterministic Stefan test on M<level> with `steps` steps up to T = 1.
RunSpec deterministic_spec(int level, std::size_t steps, Strategy strategy, double C_tol = 100.0,
                           double C_eps = 1.0);
/// Stochastic Stefan test: homogeneous Dirichlet data, multiplicative noise.
RunSpec stochastic_spec(int level, std::size_t steps, double t_final, Strategy strategy, std::size_t realisations,
                        std::uint64_t seed);

/// Mesh M<level> with every boundary vertex Dirichlet, built once per level
/// and shared.
GdPtr discretisation_for_level(int level);

struct Tolerances {
  double tolerance;
  double epsilon;
};
/// tol = min(dt^2, h^2) / C_tol, epsilon = min(dt, h) / C_eps.
Tolerances tolerance_policy(double dt, double h, double C_tol, double C_eps);

struct Trajectory {
  /// u snapshots: N+1 entries, or u^0 and u^N in lean mode.
  std::vector<Vector> u;
  /// v snapshots for rgs_inverse (same layout as u), empty otherwise.
  std::vector<Vector> v;
  std::vector<StepRecord> records;
  /// Steps that hit max_iterations or diverged (1-based step indices).
  std::vector<std::size_t> flagged;
  std::size_t total_iterations = 0;
  /// Wall time of right-hand side assembly and nonlinear solves.
  std::int64_t solve_ns = 0;

  const Vector& final_u() const { return u.back(); }
};

/// Immutable run context shared by all realisations: discretisation,
/// nonlinearities, resolved solver settings, noise model and the
/// factorised backend of the fixed-operator strategies.
class Simulation {
 public:
  explicit Simulation(const RunSpec& spec);
  Simulation(const RunSpec& spec, GdPtr gd);

  const RunSpec& spec() const { return spec_; }
  const GradientDiscretisation& gd() const { return *gd_; }
  const GdPtr& gd_ptr() const { return gd_; }
  const Nonlinearity& zeta() const { return zeta_; }
  /// Present for r_scheme and rgs_inverse.
  const RegularisedNonlinearity* zeta_eps() const { return zeta_eps_ ? &*zeta_eps_ : nullptr; }
  /// The nonlinearity of the discrete system: zeta_eps for r_scheme and rgs_inverse, zeta otherwise.
  const Nonlinearity& system_zeta() const;
  const SolverConfig& solver() const { return solver_; }
  double L() const { return L_; }
  double dt() const { return spec_.time.dt(); }
  const QWienerModel& noise_model() const { return *noise_; }
  const BackendCounters& counters() const { return *counters_; }
  /// Wall time spent building the fixed-operator backend.
  std::int64_t setup_ns() const { return setup_ns_; }

  Vector initial_u() const;
  /// Writes the Dirichlet values at time t into `u`.
  void apply_boundary(Vector& u, double t) const;

  /// One realisation (index >= 1 for stochastic runs). Thread-safe.
  Trajectory run(std::size_t realisation = 1) const;

  /// zeta(u) with the unregularised zeta, for every strategy (for
  /// rgs_inverse u = zeta_eps^{-1}(v)).
  Vector zeta_field(const Trajectory& traj, std::size_t snapshot) const;
  /// Xi(u) with the unregularised zeta.
  Vector xi_field(const Trajectory& traj, std::size_t snapshot) const;

 private:
  Trajectory run_u_form(std::size_t realisation) const;
  Trajectory run_v_form(std::size_t realisation) const;

  RunSpec spec_;
  GdPtr gd_;
  Nonlinearity zeta_;
  std::optional<RegularisedNonlinearity> zeta_eps_;
  SolverConfig solver_;
  double L_ = 0.0;
  std::unique_ptr<QWienerModel> noise_;
  std::shared_ptr<BackendCounters> counters_;
  std::unique_ptr<LinearBackend> backend_;
  std::int64_t setup_ns_ = 0;
};

/// Algorithm 1 run; rejects rgs_inverse.
Trajectory run_gs(const Simulation& sim, std::size_t realisation = 1);
/// Algorithm 2 run; requires rgs_inverse.
Trajectory run_rgs(const Simulation& sim, std::size_t realisation = 1);

struct EnsembleResult {
  /// Running means over realisations 1..R in index order, per snapshot.
  Trajectory mean;
  Vector mean_zeta;
  Vector mean_xi;
  std::vector<Trajectory> realisations;
  std::size_t total_iterations = 0;
  std::size_t flagged_steps = 0;
  std::int64_t wall_ns = 0;
};

/// Worker count: STEFAN_THREADS if set, else hardware concurrency; capped by R.
std::size_t worker_count(std::size_t realisations);

/// Runs realisations 1..R concurrently; the result does not depend on the
/// execution order. `threads` = 0 uses worker_count.
EnsembleResult run_ensemble(const Simulation& sim, std::size_t threads = 0);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// key=value lines, '#' comments. Throws ConfigError.
RunSpec parse_run_config(std::istream& is);
RunSpec load_run_config(const std::string& path);

/// CSV "vertex_index,x,y,value".
void write_field_csv(std::ostream& os, const Mesh& mesh, const Vector& field);

}  // namespace stefan
