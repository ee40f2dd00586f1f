// Nonlinear solvers for one implicit Euler step.
//
// Algorithm 1 step (u-form), on free vertices:
//   R(u) = M u + dt K zeta(u) - rhs = 0
// Algorithm 2 step (v-form):
//   R(v) = M Z(v) + dt K v - rhs = 0,  Z = zeta_eps^{-1}
// Every strategy updates the iterate by a correction A d = -R restricted to
// free vertices; Dirichlet values in the initial iterate are kept.
//   newton       A = M + dt K diag(zeta'(u))   (assembled and factorised per iteration)
//   l_scheme     A = M + dt L K                (factorised once)
//   r_scheme     as l_scheme with zeta_eps
//   rgs_inverse  A = L M + dt K                (factorised once)
//
// Residual norms are the lumped L2 norm of M^{-1} R over free vertices,
// sqrt(sum_i R_i^2 / m_i).

#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string_view>
#include <vector>

#include <Eigen/SparseLU>

#include "stefan/gradient_discretisation.hpp"
#include "stefan/nonlinearity.hpp"

namespace stefan {

enum class Strategy { newton, l_scheme, r_scheme, rgs_inverse };

std::string_view to_string(Strategy s);
/// Accepts "newton", "l_scheme", "r_scheme", "rgs_inverse" and the short
/// forms "N", "L", "R", "RGS". Throws std::invalid_argument otherwise.
Strategy parse_strategy(std::string_view name);

/// Per-triangle weights for the Newton operator.
enum class NewtonJacobian {
  /// K diag(zeta'(u)): the derivative of the discrete residual.
  exact,
  /// Stiffness weighted per triangle by zeta' at the mean vertex value.
  cell_average,
};

struct SolverConfig {
  Strategy strategy = Strategy::l_scheme;
  /// 0 selects the default: L_zeta for l_scheme and r_scheme, 1/epsilon for
  /// rgs_inverse. Unused by newton.
  double L = 0.0;
  double epsilon = 0.0;
  double tolerance = 1e-6;
  std::size_t max_iterations = 500;
  NewtonJacobian newton_jacobian = NewtonJacobian::exact;
};

/// L actually used by `config` for a nonlinearity with Lipschitz constant L_zeta.
double effective_L(const SolverConfig& config, double L_zeta);

/// Throws std::invalid_argument when the admissibility bound of the strategy
/// fails (l/r: L >= L_zeta/2; rgs_inverse: L >= 1/epsilon; r/rgs: epsilon > 0).
void validate(const SolverConfig& config, double L_zeta);

struct BackendCounters {
  std::atomic<std::size_t> assembly{0};
  std::atomic<std::size_t> factorisation{0};
  std::atomic<std::size_t> solve{0};
};

/// Fixed SPD operator a M_ff + b K_ff, assembled and factorised on
/// construction. Solves are const and safe to call concurrently.
class LinearBackend {
 public:
  LinearBackend(GdPtr gd, double mass_weight, double stiffness_weight,
                std::shared_ptr<BackendCounters> counters = nullptr);

  /// Free-vertex solve.
  Vector solve(const Vector& b) const;
  const SparseMatrix& matrix() const { return matrix_; }
  double mass_weight() const { return mass_weight_; }
  double stiffness_weight() const { return stiffness_weight_; }
  const BackendCounters& counters() const { return *counters_; }
  const std::shared_ptr<BackendCounters>& counters_ptr() const { return counters_; }

 private:
  GdPtr gd_;
  double mass_weight_, stiffness_weight_;
  std::shared_ptr<BackendCounters> counters_;
  SparseMatrix matrix_;
  Eigen::SimplicialLDLT<SparseMatrix> factor_;
};

/// Backend for l_scheme / r_scheme: M + dt L K.
std::unique_ptr<LinearBackend> make_l_backend(GdPtr gd, double dt, double L,
                                              std::shared_ptr<BackendCounters> counters = nullptr);
/// Backend for rgs_inverse: L M + dt K.
std::unique_ptr<LinearBackend> make_rgs_backend(GdPtr gd, double dt, double L,
                                                std::shared_ptr<BackendCounters> counters = nullptr);

/// Newton operator storage: the sparsity pattern is analysed once, values are
/// refilled and refactorised each iteration. One instance per worker.
class NewtonWorkspace {
 public:
  explicit NewtonWorkspace(GdPtr gd, std::shared_ptr<BackendCounters> counters = nullptr);

  /// Assembles and factorises M_ff + dt * (Jacobian of K zeta at u).
  void assemble(const Nonlinearity& zeta, const Vector& u, double dt, NewtonJacobian kind);
  Vector solve(const Vector& b);
  const SparseMatrix& matrix() const { return matrix_; }
  const BackendCounters& counters() const { return *counters_; }
  const std::shared_ptr<BackendCounters>& counters_ptr() const { return counters_; }

 private:
  GdPtr gd_;
  std::shared_ptr<BackendCounters> counters_;
  SparseMatrix matrix_;
  Eigen::SparseLU<SparseMatrix> lu_;
  bool analysed_ = false;
};

struct StepResult {
  /// Values on all vertices (Dirichlet entries equal those of the initial iterate).
  Vector solution;
  std::size_t iterations = 0;
  /// Residual of the initial iterate followed by one entry per iteration.
  std::vector<double> residual_history;
  bool converged = false;
  std::int64_t wall_ns = 0;

  double final_residual() const { return residual_history.empty() ? 0.0 : residual_history.back(); }
};

/// Called with (iteration index, iterate); index 0 is the initial iterate.
using IterateObserver = std::function<void(std::size_t, const Vector&)>;

/// Residual of the u-form system.
double residual(const GradientDiscretisation& gd, const Nonlinearity& zeta, const Vector& u, const Vector& rhs,
                double dt);
/// Defect vector M u + dt K zeta(u) - rhs on all vertices (Dirichlet rows zeroed).
Vector residual_vector(const GradientDiscretisation& gd, const Nonlinearity& zeta, const Vector& u,
                       const Vector& rhs, double dt);
/// Residual of the v-form system.
double rgs_residual(const GradientDiscretisation& gd, const RegularisedNonlinearity& zeta_eps, const Vector& v,
                    const Vector& rhs, double dt);
/// Lumped L2 norm of M^{-1} r over free vertices.
double residual_norm(const GradientDiscretisation& gd, const Vector& r);

StepResult newton_solve(const GradientDiscretisation& gd, const Nonlinearity& zeta, const Vector& u_init,
                        const Vector& rhs, double dt, const SolverConfig& config, NewtonWorkspace& workspace,
                        const IterateObserver& observer = {});

StepResult l_scheme_solve(const GradientDiscretisation& gd, const Nonlinearity& zeta, const Vector& u_init,
                          const Vector& rhs, double dt, const SolverConfig& config, const LinearBackend& backend,
                          const IterateObserver& observer = {});

StepResult r_scheme_solve(const GradientDiscretisation& gd, const RegularisedNonlinearity& zeta_eps,
                          const Vector& u_init, const Vector& rhs, double dt, const SolverConfig& config,
                          const LinearBackend& backend, const IterateObserver& observer = {});

StepResult rgs_inverse_solve(const GradientDiscretisation& gd, const RegularisedNonlinearity& zeta_eps,
                             const Vector& v_init, const Vector& rhs, double dt, const SolverConfig& config,
                             const LinearBackend& backend, const IterateObserver& observer = {});

/// (L - 1/L_zeta) / sqrt(L (L + dt / C_D^2)). Throws on nonpositive L,
/// L_zeta or C_D, negative dt, or L < 1/L_zeta.
double contraction_alpha(double L, double L_zeta, double dt, double poincare);

struct StepRecord {
  std::size_t step = 0;
  std::size_t iterations = 0;
  double final_residual = 0.0;
  /// Cumulative counts for the run after this step.
  std::size_t assembly_count = 0;
  std::size_t factorisation_count = 0;
  std::int64_t wall_ns = 0;

  bool operator==(const StepRecord&) const = default;
};

/// CSV "step,iterations,final_residual,assembly_count,factorisation_count,wall_ns".
void write_solver_report(std::ostream& os, const std::vector<StepRecord>& records);
std::vector<StepRecord> read_solver_report(std::istream& is);

}  // namespace stefan
