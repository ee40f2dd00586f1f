#include "stefan/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "stefan/simd/kernels.hpp"

namespace stefan {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::newton: return "newton";
    case Strategy::l_scheme: return "l_scheme";
    case Strategy::r_scheme: return "r_scheme";
    case Strategy::rgs_inverse: return "rgs_inverse";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "newton" || name == "N") return Strategy::newton;
  if (name == "l_scheme" || name == "L") return Strategy::l_scheme;
  if (name == "r_scheme" || name == "R") return Strategy::r_scheme;
  if (name == "rgs_inverse" || name == "RGS") return Strategy::rgs_inverse;
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

double effective_L(const SolverConfig& config, double L_zeta) {
  if (config.L > 0.0) return config.L;
  switch (config.strategy) {
    case Strategy::l_scheme:
    case Strategy::r_scheme: return L_zeta;
    case Strategy::rgs_inverse:
      if (!(config.epsilon > 0.0)) throw std::invalid_argument("rgs_inverse needs epsilon > 0");
      return 1.0 / config.epsilon;
    case Strategy::newton: return 0.0;
  }
  return 0.0;
}

void validate(const SolverConfig& config, double L_zeta) {
  if (!(config.tolerance > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
  if (config.max_iterations == 0) throw std::invalid_argument("solver max_iterations must be positive");
  if (config.L < 0.0) throw std::invalid_argument("solver L must be nonnegative");
  const bool regularised = config.strategy == Strategy::r_scheme || config.strategy == Strategy::rgs_inverse;
  if (regularised && !(config.epsilon > 0.0))
    throw std::invalid_argument(std::string(to_string(config.strategy)) + " needs epsilon > 0");
  const double L = effective_L(config, L_zeta);
  if ((config.strategy == Strategy::l_scheme || config.strategy == Strategy::r_scheme) && L < 0.5 * L_zeta)
    throw std::invalid_argument("L-scheme needs L >= L_zeta/2");
  if (config.strategy == Strategy::rgs_inverse && L < 1.0 / config.epsilon)
    throw std::invalid_argument("rgs_inverse needs L >= 1/epsilon");
}

namespace {

std::span<const double> cspan(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> mspan(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

SparseMatrix free_operator(const GradientDiscretisation& gd, double a, double b) {
  SparseMatrix A = b * gd.stiffness_free();
  for (Eigen::Index i = 0; i < A.rows(); ++i) A.coeffRef(i, i) += a * gd.lumped_mass_free()[i];
  A.makeCompressed();
  return A;
}

std::int64_t elapsed_ns(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count();
}

void check_sizes(const GradientDiscretisation& gd, const Vector& u, const Vector& rhs) {
  const auto n = static_cast<Eigen::Index>(gd.num_dofs());
  if (u.size() != n || rhs.size() != n) throw std::invalid_argument("solver: vector size mismatch");
}

}  // namespace

LinearBackend::LinearBackend(GdPtr gd, double mass_weight, double stiffness_weight,
                             std::shared_ptr<BackendCounters> counters)
    : gd_(std::move(gd)), mass_weight_(mass_weight), stiffness_weight_(stiffness_weight),
      counters_(counters ? std::move(counters) : std::make_shared<BackendCounters>()) {
  if (!(mass_weight > 0.0) || stiffness_weight < 0.0)
    throw std::invalid_argument("LinearBackend: operator must be positive definite");
  matrix_ = free_operator(*gd_, mass_weight, stiffness_weight);
  ++counters_->assembly;
  factor_.compute(matrix_);
  ++counters_->factorisation;
  if (factor_.info() != Eigen::Success) throw std::runtime_error("LinearBackend: factorisation failed");
}

Vector LinearBackend::solve(const Vector& b) const {
  ++counters_->solve;
  return factor_.solve(b);
}

std::unique_ptr<LinearBackend> make_l_backend(GdPtr gd, double dt, double L, std::shared_ptr<BackendCounters> c) {
  return std::make_unique<LinearBackend>(std::move(gd), 1.0, dt * L, std::move(c));
}

std::unique_ptr<LinearBackend> make_rgs_backend(GdPtr gd, double dt, double L, std::shared_ptr<BackendCounters> c) {
  return std::make_unique<LinearBackend>(std::move(gd), L, dt, std::move(c));
}

NewtonWorkspace::NewtonWorkspace(GdPtr gd, std::shared_ptr<BackendCounters> counters)
    : gd_(std::move(gd)), counters_(counters ? std::move(counters) : std::make_shared<BackendCounters>()) {
  // The free stiffness already stores its diagonal, so its pattern is the
  // pattern of every Newton operator.
  matrix_ = gd_->stiffness_free();
}

void NewtonWorkspace::assemble(const Nonlinearity& zeta, const Vector& u, double dt, NewtonJacobian kind) {
  const GradientDiscretisation& gd = *gd_;
  const SparseMatrix& K = gd.stiffness_free();
  double* val = matrix_.valuePtr();
  const int* outer = matrix_.outerIndexPtr();
  const int* inner = matrix_.innerIndexPtr();

  if (kind == NewtonJacobian::exact) {
    Vector d(u.size());
    zeta.derivative(cspan(u), mspan(d));
    const double* kv = K.valuePtr();
    for (Eigen::Index c = 0; c < matrix_.outerSize(); ++c) {
      const double dc = dt * d[gd.free_dofs()[static_cast<std::size_t>(c)]];
      for (int j = outer[c]; j < outer[c + 1]; ++j) val[j] = kv[j] * dc;
    }
  } else {
    std::fill(val, val + matrix_.nonZeros(), 0.0);
    const Mesh& mesh = gd.mesh();
    for (std::size_t t = 0; t < mesh.num_cells(); ++t) {
      const auto& tri = mesh.triangles()[t];
      const double mean = (u[tri[0]] + u[tri[1]] + u[tri[2]]) / 3.0;
      const double w = dt * zeta.derivative(mean) * gd.cell_areas()[t];
      if (w == 0.0) continue;
      const auto& g = gd.cell_gradients()[t];
      for (int b = 0; b < 3; ++b) {
        const int c = gd.free_index(static_cast<std::size_t>(tri[b]));
        if (c < 0) continue;
        for (int a = 0; a < 3; ++a) {
          const int r = gd.free_index(static_cast<std::size_t>(tri[a]));
          if (r < 0) continue;
          const int* pos = std::lower_bound(inner + outer[c], inner + outer[c + 1], r);
          val[pos - inner] += w * g[a].dot(g[b]);
        }
      }
    }
  }
  for (Eigen::Index c = 0; c < matrix_.outerSize(); ++c) {
    const int* pos = std::lower_bound(inner + outer[c], inner + outer[c + 1], static_cast<int>(c));
    val[pos - inner] += gd.lumped_mass_free()[c];
  }
  ++counters_->assembly;

  if (!analysed_) {
    lu_.analyzePattern(matrix_);
    analysed_ = true;
  }
  lu_.factorize(matrix_);
  ++counters_->factorisation;
  if (lu_.info() != Eigen::Success) throw std::runtime_error("NewtonWorkspace: singular Newton operator");
}

Vector NewtonWorkspace::solve(const Vector& b) {
  ++counters_->solve;
  return lu_.solve(b);
}

double residual_norm(const GradientDiscretisation& gd, const Vector& r) {
  return std::sqrt(simd::weighted_sum_squares(cspan(gd.free_inverse_mass()), cspan(r)));
}

namespace {

// out = M u + dt K zeta(u) - rhs on all vertices; Dirichlet rows are excluded
// from norms and solves by the callers.
void u_defect(const GradientDiscretisation& gd, const Nonlinearity& zeta, const Vector& u, const Vector& rhs,
              double dt, Vector& z, Vector& out) {
  z.resize(u.size());
  zeta.eval(cspan(u), mspan(z));
  const Vector kz = gd.stiffness() * z;
  out.resize(u.size());
  simd::defect(cspan(gd.lumped_mass()), cspan(u), dt, cspan(kz), cspan(rhs), mspan(out));
}

void v_defect(const GradientDiscretisation& gd, const RegularisedNonlinearity& zeta_eps, const Vector& v,
              const Vector& rhs, double dt, Vector& z, Vector& out) {
  z.resize(v.size());
  zeta_eps.inverse(cspan(v), mspan(z));
  const Vector kv = gd.stiffness() * v;
  out.resize(v.size());
  simd::defect(cspan(gd.lumped_mass()), cspan(z), dt, cspan(kv), cspan(rhs), mspan(out));
}

template <class Defect, class Correct>
StepResult iterate(const GradientDiscretisation& gd, const Vector& init, const SolverConfig& config,
                   Defect&& defect, Correct&& correct, const IterateObserver& observer) {
  const auto t0 = std::chrono::steady_clock::now();
  StepResult res;
  res.solution = init;
  Vector& x = res.solution;
  Vector r;
  defect(x, r);
  double norm = residual_norm(gd, r);
  res.residual_history.push_back(norm);
  if (observer) observer(0, x);
  while (norm > config.tolerance && std::isfinite(norm) && res.iterations < config.max_iterations) {
    const Vector delta = correct(x, gd.restrict_free(-r));
    for (std::size_t i = 0; i < gd.free_dofs().size(); ++i)
      x[gd.free_dofs()[i]] += delta[static_cast<Eigen::Index>(i)];
    ++res.iterations;
    defect(x, r);
    norm = residual_norm(gd, r);
    res.residual_history.push_back(norm);
    if (observer) observer(res.iterations, x);
  }
  res.converged = norm <= config.tolerance;
  res.wall_ns = elapsed_ns(t0);
  return res;
}

}  // namespace

Vector residual_vector(const GradientDiscretisation& gd, const Nonlinearity& zeta, const Vector& u,
                       const Vector& rhs, double dt) {
  check_sizes(gd, u, rhs);
  Vector z, out;
  u_defect(gd, zeta, u, rhs, dt, z, out);
  return out.cwiseProduct(gd.free_mask());
}

double residual(const GradientDiscretisation& gd, const Nonlinearity& zeta, const Vector& u, const Vector& rhs,
                double dt) {
  check_sizes(gd, u, rhs);
  Vector z, out;
  u_defect(gd, zeta, u, rhs, dt, z, out);
  return residual_norm(gd, out);
}

double rgs_residual(const GradientDiscretisation& gd, const RegularisedNonlinearity& zeta_eps, const Vector& v,
                    const Vector& rhs, double dt) {
  check_sizes(gd, v, rhs);
  Vector z, out;
  v_defect(gd, zeta_eps, v, rhs, dt, z, out);
  return residual_norm(gd, out);
}

StepResult newton_solve(const GradientDiscretisation& gd, const Nonlinearity& zeta, const Vector& u_init,
                        const Vector& rhs, double dt, const SolverConfig& config, NewtonWorkspace& workspace,
                        const IterateObserver& observer) {
  check_sizes(gd, u_init, rhs);
  Vector z;
  return iterate(
      gd, u_init, config, [&](const Vector& u, Vector& r) { u_defect(gd, zeta, u, rhs, dt, z, r); },
      [&](const Vector& u, const Vector& b) {
        workspace.assemble(zeta, u, dt, config.newton_jacobian);
        return workspace.solve(b);
      },
      observer);
}

StepResult l_scheme_solve(const GradientDiscretisation& gd, const Nonlinearity& zeta, const Vector& u_init,
                          const Vector& rhs, double dt, const SolverConfig& config, const LinearBackend& backend,
                          const IterateObserver& observer) {
  check_sizes(gd, u_init, rhs);
  Vector z;
  return iterate(
      gd, u_init, config, [&](const Vector& u, Vector& r) { u_defect(gd, zeta, u, rhs, dt, z, r); },
      [&](const Vector&, const Vector& b) { return backend.solve(b); }, observer);
}

StepResult r_scheme_solve(const GradientDiscretisation& gd, const RegularisedNonlinearity& zeta_eps,
                          const Vector& u_init, const Vector& rhs, double dt, const SolverConfig& config,
                          const LinearBackend& backend, const IterateObserver& observer) {
  return l_scheme_solve(gd, zeta_eps.regularised(), u_init, rhs, dt, config, backend, observer);
}

StepResult rgs_inverse_solve(const GradientDiscretisation& gd, const RegularisedNonlinearity& zeta_eps,
                             const Vector& v_init, const Vector& rhs, double dt, const SolverConfig& config,
                             const LinearBackend& backend, const IterateObserver& observer) {
  check_sizes(gd, v_init, rhs);
  Vector z;
  return iterate(
      gd, v_init, config, [&](const Vector& v, Vector& r) { v_defect(gd, zeta_eps, v, rhs, dt, z, r); },
      [&](const Vector&, const Vector& b) { return backend.solve(b); }, observer);
}

double contraction_alpha(double L, double L_zeta, double dt, double poincare) {
  if (!(L > 0.0) || !(L_zeta > 0.0) || !(poincare > 0.0) || dt < 0.0)
    throw std::invalid_argument("contraction_alpha: inputs must be positive");
  const double num = L - 1.0 / L_zeta;
  if (num < 0.0) throw std::invalid_argument("contraction_alpha: need L >= 1/L_zeta");
  return num / std::sqrt(L * (L + dt / (poincare * poincare)));
}

void write_solver_report(std::ostream& os, const std::vector<StepRecord>& records) {
  os << "step,iterations,final_residual,assembly_count,factorisation_count,wall_ns\n";
  os << std::setprecision(17);
  for (const auto& r : records)
    os << r.step << ',' << r.iterations << ',' << r.final_residual << ',' << r.assembly_count << ','
       << r.factorisation_count << ',' << r.wall_ns << '\n';
}

std::vector<StepRecord> read_solver_report(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "step,iterations,final_residual,assembly_count,factorisation_count,wall_ns")
    throw std::runtime_error("read_solver_report: unexpected header");
  std::vector<StepRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    StepRecord r;
    char c1, c2, c3, c4, c5;
    if (!(ls >> r.step >> c1 >> r.iterations >> c2 >> r.final_residual >> c3 >> r.assembly_count >> c4 >>
          r.factorisation_count >> c5 >> r.wall_ns))
      throw std::runtime_error("read_solver_report: malformed line '" + line + "'");
    out.push_back(r);
  }
  return out;
}

}  // namespace stefan
