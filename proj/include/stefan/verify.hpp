// Property suite: sampled checks of the solver and discretisation
// invariants, shared by the `verify` command and the acceptance runner.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "stefan/timestepper.hpp"

namespace stefan {

struct PropertyResult {
  std::string module;
  std::string name;
  bool pass = false;
  /// Measured quantities, human readable.
  std::string detail;
};

struct PropertyOptions {
  std::uint64_t seed = 7;
  /// Sample count of the appendix inequality checks.
  std::size_t samples = 100000;
};

/// Lemma A.1 for the Stefan zeta with L in [L_zeta/2, 4 L_zeta] and Lemma A.2
/// for zeta_eps^{-1} with L in [1/eps, 4/eps], eps in {0.1, 0.01}.
PropertyResult check_appendix_inequalities(std::uint64_t seed, std::size_t samples);

/// L-scheme on M<level> with `steps` steps over T = 1: the lumped L2 distance
/// of every iterate to the step's fixed point is non-increasing.
PropertyResult check_l_scheme_monotone(int level = 1, std::size_t steps = 10);

/// rgs_inverse with L = 1/eps: every X-norm error ratio against the fixed
/// point stays below alpha + slack.
PropertyResult check_rgs_contraction(int level = 1, std::size_t steps = 10, double epsilon = 0.1,
                                     double slack = 0.02);

/// Newton on the deterministic test: every iterate that crosses the
/// tolerance lands below `floor`.
PropertyResult check_newton_one_step(int level = 2, std::size_t steps = 100, double C_tol = 100.0,
                                     double floor = 1e-12);

/// Counters after a stochastic ensemble run: one assembly and one
/// factorisation for l_scheme and r_scheme, one per iteration for newton.
PropertyResult check_factorise_once(Strategy strategy, int level = 1, std::size_t steps = 10,
                                    std::size_t realisations = 5, std::uint64_t seed = 7);

/// Zero-noise ensemble mean equals the deterministic trajectory bit for bit.
PropertyResult check_zero_noise_ensemble(int level = 2, std::size_t steps = 10, std::size_t realisations = 5);

/// Regenerated increments are identical.
PropertyResult check_increment_reproducibility(std::uint64_t seed);
/// Sample variance of every coefficient within `rel` of q_k dt over `draws` steps.
PropertyResult check_increment_variance(std::uint64_t seed, std::size_t draws = 100000, double rel = 0.03);
/// Correlation of coefficient 1 between realisations r and r+1 below 0.05.
PropertyResult check_increment_independence(std::uint64_t seed, std::size_t pairs = 10000);

/// Ensemble mean identical for 1 and several worker threads.
PropertyResult check_ensemble_thread_invariance(std::uint64_t seed);

/// Table 1 counts for M1..M<max_level> and Euler's formula.
PropertyResult check_mesh_counts(int max_level = 6);

/// Names accepted by run_properties: all, nonlinearity, mesh, noise, solvers, timestepper.
const std::vector<std::string>& property_modules();

/// Runs the properties of one module (or all). Throws std::invalid_argument
/// on an unknown module name.
std::vector<PropertyResult> run_properties(std::string_view module, const PropertyOptions& options = {});

}  // namespace stefan
