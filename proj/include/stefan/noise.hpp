// Finite-rank Q-Wiener noise.
//
// W(t) = sum_k sqrt(q_k) beta_k(t) phi_k with orthonormal modes phi_k sampled
// at the vertices. Increments are addressed statelessly by
// (seed, realisation, step, k), so realisations can run in any order.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "stefan/gradient_discretisation.hpp"
#include "stefan/nonlinearity.hpp"

namespace stefan {

enum class NoiseMode { multiplicative_zeta, zero };

std::string_view to_string(NoiseMode mode);
/// Throws std::invalid_argument on an unknown name.
NoiseMode parse_noise_mode(std::string_view name);

struct NoiseConfig {
  NoiseMode mode = NoiseMode::multiplicative_zeta;
  std::size_t rank = 9;
  double intensity = 1.0;
  double decay_exponent = 3.0;
};

class QWienerModel {
 public:
  /// `sqrt_eigenvalues` positive and strictly decreasing, one vertex field per
  /// entry in `basis`.
  QWienerModel(GdPtr gd, std::vector<double> sqrt_eigenvalues, std::vector<Vector> basis);

  /// phi_(m,l) = 2 sin(m pi x) sin(l pi y) ordered by m^2 + l^2 (then m),
  /// with q_k = k^(-decay_exponent).
  static QWienerModel laplace_modes(GdPtr gd, std::size_t rank, double decay_exponent = 3.0);

  std::size_t rank() const { return sqrt_q_.size(); }
  const std::vector<double>& sqrt_eigenvalues() const { return sqrt_q_; }
  const std::vector<Vector>& basis_fields() const { return basis_; }
  const Vector& basis(std::size_t k) const { return basis_[k]; }
  /// sum_k q_k
  double trace() const;
  const GdPtr& gd_ptr() const { return gd_; }

 private:
  GdPtr gd_;
  std::vector<double> sqrt_q_;
  std::vector<Vector> basis_;
};

struct WienerIncrement {
  std::vector<double> coefficients;
  std::uint64_t realisation = 0;
  std::uint64_t step_index = 0;
};

/// Standard normal variate addressed by its four counters.
double standard_normal(std::uint64_t seed, std::uint64_t realisation, std::uint64_t step, std::uint64_t k);

/// Coefficient k ~ N(0, q_k dt).
WienerIncrement sample_increment(const QWienerModel& model, std::uint64_t seed, std::uint64_t realisation,
                                 std::uint64_t step, double dt);

struct NoiseOperator {
  double intensity = 1.0;
  NoiseMode mode = NoiseMode::multiplicative_zeta;

  /// True when apply_noise returns zero for every input.
  bool vanishes() const { return mode == NoiseMode::zero || intensity == 0.0; }
};

/// sigma * zeta_values .* sum_k c_k phi_k, written to `out`.
void apply_noise(const NoiseOperator& op, const QWienerModel& model, const Vector& zeta_values,
                 const WienerIncrement& inc, Vector& out);

/// Field form: zeta applied vertex-wise to v.
DiscreteField apply_noise(const NoiseOperator& op, const QWienerModel& model, const Nonlinearity& zeta,
                          const DiscreteField& v, const WienerIncrement& inc);

/// Vertex-wise mean, accumulated in list order as a running mean.
DiscreteField mc_expectation(std::span<const DiscreteField> fields);
Vector mc_expectation(std::span<const Vector> fields);

/// CSV "vertex_index,value".
void write_vertex_csv(std::ostream& os, const Vector& field);

}  // namespace stefan
