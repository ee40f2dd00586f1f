// Monotone piecewise-linear nonlinearities: the Stefan zeta, its
// regularisation zeta_eps = int_0^u max(eps, zeta'(s)) ds, the inverse of the
// regularised function and the primitive Xi(v) = int_0^v zeta(s) ds.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stefan/simd/kernels.hpp"

namespace stefan {

/// Continuous piecewise-linear function with f(0) = 0, stored as sorted
/// breakpoints plus one slope per piece. Derivatives at breakpoints take the
/// right-hand limit.
class PiecewiseLinear {
 public:
  /// `slopes.size()` must be `breakpoints.size() + 1`; breakpoints strictly
  /// increasing. An empty breakpoint list describes a linear function.
  PiecewiseLinear(std::vector<double> breakpoints, std::vector<double> slopes);

  double operator()(double x) const;
  double derivative(double x) const;
  /// int_0^x f(s) ds, exact.
  double primitive(double x) const;

  /// Vectorised evaluation (dispatched SIMD kernel).
  void eval(std::span<const double> x, std::span<double> y) const;
  void derivative(std::span<const double> x, std::span<double> y) const;

  double max_slope() const;
  double min_slope() const;
  bool strictly_increasing() const { return min_slope() > 0.0; }

  /// Inverse function; requires every slope to be positive.
  PiecewiseLinear inverse() const;

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& slopes() const { return slopes_; }
  const std::vector<double>& values() const { return values_; }

  simd::PiecewiseLinearView view() const { return {breakpoints_, values_, slopes_}; }

 private:
  std::size_t piece(double x) const;

  std::vector<double> breakpoints_;
  std::vector<double> slopes_;
  std::vector<double> values_;
};

/// Non-decreasing Lipschitz nonlinearity zeta with zeta(0) = 0.
class Nonlinearity {
 public:
  Nonlinearity(std::string name, PiecewiseLinear f);

  double eval(double u) const { return f_(u); }
  double operator()(double u) const { return f_(u); }
  double derivative(double u) const { return f_.derivative(u); }
  double primitive(double v) const { return f_.primitive(v); }
  double lipschitz() const { return lipschitz_; }

  void eval(std::span<const double> u, std::span<double> out) const { f_.eval(u, out); }
  void derivative(std::span<const double> u, std::span<double> out) const { f_.derivative(u, out); }

  const PiecewiseLinear& function() const { return f_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  PiecewiseLinear f_;
  double lipschitz_;
};

/// zeta_eps together with its inverse. The Lipschitz constant is inherited
/// from the base nonlinearity.
class RegularisedNonlinearity {
 public:
  RegularisedNonlinearity(Nonlinearity regularised, PiecewiseLinear inverse, double epsilon);

  const Nonlinearity& regularised() const { return reg_; }
  const PiecewiseLinear& inverse_function() const { return inv_; }

  double eval(double u) const { return reg_.eval(u); }
  double derivative(double u) const { return reg_.derivative(u); }
  double primitive(double v) const { return reg_.primitive(v); }
  double inverse(double v) const { return inv_(v); }
  double lipschitz() const { return reg_.lipschitz(); }
  double epsilon() const { return epsilon_; }

  void eval(std::span<const double> u, std::span<double> out) const { reg_.eval(u, out); }
  void inverse(std::span<const double> v, std::span<double> out) const { inv_.eval(v, out); }

 private:
  Nonlinearity reg_;
  PiecewiseLinear inv_;
  double epsilon_;
};

/// zeta(u) = u (u <= 0), 0 (0 <= u <= 1), u - 1 (u >= 1). Lipschitz constant 1.
Nonlinearity stefan_zeta();

/// zeta(u) = u; turns every scheme into the implicit Euler heat equation.
Nonlinearity identity_zeta();

/// zeta_eps(u) = int_0^u max(eps, zeta'(s)) ds. Requires 0 < epsilon <= L_zeta.
RegularisedNonlinearity regularise(const Nonlinearity& base, double epsilon);

/// Xi(v) = int_0^v zeta(s) ds.
double xi(const Nonlinearity& base, double v);

/// Outcome of a sampled inequality check; on failure the first violating
/// pair is recorded.
struct InequalityCheck {
  bool holds = true;
  std::size_t samples = 0;
  double a = 0.0;
  double b = 0.0;
  double L = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// |L(a-b) - (zeta(a) - zeta(b))| <= L|a-b| at one pair. Needs L >= L_zeta/2.
InequalityCheck linearisation_bound_at(const PiecewiseLinear& zeta, double L, double a, double b);

/// |L(a-b) - (Z(a) - Z(b))| <= (L - L_Z)|a-b| at one pair, for Z with
/// derivative in [L_Z, L].
InequalityCheck shifted_linearisation_bound_at(const PiecewiseLinear& Z, double L_Z, double L,
                                               double a, double b);

/// Samples `samples` pairs uniformly in [-range, range]^2 and L uniformly in
/// [L_min, L_max]; checks the first bound for every sample.
InequalityCheck check_linearisation_bound(const Nonlinearity& zeta, double L_min, double L_max,
                                          std::size_t samples, std::uint64_t seed,
                                          double range = 5.0);

/// Same sampling as above for the second bound, with Z = zeta_eps^{-1},
/// L_Z = 1/L_zeta and L in [L_min, L_max] (L_min >= 1/eps).
InequalityCheck check_inverse_linearisation_bound(const RegularisedNonlinearity& zeta_eps,
                                                  double L_min, double L_max, std::size_t samples,
                                                  std::uint64_t seed, double range = 5.0);

}  // namespace stefan
