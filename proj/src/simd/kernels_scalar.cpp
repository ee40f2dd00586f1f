// Scalar reference kernels.

#include "stefan/simd/kernels.hpp"

namespace stefan::simd::scalar {

namespace {

// Index of the piece containing x (right-continuous at breakpoints).
inline std::size_t piece_of(std::span<const double> bp, double x) {
  std::size_t piece = 0;
  for (std::size_t k = 0; k < bp.size(); ++k) {
    if (x >= bp[k]) piece = k + 1;
  }
  return piece;
}

}  // namespace

void pwl_eval(const PiecewiseLinearView& f, std::span<const double> x, std::span<double> y) {
  const auto& bp = f.breakpoints;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t p = piece_of(bp, x[i]);
    const std::size_t a = p == 0 ? 0 : p - 1;
    y[i] = f.values[a] + f.slopes[p] * (x[i] - bp[a]);
  }
}

void pwl_slope(const PiecewiseLinearView& f, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f.slopes[piece_of(f.breakpoints, x[i])];
}

double weighted_sum_squares(std::span<const double> w, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * (x[i] * x[i]);
  return s;
}

double weighted_dot(std::span<const double> w, std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * (x[i] * y[i]);
  return s;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = y[i] + a * x[i];
}

void defect(std::span<const double> mass, std::span<const double> u, double dt,
            std::span<const double> k_zeta, std::span<const double> rhs, std::span<double> out) {
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = (mass[i] * u[i] + dt * k_zeta[i]) - rhs[i];
}

void scaled_product(double sigma, std::span<const double> a, std::span<const double> b,
                    std::span<double> out) {
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (sigma * a[i]) * b[i];
}

}  // namespace stefan::simd::scalar
