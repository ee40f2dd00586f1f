// Vertex-wise arithmetic kernels with a scalar reference path and an AVX2
// path selected at runtime.
//
// Element-wise kernels (pwl_eval, pwl_slope, defect, axpy, scaled_product)
// perform the same operations in the same order on every path and are
// bit-identical across ISAs. Reductions (weighted_sum_squares, weighted_dot)
// use lane-wise partial sums on the vector path and agree with the scalar
// reference to round-off only.

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace stefan::simd {

enum class Isa { scalar, avx2 };

/// Piecewise-linear function described by sorted breakpoints b_0 < ... < b_{m-1},
/// the function values at those breakpoints and m+1 slopes. Piece 0 lies left
/// of b_0; piece k (k >= 1) starts at b_{k-1}. At a breakpoint the right-hand
/// piece is used.
struct PiecewiseLinearView {
  std::span<const double> breakpoints;
  std::span<const double> values;
  std::span<const double> slopes;
};

namespace scalar {
void pwl_eval(const PiecewiseLinearView& f, std::span<const double> x, std::span<double> y);
void pwl_slope(const PiecewiseLinearView& f, std::span<const double> x, std::span<double> y);
double weighted_sum_squares(std::span<const double> w, std::span<const double> x);
double weighted_dot(std::span<const double> w, std::span<const double> x, std::span<const double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);
void defect(std::span<const double> mass, std::span<const double> u, double dt,
            std::span<const double> k_zeta, std::span<const double> rhs, std::span<double> out);
void scaled_product(double sigma, std::span<const double> a, std::span<const double> b,
                    std::span<double> out);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define STEFAN_HAVE_AVX2_KERNELS 1
namespace avx2 {
void pwl_eval(const PiecewiseLinearView& f, std::span<const double> x, std::span<double> y);
void pwl_slope(const PiecewiseLinearView& f, std::span<const double> x, std::span<double> y);
double weighted_sum_squares(std::span<const double> w, std::span<const double> x);
double weighted_dot(std::span<const double> w, std::span<const double> x, std::span<const double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);
void defect(std::span<const double> mass, std::span<const double> u, double dt,
            std::span<const double> k_zeta, std::span<const double> rhs, std::span<double> out);
void scaled_product(double sigma, std::span<const double> a, std::span<const double> b,
                    std::span<double> out);
}  // namespace avx2
#else
#define STEFAN_HAVE_AVX2_KERNELS 0
#endif

bool isa_available(Isa isa);
Isa active_isa();
/// Overrides the detected ISA (process-wide). Throws if the ISA is unavailable.
void force_isa(Isa isa);
std::string_view isa_name(Isa isa);

// Dispatched entry points.
void pwl_eval(const PiecewiseLinearView& f, std::span<const double> x, std::span<double> y);
void pwl_slope(const PiecewiseLinearView& f, std::span<const double> x, std::span<double> y);
/// sum_i w_i * x_i^2
double weighted_sum_squares(std::span<const double> w, std::span<const double> x);
/// sum_i w_i * x_i * y_i
double weighted_dot(std::span<const double> w, std::span<const double> x, std::span<const double> y);
/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
/// out = mass .* u + dt * k_zeta - rhs
void defect(std::span<const double> mass, std::span<const double> u, double dt,
            std::span<const double> k_zeta, std::span<const double> rhs, std::span<double> out);
/// out = sigma * a .* b
void scaled_product(double sigma, std::span<const double> a, std::span<const double> b,
                    std::span<double> out);

}  // namespace stefan::simd
