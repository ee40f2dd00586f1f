// Runtime ISA selection. STEFAN_SIMD=scalar|avx2 overrides detection.

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "stefan/simd/kernels.hpp"

namespace stefan::simd {

namespace {

Isa detect() {
  Isa best = Isa::scalar;
#if STEFAN_HAVE_AVX2_KERNELS
  if (__builtin_cpu_supports("avx2")) best = Isa::avx2;
#endif
  if (const char* env = std::getenv("STEFAN_SIMD")) {
    const std::string req(env);
    if (req == "scalar") return Isa::scalar;
    if (req == "avx2" && best == Isa::avx2) return Isa::avx2;
  }
  return best;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

bool isa_available(Isa isa) {
  if (isa == Isa::scalar) return true;
#if STEFAN_HAVE_AVX2_KERNELS
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (!isa_available(isa)) throw std::runtime_error("requested SIMD ISA is not available on this CPU");
  current().store(isa, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

#if STEFAN_HAVE_AVX2_KERNELS
#define STEFAN_DISPATCH(fn, ...) \
  return active_isa() == Isa::avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__)
#else
#define STEFAN_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

void pwl_eval(const PiecewiseLinearView& f, std::span<const double> x, std::span<double> y) {
  STEFAN_DISPATCH(pwl_eval, f, x, y);
}
void pwl_slope(const PiecewiseLinearView& f, std::span<const double> x, std::span<double> y) {
  STEFAN_DISPATCH(pwl_slope, f, x, y);
}
double weighted_sum_squares(std::span<const double> w, std::span<const double> x) {
  STEFAN_DISPATCH(weighted_sum_squares, w, x);
}
double weighted_dot(std::span<const double> w, std::span<const double> x, std::span<const double> y) {
  STEFAN_DISPATCH(weighted_dot, w, x, y);
}
void axpy(double a, std::span<const double> x, std::span<double> y) { STEFAN_DISPATCH(axpy, a, x, y); }
void defect(std::span<const double> mass, std::span<const double> u, double dt,
            std::span<const double> k_zeta, std::span<const double> rhs, std::span<double> out) {
  STEFAN_DISPATCH(defect, mass, u, dt, k_zeta, rhs, out);
}
void scaled_product(double sigma, std::span<const double> a, std::span<const double> b,
                    std::span<double> out) {
  STEFAN_DISPATCH(scaled_product, sigma, a, b, out);
}

#undef STEFAN_DISPATCH

}  // namespace stefan::simd
