// AVX2 kernels. Only the kernel bodies carry the avx2 target attribute; the
// translation unit itself is compiled for the baseline ISA.

#include "stefan/simd/kernels.hpp"

#if STEFAN_HAVE_AVX2_KERNELS

#include <immintrin.h>

#define STEFAN_AVX2 __attribute__((target("avx2")))

namespace stefan::simd::avx2 {

namespace {

STEFAN_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

STEFAN_AVX2 void pwl_eval(const PiecewiseLinearView& f, std::span<const double> x,
                          std::span<double> y) {
  const std::size_t m = f.breakpoints.size();
  const double* bp = f.breakpoints.data();
  const double* val = f.values.data();
  const double* sl = f.slopes.data();
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x.data() + i);
    __m256d anchor = _mm256_set1_pd(bp[0]);
    __m256d value = _mm256_set1_pd(val[0]);
    __m256d slope = _mm256_set1_pd(sl[0]);
    for (std::size_t k = 0; k < m; ++k) {
      const __m256d b = _mm256_set1_pd(bp[k]);
      const __m256d mask = _mm256_cmp_pd(xv, b, _CMP_GE_OQ);
      anchor = _mm256_blendv_pd(anchor, b, mask);
      value = _mm256_blendv_pd(value, _mm256_set1_pd(val[k]), mask);
      slope = _mm256_blendv_pd(slope, _mm256_set1_pd(sl[k + 1]), mask);
    }
    const __m256d r = _mm256_add_pd(value, _mm256_mul_pd(slope, _mm256_sub_pd(xv, anchor)));
    _mm256_storeu_pd(y.data() + i, r);
  }
  if (i < n) scalar::pwl_eval(f, x.subspan(i), y.subspan(i));
}

STEFAN_AVX2 void pwl_slope(const PiecewiseLinearView& f, std::span<const double> x,
                           std::span<double> y) {
  const std::size_t m = f.breakpoints.size();
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x.data() + i);
    __m256d slope = _mm256_set1_pd(f.slopes[0]);
    for (std::size_t k = 0; k < m; ++k) {
      const __m256d mask = _mm256_cmp_pd(xv, _mm256_set1_pd(f.breakpoints[k]), _CMP_GE_OQ);
      slope = _mm256_blendv_pd(slope, _mm256_set1_pd(f.slopes[k + 1]), mask);
    }
    _mm256_storeu_pd(y.data() + i, slope);
  }
  if (i < n) scalar::pwl_slope(f, x.subspan(i), y.subspan(i));
}

STEFAN_AVX2 double weighted_sum_squares(std::span<const double> w, std::span<const double> x) {
  const std::size_t n = x.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x.data() + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(w.data() + i), _mm256_mul_pd(xv, xv)));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * (x[i] * x[i]);
  return s;
}

STEFAN_AVX2 double weighted_dot(std::span<const double> w, std::span<const double> x,
                                std::span<const double> y) {
  const std::size_t n = x.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xy = _mm256_mul_pd(_mm256_loadu_pd(x.data() + i), _mm256_loadu_pd(y.data() + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(w.data() + i), xy));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * (x[i] * y[i]);
  return s;
}

STEFAN_AVX2 void axpy(double a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_add_pd(_mm256_loadu_pd(y.data() + i),
                                    _mm256_mul_pd(av, _mm256_loadu_pd(x.data() + i)));
    _mm256_storeu_pd(y.data() + i, r);
  }
  for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

STEFAN_AVX2 void defect(std::span<const double> mass, std::span<const double> u, double dt,
                        std::span<const double> k_zeta, std::span<const double> rhs,
                        std::span<double> out) {
  const std::size_t n = u.size();
  const __m256d dtv = _mm256_set1_pd(dt);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mu = _mm256_mul_pd(_mm256_loadu_pd(mass.data() + i), _mm256_loadu_pd(u.data() + i));
    const __m256d dk = _mm256_mul_pd(dtv, _mm256_loadu_pd(k_zeta.data() + i));
    _mm256_storeu_pd(out.data() + i, _mm256_sub_pd(_mm256_add_pd(mu, dk), _mm256_loadu_pd(rhs.data() + i)));
  }
  for (; i < n; ++i) out[i] = (mass[i] * u[i] + dt * k_zeta[i]) - rhs[i];
}

STEFAN_AVX2 void scaled_product(double sigma, std::span<const double> a, std::span<const double> b,
                                std::span<double> out) {
  const std::size_t n = a.size();
  const __m256d sv = _mm256_set1_pd(sigma);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_mul_pd(_mm256_mul_pd(sv, _mm256_loadu_pd(a.data() + i)),
                                    _mm256_loadu_pd(b.data() + i));
    _mm256_storeu_pd(out.data() + i, r);
  }
  for (; i < n; ++i) out[i] = (sigma * a[i]) * b[i];
}

}  // namespace stefan::simd::avx2

#endif
