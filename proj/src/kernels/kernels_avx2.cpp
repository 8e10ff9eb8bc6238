// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include "mixopt/kernels.hpp"

namespace mixopt::kernels {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4), acc1);
  }
  for (; k + 4 <= n; k += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) s += a[k] * b[k];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4)
    _mm256_storeu_pd(y + k, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
  for (; k < n; ++k) y[k] += alpha * x[k];
}

double negative_mass_avx2(const double* v, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d x = _mm256_loadu_pd(v + k);
    __m256d neg = _mm256_cmp_pd(x, zero, _CMP_LT_OQ);
    acc = _mm256_sub_pd(acc, _mm256_and_pd(x, neg));
  }
  double s = hsum(acc);
  for (; k < n; ++k)
    if (v[k] < 0.0) s -= v[k];
  return s;
}

double sum_where_negative_avx2(const double* values, const double* selector, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d neg = _mm256_cmp_pd(_mm256_loadu_pd(selector + k), zero, _CMP_LT_OQ);
    acc = _mm256_add_pd(acc, _mm256_and_pd(_mm256_loadu_pd(values + k), neg));
  }
  double s = hsum(acc);
  for (; k < n; ++k)
    if (selector[k] < 0.0) s += values[k];
  return s;
}

void gemv_colmajor_avx2(const double* m, std::size_t rows, std::size_t cols, const double* x,
                        double* y) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t c = 0; c < cols; ++c)
      acc = _mm256_fmadd_pd(_mm256_set1_pd(x[c]), _mm256_loadu_pd(m + c * rows + r), acc);
    _mm256_storeu_pd(y + r, acc);
  }
  for (; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += x[c] * m[c * rows + r];
    y[r] = s;
  }
}

}  // namespace

namespace detail {
const KernelTable kAvx2Table{
    Isa::Avx2, dot_avx2, axpy_avx2, negative_mass_avx2, sum_where_negative_avx2, gemv_colmajor_avx2,
};
}  // namespace detail

}  // namespace mixopt::kernels
