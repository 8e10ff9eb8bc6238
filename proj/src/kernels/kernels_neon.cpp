// AArch64 variants. Advanced SIMD is mandatory on AArch64, so no runtime
// feature probe is needed beyond the build-time architecture check.

#include <arm_neon.h>

#include "mixopt/kernels.hpp"

namespace mixopt::kernels {

namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + k), vld1q_f64(b + k));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + k + 2), vld1q_f64(b + k + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; k < n; ++k) s += a[k] * b[k];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) vst1q_f64(y + k, vfmaq_f64(vld1q_f64(y + k), va, vld1q_f64(x + k)));
  for (; k < n; ++k) y[k] += alpha * x[k];
}

double negative_mass_neon(const double* v, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  float64x2_t acc = zero;
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    float64x2_t x = vld1q_f64(v + k);
    acc = vsubq_f64(acc, vminq_f64(x, zero));
  }
  double s = vaddvq_f64(acc);
  for (; k < n; ++k)
    if (v[k] < 0.0) s -= v[k];
  return s;
}

double sum_where_negative_neon(const double* values, const double* selector, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  float64x2_t acc = zero;
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    uint64x2_t neg = vcltq_f64(vld1q_f64(selector + k), zero);
    float64x2_t picked = vreinterpretq_f64_u64(vandq_u64(neg, vreinterpretq_u64_f64(vld1q_f64(values + k))));
    acc = vaddq_f64(acc, picked);
  }
  double s = vaddvq_f64(acc);
  for (; k < n; ++k)
    if (selector[k] < 0.0) s += values[k];
  return s;
}

void gemv_colmajor_neon(const double* m, std::size_t rows, std::size_t cols, const double* x,
                        double* y) {
  std::size_t r = 0;
  for (; r + 2 <= rows; r += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t c = 0; c < cols; ++c) acc = vfmaq_n_f64(acc, vld1q_f64(m + c * rows + r), x[c]);
    vst1q_f64(y + r, acc);
  }
  for (; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += x[c] * m[c * rows + r];
    y[r] = s;
  }
}

}  // namespace

namespace detail {
const KernelTable kNeonTable{
    Isa::Neon, dot_neon, axpy_neon, negative_mass_neon, sum_where_negative_neon, gemv_colmajor_neon,
};
}  // namespace detail

}  // namespace mixopt::kernels
