#pragma once

#include <cstddef>
#include <span>

// Dense inner loops of the dual optimizer. Every kernel has a scalar
// reference implementation; vector variants (AVX2+FMA on x86-64, NEON on
// AArch64) are selected once at runtime. Results of the vector variants may
// differ from the reference in the last bits because the summation order
// differs, never more.
//
// Set MIXOPT_ISA=scalar in the environment to force the reference path.

namespace mixopt::kernels {

enum class Isa { Scalar, Avx2, Neon };

const char* isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  // sum_k a[k] * b[k]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[k] += alpha * x[k]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // sum_k |min(v[k], 0)|
  double (*negative_mass)(const double* v, std::size_t n);
  // sum_k values[k] * [selector[k] < 0]
  double (*sum_where_negative)(const double* values, const double* selector, std::size_t n);
  // y = M x with M column-major (rows x cols)
  void (*gemv_colmajor)(const double* m, std::size_t rows, std::size_t cols, const double* x,
                        double* y);
};

/// The table for one ISA; throws InvalidInput when the ISA was not compiled in
/// or the CPU lacks it.
const KernelTable& table(Isa isa);
bool available(Isa isa);
Isa best_available();

/// Table chosen at first use (best available, or MIXOPT_ISA override).
const KernelTable& active();

namespace detail {
extern const KernelTable kScalarTable;
#if defined(MIXOPT_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(MIXOPT_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif
}  // namespace detail

// Span wrappers over the active table.

double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double negative_mass(std::span<const double> v);
double sum_where_negative(std::span<const double> values, std::span<const double> selector);
void gemv_colmajor(std::span<const double> m, std::size_t rows, std::size_t cols,
                   std::span<const double> x, std::span<double> y);

}  // namespace mixopt::kernels
