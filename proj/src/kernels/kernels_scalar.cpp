#include "mixopt/kernels.hpp"

namespace mixopt::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

double negative_mass_scalar(const double* v, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (v[k] < 0.0) s -= v[k];
  return s;
}

double sum_where_negative_scalar(const double* values, const double* selector, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (selector[k] < 0.0) s += values[k];
  return s;
}

void gemv_colmajor_scalar(const double* m, std::size_t rows, std::size_t cols, const double* x,
                          double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = 0.0;
  for (std::size_t c = 0; c < cols; ++c) {
    const double* col = m + c * rows;
    const double xc = x[c];
    for (std::size_t r = 0; r < rows; ++r) y[r] += xc * col[r];
  }
}

}  // namespace

namespace detail {
const KernelTable kScalarTable{
    Isa::Scalar,          dot_scalar, axpy_scalar, negative_mass_scalar, sum_where_negative_scalar,
    gemv_colmajor_scalar,
};
}  // namespace detail

}  // namespace mixopt::kernels
