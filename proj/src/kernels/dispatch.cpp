#include <cstdlib>
#include <string_view>

#include "mixopt/common.hpp"
#include "mixopt/kernels.hpp"

namespace mixopt::kernels {

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool available(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(MIXOPT_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(MIXOPT_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa best_available() {
  if (available(Isa::Avx2)) return Isa::Avx2;
  if (available(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

const KernelTable& table(Isa isa) {
  if (!available(isa)) throw InvalidInput(std::string("kernel ISA not available: ") + isa_name(isa));
  switch (isa) {
#if defined(MIXOPT_HAVE_AVX2)
    case Isa::Avx2: return detail::kAvx2Table;
#endif
#if defined(MIXOPT_HAVE_NEON)
    case Isa::Neon: return detail::kNeonTable;
#endif
    default: return detail::kScalarTable;
  }
}

namespace {

Isa select_isa() {
  const char* env = std::getenv("MIXOPT_ISA");
  if (env != nullptr) {
    std::string_view want(env);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon})
      if (want == isa_name(isa) && available(isa)) return isa;
  }
  return best_available();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& chosen = table(select_isa());
  return chosen;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("dot: length mismatch");
  return active().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw InvalidInput("axpy: length mismatch");
  active().axpy(alpha, x.data(), y.data(), x.size());
}

double negative_mass(std::span<const double> v) { return active().negative_mass(v.data(), v.size()); }

double sum_where_negative(std::span<const double> values, std::span<const double> selector) {
  if (values.size() != selector.size()) throw InvalidInput("sum_where_negative: length mismatch");
  return active().sum_where_negative(values.data(), selector.data(), values.size());
}

void gemv_colmajor(std::span<const double> m, std::size_t rows, std::size_t cols,
                   std::span<const double> x, std::span<double> y) {
  if (m.size() != rows * cols || x.size() != cols || y.size() != rows)
    throw InvalidInput("gemv_colmajor: dimension mismatch");
  active().gemv_colmajor(m.data(), rows, cols, x.data(), y.data());
}

}  // namespace mixopt::kernels
