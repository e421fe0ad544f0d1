#pragma once

// Data-parallel inner loops used by the solvers. Each kernel has a scalar
// reference implementation and, on x86-64, an AVX2 variant. The variant is
// picked once at runtime from CPUID; QUS_SIMD=scalar in the environment forces
// the reference path.
//
// Elementwise kernels are bitwise identical across variants (no FMA
// contraction, identical operation order). Reductions may differ in the last
// few ulps because of the lane-wise summation order.

#include <cstddef>
#include <string_view>

namespace qus::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
  Isa isa;

  // out[i] = sgn(in[i]) * max(|in[i]| - tau, 0)
  void (*soft_threshold)(const double* in, double tau, double* out, std::size_t n);
  // out[i] = max(in[i], lo[i])
  void (*clip_min)(const double* in, const double* lo, double* out, std::size_t n);
  // out[i] = a * in[i]
  void (*scale)(const double* in, double a, double* out, std::size_t n);
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // out[i] = a[i] - b[i]
  void (*subtract)(const double* a, const double* b, double* out, std::size_t n);
  // y[i] += a[i] - b[i]
  void (*accumulate_difference)(const double* a, const double* b, double* y, std::size_t n);
  // out[i] = in[i + 1] - in[i], i < n - 1
  void (*forward_difference)(const double* in, double* out, std::size_t n);
  // Adjoint of forward_difference: in has n - 1 entries, out has n.
  void (*forward_difference_adjoint)(const double* in, double* out, std::size_t n);
  // One depth column of the log-spectral-ratio model:
  // out[i] = (b + n * log_f[i]) + slope * f[i], slope = -4 * alpha * z.
  void (*model_column)(double b, double n, double slope, const double* f,
                       const double* log_f, double* out, std::size_t count);

  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  double (*abs_sum)(const double* a, std::size_t n);
};

const KernelTable& scalar_table() noexcept;

/// AVX2 table, or nullptr when not compiled in or unsupported by this CPU.
const KernelTable* avx2_table() noexcept;

/// Table used by the library.
const KernelTable& active() noexcept;

/// Overrides the active table for the lifetime of the guard. Not thread-safe
/// with respect to concurrent solves; intended for tests and benchmarks.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa);
  ~ScopedIsa();
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  const KernelTable* previous_;
};

}  // namespace qus::kernels
