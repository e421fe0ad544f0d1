#include <algorithm>
#include <cmath>

#include "qus/kernels.hpp"

namespace qus::kernels {
namespace {

void soft_threshold(const double* in, double tau, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::copysign(std::max(std::abs(in[i]) - tau, 0.0), in[i]);
  }
}

void clip_min(const double* in, const double* lo, double* out, std::size_t n) {
  // Same NaN/tie behavior as _mm256_max_pd(lo, in): returns in unless in < lo.
  for (std::size_t i = 0; i < n; ++i) out[i] = in[i] < lo[i] ? lo[i] : in[i];
}

void scale(const double* in, double a, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * in[i];
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

void subtract(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void accumulate_difference(const double* a, const double* b, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + (a[i] - b[i]);
}

void forward_difference(const double* in, double* out, std::size_t n) {
  for (std::size_t i = 0; i + 1 < n; ++i) out[i] = in[i + 1] - in[i];
}

void forward_difference_adjoint(const double* in, double* out, std::size_t n) {
  if (n == 0) return;
  if (n == 1) {
    out[0] = 0.0;
    return;
  }
  out[0] = -in[0];
  for (std::size_t k = 1; k + 1 < n; ++k) out[k] = in[k - 1] - in[k];
  out[n - 1] = in[n - 2];
}

void model_column(double b, double n, double slope, const double* f, const double* log_f,
                  double* out, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) out[i] = (b + n * log_f[i]) + slope * f[i];
}

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double abs_sum(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::abs(a[i]);
  return acc;
}

constexpr KernelTable kScalar{
    Isa::scalar,         soft_threshold, clip_min,
    scale,               axpy,           subtract,
    accumulate_difference, forward_difference, forward_difference_adjoint,
    model_column,        dot,            squared_distance,
    abs_sum,
};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

}  // namespace qus::kernels
