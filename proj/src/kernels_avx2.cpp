// Built with -mavx2. Only reached through kernels_dispatch.cpp after a CPUID check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "kernels_impl.hpp"

namespace qus::kernels::detail {
namespace {

constexpr std::size_t kWidth = 4;

inline double horizontal_sum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

void soft_threshold(const double* in, double tau, double* out, std::size_t n) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d vtau = _mm256_set1_pd(tau);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const __m256d v = _mm256_loadu_pd(in + i);
    const __m256d mag = _mm256_andnot_pd(sign_mask, v);
    // max(zero, x) keeps x when x is NaN, matching std::max(x, 0.0).
    const __m256d shrunk = _mm256_max_pd(zero, _mm256_sub_pd(mag, vtau));
    const __m256d sign = _mm256_and_pd(sign_mask, v);
    _mm256_storeu_pd(out + i, _mm256_or_pd(shrunk, sign));
  }
  for (; i < n; ++i) out[i] = std::copysign(std::max(std::abs(in[i]) - tau, 0.0), in[i]);
}

void clip_min(const double* in, const double* lo, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(lo + i), _mm256_loadu_pd(in + i)));
  }
  for (; i < n; ++i) out[i] = in[i] < lo[i] ? lo[i] : in[i];
}

void scale(const double* in, double a, double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(va, _mm256_loadu_pd(in + i)));
  }
  for (; i < n; ++i) out[i] = a * in[i];
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void subtract(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void accumulate_difference(const double* a, const double* b, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), d));
  }
  for (; i < n; ++i) y[i] = y[i] + (a[i] - b[i]);
}

void forward_difference(const double* in, double* out, std::size_t n) {
  if (n < 2) return;
  const std::size_t m = n - 1;
  std::size_t i = 0;
  for (; i + kWidth <= m; i += kWidth) {
    _mm256_storeu_pd(out + i,
                     _mm256_sub_pd(_mm256_loadu_pd(in + i + 1), _mm256_loadu_pd(in + i)));
  }
  for (; i < m; ++i) out[i] = in[i + 1] - in[i];
}

void forward_difference_adjoint(const double* in, double* out, std::size_t n) {
  if (n == 0) return;
  if (n == 1) {
    out[0] = 0.0;
    return;
  }
  out[0] = -in[0];
  std::size_t k = 1;
  for (; k + kWidth <= n - 1; k += kWidth) {
    _mm256_storeu_pd(out + k,
                     _mm256_sub_pd(_mm256_loadu_pd(in + k - 1), _mm256_loadu_pd(in + k)));
  }
  for (; k + 1 < n; ++k) out[k] = in[k - 1] - in[k];
  out[n - 1] = in[n - 2];
}

void model_column(double b, double n, double slope, const double* f, const double* log_f,
                  double* out, std::size_t count) {
  const __m256d vb = _mm256_set1_pd(b);
  const __m256d vn = _mm256_set1_pd(n);
  const __m256d vs = _mm256_set1_pd(slope);
  std::size_t i = 0;
  for (; i + kWidth <= count; i += kWidth) {
    const __m256d spectral = _mm256_add_pd(vb, _mm256_mul_pd(vn, _mm256_loadu_pd(log_f + i)));
    _mm256_storeu_pd(out + i, _mm256_add_pd(spectral, _mm256_mul_pd(vs, _mm256_loadu_pd(f + i))));
  }
  for (; i < count; ++i) out[i] = (b + n * log_f[i]) + slope * f[i];
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 * kWidth <= n; i += 2 * kWidth) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(
        acc1, _mm256_mul_pd(_mm256_loadu_pd(a + i + kWidth), _mm256_loadu_pd(b + i + kWidth)));
  }
  for (; i + kWidth <= n; i += kWidth) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  double total = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double total = horizontal_sum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total;
}

double abs_sum(const double* a, std::size_t n) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign_mask, _mm256_loadu_pd(a + i)));
  }
  double total = horizontal_sum(acc);
  for (; i < n; ++i) total += std::abs(a[i]);
  return total;
}

constexpr KernelTable kAvx2{
    Isa::avx2,           soft_threshold, clip_min,
    scale,               axpy,           subtract,
    accumulate_difference, forward_difference, forward_difference_adjoint,
    model_column,        dot,            squared_distance,
    abs_sum,
};

}  // namespace

const KernelTable& avx2_table_unchecked() noexcept { return kAvx2; }

}  // namespace qus::kernels::detail
