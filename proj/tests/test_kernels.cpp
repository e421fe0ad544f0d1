#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "qus/kernels.hpp"

using namespace qus::kernels;

namespace {

std::vector<double> random_values(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Lengths exercising the vector body, the remainder loop and both together.
constexpr std::size_t kLengths[] = {0, 1, 3, 4, 5, 7, 8, 31, 64, 257};

}  // namespace

TEST_CASE("scalar kernels on small hand cases") {
  const auto& k = scalar_table();
  CHECK(k.isa == Isa::scalar);
  const double in[] = {-2.0, -0.5, 0.0, 0.5, 2.0};
  double out[5];
  k.soft_threshold(in, 1.0, out, 5);
  CHECK(out[0] == -1.0);
  CHECK(out[1] == 0.0);
  CHECK(out[2] == 0.0);
  CHECK(out[3] == 0.0);
  CHECK(out[4] == 1.0);

  const double lo[] = {0.0, 0.0, 0.0, 1.0, 1.0};
  k.clip_min(in, lo, out, 5);
  CHECK(out[0] == 0.0);
  CHECK(out[3] == 1.0);
  CHECK(out[4] == 2.0);

  const double x[] = {1.0, 4.0, 9.0};
  double d[2];
  k.forward_difference(x, d, 3);
  CHECK(d[0] == 3.0);
  CHECK(d[1] == 5.0);
  double adj[3];
  k.forward_difference_adjoint(d, adj, 3);
  CHECK(adj[0] == -3.0);
  CHECK(adj[1] == -2.0);
  CHECK(adj[2] == 5.0);

  CHECK(k.dot(x, x, 3) == 98.0);
  CHECK(k.abs_sum(in, 5) == 5.0);
  CHECK(k.squared_distance(x, in, 3) == doctest::Approx(9.0 + 20.25 + 81.0));
}

TEST_CASE("forward difference adjoint identity") {
  std::mt19937_64 gen(3);
  const auto& k = active();
  for (std::size_t n : {2, 3, 9, 40}) {
    auto x = random_values(gen, n);
    auto y = random_values(gen, n - 1);
    std::vector<double> dx(n - 1), dty(n);
    k.forward_difference(x.data(), dx.data(), n);
    k.forward_difference_adjoint(y.data(), dty.data(), n);
    CHECK(k.dot(dx.data(), y.data(), n - 1) ==
          doctest::Approx(k.dot(x.data(), dty.data(), n)).epsilon(1e-12));
  }
}

TEST_CASE("AVX2 kernels match the scalar reference") {
  const KernelTable* simd = avx2_table();
  if (simd == nullptr) {
    MESSAGE("AVX2 unavailable on this host; equivalence not exercised");
    return;
  }
  const auto& ref = scalar_table();
  CHECK(simd->isa == Isa::avx2);
  std::mt19937_64 gen(11);

  for (std::size_t n : kLengths) {
    CAPTURE(n);
    const auto a = random_values(gen, n);
    const auto b = random_values(gen, n);
    std::vector<double> r(n), s(n);

    for (double tau : {0.0, 0.7, 5.0}) {
      ref.soft_threshold(a.data(), tau, r.data(), n);
      simd->soft_threshold(a.data(), tau, s.data(), n);
      CHECK(bitwise_equal(r, s));
    }
    ref.clip_min(a.data(), b.data(), r.data(), n);
    simd->clip_min(a.data(), b.data(), s.data(), n);
    CHECK(bitwise_equal(r, s));

    ref.scale(a.data(), -1.25, r.data(), n);
    simd->scale(a.data(), -1.25, s.data(), n);
    CHECK(bitwise_equal(r, s));

    ref.subtract(a.data(), b.data(), r.data(), n);
    simd->subtract(a.data(), b.data(), s.data(), n);
    CHECK(bitwise_equal(r, s));

    r = b;
    s = b;
    ref.axpy(0.3, a.data(), r.data(), n);
    simd->axpy(0.3, a.data(), s.data(), n);
    CHECK(bitwise_equal(r, s));

    r = b;
    s = b;
    ref.accumulate_difference(a.data(), b.data(), r.data(), n);
    simd->accumulate_difference(a.data(), b.data(), s.data(), n);
    CHECK(bitwise_equal(r, s));

    if (n >= 1) {
      std::vector<double> f(n), lf(n);
      for (std::size_t i = 0; i < n; ++i) {
        f[i] = 1.0 + double(i) * 0.1;
        lf[i] = std::log(f[i]);
      }
      ref.model_column(0.4, -1.1, -0.37, f.data(), lf.data(), r.data(), n);
      simd->model_column(0.4, -1.1, -0.37, f.data(), lf.data(), s.data(), n);
      CHECK(bitwise_equal(r, s));
    }
    if (n >= 2) {
      std::vector<double> dr(n - 1), ds(n - 1);
      ref.forward_difference(a.data(), dr.data(), n);
      simd->forward_difference(a.data(), ds.data(), n);
      CHECK(bitwise_equal(dr, ds));
      ref.forward_difference_adjoint(b.data(), r.data(), n);
      simd->forward_difference_adjoint(b.data(), s.data(), n);
      CHECK(bitwise_equal(r, s));
    }

    const double scale = std::max<double>(1.0, double(n));
    CHECK(simd->dot(a.data(), b.data(), n) ==
          doctest::Approx(ref.dot(a.data(), b.data(), n)).epsilon(1e-13 * scale));
    CHECK(simd->squared_distance(a.data(), b.data(), n) ==
          doctest::Approx(ref.squared_distance(a.data(), b.data(), n)).epsilon(1e-13 * scale));
    CHECK(simd->abs_sum(a.data(), n) ==
          doctest::Approx(ref.abs_sum(a.data(), n)).epsilon(1e-13 * scale));
  }
}

TEST_CASE("soft threshold keeps signed zeros and special values consistent") {
  const KernelTable* simd = avx2_table();
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> in = {-0.0, 0.0, inf, -inf, 1e-300, -1e300, 0.5, -0.5};
  std::vector<double> r(in.size()), s(in.size());
  scalar_table().soft_threshold(in.data(), 0.5, r.data(), in.size());
  CHECK(r[2] == inf);
  CHECK(r[3] == -inf);
  CHECK(r[6] == 0.0);
  if (simd != nullptr) {
    simd->soft_threshold(in.data(), 0.5, s.data(), in.size());
    CHECK(bitwise_equal(r, s));
  }
}

TEST_CASE("ScopedIsa swaps and restores the active table") {
  const Isa before = active().isa;
  {
    ScopedIsa guard(Isa::scalar);
    CHECK(active().isa == Isa::scalar);
  }
  CHECK(active().isa == before);
  CHECK(isa_name(Isa::scalar) == "scalar");
  CHECK(isa_name(Isa::avx2) == "avx2");
}
