#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "qus/model.hpp"
#include "qus/regularizers.hpp"
#include "qus/solvers.hpp"

namespace qus::test {

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * double(i) / double(n - 1);
  return v;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& gen, std::size_t n, double lo = -1.0,
                                     double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = u(gen);
  return v;
}

// Random per-line problem: piecewise-smooth parameters, optional noise on t.
struct Instance {
  SystemMatrix h;
  Eigen::VectorXd x_true;
  Eigen::VectorXd t;
};

inline Instance random_instance(std::uint64_t seed, std::size_t nf, std::size_t nz,
                                double sigma = 0.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double f0 = 2.0 + 2.0 * u(gen);
  const double z0 = 0.05 + 0.1 * u(gen);
  SystemMatrix h(linspace(f0, f0 + 4.0 + 4.0 * u(gen), nf), linspace(z0, z0 + 2.0, nz));
  Eigen::VectorXd x(static_cast<Eigen::Index>(3 * nz));
  const double a = 0.02 * u(gen), b0 = 4.0 * u(gen) - 2.0, n0 = 2.0 * u(gen) - 1.0;
  const double b1 = 4.0 * u(gen) - 2.0, n1 = 2.0 * u(gen) - 1.0;
  const std::size_t step = nz / 2;
  for (std::size_t j = 0; j < nz; ++j) {
    const auto J = static_cast<Eigen::Index>(j);
    x[J] = a + 0.005 * std::sin(double(j));
    x[J + static_cast<Eigen::Index>(nz)] = j < step ? b0 : b1;
    x[J + static_cast<Eigen::Index>(2 * nz)] = j < step ? n0 : n1;
  }
  Eigen::VectorXd t = h.sparse() * x;
  if (sigma > 0.0) {
    std::normal_distribution<double> g(0.0, sigma);
    for (auto& v : t) v += g(gen);
  }
  return {std::move(h), std::move(x), std::move(t)};
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace qus::test
