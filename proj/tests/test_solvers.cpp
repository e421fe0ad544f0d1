#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "qus/error.hpp"
#include "qus/kernels.hpp"
#include "qus/solvers.hpp"
#include "test_support.hpp"

using namespace qus;

namespace {

SolverConfig config_for(std::size_t nz, double l1, double l2, double rho = 1.0) {
  SolverConfig c{RegularizerSpec(l1, l2, nz)};
  c.rho = rho;
  c.max_iters = 20000;
  c.tol_primal = 1e-10;
  c.tol_dual = 1e-10;
  return c;
}

// Bounds placed so that part of the noisy least-squares estimate is infeasible.
ConstraintVector bounds_cutting(const Eigen::VectorXd& x_ls, double shift) {
  ConstraintVector c;
  c.beta = x_ls.array() + shift;
  for (Eigen::Index i = 0; i < c.beta.size(); i += 2) c.beta[i] = x_ls[i] - 10.0;
  return c;
}

// min 1/2||Hx - t||^2 + lambda1 ||K1 x1||^2 s.t. x >= beta by a primal-dual active
// set iteration. Returns the KKT point, or an empty vector if it failed.
Eigen::VectorXd constrained_quadratic(const SystemMatrix& h, const Eigen::VectorXd& t,
                                      const RegularizerSpec& spec, const Eigen::VectorXd& beta) {
  Eigen::MatrixXd hd(h.sparse());
  Eigen::MatrixXd q = hd.transpose() * hd;
  const auto n = static_cast<Eigen::Index>(spec.samples());
  Eigen::MatrixXd k1(spec.k1());
  q.topLeftCorner(n, n) += 2.0 * spec.lambda1() * k1.transpose() * k1;
  const Eigen::VectorXd c = hd.transpose() * t;
  const Eigen::Index m = q.rows();
  std::vector<bool> active(static_cast<std::size_t>(m), false);
  Eigen::VectorXd x(m), mu(m);
  for (int it = 0; it < 200; ++it) {
    std::vector<Eigen::Index> free_idx;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!active[std::size_t(i)]) free_idx.push_back(i);
    }
    x = beta;
    const auto nf = static_cast<Eigen::Index>(free_idx.size());
    Eigen::MatrixXd qff(nf, nf);
    Eigen::VectorXd rhs(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
      rhs[a] = c[free_idx[a]];
      for (Eigen::Index i = 0; i < m; ++i) {
        if (active[std::size_t(i)]) rhs[a] -= q(free_idx[a], i) * beta[i];
      }
      for (Eigen::Index b = 0; b < nf; ++b) qff(a, b) = q(free_idx[a], free_idx[b]);
    }
    const Eigen::VectorXd xf = qff.ldlt().solve(rhs);
    for (Eigen::Index a = 0; a < nf; ++a) x[free_idx[a]] = xf[a];
    mu = q * x - c;
    bool changed = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double mi = active[std::size_t(i)] ? mu[i] : 0.0;
      const bool next = mi + (beta[i] - x[i]) > 0.0;
      changed |= next != active[std::size_t(i)];
      active[std::size_t(i)] = next;
    }
    if (!changed) {
      const double scale = 1.0 + c.norm();
      for (Eigen::Index i = 0; i < m; ++i) {
        if (x[i] < beta[i] - 1e-10) return {};
        if (active[std::size_t(i)] ? mu[i] < -1e-9 * scale : std::abs(mu[i]) > 1e-9 * scale) {
          return {};
        }
      }
      return x;
    }
  }
  return {};
}

}  // namespace

TEST_CASE("least squares recovers noise-free parameters") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = test::random_instance(seed, 20, 12);
    const SolveResult r = solve_least_squares(inst.h, inst.t);
    CHECK(r.converged);
    CHECK(test::relative_error(r.x, inst.x_true) < 1e-7);
    CHECK(r.constraint_violation == 0.0);
  }
}

TEST_CASE("least squares reports singular systems") {
  SystemMatrix h({1.0, 2.0}, {1.0});
  Eigen::VectorXd t = Eigen::VectorXd::Ones(2);
  try {
    (void)solve_least_squares(h, t, 0.0);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.condition_estimate() > 1e12);
  }
  CHECK_NOTHROW(solve_least_squares(h, t, 1e-8));
  CHECK_THROWS_AS(solve_least_squares(h, Eigen::VectorXd::Ones(3)), DimensionError);
}

TEST_CASE("weighted least squares with uniform weights is unchanged") {
  const auto inst = test::random_instance(4, 15, 8, 0.3);
  SolverConfig c = config_for(8, 0.0, 0.0);
  c.freq_weights.assign(inst.h.rows(), 3.0);
  const SolveResult plain = solve_least_squares(inst.h, inst.t);
  const SolveResult w = solve_admm(inst.h, inst.t, c);
  CHECK(test::relative_error(w.x, plain.x) < 1e-6);
}

TEST_CASE("solver config validation") {
  SolverConfig c{RegularizerSpec(1.0, 1.0, 4)};
  CHECK_NOTHROW(c.validate());
  c.rho = 0.0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c.rho = 1.0;
  c.gamma = -1.0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c.gamma = 0.0;
  c.max_iters = 0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c.max_iters = 10;
  c.tol_dual = 0.0;
  CHECK_THROWS_AS(c.validate(), ParameterError);

  const auto inst = test::random_instance(1, 6, 4);
  SolverConfig ok{RegularizerSpec(1.0, 1.0, 4)};
  CHECK_THROWS_AS(solve_cadmm(inst.h, inst.t, ok), ParameterError);
  SolverConfig wrong{RegularizerSpec(1.0, 1.0, 5)};
  CHECK_THROWS_AS(solve_admm(inst.h, inst.t, wrong), DimensionError);
}

TEST_CASE("ADMM with zero regularization reproduces least squares") {
  const auto inst = test::random_instance(12, 16, 10, 0.2);
  const SolveResult ls = solve_least_squares(inst.h, inst.t);
  const SolveResult admm = solve_admm(inst.h, inst.t, config_for(10, 0.0, 0.0));
  CHECK(admm.converged);
  CHECK(test::relative_error(admm.x, ls.x) < 1e-8);
}

TEST_CASE("ADMM matches the closed form when only the L2 term is active") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto inst = test::random_instance(100 + seed, 24, 14, 0.2);
    const double l1 = 0.3 + seed;
    SolverConfig c = config_for(14, l1, 0.0);
    const SolveResult r = solve_admm(inst.h, inst.t, c);
    Eigen::MatrixXd hd(inst.h.sparse());
    Eigen::MatrixXd q = hd.transpose() * hd;
    Eigen::MatrixXd k1(c.spec.k1());
    q.topLeftCorner(14, 14) += 2.0 * l1 * k1.transpose() * k1;
    const Eigen::VectorXd exact = q.ldlt().solve(hd.transpose() * inst.t);
    CHECK(r.converged);
    CHECK(test::relative_error(r.x, exact) < 1e-6);
  }
}

TEST_CASE("ADMM solution is a local minimizer of the composite cost") {
  const auto inst = test::random_instance(77, 20, 12, 0.3);
  const SolverConfig c = config_for(12, 0.5, 2.0);
  const SolveResult r = solve_admm(inst.h, inst.t, c);
  REQUIRE(r.converged);
  const double f0 = cost_admm(r.x, inst.t, inst.h, c.spec);
  const double f_ls = cost_admm(solve_least_squares(inst.h, inst.t).x, inst.t, inst.h, c.spec);
  CHECK(f0 <= f_ls);
  std::mt19937_64 gen(5);
  for (int k = 0; k < 50; ++k) {
    const Eigen::VectorXd d = test::random_vector(gen, 36, -1e-4, 1e-4);
    CHECK(cost_admm(r.x + d, inst.t, inst.h, c.spec) >= f0 - 1e-8 * std::abs(f0));
  }
  CHECK(r.cost_history.size() == static_cast<std::size_t>(r.iterations_run));
  CHECK(r.primal_residual_history.size() == r.cost_history.size());
  CHECK(r.dual_residual_history.size() == r.cost_history.size());
  CHECK(r.primal_residual_history.back() <= c.tol_primal);
  CHECK(r.dual_residual_history.back() <= c.tol_dual);
}

TEST_CASE("L1 term produces piecewise-constant b and n") {
  const auto inst = test::random_instance(3, 40, 20, 0.02);
  SolverConfig c = config_for(20, 0.1, 3.0);
  const SolveResult r = solve_admm(inst.h, inst.t, c);
  int flat = 0;
  for (Eigen::Index j = 20; j + 1 < 40; ++j) flat += std::abs(r.x[j + 1] - r.x[j]) < 1e-6;
  CHECK(flat >= 15);
}

TEST_CASE("iteration cap is honored and reported") {
  const auto inst = test::random_instance(9, 20, 12, 0.3);
  SolverConfig c = config_for(12, 0.5, 2.0);
  c.max_iters = 3;
  const SolveResult r = solve_admm(inst.h, inst.t, c);
  CHECK(r.iterations_run == 3);
  CHECK_FALSE(r.converged);
}

TEST_CASE("literal s1 update flag changes the effective smoothing") {
  const auto inst = test::random_instance(21, 20, 12, 0.3);
  SolverConfig c = config_for(12, 2.0, 0.5);
  const SolveResult exact = solve_admm(inst.h, inst.t, c);
  c.paper_exact_updates = true;
  const SolveResult printed = solve_admm(inst.h, inst.t, c);
  CHECK(test::relative_error(printed.x, exact.x) > 1e-6);
}

TEST_CASE("C-ADMM with gamma = 0 reproduces ADMM iterates exactly") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto inst = test::random_instance(seed, 16, 10, 0.4);
    SolverConfig c = config_for(10, 0.5, 1.0);
    c.max_iters = 300;
    c.record_iterates = true;
    c.beta = bounds_cutting(solve_least_squares(inst.h, inst.t).x, 0.1);
    const SolveResult a = solve_admm(inst.h, inst.t, c);
    const SolveResult b = solve_cadmm(inst.h, inst.t, c);
    REQUIRE(a.iterates.size() == b.iterates.size());
    for (std::size_t k = 0; k < a.iterates.size(); ++k) CHECK(a.iterates[k] == b.iterates[k]);
    CHECK(a.constraint_violation == b.constraint_violation);
  }
}

TEST_CASE("C-ADMM equals ADMM when the bound is inactive") {
  const auto inst = test::random_instance(44, 16, 10, 0.1);
  SolverConfig c = config_for(10, 0.5, 1.0);
  c.beta = ConstraintVector{Eigen::VectorXd::Constant(30, -100.0)};
  c.gamma = 10.0;
  const SolveResult a = solve_admm(inst.h, inst.t, c);
  const SolveResult b = solve_cadmm(inst.h, inst.t, c);
  CHECK(b.converged);
  CHECK(test::relative_error(b.x, a.x) < 1e-6);
}

TEST_CASE("C-ADMM converges to the constrained minimizer") {
  const auto inst = test::random_instance(5, 12, 8, 0.5);
  SolverConfig c = config_for(8, 0.5, 0.0);
  const Eigen::VectorXd x_ls = solve_least_squares(inst.h, inst.t).x;
  c.beta = bounds_cutting(x_ls, 0.2);
  c.gamma = 5.0;
  c.max_iters = 200000;
  const SolveResult r = solve_cadmm(inst.h, inst.t, c);
  CHECK(r.converged);
  CHECK(r.constraint_violation <= 1e-6);
  const Eigen::VectorXd oracle = constrained_quadratic(inst.h, inst.t, c.spec, c.beta->beta);
  REQUIRE(oracle.size() == r.x.size());
  CHECK(test::relative_error(r.x, oracle) < 1e-4);
}

TEST_CASE("C-ADMM drives an infeasible estimate onto the bound") {
  const auto inst = test::random_instance(6, 20, 12, 0.5);
  SolverConfig c = config_for(12, 0.5, 1.0);
  const Eigen::VectorXd x_ls = solve_least_squares(inst.h, inst.t).x;
  c.beta = bounds_cutting(x_ls, 0.3);
  const SolveResult admm = solve_admm(inst.h, inst.t, c);
  CHECK(admm.constraint_violation > 1e-2);
  c.gamma = 100.0;
  const SolveResult r = solve_cadmm(inst.h, inst.t, c);
  CHECK((r.x - c.beta->beta).minCoeff() >= -1e-3);
}

TEST_CASE("sweep_gamma agrees with individual solves") {
  const auto inst = test::random_instance(8, 18, 10, 0.4);
  SolverConfig c = config_for(10, 0.5, 1.0);
  c.max_iters = 500;
  c.beta = bounds_cutting(solve_least_squares(inst.h, inst.t).x, 0.2);
  const std::vector<double> gammas = {0.0, 1.0, 100.0, 1.0};
  const auto rs = sweep_gamma(inst.h, inst.t, c, gammas);
  REQUIRE(rs.size() == 4);
  CHECK(rs[0].x == solve_admm(inst.h, inst.t, c).x);
  for (std::size_t i = 1; i < gammas.size(); ++i) {
    SolverConfig ci = c;
    ci.gamma = gammas[i];
    CHECK(test::relative_error(rs[i].x, solve_cadmm(inst.h, inst.t, ci).x) < 1e-12);
  }
  CHECK(rs[1].x == rs[3].x);
  CHECK(rs[2].constraint_violation <= rs[1].constraint_violation);
  CHECK_THROWS_AS(sweep_gamma(inst.h, inst.t, c, {}), ParameterError);
}

TEST_CASE("solver output is independent of the kernel ISA up to rounding") {
  const auto inst = test::random_instance(13, 20, 12, 0.3);
  SolverConfig c = config_for(12, 0.5, 1.0);
  c.gamma = 10.0;
  c.beta = bounds_cutting(solve_least_squares(inst.h, inst.t).x, 0.2);
  SolveResult ref, simd;
  {
    kernels::ScopedIsa guard(kernels::Isa::scalar);
    ref = solve_cadmm(inst.h, inst.t, c);
  }
  {
    kernels::ScopedIsa guard(kernels::Isa::avx2);
    simd = solve_cadmm(inst.h, inst.t, c);
  }
  CHECK(test::relative_error(simd.x, ref.x) < 1e-8);
}
