#include "qus/solvers.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "qus/error.hpp"
#include "qus/kernels.hpp"

namespace qus {
namespace {

using SparseLlt = Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower,
                                       Eigen::AMDOrdering<int>>;

Eigen::VectorXd least_squares_solution(const Eigen::SparseMatrix<double>& gram,
                                       const Eigen::VectorXd& rhs, double ridge) {
  Eigen::MatrixXd a = Eigen::MatrixXd(gram);
  a.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  const double rcond = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
  const bool singular = llt.info() != Eigen::Success ||
                        (ridge == 0.0 && rcond < std::numeric_limits<double>::epsilon());
  if (singular) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
    const double lo = std::abs(eig.eigenvalues().minCoeff());
    const double hi = std::abs(eig.eigenvalues().maxCoeff());
    const double condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    std::ostringstream msg;
    msg << "least squares: normal equations are singular (condition estimate " << condition
        << "); use a positive ridge";
    throw NumericalError(msg.str(), condition);
  }
  return llt.solve(rhs);
}

double violation(const Eigen::VectorXd& x, const std::optional<ConstraintVector>& beta) {
  if (!beta) return 0.0;
  return std::max(0.0, (beta->beta - x).maxCoeff());
}

Eigen::SparseMatrix<double> identity(Eigen::Index n) {
  Eigen::SparseMatrix<double> eye(n, n);
  eye.setIdentity();
  return eye;
}

// Shared, gamma-independent pieces of one ADMM problem.
class AdmmProblem {
 public:
  AdmmProblem(const SystemMatrix& h, const Eigen::VectorXd& t, const SolverConfig& config)
      : h_(config.freq_weights.empty() ? h : h.weighted(config.freq_weights)), t_(t) {
    config.validate();
    if (static_cast<std::size_t>(t.size()) != h.rows()) {
      throw DimensionError("observation length does not match system rows");
    }
    if (3 * config.spec.samples() != h.cols()) {
      throw DimensionError("regularizer sample count does not match system columns");
    }
    if (!config.freq_weights.empty()) {
      for (std::size_t r = 0; r < config.freq_weights.size(); ++r) {
        t_[static_cast<Eigen::Index>(r)] *= config.freq_weights[r];
      }
    }
    const Eigen::SparseMatrix<double> gram = h_.gram();
    ht_t_ = h_.sparse().transpose() * t_;
    x0_ = least_squares_solution(gram, ht_t_, config.ridge);
    const Eigen::SparseMatrix<double>& k = config.spec.k();
    base_ = gram + config.rho * Eigen::SparseMatrix<double>(k.transpose() * k) +
            config.ridge * identity(gram.rows());
    base_.makeCompressed();
  }

  const SystemMatrix& h() const noexcept { return h_; }
  const Eigen::VectorXd& t() const noexcept { return t_; }
  const Eigen::VectorXd& ht_t() const noexcept { return ht_t_; }
  const Eigen::VectorXd& x0() const noexcept { return x0_; }

  Eigen::SparseMatrix<double> system(double gamma) const {
    if (gamma == 0.0) return base_;
    Eigen::SparseMatrix<double> a = base_ + gamma * identity(base_.rows());
    a.makeCompressed();
    return a;
  }

 private:
  SystemMatrix h_;
  Eigen::VectorXd t_;
  Eigen::VectorXd ht_t_;
  Eigen::VectorXd x0_;
  Eigen::SparseMatrix<double> base_;
};

void factorize(SparseLlt& llt, const Eigen::SparseMatrix<double>& a) {
  llt.factorize(a);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("ADMM: x-update matrix is not positive definite",
                         std::numeric_limits<double>::infinity());
  }
}

SolveResult iterate(const AdmmProblem& problem, const SolverConfig& config, const SparseLlt& llt,
                    bool constrained, double gamma) {
  const auto& k = kernels::active();
  const std::size_t samples = config.spec.samples();
  const std::size_t m = samples - 1;
  const std::size_t nx = 3 * samples;
  const std::size_t ns = 3 * m;
  const double rho = config.rho;
  const double lambda1 = config.spec.lambda1();
  const double s1_scale = config.paper_exact_updates ? 1.0 / (rho + lambda1)
                                                     : rho / (rho + 2.0 * lambda1);
  const double tau = config.spec.lambda2() / rho;
  const bool coupled = constrained && gamma > 0.0;
  const Eigen::VectorXd empty;
  const Eigen::VectorXd& beta = constrained ? config.beta->beta : empty;

  Eigen::VectorXd x = problem.x0();
  Eigen::VectorXd s;
  apply_k(x, samples, s);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ns));
  Eigen::VectorXd v;
  Eigen::VectorXd q;
  if (constrained) {
    v = clip_to_min(x, beta);
    q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nx));
  }

  Eigen::VectorXd rhs(static_cast<Eigen::Index>(nx));
  Eigen::VectorXd work_s(static_cast<Eigen::Index>(ns));
  Eigen::VectorXd work_x(static_cast<Eigen::Index>(nx));
  Eigen::VectorXd kx;
  Eigen::VectorXd w(static_cast<Eigen::Index>(ns));
  Eigen::VectorXd s_prev(static_cast<Eigen::Index>(ns));
  Eigen::VectorXd v_prev;

  SolveResult result;
  result.primal_residual_history.reserve(static_cast<std::size_t>(config.max_iters));
  result.dual_residual_history.reserve(static_cast<std::size_t>(config.max_iters));
  result.cost_history.reserve(static_cast<std::size_t>(config.max_iters));

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    // x-update: (H^T H + rho K^T K + gamma I) x = H^T t + rho K^T (s - y) + gamma (v - q)
    rhs = problem.ht_t();
    k.subtract(s.data(), y.data(), work_s.data(), ns);
    apply_k_transpose(work_s, samples, work_x);
    k.axpy(rho, work_x.data(), rhs.data(), nx);
    if (coupled) {
      k.subtract(v.data(), q.data(), work_x.data(), nx);
      k.axpy(gamma, work_x.data(), rhs.data(), nx);
    }
    x = llt.solve(rhs);
    if (!x.allFinite()) {
      throw DivergenceError("ADMM diverged: non-finite iterate at iteration " +
                                std::to_string(iter),
                            iter);
    }

    // s-update: closed-form L2 shrink on the alpha block, soft threshold on (b, n).
    apply_k(x, samples, kx);
    w = kx;
    k.axpy(1.0, y.data(), w.data(), ns);
    s_prev = s;
    k.scale(w.data(), s1_scale, s.data(), m);
    k.soft_threshold(w.data() + m, tau, s.data() + m, 2 * m);

    // Scaled dual update.
    k.accumulate_difference(kx.data(), s.data(), y.data(), ns);

    if (constrained) {
      v_prev = v;
      work_x = x;
      k.axpy(1.0, q.data(), work_x.data(), nx);
      k.clip_min(work_x.data(), beta.data(), v.data(), nx);
      k.accumulate_difference(x.data(), v.data(), q.data(), nx);
    }

    double primal_sq = k.squared_distance(kx.data(), s.data(), ns);
    k.subtract(s.data(), s_prev.data(), work_s.data(), ns);
    apply_k_transpose(work_s, samples, work_x);
    double dual_sq = rho * rho * k.dot(work_x.data(), work_x.data(), nx);
    if (coupled) {
      primal_sq += k.squared_distance(x.data(), v.data(), nx);
      dual_sq += gamma * gamma * k.squared_distance(v.data(), v_prev.data(), nx);
    }
    const double primal = std::sqrt(primal_sq);
    const double dual = std::sqrt(dual_sq);
    result.primal_residual_history.push_back(primal);
    result.dual_residual_history.push_back(dual);
    result.cost_history.push_back(cost_admm(x, problem.t(), problem.h(), config.spec));
    if (config.record_iterates) result.iterates.push_back(x);
    result.iterations_run = iter;

    if (primal <= config.tol_primal && dual <= config.tol_dual) {
      result.converged = true;
      break;
    }
  }

  result.x = std::move(x);
  result.constraint_violation = violation(result.x, config.beta);
  return result;
}

void require_beta(const SolverConfig& config) {
  if (!config.beta) throw ParameterError("C-ADMM requires a constraint vector");
  if (config.beta->beta.size() != static_cast<Eigen::Index>(3 * config.spec.samples())) {
    throw DimensionError("constraint vector length " + std::to_string(config.beta->beta.size()) +
                         " does not match 3N = " + std::to_string(3 * config.spec.samples()));
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw ParameterError("rho must be > 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ParameterError("gamma must be >= 0");
  if (max_iters < 1) throw ParameterError("max_iters must be >= 1");
  if (!(tol_primal > 0.0) || !(tol_dual > 0.0)) throw ParameterError("tolerances must be > 0");
  if (!(ridge >= 0.0)) throw ParameterError("ridge must be >= 0");
}

SolveResult solve_least_squares(const SystemMatrix& h, const Eigen::VectorXd& t, double ridge,
                                const std::optional<ConstraintVector>& beta) {
  if (static_cast<std::size_t>(t.size()) != h.rows()) {
    throw DimensionError("observation length does not match system rows");
  }
  if (!(ridge >= 0.0)) throw ParameterError("ridge must be >= 0");
  const Eigen::VectorXd rhs = h.sparse().transpose() * t;
  SolveResult result;
  result.x = least_squares_solution(h.gram(), rhs, ridge);
  result.iterations_run = 1;
  result.converged = true;
  result.primal_residual_history.push_back(0.0);
  result.dual_residual_history.push_back(0.0);
  const Eigen::VectorXd residual = h.apply(result.x) - t;
  result.cost_history.push_back(0.5 * residual.squaredNorm());
  result.constraint_violation = violation(result.x, beta);
  return result;
}

SolveResult solve_admm(const SystemMatrix& h, const Eigen::VectorXd& t, const SolverConfig& config) {
  const AdmmProblem problem(h, t, config);
  const Eigen::SparseMatrix<double> a = problem.system(0.0);
  SparseLlt llt;
  llt.analyzePattern(a);
  factorize(llt, a);
  return iterate(problem, config, llt, false, 0.0);
}

SolveResult solve_cadmm(const SystemMatrix& h, const Eigen::VectorXd& t, const SolverConfig& config) {
  require_beta(config);
  const AdmmProblem problem(h, t, config);
  const Eigen::SparseMatrix<double> a = problem.system(config.gamma);
  SparseLlt llt;
  llt.analyzePattern(a);
  factorize(llt, a);
  return iterate(problem, config, llt, true, config.gamma);
}

std::vector<SolveResult> sweep_gamma(const SystemMatrix& h, const Eigen::VectorXd& t,
                                     const SolverConfig& config, std::span<const double> gammas) {
  if (gammas.empty()) throw ParameterError("sweep_gamma: gamma list is empty");
  require_beta(config);
  for (double g : gammas) {
    if (!(g >= 0.0) || !std::isfinite(g)) throw ParameterError("gamma must be >= 0");
  }
  const AdmmProblem problem(h, t, config);
  SparseLlt llt;
  llt.analyzePattern(problem.system(gammas.front()));
  std::vector<SolveResult> results;
  results.reserve(gammas.size());
  for (double g : gammas) {
    factorize(llt, problem.system(g));
    results.push_back(iterate(problem, config, llt, true, g));
  }
  return results;
}

}  // namespace qus
