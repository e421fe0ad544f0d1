#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstddef>
#include <span>
#include <vector>

#include "qus/model.hpp"

namespace qus {

/// (n-1) x n first-difference operator: row i has -1 at i and +1 at i+1.
Eigen::SparseMatrix<double> build_difference_matrix(std::size_t n);

/// L2 smoothness on alpha (weight lambda1) and L1 on the first differences of
/// b and n (weight lambda2). K1 acts on the alpha block, K2 on the stacked
/// (b, n) blocks.
class RegularizerSpec {
 public:
  RegularizerSpec(double lambda1, double lambda2, std::size_t samples);

  double lambda1() const noexcept { return lambda1_; }
  double lambda2() const noexcept { return lambda2_; }
  std::size_t samples() const noexcept { return samples_; }

  const Eigen::SparseMatrix<double>& k1() const noexcept { return k1_; }
  const Eigen::SparseMatrix<double>& k2() const noexcept { return k2_; }
  /// blockdiag(K1, K2), shape 3(N-1) x 3N.
  const Eigen::SparseMatrix<double>& k() const noexcept { return k_; }

 private:
  double lambda1_;
  double lambda2_;
  std::size_t samples_;
  Eigen::SparseMatrix<double> k1_;
  Eigen::SparseMatrix<double> k2_;
  Eigen::SparseMatrix<double> k_;
};

/// Applies K (all three blocks) with the difference kernel. out has 3(N-1)
/// entries.
void apply_k(const Eigen::VectorXd& x, std::size_t samples, Eigen::VectorXd& out);
/// Applies K^T. in has 3(N-1) entries, out has 3N.
void apply_k_transpose(const Eigen::VectorXd& in, std::size_t samples, Eigen::VectorXd& out);

/// Lower bounds for the packed parameters: alpha >= -alpha_r (Np), so that
/// alpha_t >= 0; b >= ln(0.001), so that b_t >= 0.001 b_r; n >= -n_r, so that
/// n_t >= 0.
struct ConstraintVector {
  Eigen::VectorXd beta;

  std::size_t samples() const noexcept { return static_cast<std::size_t>(beta.size() / 3); }
};

/// ln(0.001): smallest admissible b = ln(b_t / b_r).
inline constexpr double kMinLogBscRatio = -6.907755278982137;

ConstraintVector build_constraint_vector(const ReferencePhantom& ref, std::size_t samples);

/// sgn(v) max(|v| - tau, 0), the proximal map of tau ||.||_1. Throws
/// ParameterError for negative tau.
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double tau);

/// max(v, beta) elementwise, the Euclidean projection onto {v >= beta}.
Eigen::VectorXd clip_to_min(const Eigen::VectorXd& v, const Eigen::VectorXd& beta);

/// 1/2 ||Hx - t||^2 + lambda1 ||K1 x1||^2 + lambda2 ||K2 x2||_1.
double cost_admm(const Eigen::VectorXd& x, const Eigen::VectorXd& t, const SystemMatrix& h,
                 const RegularizerSpec& spec);

/// Gradient of the smooth part of cost_admm: H^T (Hx - t) + 2 lambda1 K1^T K1 x1.
Eigen::VectorXd smooth_cost_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& t,
                                     const SystemMatrix& h, const RegularizerSpec& spec);

/// Smooth part of cost_admm (data term plus L2 term).
double smooth_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& t, const SystemMatrix& h,
                   const RegularizerSpec& spec);

}  // namespace qus
