#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <vector>

#include "qus/model.hpp"
#include "qus/regularizers.hpp"

namespace qus {

struct SolverConfig {
  explicit SolverConfig(RegularizerSpec regularizer) : spec(std::move(regularizer)) {}

  double rho = 1.0;
  /// Coupling weight of the minimum-value constraint (C-ADMM only).
  double gamma = 0.0;
  int max_iters = 2000;
  double tol_primal = 1e-6;
  double tol_dual = 1e-6;
  RegularizerSpec spec;
  /// Lower bounds; required by solve_cadmm, ignored by solve_admm except for
  /// the reported constraint_violation.
  std::optional<ConstraintVector> beta;
  /// Per-row data weights premultiplying H and t. Empty means identity.
  std::vector<double> freq_weights;
  /// Use the s1 update (K1 x1 + y1) / (rho + lambda1) as printed in the
  /// original update rules instead of the exact minimizer
  /// rho (K1 x1 + y1) / (rho + 2 lambda1).
  bool paper_exact_updates = false;
  /// Keep every x iterate in SolveResult::iterates.
  bool record_iterates = false;
  /// Diagonal shift added to every normal-equation matrix.
  double ridge = 1e-12;

  /// Throws ParameterError on rho <= 0, gamma < 0, max_iters < 1 or
  /// nonpositive tolerances.
  void validate() const;
};

struct SolveResult {
  Eigen::VectorXd x;
  int iterations_run = 0;
  std::vector<double> primal_residual_history;
  std::vector<double> dual_residual_history;
  std::vector<double> cost_history;
  bool converged = false;
  /// max(0, max_i(beta_i - x_i)); zero when no bound was supplied.
  double constraint_violation = 0.0;
  std::vector<Eigen::VectorXd> iterates;
};

/// Minimizes ||Hx - t||^2 through the normal equations (H^T H + ridge I).
/// With ridge == 0 a singular or numerically singular system throws
/// NumericalError carrying a condition estimate.
SolveResult solve_least_squares(const SystemMatrix& h, const Eigen::VectorXd& t,
                                double ridge = 1e-12,
                                const std::optional<ConstraintVector>& beta = std::nullopt);

/// ADMM on 1/2||Hx - t||^2 + lambda1 ||s1||^2 + lambda2 ||s2||_1 subject to
/// Kx = s, in scaled dual form, warm-started from least squares.
SolveResult solve_admm(const SystemMatrix& h, const Eigen::VectorXd& t, const SolverConfig& config);

/// ADMM with the additional split x = v, v >= beta, coupled with weight gamma.
/// gamma == 0 reproduces solve_admm exactly.
SolveResult solve_cadmm(const SystemMatrix& h, const Eigen::VectorXd& t, const SolverConfig& config);

/// One solve_cadmm per gamma; the Gram products, least-squares warm start and
/// symbolic factorization are shared.
std::vector<SolveResult> sweep_gamma(const SystemMatrix& h, const Eigen::VectorXd& t,
                                     const SolverConfig& config, std::span<const double> gammas);

}  // namespace qus
