#include "qus/regularizers.hpp"

#include <cmath>
#include <string>

#include "qus/error.hpp"
#include "qus/kernels.hpp"

namespace qus {
namespace {

Eigen::SparseMatrix<double> block_diagonal(const Eigen::SparseMatrix<double>& d, int copies) {
  std::vector<Eigen::Triplet<double>> entries;
  for (int c = 0; c < copies; ++c) {
    for (int col = 0; col < d.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(d, col); it; ++it) {
        entries.emplace_back(c * d.rows() + it.row(), c * d.cols() + it.col(), it.value());
      }
    }
  }
  Eigen::SparseMatrix<double> out(copies * d.rows(), copies * d.cols());
  out.setFromTriplets(entries.begin(), entries.end());
  out.makeCompressed();
  return out;
}

void check_dims(const Eigen::VectorXd& x, const Eigen::VectorXd& t, const SystemMatrix& h,
                const RegularizerSpec& spec) {
  if (static_cast<std::size_t>(x.size()) != h.cols() ||
      static_cast<std::size_t>(t.size()) != h.rows() || 3 * spec.samples() != h.cols()) {
    throw DimensionError("cost: x, t, H and regularizer dimensions are inconsistent");
  }
}

}  // namespace

Eigen::SparseMatrix<double> build_difference_matrix(std::size_t n) {
  if (n < 2) throw ParameterError("difference operator needs n >= 2, got " + std::to_string(n));
  const auto m = static_cast<Eigen::Index>(n);
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(2 * (n - 1));
  for (Eigen::Index i = 0; i + 1 < m; ++i) {
    entries.emplace_back(i, i, -1.0);
    entries.emplace_back(i, i + 1, 1.0);
  }
  Eigen::SparseMatrix<double> d(m - 1, m);
  d.setFromTriplets(entries.begin(), entries.end());
  d.makeCompressed();
  return d;
}

RegularizerSpec::RegularizerSpec(double lambda1, double lambda2, std::size_t samples)
    : lambda1_(lambda1), lambda2_(lambda2), samples_(samples) {
  if (!(lambda1 >= 0.0) || !std::isfinite(lambda1)) throw ParameterError("lambda1 must be >= 0");
  if (!(lambda2 >= 0.0) || !std::isfinite(lambda2)) throw ParameterError("lambda2 must be >= 0");
  const Eigen::SparseMatrix<double> d = build_difference_matrix(samples);
  k1_ = d;
  k2_ = block_diagonal(d, 2);
  k_ = block_diagonal(d, 3);
}

void apply_k(const Eigen::VectorXd& x, std::size_t samples, Eigen::VectorXd& out) {
  const auto& k = kernels::active();
  const std::size_t m = samples - 1;
  out.resize(static_cast<Eigen::Index>(3 * m));
  for (std::size_t block = 0; block < 3; ++block) {
    k.forward_difference(x.data() + block * samples, out.data() + block * m, samples);
  }
}

void apply_k_transpose(const Eigen::VectorXd& in, std::size_t samples, Eigen::VectorXd& out) {
  const auto& k = kernels::active();
  const std::size_t m = samples - 1;
  out.resize(static_cast<Eigen::Index>(3 * samples));
  for (std::size_t block = 0; block < 3; ++block) {
    k.forward_difference_adjoint(in.data() + block * m, out.data() + block * samples, samples);
  }
}

ConstraintVector build_constraint_vector(const ReferencePhantom& ref, std::size_t samples) {
  ref.validate();
  if (samples < 2) throw ParameterError("constraint vector needs at least 2 samples");
  const auto m = static_cast<Eigen::Index>(samples);
  ConstraintVector c;
  c.beta.resize(3 * m);
  c.beta.segment(0, m).setConstant(-db_to_np(ref.alpha_db));
  c.beta.segment(m, m).setConstant(kMinLogBscRatio);
  c.beta.segment(2 * m, m).setConstant(-ref.n);
  return c;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double tau) {
  if (!(tau >= 0.0)) throw ParameterError("soft_threshold: tau must be >= 0");
  Eigen::VectorXd out(v.size());
  kernels::active().soft_threshold(v.data(), tau, out.data(), static_cast<std::size_t>(v.size()));
  return out;
}

Eigen::VectorXd clip_to_min(const Eigen::VectorXd& v, const Eigen::VectorXd& beta) {
  if (v.size() != beta.size()) {
    throw DimensionError("clip_to_min: length " + std::to_string(v.size()) + " vs bound length " +
                         std::to_string(beta.size()));
  }
  Eigen::VectorXd out(v.size());
  kernels::active().clip_min(v.data(), beta.data(), out.data(), static_cast<std::size_t>(v.size()));
  return out;
}

double smooth_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& t, const SystemMatrix& h,
                   const RegularizerSpec& spec) {
  check_dims(x, t, h, spec);
  const auto& k = kernels::active();
  const Eigen::VectorXd hx = h.apply(x);
  const double data = 0.5 * k.squared_distance(hx.data(), t.data(), static_cast<std::size_t>(t.size()));
  Eigen::VectorXd kx;
  apply_k(x, spec.samples(), kx);
  const std::size_t m = spec.samples() - 1;
  return data + spec.lambda1() * k.dot(kx.data(), kx.data(), m);
}

double cost_admm(const Eigen::VectorXd& x, const Eigen::VectorXd& t, const SystemMatrix& h,
                 const RegularizerSpec& spec) {
  check_dims(x, t, h, spec);
  const auto& k = kernels::active();
  const Eigen::VectorXd hx = h.apply(x);
  const double data = 0.5 * k.squared_distance(hx.data(), t.data(), static_cast<std::size_t>(t.size()));
  Eigen::VectorXd kx;
  apply_k(x, spec.samples(), kx);
  const std::size_t m = spec.samples() - 1;
  const double l2 = k.dot(kx.data(), kx.data(), m);
  const double l1 = k.abs_sum(kx.data() + m, 2 * m);
  return data + spec.lambda1() * l2 + spec.lambda2() * l1;
}

Eigen::VectorXd smooth_cost_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& t,
                                     const SystemMatrix& h, const RegularizerSpec& spec) {
  check_dims(x, t, h, spec);
  const Eigen::VectorXd residual = h.apply(x) - t;
  Eigen::VectorXd grad = h.sparse().transpose() * residual;
  const auto n = static_cast<Eigen::Index>(spec.samples());
  const Eigen::VectorXd alpha = x.head(n);
  grad.head(n) += 2.0 * spec.lambda1() * (spec.k1().transpose() * (spec.k1() * alpha));
  return grad;
}

}  // namespace qus
