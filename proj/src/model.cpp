#include "qus/model.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "qus/error.hpp"
#include "qus/kernels.hpp"

namespace qus {
namespace {

void require_increasing_positive(const std::vector<double>& v, const char* what) {
  if (v.size() < 2) {
    throw ParameterError(std::string(what) + ": need at least 2 samples, got " +
                         std::to_string(v.size()));
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || v[i] <= 0.0) {
      throw ParameterError(std::string(what) + "[" + std::to_string(i) +
                           "] must be finite and > 0");
    }
    if (i > 0 && !(v[i] > v[i - 1])) {
      throw ParameterError(std::string(what) + " must be strictly increasing (index " +
                           std::to_string(i) + ")");
    }
  }
}

}  // namespace

double db_to_np(double alpha_db) noexcept { return alpha_db / kDbPerNeper; }
double np_to_db(double alpha_np) noexcept { return alpha_np * kDbPerNeper; }

AcquisitionGrid::AcquisitionGrid(std::vector<double> frequencies_mhz,
                                 std::vector<double> depths_cm, std::vector<double> lateral_cm)
    : frequencies_(std::move(frequencies_mhz)),
      depths_(std::move(depths_cm)),
      lateral_(std::move(lateral_cm)) {
  require_increasing_positive(frequencies_, "frequencies");
  require_increasing_positive(depths_, "depths");
  if (lateral_.empty()) throw ParameterError("lateral_positions: need at least one line");
  for (double x : lateral_) {
    if (!std::isfinite(x)) throw ParameterError("lateral_positions must be finite");
  }
  log_frequencies_.reserve(frequencies_.size());
  for (double f : frequencies_) log_frequencies_.push_back(std::log(f));
}

void ReferencePhantom::validate() const {
  if (!(b > 0.0) || !std::isfinite(b)) throw ParameterError("reference b must be > 0");
  if (!(alpha_db >= 0.0) || !std::isfinite(alpha_db)) {
    throw ParameterError("reference alpha must be >= 0");
  }
  if (!(n >= 0.0) || !std::isfinite(n)) throw ParameterError("reference n must be >= 0");
}

Eigen::VectorXd pack(const ParameterLine& params) {
  const std::size_t count = params.alpha_np.size();
  if (params.b.size() != count || params.n.size() != count) {
    throw DimensionError("ParameterLine blocks have different lengths");
  }
  const auto m = static_cast<Eigen::Index>(count);
  Eigen::VectorXd x(3 * m);
  for (Eigen::Index j = 0; j < m; ++j) {
    x[j] = params.alpha_np[j];
    x[m + j] = params.b[j];
    x[2 * m + j] = params.n[j];
  }
  return x;
}

ParameterLine unpack(const Eigen::VectorXd& x, const ReferencePhantom& reference) {
  if (x.size() % 3 != 0) throw DimensionError("packed vector length is not a multiple of 3");
  const Eigen::Index m = x.size() / 3;
  ParameterLine p;
  p.reference = reference;
  p.alpha_np.assign(x.data(), x.data() + m);
  p.b.assign(x.data() + m, x.data() + 2 * m);
  p.n.assign(x.data() + 2 * m, x.data() + 3 * m);
  return p;
}

AbsoluteParameters absolute_parameters(const ParameterLine& params) {
  if (params.b.size() != params.size() || params.n.size() != params.size()) {
    throw DimensionError("ParameterLine blocks have different lengths");
  }
  const ReferencePhantom& ref = params.reference;
  AbsoluteParameters out;
  out.alpha_db.reserve(params.size());
  out.b.reserve(params.size());
  out.n.reserve(params.size());
  for (std::size_t j = 0; j < params.size(); ++j) {
    out.alpha_db.push_back(np_to_db(params.alpha_np[j]) + ref.alpha_db);
    out.b.push_back(ref.b * std::exp(params.b[j]));
    out.n.push_back(params.n[j] + ref.n);
  }
  return out;
}

ParameterLine differential_parameters(const AbsoluteParameters& absolute,
                                      const ReferencePhantom& reference) {
  const std::size_t count = absolute.alpha_db.size();
  if (absolute.b.size() != count || absolute.n.size() != count) {
    throw DimensionError("AbsoluteParameters blocks have different lengths");
  }
  ParameterLine p;
  p.reference = reference;
  for (std::size_t j = 0; j < count; ++j) {
    if (!(absolute.b[j] > 0.0)) throw DomainError("absolute b must be > 0");
    p.alpha_np.push_back(db_to_np(absolute.alpha_db[j] - reference.alpha_db));
    p.b.push_back(std::log(absolute.b[j] / reference.b));
    p.n.push_back(absolute.n[j] - reference.n);
  }
  return p;
}

SpectralRatioField::SpectralRatioField(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (!values_.allFinite()) throw DomainError("spectral ratio field has non-finite entries");
}

Eigen::VectorXd SpectralRatioField::observation() const {
  return Eigen::Map<const Eigen::VectorXd>(values_.data(), values_.size());
}

SpectralRatioField log_spectral_ratio(const SpectrumLine& target, const SpectrumLine& reference,
                                      std::size_t line_index) {
  if (target.rows() != reference.rows() || target.cols() != reference.cols()) {
    throw DimensionError("target and reference spectra have different shapes");
  }
  Eigen::MatrixXd out(target.rows(), target.cols());
  for (Eigen::Index j = 0; j < target.cols(); ++j) {
    for (Eigen::Index i = 0; i < target.rows(); ++i) {
      const double st = target(i, j);
      const double sr = reference(i, j);
      if (!(st > 0.0) || !(sr > 0.0) || !std::isfinite(st) || !std::isfinite(sr)) {
        std::ostringstream msg;
        msg << "nonpositive or non-finite power spectrum at (line " << line_index << ", depth "
            << j << ", frequency " << i << "): "
            << (!(st > 0.0) || !std::isfinite(st) ? "target" : "reference");
        throw DomainError(msg.str());
      }
      out(i, j) = std::log(st / sr);
    }
  }
  return SpectralRatioField(std::move(out));
}

SpectralRatioField forward_model(const ParameterLine& params, const AcquisitionGrid& grid) {
  if (params.size() != grid.depth_count() || params.b.size() != params.size() ||
      params.n.size() != params.size()) {
    throw DimensionError("parameter line length does not match grid depth count");
  }
  const auto f = grid.frequencies();
  const auto z = grid.depths();
  Eigen::MatrixXd out(grid.frequency_count(), grid.depth_count());
  for (std::size_t j = 0; j < z.size(); ++j) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      out(i, j) = params.b[j] + params.n[j] * std::log(f[i]) - 4.0 * params.alpha_np[j] * f[i] * z[j];
    }
  }
  return SpectralRatioField(std::move(out));
}

SystemMatrix::SystemMatrix(std::vector<double> frequencies_mhz, std::vector<double> depths_cm)
    : frequencies_(std::move(frequencies_mhz)), depths_(std::move(depths_cm)) {
  if (frequencies_.empty() || depths_.empty()) {
    throw ParameterError("system matrix needs at least one frequency and one depth");
  }
  for (double f : frequencies_) {
    if (!(f > 0.0)) throw ParameterError("frequencies must be > 0");
    log_frequencies_.push_back(std::log(f));
  }
  assemble();
}

void SystemMatrix::assemble() {
  const std::size_t nf = frequencies_.size();
  const std::size_t nd = depths_.size();
  const auto nd_i = static_cast<Eigen::Index>(nd);
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(3 * nf * nd);
  for (std::size_t j = 0; j < nd; ++j) {
    for (std::size_t i = 0; i < nf; ++i) {
      const auto row = static_cast<Eigen::Index>(j * nf + i);
      const double w = row_weights_.empty() ? 1.0 : row_weights_[static_cast<std::size_t>(row)];
      const auto col = static_cast<Eigen::Index>(j);
      entries.emplace_back(row, col, w * (-4.0 * frequencies_[i] * depths_[j]));
      entries.emplace_back(row, nd_i + col, w * 1.0);
      entries.emplace_back(row, 2 * nd_i + col, w * log_frequencies_[i]);
    }
  }
  sparse_.resize(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
  sparse_.setFromTriplets(entries.begin(), entries.end());
  sparse_.makeCompressed();
}

SystemMatrix SystemMatrix::weighted(std::span<const double> weights) const {
  if (weights.size() != rows()) {
    throw DimensionError("row weight count " + std::to_string(weights.size()) +
                         " does not match system rows " + std::to_string(rows()));
  }
  SystemMatrix out = *this;
  out.row_weights_.assign(weights.begin(), weights.end());
  if (is_weighted()) {
    for (std::size_t r = 0; r < out.row_weights_.size(); ++r) out.row_weights_[r] *= row_weights_[r];
  }
  out.assemble();
  return out;
}

Eigen::VectorXd SystemMatrix::apply(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != cols()) {
    throw DimensionError("SystemMatrix::apply: vector length mismatch");
  }
  const auto& k = kernels::active();
  const std::size_t nf = frequencies_.size();
  const std::size_t nd = depths_.size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows()));
  for (std::size_t j = 0; j < nd; ++j) {
    const double alpha = x[static_cast<Eigen::Index>(j)];
    const double b = x[static_cast<Eigen::Index>(nd + j)];
    const double n = x[static_cast<Eigen::Index>(2 * nd + j)];
    k.model_column(b, n, -4.0 * alpha * depths_[j], frequencies_.data(), log_frequencies_.data(),
                   out.data() + j * nf, nf);
  }
  if (is_weighted()) {
    for (std::size_t r = 0; r < row_weights_.size(); ++r) {
      out[static_cast<Eigen::Index>(r)] *= row_weights_[r];
    }
  }
  return out;
}

Eigen::SparseMatrix<double> SystemMatrix::gram() const {
  Eigen::SparseMatrix<double> g = sparse_.transpose() * sparse_;
  g.makeCompressed();
  return g;
}

SystemMatrix build_system_matrix(const AcquisitionGrid& grid) {
  return SystemMatrix({grid.frequencies().begin(), grid.frequencies().end()},
                      {grid.depths().begin(), grid.depths().end()});
}

}  // namespace qus
