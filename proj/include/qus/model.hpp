#pragma once

// Reference-phantom spectral-ratio model. For one scan line the log ratio of
// target to reference power spectra is linear in the per-depth parameters:
//
//   X(f, z) = b + n ln f - 4 alpha f z
//
// with alpha the differential mean attenuation (Np/cm/MHz), b = ln(b_t / b_r)
// and n = n_t - n_r.

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstddef>
#include <span>
#include <vector>

namespace qus {

/// 20 / ln(10): dB per neper.
inline constexpr double kDbPerNeper = 8.685889638065035;

double db_to_np(double alpha_db) noexcept;
double np_to_db(double alpha_np) noexcept;

/// Frequency and depth sampling of the inverse problem plus lateral line
/// positions. Frequencies in MHz, depths and lateral positions in cm.
class AcquisitionGrid {
 public:
  /// Throws ParameterError unless there are at least two strictly increasing,
  /// strictly positive frequencies and depths, and at least one line.
  AcquisitionGrid(std::vector<double> frequencies_mhz, std::vector<double> depths_cm,
                  std::vector<double> lateral_cm);

  std::span<const double> frequencies() const noexcept { return frequencies_; }
  std::span<const double> log_frequencies() const noexcept { return log_frequencies_; }
  std::span<const double> depths() const noexcept { return depths_; }
  std::span<const double> lateral_positions() const noexcept { return lateral_; }

  std::size_t frequency_count() const noexcept { return frequencies_.size(); }
  std::size_t depth_count() const noexcept { return depths_.size(); }
  std::size_t line_count() const noexcept { return lateral_.size(); }

 private:
  std::vector<double> frequencies_;
  std::vector<double> log_frequencies_;
  std::vector<double> depths_;
  std::vector<double> lateral_;
};

/// Known reference phantom. alpha_db in dB/cm/MHz, b in 1/(cm sr).
struct ReferencePhantom {
  double alpha_db = 0.0;
  double b = 1.0;
  double n = 0.0;

  /// Throws ParameterError if b <= 0, alpha_db < 0 or n < 0.
  void validate() const;
};

/// Differential parameters of one scan line, one entry per depth sample.
struct ParameterLine {
  std::vector<double> alpha_np;
  std::vector<double> b;
  std::vector<double> n;
  ReferencePhantom reference;

  std::size_t size() const noexcept { return alpha_np.size(); }
};

/// Absolute tissue parameters per depth sample.
struct AbsoluteParameters {
  std::vector<double> alpha_db;
  std::vector<double> b;
  std::vector<double> n;
};

/// Flattens to [alpha..., b..., n...]. Throws DimensionError on ragged input.
Eigen::VectorXd pack(const ParameterLine& params);
/// Inverse of pack. Throws DimensionError unless x.size() is a multiple of 3.
ParameterLine unpack(const Eigen::VectorXd& x, const ReferencePhantom& reference);

/// alpha_t = alpha + alpha_r (dB), b_t = b_r e^b, n_t = n + n_r.
AbsoluteParameters absolute_parameters(const ParameterLine& params);
/// Inverse of absolute_parameters.
ParameterLine differential_parameters(const AbsoluteParameters& absolute,
                                      const ReferencePhantom& reference);

/// Natural-log spectral ratio for one scan line. Rows are frequencies,
/// columns depths; in column-major storage the data is the depth-major
/// observation vector t.
class SpectralRatioField {
 public:
  SpectralRatioField() = default;
  /// Throws DomainError on any non-finite entry.
  explicit SpectralRatioField(Eigen::MatrixXd values);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  std::size_t frequency_count() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t depth_count() const noexcept { return static_cast<std::size_t>(values_.cols()); }

  /// Depth-major flattening: t[j * N_f + i] = X(f_i, z_j).
  Eigen::VectorXd observation() const;

 private:
  Eigen::MatrixXd values_;
};

/// Power spectra of one scan line (rows frequencies, columns depths).
using SpectrumLine = Eigen::MatrixXd;

/// ln(S_t / S_r) elementwise. Throws DimensionError on shape mismatch and
/// DomainError naming (line, depth, frequency) for a nonpositive entry.
SpectralRatioField log_spectral_ratio(const SpectrumLine& target, const SpectrumLine& reference,
                                      std::size_t line_index = 0);

/// Evaluates X(f_i, z_j) = b_j + n_j ln f_i - 4 alpha_j f_i z_j directly.
SpectralRatioField forward_model(const ParameterLine& params, const AcquisitionGrid& grid);

/// The linear map H from packed parameters to the depth-major observation
/// vector. Row j * N_f + i holds -4 f_i z_j, 1 and ln f_i in columns j,
/// N + j and 2N + j. Optional per-row weights scale each row.
class SystemMatrix {
 public:
  SystemMatrix(std::vector<double> frequencies_mhz, std::vector<double> depths_cm);

  std::size_t rows() const noexcept { return frequencies_.size() * depths_.size(); }
  std::size_t cols() const noexcept { return 3 * depths_.size(); }
  std::size_t frequency_count() const noexcept { return frequencies_.size(); }
  std::size_t depth_count() const noexcept { return depths_.size(); }
  std::span<const double> frequencies() const noexcept { return frequencies_; }
  std::span<const double> depths() const noexcept { return depths_; }

  /// Copy with rows premultiplied by `weights` (length rows()).
  SystemMatrix weighted(std::span<const double> weights) const;
  bool is_weighted() const noexcept { return !row_weights_.empty(); }
  std::span<const double> row_weights() const noexcept { return row_weights_; }

  const Eigen::SparseMatrix<double>& sparse() const noexcept { return sparse_; }

  /// H x using the structured kernel rather than the sparse product.
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

  /// H^T H.
  Eigen::SparseMatrix<double> gram() const;

 private:
  void assemble();

  std::vector<double> frequencies_;
  std::vector<double> log_frequencies_;
  std::vector<double> depths_;
  std::vector<double> row_weights_;
  Eigen::SparseMatrix<double> sparse_;
};

SystemMatrix build_system_matrix(const AcquisitionGrid& grid);

}  // namespace qus
