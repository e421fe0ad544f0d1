#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qus/phantom.hpp"

namespace qus {

/// 10 log10(b). Throws DomainError for b <= 0.
double bsc_to_db(double b);

/// Absolute parameter estimates over (line, depth). Matrices are
/// lines x depths; alpha in dB/cm/MHz, b in 1/(cm sr).
struct ParameterField {
  std::vector<double> lateral_cm;
  std::vector<double> depth_cm;
  Eigen::MatrixXd alpha_db;
  Eigen::MatrixXd b;
  Eigen::MatrixXd n;

  std::size_t line_count() const noexcept { return lateral_cm.size(); }
  std::size_t depth_count() const noexcept { return depth_cm.size(); }
};

/// Field holding the phantom's profiles on every line.
ParameterField truth_field(const PhantomSpec& phantom, const AcquisitionGrid& grid);

struct RegionOfInterest {
  std::string name;
  double lateral_min_cm = 0.0;
  double lateral_max_cm = 0.0;
  double depth_min_cm = 0.0;
  double depth_max_cm = 0.0;
};

enum class QusParameter { alpha_db, b_db, n };

std::string_view parameter_name(QusParameter p) noexcept;
std::optional<QusParameter> parse_parameter(std::string_view name) noexcept;

struct MetricEntry {
  std::string roi;
  QusParameter parameter = QusParameter::alpha_db;
  double bias = 0.0;      ///< mean |theta - theta_gt|
  double variance = 0.0;  ///< mean (theta - theta_gt)^2
  std::size_t samples = 0;
};

struct MetricsReport {
  /// Ordered by ROI (input order), then alpha, b, n.
  std::vector<MetricEntry> entries;

  /// Throws std::out_of_range if absent.
  const MetricEntry& at(std::string_view roi, QusParameter p) const;
};

/// Bias and variance about the ground truth, averaged over the samples whose
/// (lateral, depth) position falls inside each ROI (bounds inclusive). BSC is
/// compared in dB. Throws ParameterError for an empty ROI, DimensionError if
/// the truth profile length differs from the field's depth count.
MetricsReport compute_metrics(const ParameterField& estimates, const PhantomSpec& truth,
                              const std::vector<RegionOfInterest>& rois);

}  // namespace qus
