#include "qus/metrics.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "qus/error.hpp"

namespace qus {
namespace {

constexpr double kEdgeSlack = 1e-9;

bool inside(double value, double lo, double hi) {
  return value >= lo - kEdgeSlack && value <= hi + kEdgeSlack;
}

}  // namespace

double bsc_to_db(double b) {
  if (!(b > 0.0)) throw DomainError("bsc_to_db: b must be > 0");
  return 10.0 * std::log10(b);
}

ParameterField truth_field(const PhantomSpec& phantom, const AcquisitionGrid& grid) {
  phantom.validate();
  if (phantom.depth_count() != grid.depth_count()) {
    throw DimensionError("phantom depth count does not match grid");
  }
  ParameterField f;
  f.lateral_cm.assign(grid.lateral_positions().begin(), grid.lateral_positions().end());
  f.depth_cm.assign(grid.depths().begin(), grid.depths().end());
  const auto lines = static_cast<Eigen::Index>(grid.line_count());
  const auto depths = static_cast<Eigen::Index>(grid.depth_count());
  f.alpha_db.resize(lines, depths);
  f.b.resize(lines, depths);
  f.n.resize(lines, depths);
  for (Eigen::Index j = 0; j < depths; ++j) {
    f.alpha_db.col(j).setConstant(phantom.alpha_db[static_cast<std::size_t>(j)]);
    f.b.col(j).setConstant(phantom.b[static_cast<std::size_t>(j)]);
    f.n.col(j).setConstant(phantom.n[static_cast<std::size_t>(j)]);
  }
  return f;
}

std::string_view parameter_name(QusParameter p) noexcept {
  switch (p) {
    case QusParameter::alpha_db:
      return "alpha_db";
    case QusParameter::b_db:
      return "b_db";
    case QusParameter::n:
      return "n";
  }
  return "";
}

std::optional<QusParameter> parse_parameter(std::string_view name) noexcept {
  for (QusParameter p : {QusParameter::alpha_db, QusParameter::b_db, QusParameter::n}) {
    if (parameter_name(p) == name) return p;
  }
  return std::nullopt;
}

const MetricEntry& MetricsReport::at(std::string_view roi, QusParameter p) const {
  for (const MetricEntry& e : entries) {
    if (e.roi == roi && e.parameter == p) return e;
  }
  throw std::out_of_range("no metric for ROI " + std::string(roi) + " / " +
                          std::string(parameter_name(p)));
}

MetricsReport compute_metrics(const ParameterField& estimates, const PhantomSpec& truth,
                              const std::vector<RegionOfInterest>& rois) {
  truth.validate();
  const auto lines = static_cast<Eigen::Index>(estimates.line_count());
  const auto depths = static_cast<Eigen::Index>(estimates.depth_count());
  if (truth.depth_count() != estimates.depth_count()) {
    throw DimensionError("truth profile length does not match estimate depth count");
  }
  for (const Eigen::MatrixXd* m : {&estimates.alpha_db, &estimates.b, &estimates.n}) {
    if (m->rows() != lines || m->cols() != depths) {
      throw DimensionError("parameter field matrices do not match its coordinates");
    }
  }

  MetricsReport report;
  for (const RegionOfInterest& roi : rois) {
    std::array<double, 3> abs_sum{};
    std::array<double, 3> sq_sum{};
    std::size_t count = 0;
    for (Eigen::Index l = 0; l < lines; ++l) {
      if (!inside(estimates.lateral_cm[static_cast<std::size_t>(l)], roi.lateral_min_cm,
                  roi.lateral_max_cm)) {
        continue;
      }
      for (Eigen::Index j = 0; j < depths; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        if (!inside(estimates.depth_cm[jj], roi.depth_min_cm, roi.depth_max_cm)) continue;
        const std::array<double, 3> dev{
            estimates.alpha_db(l, j) - truth.alpha_db[jj],
            bsc_to_db(estimates.b(l, j)) - bsc_to_db(truth.b[jj]),
            estimates.n(l, j) - truth.n[jj],
        };
        for (std::size_t k = 0; k < 3; ++k) {
          abs_sum[k] += std::abs(dev[k]);
          sq_sum[k] += dev[k] * dev[k];
        }
        ++count;
      }
    }
    if (count == 0) throw ParameterError("ROI '" + roi.name + "' contains no samples");
    const QusParameter order[3] = {QusParameter::alpha_db, QusParameter::b_db, QusParameter::n};
    for (std::size_t k = 0; k < 3; ++k) {
      report.entries.push_back(MetricEntry{roi.name, order[k], abs_sum[k] / count,
                                           sq_sum[k] / count, count});
    }
  }
  return report;
}

}  // namespace qus
