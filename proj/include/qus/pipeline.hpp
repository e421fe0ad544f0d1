#pragma once

// simulate -> estimate -> evaluate over a RunConfig. All artifacts live in
// one output directory:
//
//   target_spectra.csv, reference_spectra.csv, truth.csv   (simulate)
//   ratio_field.csv, map_<method>.csv, convergence_<method>.csv (estimate)
//   metrics.csv                                            (evaluate)
//   map_sweep_g<gamma>.csv, convergence_sweep_g<gamma>.csv,
//   sweep_metrics.csv                                      (sweep)

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qus/config.hpp"
#include "qus/csv_io.hpp"

namespace qus::pipeline {

inline constexpr const char* kTargetSpectraFile = "target_spectra.csv";
inline constexpr const char* kReferenceSpectraFile = "reference_spectra.csv";
inline constexpr const char* kTruthFile = "truth.csv";
inline constexpr const char* kRatioFile = "ratio_field.csv";
inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kSweepMetricsFile = "sweep_metrics.csv";

std::string map_file(std::string_view method);
std::string convergence_file(std::string_view method);
/// Method label used for one gamma of a sweep, e.g. "sweep_g100".
std::string sweep_label(double gamma);

struct EstimateSummary {
  std::string method;
  std::size_t lines = 0;
  std::size_t unconverged = 0;
};

/// Worker count used when `jobs` is 0.
unsigned default_jobs() noexcept;

/// Writes target/reference spectra and truth. Creates `out` if needed.
void simulate(const RunConfig& config, const std::filesystem::path& out);

/// Reads both spectra files from `out` and returns the per-line ratio fields.
/// Throws DimensionError if the files disagree with the config grid.
std::vector<SpectralRatioField> load_ratio_fields(const RunConfig& config,
                                                  const std::filesystem::path& out);

/// Solves every line with one configured method and writes its map and
/// convergence CSVs. Lines run on `jobs` workers; output order is by line.
EstimateSummary estimate(const RunConfig& config, const MethodConfig& method,
                         const std::filesystem::path& out, unsigned jobs = 0);

/// Per-line estimates without touching the filesystem.
std::vector<csv::LineEstimate> estimate_lines(const RunConfig& config, const MethodConfig& method,
                                              const std::vector<SpectralRatioField>& ratios,
                                              unsigned jobs = 0);

/// Bias/variance of every configured method's map against the phantom;
/// writes metrics.csv and returns the reports in method order.
std::vector<std::pair<std::string, MetricsReport>> evaluate(const RunConfig& config,
                                                            const std::filesystem::path& out);

/// C-ADMM at each gamma, based on the configured method `base` (must be
/// cadmm). Writes one map/convergence pair per gamma and, when ROIs are
/// configured, sweep_metrics.csv.
std::vector<EstimateSummary> sweep(const RunConfig& config, const MethodConfig& base,
                                   std::span<const double> gammas,
                                   const std::filesystem::path& out, unsigned jobs = 0);

}  // namespace qus::pipeline
