#pragma once

// CSV artifacts. Every file has a mandatory header row, '.' as decimal
// separator and '\n' line endings. Numbers are written with 9 significant
// digits, except raw power spectra (all columns) which use 17 so that they
// round-trip exactly.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qus/metrics.hpp"
#include "qus/model.hpp"
#include "qus/phantom.hpp"
#include "qus/solvers.hpp"

namespace qus::csv {

inline constexpr std::string_view kSpectraHeader = "line_index,depth_cm,freq_mhz,S";
inline constexpr std::string_view kRatioHeader = "line_index,depth_cm,freq_mhz,X";
inline constexpr std::string_view kSolveResultHeader =
    "depth_cm,alpha_np,b_log,n_diff,alpha_abs_db,b_abs,n_abs";
inline constexpr std::string_view kHistoryHeader = "iter,primal,dual,cost";
inline constexpr std::string_view kMapHeader =
    "line_index,lateral_cm,depth_cm,alpha_np,b_log,n_diff,alpha_abs_db,b_abs,n_abs";
inline constexpr std::string_view kConvergenceHeader = "line_index,iter,primal,dual,cost";
inline constexpr std::string_view kTruthHeader =
    "line_index,lateral_cm,depth_cm,alpha_abs_db,b_abs,n_abs";
inline constexpr std::string_view kMetricsHeader = "method,roi,parameter,bias,variance";

/// Shortest-form general formatting with `digits` significant digits.
std::string format_number(double value, int digits = 9);

/// Parsed sampling of a spectra or ratio file.
struct SampledLines {
  std::vector<double> frequencies;
  std::vector<double> depths;
  std::vector<Eigen::MatrixXd> lines;  ///< frequencies x depths per line
};

void write_spectra(const std::filesystem::path& path, const PowerSpectra& spectra,
                   const AcquisitionGrid& grid);
SampledLines read_spectra(const std::filesystem::path& path);

void write_ratio(const std::filesystem::path& path, const std::vector<SpectralRatioField>& lines,
                 const AcquisitionGrid& grid);
SampledLines read_ratio(const std::filesystem::path& path);

/// One scan line's estimate.
void write_solve_result(std::ostream& out, const SolveResult& result,
                        std::span<const double> depths, const ReferencePhantom& reference);
void write_history(std::ostream& out, const SolveResult& result);

struct LineEstimate {
  std::size_t line_index = 0;
  double lateral_cm = 0.0;
  SolveResult result;
};

void write_parameter_map(const std::filesystem::path& path, const std::vector<LineEstimate>& lines,
                         std::span<const double> depths, const ReferencePhantom& reference);
void write_convergence(const std::filesystem::path& path, const std::vector<LineEstimate>& lines);
/// Reads the absolute-parameter columns of a parameter map.
ParameterField read_parameter_map(const std::filesystem::path& path);

void write_truth(const std::filesystem::path& path, const ParameterField& truth);
ParameterField read_truth(const std::filesystem::path& path);

void write_metrics(const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, MetricsReport>>& reports);

}  // namespace qus::csv
