#include "qus/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "qus/error.hpp"

namespace qus::pipeline {
namespace {

namespace fs = std::filesystem;

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

// Runs body(i) for i in [0, count) on up to `jobs` threads. If any call
// throws, the exception from the lowest index is rethrown.
template <class Body>
void parallel_for(std::size_t count, unsigned jobs, Body&& body) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(count, jobs == 0 ? default_jobs() : jobs));
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
          try {
            body(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

void check_axis(std::span<const double> file, std::span<const double> config, const char* what,
                const fs::path& path) {
  bool same = file.size() == config.size();
  for (std::size_t i = 0; same && i < file.size(); ++i) same = close(file[i], config[i]);
  if (!same) {
    throw DimensionError(path.string() + ": " + what + " sampling does not match the config grid");
  }
}

csv::SampledLines load_spectra(const RunConfig& config, const fs::path& path) {
  csv::SampledLines s = csv::read_spectra(path);
  check_axis(s.frequencies, config.grid.frequencies(), "frequency", path);
  check_axis(s.depths, config.grid.depths(), "depth", path);
  if (s.lines.size() != config.grid.line_count()) {
    throw DimensionError(path.string() + ": " + std::to_string(s.lines.size()) +
                         " lines, config grid has " + std::to_string(config.grid.line_count()));
  }
  return s;
}

void check_field(const ParameterField& field, const RunConfig& config, const fs::path& path) {
  check_axis(field.depth_cm, config.grid.depths(), "depth", path);
  check_axis(field.lateral_cm, config.grid.lateral_positions(), "lateral", path);
}

SolveResult solve_line(const SystemMatrix& h, const Eigen::VectorXd& t, const MethodConfig& method,
                       const SolverConfig& solver) {
  switch (method.type) {
    case MethodType::ls: {
      if (solver.freq_weights.empty()) return solve_least_squares(h, t, method.ridge, solver.beta);
      Eigen::VectorXd tw = t;
      for (std::size_t r = 0; r < solver.freq_weights.size(); ++r) {
        tw[static_cast<Eigen::Index>(r)] *= solver.freq_weights[r];
      }
      return solve_least_squares(h.weighted(solver.freq_weights), tw, method.ridge, solver.beta);
    }
    case MethodType::admm:
      return solve_admm(h, t, solver);
    case MethodType::cadmm:
      return solve_cadmm(h, t, solver);
  }
  throw UsageError("unknown method type");
}

std::size_t count_unconverged(const std::vector<csv::LineEstimate>& lines) {
  return static_cast<std::size_t>(std::count_if(
      lines.begin(), lines.end(), [](const csv::LineEstimate& l) { return !l.result.converged; }));
}

void write_ratio_fields(const RunConfig& config, const std::vector<SpectralRatioField>& ratios,
                        const fs::path& out) {
  csv::write_ratio(out / kRatioFile, ratios, config.grid);
}

}  // namespace

std::string map_file(std::string_view method) { return "map_" + std::string(method) + ".csv"; }

std::string convergence_file(std::string_view method) {
  return "convergence_" + std::string(method) + ".csv";
}

std::string sweep_label(double gamma) { return "sweep_g" + csv::format_number(gamma); }

unsigned default_jobs() noexcept { return std::max(1u, std::thread::hardware_concurrency()); }

void simulate(const RunConfig& config, const fs::path& out) {
  ensure_directory(out);
  const PowerSpectra target = simulate_spectra(config.phantom, config.grid, config.target_noise());
  const PhantomSpec reference_phantom =
      PhantomSpec::uniform(config.reference.alpha_db, config.reference.b, config.reference.n,
                           config.grid.depth_count());
  const PowerSpectra reference =
      simulate_spectra(reference_phantom, config.grid, config.reference_noise());
  csv::write_spectra(out / kTargetSpectraFile, target, config.grid);
  csv::write_spectra(out / kReferenceSpectraFile, reference, config.grid);
  csv::write_truth(out / kTruthFile, truth_field(config.phantom, config.grid));
}

std::vector<SpectralRatioField> load_ratio_fields(const RunConfig& config, const fs::path& out) {
  const csv::SampledLines target = load_spectra(config, out / kTargetSpectraFile);
  const csv::SampledLines reference = load_spectra(config, out / kReferenceSpectraFile);
  std::vector<SpectralRatioField> ratios;
  ratios.reserve(target.lines.size());
  for (std::size_t l = 0; l < target.lines.size(); ++l) {
    ratios.push_back(log_spectral_ratio(target.lines[l], reference.lines[l], l));
  }
  return ratios;
}

std::vector<csv::LineEstimate> estimate_lines(const RunConfig& config, const MethodConfig& method,
                                              const std::vector<SpectralRatioField>& ratios,
                                              unsigned jobs) {
  const SystemMatrix h = build_system_matrix(config.grid);
  const SolverConfig solver = config.solver_config(method);
  std::vector<csv::LineEstimate> lines(ratios.size());
  parallel_for(ratios.size(), jobs, [&](std::size_t l) {
    lines[l].line_index = l;
    lines[l].lateral_cm = config.grid.lateral_positions()[l];
    lines[l].result = solve_line(h, ratios[l].observation(), method, solver);
  });
  return lines;
}

EstimateSummary estimate(const RunConfig& config, const MethodConfig& method, const fs::path& out,
                         unsigned jobs) {
  ensure_directory(out);
  const std::vector<SpectralRatioField> ratios = load_ratio_fields(config, out);
  write_ratio_fields(config, ratios, out);
  const std::vector<csv::LineEstimate> lines = estimate_lines(config, method, ratios, jobs);
  csv::write_parameter_map(out / map_file(method.name), lines, config.grid.depths(),
                           config.reference);
  csv::write_convergence(out / convergence_file(method.name), lines);
  return EstimateSummary{method.name, lines.size(), count_unconverged(lines)};
}

std::vector<std::pair<std::string, MetricsReport>> evaluate(const RunConfig& config,
                                                            const fs::path& out) {
  if (config.rois.empty()) throw ConfigError("evaluate: the config defines no ROIs");
  std::vector<std::pair<std::string, MetricsReport>> reports;
  for (const MethodConfig& m : config.methods) {
    const fs::path path = out / map_file(m.name);
    if (!fs::exists(path)) {
      throw IoError("missing estimate for method '" + m.name + "': " + path.string() +
                    " (run estimate first)");
    }
    const ParameterField field = csv::read_parameter_map(path);
    check_field(field, config, path);
    reports.emplace_back(m.name, compute_metrics(field, config.phantom, config.rois));
  }
  csv::write_metrics(out / kMetricsFile, reports);
  return reports;
}

std::vector<EstimateSummary> sweep(const RunConfig& config, const MethodConfig& base,
                                   std::span<const double> gammas, const fs::path& out,
                                   unsigned jobs) {
  if (base.type != MethodType::cadmm) {
    throw UsageError("sweep: method '" + base.name + "' is not a cadmm method");
  }
  if (gammas.empty()) throw UsageError("sweep: empty gamma list");
  ensure_directory(out);
  const std::vector<SpectralRatioField> ratios = load_ratio_fields(config, out);
  const SystemMatrix h = build_system_matrix(config.grid);
  const SolverConfig solver = config.solver_config(base);

  // per_gamma[g][line]
  std::vector<std::vector<csv::LineEstimate>> per_gamma(
      gammas.size(), std::vector<csv::LineEstimate>(ratios.size()));
  parallel_for(ratios.size(), jobs, [&](std::size_t l) {
    std::vector<SolveResult> results = sweep_gamma(h, ratios[l].observation(), solver, gammas);
    for (std::size_t g = 0; g < gammas.size(); ++g) {
      per_gamma[g][l] = csv::LineEstimate{l, config.grid.lateral_positions()[l], std::move(results[g])};
    }
  });

  std::vector<EstimateSummary> summaries;
  std::vector<std::pair<std::string, MetricsReport>> reports;
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    const std::string label = sweep_label(gammas[g]);
    csv::write_parameter_map(out / map_file(label), per_gamma[g], config.grid.depths(),
                             config.reference);
    csv::write_convergence(out / convergence_file(label), per_gamma[g]);
    summaries.push_back(EstimateSummary{label, ratios.size(), count_unconverged(per_gamma[g])});
    if (!config.rois.empty()) {
      const ParameterField field = csv::read_parameter_map(out / map_file(label));
      reports.emplace_back(label, compute_metrics(field, config.phantom, config.rois));
    }
  }
  if (!config.rois.empty()) csv::write_metrics(out / kSweepMetricsFile, reports);
  return summaries;
}

}  // namespace qus::pipeline
