#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qus/metrics.hpp"
#include "qus/model.hpp"
#include "qus/phantom.hpp"
#include "qus/solvers.hpp"

namespace qus {

enum class MethodType { ls, admm, cadmm };

std::string_view method_type_name(MethodType t) noexcept;
std::optional<MethodType> parse_method_type(std::string_view name) noexcept;

struct MethodConfig {
  std::string name;
  MethodType type = MethodType::ls;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double rho = 1.0;
  double gamma = 0.0;
  int max_iters = 2000;
  double tol_primal = 1e-6;
  double tol_dual = 1e-6;
  double ridge = 1e-12;
  bool paper_exact_updates = false;
};

struct RunConfig {
  AcquisitionGrid grid;
  PhantomSpec phantom;
  ReferencePhantom reference;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::vector<MethodConfig> methods;
  std::vector<RegionOfInterest> rois;
  std::filesystem::path output_dir;
  /// Per-frequency data weights, expanded to every depth; empty = identity.
  std::vector<double> frequency_weights;

  const MethodConfig* find_method(std::string_view name) const noexcept;
  SolverConfig solver_config(const MethodConfig& method) const;
  NoiseSpec target_noise() const noexcept;
  /// Independent stream for the reference acquisition.
  NoiseSpec reference_noise() const noexcept;
};

/// Parses and validates a JSON run configuration. Errors are ConfigError
/// with the JSON pointer of the offending field (or the line and column of a
/// syntax error) prefixed by `source`.
RunConfig parse_config(std::string_view json_text, std::string_view source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

}  // namespace qus
