#pragma once

#include <cstdint>
#include <vector>

#include "qus/model.hpp"

namespace qus {

/// A depth band where ln S is raised by `boost_db` (power dB) at every
/// frequency, standing in for a specular reflector.
struct Reflector {
  double depth_center_cm = 1.0;
  double axial_extent_cm = 0.2;
  double boost_db = 20.0;
};

/// Per-depth tissue description. alpha in dB/cm/MHz, b in 1/(cm sr).
struct PhantomSpec {
  std::vector<double> alpha_db;
  std::vector<double> b;
  std::vector<double> n;
  std::vector<Reflector> reflectors;

  std::size_t depth_count() const noexcept { return alpha_db.size(); }

  static PhantomSpec uniform(double alpha_db, double b, double n, std::size_t depth_count,
                             std::vector<Reflector> reflectors = {});

  /// Throws ParameterError on ragged profiles, nonpositive b or a reflector
  /// with negative extent.
  void validate() const;
};

/// Additive Gaussian noise on ln S.
struct NoiseSpec {
  double log_domain_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Power spectra for every scan line of a grid.
struct PowerSpectra {
  std::vector<SpectrumLine> lines;
};

Reflector default_reflector();

/// Uniform phantom with alpha_t = 0.6035 dB/cm/MHz, b_t = 2.996e-6 1/(cm sr)
/// and n_t = 3.428, with one reflector band near 10 mm by default.
PhantomSpec gammex_phantom(std::size_t depth_count,
                           std::vector<Reflector> reflectors = {default_reflector()});

/// Stateless 64-bit mix used to derive per-line and per-acquisition seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// S(z_j, f_i) = b_j f_i^n_j exp(-4 alpha_j f_i z_j) exp(eps) with
/// eps ~ N(0, sigma^2), plus reflector boosts. Line l draws its noise from
/// mix_seed(noise.seed, l), so lines are reproducible independently.
PowerSpectra simulate_spectra(const PhantomSpec& phantom, const AcquisitionGrid& grid,
                              const NoiseSpec& noise);

/// Noise-free ln S for one line, without reflectors.
Eigen::MatrixXd log_spectrum_model(const PhantomSpec& phantom, const AcquisitionGrid& grid);

}  // namespace qus
