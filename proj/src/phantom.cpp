#include "qus/phantom.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "qus/error.hpp"

namespace qus {
namespace {

// Box-Muller over mt19937_64.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace

PhantomSpec PhantomSpec::uniform(double alpha_db, double b, double n, std::size_t depth_count,
                                 std::vector<Reflector> reflectors) {
  PhantomSpec p;
  p.alpha_db.assign(depth_count, alpha_db);
  p.b.assign(depth_count, b);
  p.n.assign(depth_count, n);
  p.reflectors = std::move(reflectors);
  return p;
}

void PhantomSpec::validate() const {
  if (b.size() != alpha_db.size() || n.size() != alpha_db.size()) {
    throw ParameterError("phantom profiles have different lengths");
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (!(b[j] > 0.0) || !std::isfinite(b[j])) {
      throw ParameterError("phantom b[" + std::to_string(j) + "] must be > 0");
    }
    if (!std::isfinite(alpha_db[j]) || !std::isfinite(n[j])) {
      throw ParameterError("phantom profiles must be finite");
    }
  }
  for (const Reflector& r : reflectors) {
    if (!(r.axial_extent_cm >= 0.0) || !std::isfinite(r.depth_center_cm) ||
        !std::isfinite(r.boost_db)) {
      throw ParameterError("reflector must have a finite center, boost and extent >= 0");
    }
  }
}

Reflector default_reflector() { return Reflector{1.0, 0.2, 20.0}; }

PhantomSpec gammex_phantom(std::size_t depth_count, std::vector<Reflector> reflectors) {
  return PhantomSpec::uniform(0.6035, 2.996e-6, 3.428, depth_count, std::move(reflectors));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  // splitmix64 finalizer over the combined state
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Eigen::MatrixXd log_spectrum_model(const PhantomSpec& phantom, const AcquisitionGrid& grid) {
  phantom.validate();
  if (phantom.depth_count() != grid.depth_count()) {
    throw DimensionError("phantom depth count " + std::to_string(phantom.depth_count()) +
                         " does not match grid depth count " +
                         std::to_string(grid.depth_count()));
  }
  const auto f = grid.frequencies();
  const auto log_f = grid.log_frequencies();
  const auto z = grid.depths();
  Eigen::MatrixXd out(grid.frequency_count(), grid.depth_count());
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double log_b = std::log(phantom.b[j]);
    const double alpha = db_to_np(phantom.alpha_db[j]);
    for (std::size_t i = 0; i < f.size(); ++i) {
      out(i, j) = log_b + phantom.n[j] * log_f[i] - 4.0 * alpha * f[i] * z[j];
    }
  }
  return out;
}

PowerSpectra simulate_spectra(const PhantomSpec& phantom, const AcquisitionGrid& grid,
                              const NoiseSpec& noise) {
  if (!(noise.log_domain_sigma >= 0.0)) throw ParameterError("noise sigma must be >= 0");
  Eigen::MatrixXd clean = log_spectrum_model(phantom, grid);
  const auto z = grid.depths();
  for (const Reflector& r : phantom.reflectors) {
    const double boost = r.boost_db * std::numbers::ln10 / 10.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (std::abs(z[j] - r.depth_center_cm) <= 0.5 * r.axial_extent_cm + 1e-9) {
        clean.col(static_cast<Eigen::Index>(j)).array() += boost;
      }
    }
  }

  PowerSpectra out;
  out.lines.reserve(grid.line_count());
  for (std::size_t line = 0; line < grid.line_count(); ++line) {
    Eigen::MatrixXd log_s = clean;
    if (noise.log_domain_sigma > 0.0) {
      GaussianStream gauss(mix_seed(noise.seed, line));
      for (Eigen::Index j = 0; j < log_s.cols(); ++j) {
        for (Eigen::Index i = 0; i < log_s.rows(); ++i) {
          log_s(i, j) += noise.log_domain_sigma * gauss.next();
        }
      }
    }
    out.lines.push_back(log_s.array().exp().matrix());
  }
  return out;
}

}  // namespace qus
