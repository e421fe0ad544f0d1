// qus: simulate, estimate and evaluate QUS parameter maps from a JSON config.
//
// Exit codes: 0 success, 2 some line hit max_iters (results still written),
// 64 usage error, 65 data or config error, 74 I/O error.

#include <charconv>
#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qus/config.hpp"
#include "qus/error.hpp"
#include "qus/kernels.hpp"
#include "qus/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotConverged = 2;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitIo = 74;

std::vector<double> parse_gammas(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string_view field(text.data() + start, comma - start);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || !(value >= 0.0)) {
      throw qus::UsageError("--gammas: '" + std::string(field) +
                            "' is not a non-negative number");
    }
    out.push_back(value);
    start = comma + 1;
  }
  return out;
}

int report(const std::vector<qus::pipeline::EstimateSummary>& summaries) {
  int code = kExitOk;
  for (const auto& s : summaries) {
    std::cerr << s.method << ": " << s.lines << " lines";
    if (s.unconverged > 0) {
      std::cerr << ", " << s.unconverged << " hit max_iters";
      code = kExitNotConverged;
    }
    std::cerr << '\n';
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantitative ultrasound parameter estimation (LS, ADMM, C-ADMM)"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  unsigned jobs = 0;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "Output directory (overrides output_dir in the config)");
  app.add_option("--jobs", jobs, "Worker threads for per-line solves (0 = all processors)");
  app.add_option("--seed", seed, "RNG seed (overrides the config)");

  auto* simulate = app.add_subcommand("simulate", "Write synthetic target/reference spectra and truth");
  auto* estimate = app.add_subcommand("estimate", "Solve every scan line with one or all methods");
  std::string method;
  estimate->add_option("--method", method, "Configured method name (default: all methods)");
  auto* evaluate = app.add_subcommand("evaluate", "Bias/variance per ROI for every configured method");
  auto* sweep = app.add_subcommand("sweep", "C-ADMM over a list of gamma values");
  std::string gammas_text;
  std::string sweep_method;
  sweep->add_option("--gammas", gammas_text, "Comma-separated gamma values")->required();
  sweep->add_option("--method", sweep_method, "cadmm method to base the sweep on (default: first)");
  for (auto* sub : {simulate, estimate, evaluate, sweep}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    qus::RunConfig config = qus::load_config(config_path);
    if (seed) config.seed = *seed;
    const std::filesystem::path out = out_dir.empty() ? config.output_dir : std::filesystem::path(out_dir);
    std::cerr << "kernels: " << qus::kernels::isa_name(qus::kernels::active().isa) << '\n';

    if (*simulate) {
      qus::pipeline::simulate(config, out);
      return kExitOk;
    }
    if (*estimate) {
      std::vector<const qus::MethodConfig*> selected;
      if (method.empty()) {
        for (const auto& m : config.methods) selected.push_back(&m);
      } else {
        const qus::MethodConfig* m = config.find_method(method);
        if (m == nullptr) throw qus::UsageError("unknown method '" + method + "'");
        selected.push_back(m);
      }
      std::vector<qus::pipeline::EstimateSummary> summaries;
      for (const auto* m : selected) summaries.push_back(qus::pipeline::estimate(config, *m, out, jobs));
      return report(summaries);
    }
    if (*evaluate) {
      qus::pipeline::evaluate(config, out);
      return kExitOk;
    }
    if (*sweep) {
      const std::vector<double> gammas = parse_gammas(gammas_text);
      const qus::MethodConfig* base = nullptr;
      if (sweep_method.empty()) {
        for (const auto& m : config.methods) {
          if (m.type == qus::MethodType::cadmm) {
            base = &m;
            break;
          }
        }
        if (base == nullptr) throw qus::UsageError("sweep: the config has no cadmm method");
      } else {
        base = config.find_method(sweep_method);
        if (base == nullptr) throw qus::UsageError("unknown method '" + sweep_method + "'");
      }
      return report(qus::pipeline::sweep(config, *base, gammas, out, jobs));
    }
  } catch (const qus::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const qus::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const qus::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
