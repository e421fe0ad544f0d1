// Acceptance suite: one PASS/FAIL line per primary criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qus/config.hpp"
#include "qus/csv_io.hpp"
#include "qus/kernels.hpp"
#include "qus/metrics.hpp"
#include "qus/pipeline.hpp"
#include "qus/regularizers.hpp"
#include "qus/solvers.hpp"
#include "test_support.hpp"

using namespace qus;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("[%s] %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) { return csv::format_number(v, 4); }

fs::path work_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "qus_acceptance" / name;
  fs::remove_all(p);
  return p;
}

RunConfig adversarial() {
  return load_config(fs::path(QUS_SOURCE_DIR) / "configs" / "adversarial.json");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// simulate -> estimate (every method) -> evaluate
std::vector<std::pair<std::string, MetricsReport>> full_run(const RunConfig& c,
                                                            const fs::path& out) {
  pipeline::simulate(c, out);
  for (const MethodConfig& m : c.methods) (void)pipeline::estimate(c, m, out);
  return pipeline::evaluate(c, out);
}

const MetricsReport& report_of(const std::vector<std::pair<std::string, MetricsReport>>& all,
                               const std::string& method) {
  for (const auto& [name, r] : all) {
    if (name == method) return r;
  }
  throw std::runtime_error("no metrics for method " + method);
}

Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig c = adversarial();
  c.phantom.reflectors.clear();
  c.noise_sigma = 0.0;
  MethodConfig ls{.name = "ls", .type = MethodType::ls};
  MethodConfig admm{.name = "admm", .type = MethodType::admm};
  MethodConfig cadmm{.name = "cadmm", .type = MethodType::cadmm, .gamma = 100.0};
  c.methods = {ls, admm, cadmm};
  const fs::path out = work_dir("oracle");
  pipeline::simulate(c, out);
  double worst = 0.0;
  for (const MethodConfig& m : c.methods) {
    (void)pipeline::estimate(c, m, out);
    const ParameterField f = csv::read_parameter_map(out / pipeline::map_file(m.name));
    worst = std::max(worst, ((f.alpha_db.array() - 0.6035).abs() / 0.6035).maxCoeff());
    worst = std::max(worst, ((f.b.array() - 2.996e-6).abs() / 2.996e-6).maxCoeff());
    worst = std::max(worst, ((f.n.array() - 3.428).abs() / 3.428).maxCoeff());
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-5 && secs < 10.0,
          "max relative error " + fmt(worst) + " over ls/admm/cadmm (tol 1e-5), runtime " +
              fmt(secs) + " s (limit 10 s)"};
}

Outcome quadratic_limit() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = test::random_instance(1000 + seed, 32, 16, 0.3);
    std::mt19937_64 gen(seed);
    const double l1 = std::uniform_real_distribution<double>(0.01, 10.0)(gen);
    SolverConfig cfg{RegularizerSpec(l1, 0.0, 16)};
    cfg.max_iters = 100000;
    cfg.tol_primal = 1e-11;
    cfg.tol_dual = 1e-11;
    const SolveResult r = solve_admm(inst.h, inst.t, cfg);
    Eigen::MatrixXd hd(inst.h.sparse());
    Eigen::MatrixXd k1(cfg.spec.k1());
    Eigen::MatrixXd q = hd.transpose() * hd;
    q.topLeftCorner(16, 16) += 2.0 * l1 * k1.transpose() * k1;
    // K1 padded with zero blocks for b and n
    const Eigen::VectorXd exact = q.ldlt().solve(hd.transpose() * inst.t);
    if (!r.converged) return {false, "instance " + std::to_string(seed) + " did not converge"};
    worst = std::max(worst, test::relative_error(r.x, exact));
  }
  return {worst <= 1e-5, "max relative error " + fmt(worst) + " on 20 instances (tol 1e-5)"};
}

double prox_by_grid(double v, double tau) {
  // coarse bracket, then refine around the coarse minimizer
  auto cost = [&](double u) { return 0.5 * (u - v) * (u - v) + tau * std::abs(u); };
  double lo = std::min(v, 0.0) - 1.0, hi = std::max(v, 0.0) + 1.0;
  for (int pass = 0; pass < 3; ++pass) {
    const int steps = 2000;
    double best = lo, best_cost = INFINITY;
    for (int k = 0; k <= steps; ++k) {
      const double u = lo + (hi - lo) * k / steps;
      if (cost(u) < best_cost) {
        best_cost = cost(u);
        best = u;
      }
    }
    const double h = (hi - lo) / steps;
    lo = best - 2 * h;
    hi = best + 2 * h;
  }
  return 0.5 * (lo + hi);
}

Outcome proximal_exactness() {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> uv(-10.0, 10.0), ut(0.0, 5.0);
  Eigen::VectorXd v(1000), tau(1000), grid(1000);
  for (int k = 0; k < 1000; ++k) {
    v[k] = uv(gen);
    tau[k] = ut(gen);
    grid[k] = prox_by_grid(v[k], tau[k]);
  }
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    worst = std::max(worst, std::abs(soft_threshold(v.segment(k, 1), tau[k])[0] - grid[k]));
  }
  bool clip_ok = true;
  for (int k = 0; k < 1000; ++k) {
    const Eigen::VectorXd x = test::random_vector(gen, 48, -5.0, 5.0);
    const Eigen::VectorXd beta = test::random_vector(gen, 48, -2.0, 2.0);
    const Eigen::VectorXd p = clip_to_min(x, beta);
    clip_ok = clip_ok && clip_to_min(p, beta) == p && (p - beta).minCoeff() >= 0.0;
  }
  return {worst <= 1e-3 && clip_ok,
          "soft_threshold max deviation from grid search " + fmt(worst) +
              " on 1000 pairs (tol 1e-3); clip idempotent and feasible on 1000 vectors: " +
              (clip_ok ? "yes" : "no")};
}

Outcome reduction() {
  double worst = 0.0;
  std::size_t compared = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = test::random_instance(500 + seed, 24, 16, 0.4);
    SolverConfig cfg{RegularizerSpec(0.5 + 0.1 * double(seed), 1.0, 16)};
    cfg.max_iters = 400;
    cfg.record_iterates = true;
    cfg.gamma = 0.0;
    cfg.beta = ConstraintVector{solve_least_squares(inst.h, inst.t).x.array() + 0.1};
    const SolveResult a = solve_admm(inst.h, inst.t, cfg);
    const SolveResult b = solve_cadmm(inst.h, inst.t, cfg);
    if (a.iterates.size() != b.iterates.size()) {
      return {false, "iteration counts differ on instance " + std::to_string(seed)};
    }
    for (std::size_t k = 0; k < a.iterates.size(); ++k) {
      worst = std::max(worst, (a.iterates[k] - b.iterates[k]).cwiseAbs().maxCoeff());
    }
    compared += a.iterates.size();
  }
  return {worst <= 1e-12, "max iterate difference " + fmt(worst) + " over " +
                              std::to_string(compared) + " iterates of 10 instances (tol 1e-12)"};
}

struct AdversarialRun {
  std::vector<std::pair<std::string, MetricsReport>> metrics;
  double min_alpha_admm = 0.0;
  double min_alpha_cadmm = 0.0;
  double feasibility_secs = 0.0;
};

AdversarialRun& adversarial_run() {
  static AdversarialRun run = [] {
    AdversarialRun r;
    const RunConfig c = adversarial();
    const fs::path out = work_dir("adversarial_a");
    const auto t0 = std::chrono::steady_clock::now();
    pipeline::simulate(c, out);
    (void)pipeline::estimate(c, *c.find_method("admm"), out);
    (void)pipeline::estimate(c, *c.find_method("cadmm"), out);
    r.feasibility_secs = seconds_since(t0);
    r.min_alpha_admm = csv::read_parameter_map(out / pipeline::map_file("admm")).alpha_db.minCoeff();
    r.min_alpha_cadmm =
        csv::read_parameter_map(out / pipeline::map_file("cadmm")).alpha_db.minCoeff();
    for (const MethodConfig& m : c.methods) {
      if (m.name != "admm" && m.name != "cadmm") (void)pipeline::estimate(c, m, out);
    }
    r.metrics = pipeline::evaluate(c, out);
    return r;
  }();
  return run;
}

Outcome feasibility() {
  const AdversarialRun& r = adversarial_run();
  const bool ok = r.min_alpha_cadmm >= -1e-3 && r.min_alpha_admm < 0.0 && r.feasibility_secs < 60.0;
  return {ok, "min alpha_t ADMM " + fmt(r.min_alpha_admm) + " (needs < 0), C-ADMM(gamma=100) " +
                  fmt(r.min_alpha_cadmm) + " (needs >= -1e-3), runtime " +
                  fmt(r.feasibility_secs) + " s (limit 60 s)"};
}

Outcome variance_trend() {
  const AdversarialRun& r = adversarial_run();
  const MetricsReport& a = report_of(r.metrics, "admm");
  const MetricsReport& c = report_of(r.metrics, "cadmm");
  const double va = a.at("R1", QusParameter::alpha_db).variance;
  const double vc = c.at("R1", QusParameter::alpha_db).variance;
  bool ok = vc < va;
  std::string detail = "R1 Var(alpha) C-ADMM " + fmt(vc) + " vs ADMM " + fmt(va) + "; Var(b dB)";
  for (const char* roi : {"R1", "R2", "R3", "R4"}) {
    const double ba = a.at(roi, QusParameter::b_db).variance;
    const double bc = c.at(roi, QusParameter::b_db).variance;
    ok = ok && bc < ba;
    detail += std::string(" ") + roi + " " + fmt(bc) + " vs " + fmt(ba);
  }
  return {ok, detail};
}

Outcome gamma_comparison() {
  const AdversarialRun& r = adversarial_run();
  double g100 = 0.0, g1 = 0.0;
  for (const char* roi : {"R1", "R2", "R3", "R4"}) {
    g100 += report_of(r.metrics, "cadmm").at(roi, QusParameter::b_db).bias;
    g1 += report_of(r.metrics, "cadmm_g1").at(roi, QusParameter::b_db).bias;
  }
  return {g100 < g1, "summed b bias (dB) over R1-R4: gamma=100 " + fmt(g100) + " vs gamma=1 " +
                         fmt(g1)};
}

Outcome gradient_check() {
  std::mt19937_64 gen(77);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const auto inst = test::random_instance(3000 + std::uint64_t(k), 20, 12, 0.3);
    const RegularizerSpec spec(std::uniform_real_distribution<double>(0.0, 5.0)(gen),
                               std::uniform_real_distribution<double>(0.0, 5.0)(gen), 12);
    const Eigen::VectorXd x = test::random_vector(gen, 36, -1.0, 1.0);
    const Eigen::VectorXd g = smooth_cost_gradient(x, inst.t, inst.h, spec);
    Eigen::VectorXd fd(x.size());
    const double step = 1e-6;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp[i] += step;
      xm[i] -= step;
      fd[i] = (smooth_cost(xp, inst.t, inst.h, spec) - smooth_cost(xm, inst.t, inst.h, spec)) /
              (2.0 * step);
    }
    worst = std::max(worst, test::relative_error(fd, g));
  }
  return {worst <= 1e-5,
          "max relative gradient error " + fmt(worst) + " at 50 points, step 1e-6 (tol 1e-5)"};
}

Outcome determinism() {
  (void)adversarial_run();
  const RunConfig c = adversarial();
  const fs::path first = fs::temp_directory_path() / "qus_acceptance" / "adversarial_a";
  const fs::path second = work_dir("adversarial_b");
  (void)full_run(c, second);
  const std::string a = slurp(first / pipeline::kMetricsFile);
  const std::string b = slurp(second / pipeline::kMetricsFile);
  return {!a.empty() && a == b, "metrics.csv " + std::to_string(a.size()) + " bytes, runs " +
                                    (a == b ? "byte-identical" : "differ")};
}

}  // namespace

int main() {
  std::printf("kernels: %s\n", std::string(kernels::isa_name(kernels::active().isa)).c_str());
  report("oracle equivalence", oracle_equivalence);
  report("quadratic-limit oracle", quadratic_limit);
  report("proximal-operator exactness", proximal_exactness);
  report("reduction gamma=0", reduction);
  report("feasibility claim", feasibility);
  report("variance ordering trend", variance_trend);
  report("gamma comparison", gamma_comparison);
  report("gradient check", gradient_check);
  report("determinism", determinism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
