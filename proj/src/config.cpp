#include "qus/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qus/error.hpp"

namespace qus {
namespace {

using nlohmann::json;

class Validator {
 public:
  explicit Validator(std::string_view source) : source_(source) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    throw ConfigError(source_ + ": " + (pointer.empty() ? "/" : pointer) + ": " + message);
  }

  const json& member(const json& obj, const std::string& ptr, const char* key) const {
    if (!obj.is_object()) fail(ptr, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(ptr + "/" + key, "required field is missing");
    return *it;
  }

  double number(const json& v, const std::string& ptr) const {
    if (!v.is_number()) fail(ptr, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(ptr, "must be finite");
    return d;
  }

  double number(const json& obj, const std::string& ptr, const char* key) const {
    return number(member(obj, ptr, key), ptr + "/" + key);
  }

  double number_or(const json& obj, const std::string& ptr, const char* key, double fallback) const {
    if (!obj.contains(key)) return fallback;
    return number(obj.at(key), ptr + "/" + key);
  }

  double positive(const json& obj, const std::string& ptr, const char* key) const {
    const double d = number(obj, ptr, key);
    if (!(d > 0.0)) fail(ptr + "/" + key, "must be > 0");
    return d;
  }

  double nonnegative(const json& obj, const std::string& ptr, const char* key) const {
    const double d = number(obj, ptr, key);
    if (!(d >= 0.0)) fail(ptr + "/" + key, "must be >= 0");
    return d;
  }

  std::int64_t integer(const json& v, const std::string& ptr) const {
    if (!v.is_number_integer()) fail(ptr, "expected an integer");
    return v.get<std::int64_t>();
  }

  std::string string(const json& v, const std::string& ptr) const {
    if (!v.is_string()) fail(ptr, "expected a string");
    return v.get<std::string>();
  }

  // Either an explicit array or {start, step, count} / {start, stop, count}.
  std::vector<double> axis(const json& v, const std::string& ptr) const {
    std::vector<double> out;
    if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], ptr + "/" + std::to_string(i)));
      return out;
    }
    if (!v.is_object()) fail(ptr, "expected an array or {start, step|stop, count}");
    const double start = number(v, ptr, "start");
    const std::int64_t count = integer(member(v, ptr, "count"), ptr + "/count");
    if (count < 1) fail(ptr + "/count", "must be >= 1");
    double step = 0.0;
    if (v.contains("step")) {
      step = number(v.at("step"), ptr + "/step");
    } else if (v.contains("stop")) {
      const double stop = number(v.at("stop"), ptr + "/stop");
      step = count > 1 ? (stop - start) / static_cast<double>(count - 1) : 0.0;
    } else {
      fail(ptr, "needs 'step' or 'stop'");
    }
    for (std::int64_t i = 0; i < count; ++i) out.push_back(start + step * static_cast<double>(i));
    return out;
  }

  // A scalar broadcast to every depth, or an array of depth_count values.
  std::vector<double> profile(const json& obj, const std::string& ptr, const char* key,
                              std::size_t depth_count) const {
    const json& v = member(obj, ptr, key);
    const std::string p = ptr + "/" + key;
    if (v.is_number()) return std::vector<double>(depth_count, number(v, p));
    if (!v.is_array()) fail(p, "expected a number or an array");
    if (v.size() != depth_count) {
      fail(p, "profile has " + std::to_string(v.size()) + " entries, grid has " +
                  std::to_string(depth_count) + " depths");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], p + "/" + std::to_string(i)));
    return out;
  }

 private:
  std::string source_;
};

std::vector<Reflector> parse_reflectors(const Validator& val, const json& phantom,
                                        const std::string& ptr) {
  std::vector<Reflector> out;
  if (!phantom.contains("reflectors")) return out;
  const json& list = phantom.at("reflectors");
  const std::string lp = ptr + "/reflectors";
  if (!list.is_array()) val.fail(lp, "expected an array");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string rp = lp + "/" + std::to_string(i);
    Reflector r;
    r.depth_center_cm = val.number(list[i], rp, "depth_cm");
    r.axial_extent_cm = val.nonnegative(list[i], rp, "extent_cm");
    r.boost_db = val.number(list[i], rp, "boost_db");
    out.push_back(r);
  }
  return out;
}

PhantomSpec parse_phantom(const Validator& val, const json& root, std::size_t depth_count) {
  const json& p = val.member(root, "", "phantom");
  const std::string ptr = "/phantom";
  if (!p.is_object()) val.fail(ptr, "expected an object");
  PhantomSpec spec;
  if (p.contains("preset")) {
    const std::string preset = val.string(p.at("preset"), ptr + "/preset");
    if (preset != "gammex") val.fail(ptr + "/preset", "unknown preset '" + preset + "'");
    spec = p.contains("reflectors") ? gammex_phantom(depth_count, parse_reflectors(val, p, ptr))
                                    : gammex_phantom(depth_count);
    return spec;
  }
  spec.alpha_db = val.profile(p, ptr, "alpha_db", depth_count);
  spec.b = val.profile(p, ptr, "b", depth_count);
  spec.n = val.profile(p, ptr, "n", depth_count);
  for (std::size_t j = 0; j < depth_count; ++j) {
    if (!(spec.b[j] > 0.0)) val.fail(ptr + "/b", "must be > 0");
  }
  spec.reflectors = parse_reflectors(val, p, ptr);
  return spec;
}

MethodConfig parse_method(const Validator& val, const json& m, const std::string& ptr) {
  if (!m.is_object()) val.fail(ptr, "expected an object");
  MethodConfig out;
  out.name = val.string(val.member(m, ptr, "name"), ptr + "/name");
  if (out.name.empty() || out.name.find_first_of(",\n/\\") != std::string::npos) {
    val.fail(ptr + "/name", "must be non-empty and free of ',', '/', '\\' and newlines");
  }
  std::string type_name = out.name;
  if (m.contains("type")) type_name = val.string(m.at("type"), ptr + "/type");
  const auto type = parse_method_type(type_name);
  if (!type) {
    val.fail(m.contains("type") ? ptr + "/type" : ptr + "/name",
             "unknown method type '" + type_name + "' (expected ls, admm or cadmm)");
  }
  out.type = *type;
  out.ridge = val.number_or(m, ptr, "ridge", out.ridge);
  if (!(out.ridge >= 0.0)) val.fail(ptr + "/ridge", "must be >= 0");
  if (out.type == MethodType::ls) return out;

  out.lambda1 = val.nonnegative(m, ptr, "lambda1");
  out.lambda2 = val.nonnegative(m, ptr, "lambda2");
  out.rho = val.number_or(m, ptr, "rho", out.rho);
  if (!(out.rho > 0.0)) val.fail(ptr + "/rho", "must be > 0");
  if (m.contains("max_iters")) {
    const std::int64_t it = val.integer(m.at("max_iters"), ptr + "/max_iters");
    if (it < 1 || it > 100000000) val.fail(ptr + "/max_iters", "must be in [1, 1e8]");
    out.max_iters = static_cast<int>(it);
  }
  out.tol_primal = val.number_or(m, ptr, "tol_primal", out.tol_primal);
  if (!(out.tol_primal > 0.0)) val.fail(ptr + "/tol_primal", "must be > 0");
  out.tol_dual = val.number_or(m, ptr, "tol_dual", out.tol_dual);
  if (!(out.tol_dual > 0.0)) val.fail(ptr + "/tol_dual", "must be > 0");
  if (m.contains("paper_exact_updates")) {
    if (!m.at("paper_exact_updates").is_boolean()) {
      val.fail(ptr + "/paper_exact_updates", "expected a boolean");
    }
    out.paper_exact_updates = m.at("paper_exact_updates").get<bool>();
  }
  if (out.type == MethodType::cadmm) {
    out.gamma = val.nonnegative(m, ptr, "gamma");
  } else if (m.contains("gamma")) {
    val.fail(ptr + "/gamma", "only valid for cadmm");
  }
  return out;
}

RegionOfInterest parse_roi(const Validator& val, const json& r, const std::string& ptr) {
  RegionOfInterest roi;
  roi.name = val.string(val.member(r, ptr, "name"), ptr + "/name");
  if (roi.name.empty() || roi.name.find_first_of(",\n") != std::string::npos) {
    val.fail(ptr + "/name", "must be non-empty and free of ',' and newlines");
  }
  auto range = [&](const char* key, double& lo, double& hi) {
    const json& v = val.member(r, ptr, key);
    const std::string p = ptr + "/" + key;
    if (!v.is_array() || v.size() != 2) val.fail(p, "expected [min, max]");
    lo = val.number(v[0], p + "/0");
    hi = val.number(v[1], p + "/1");
    if (!(hi >= lo)) val.fail(p, "max must be >= min");
  };
  range("lateral_cm", roi.lateral_min_cm, roi.lateral_max_cm);
  range("depth_cm", roi.depth_min_cm, roi.depth_max_cm);
  return roi;
}

}  // namespace

std::string_view method_type_name(MethodType t) noexcept {
  switch (t) {
    case MethodType::ls:
      return "ls";
    case MethodType::admm:
      return "admm";
    case MethodType::cadmm:
      return "cadmm";
  }
  return "";
}

std::optional<MethodType> parse_method_type(std::string_view name) noexcept {
  if (name == "ls") return MethodType::ls;
  if (name == "admm") return MethodType::admm;
  if (name == "cadmm") return MethodType::cadmm;
  return std::nullopt;
}

const MethodConfig* RunConfig::find_method(std::string_view name) const noexcept {
  for (const MethodConfig& m : methods) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

SolverConfig RunConfig::solver_config(const MethodConfig& method) const {
  SolverConfig cfg(RegularizerSpec(method.lambda1, method.lambda2, grid.depth_count()));
  cfg.rho = method.rho;
  cfg.gamma = method.gamma;
  cfg.max_iters = method.max_iters;
  cfg.tol_primal = method.tol_primal;
  cfg.tol_dual = method.tol_dual;
  cfg.ridge = method.ridge;
  cfg.paper_exact_updates = method.paper_exact_updates;
  cfg.beta = build_constraint_vector(reference, grid.depth_count());
  if (!frequency_weights.empty()) {
    cfg.freq_weights.reserve(grid.frequency_count() * grid.depth_count());
    for (std::size_t j = 0; j < grid.depth_count(); ++j) {
      cfg.freq_weights.insert(cfg.freq_weights.end(), frequency_weights.begin(),
                              frequency_weights.end());
    }
  }
  return cfg;
}

NoiseSpec RunConfig::target_noise() const noexcept { return NoiseSpec{noise_sigma, seed}; }

NoiseSpec RunConfig::reference_noise() const noexcept {
  return NoiseSpec{noise_sigma, mix_seed(seed, 0x7265666572656e63ULL)};
}

RunConfig parse_config(std::string_view json_text, std::string_view source) {
  json root;
  try {
    root = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(source) + ": " + e.what());
  }
  const Validator val(source);
  if (!root.is_object()) val.fail("", "top level must be an object");

  const json& g = val.member(root, "", "grid");
  auto grid_axis = [&](const char* key) {
    return val.axis(val.member(g, "/grid", key), std::string("/grid/") + key);
  };
  std::vector<double> freqs = grid_axis("frequencies_mhz");
  std::vector<double> depths = grid_axis("depths_cm");
  std::vector<double> lateral = grid_axis("lateral_cm");
  std::optional<AcquisitionGrid> grid;
  try {
    grid.emplace(std::move(freqs), std::move(depths), std::move(lateral));
  } catch (const ParameterError& e) {
    val.fail("/grid", e.what());
  }

  PhantomSpec phantom = parse_phantom(val, root, grid->depth_count());

  const json& r = val.member(root, "", "reference");
  ReferencePhantom reference;
  reference.alpha_db = val.nonnegative(r, "/reference", "alpha_db");
  reference.b = val.positive(r, "/reference", "b");
  reference.n = val.nonnegative(r, "/reference", "n");

  double sigma = 0.0;
  if (root.contains("noise")) sigma = val.nonnegative(root.at("noise"), "/noise", "sigma");

  std::uint64_t seed = 0;
  if (root.contains("seed")) {
    const json& s = root.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
      val.fail("/seed", "expected a non-negative integer");
    }
    seed = s.get<std::uint64_t>();
  }

  std::vector<MethodConfig> methods;
  const json& ms = val.member(root, "", "methods");
  if (!ms.is_array() || ms.empty()) val.fail("/methods", "expected a non-empty array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const std::string ptr = "/methods/" + std::to_string(i);
    MethodConfig m = parse_method(val, ms[i], ptr);
    if (!names.insert(m.name).second) val.fail(ptr + "/name", "duplicate method name '" + m.name + "'");
    methods.push_back(std::move(m));
  }

  std::vector<RegionOfInterest> rois;
  if (root.contains("rois")) {
    const json& rs = root.at("rois");
    if (!rs.is_array()) val.fail("/rois", "expected an array");
    std::set<std::string> roi_names;
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const std::string ptr = "/rois/" + std::to_string(i);
      RegionOfInterest roi = parse_roi(val, rs[i], ptr);
      if (!roi_names.insert(roi.name).second) val.fail(ptr + "/name", "duplicate ROI name");
      rois.push_back(std::move(roi));
    }
  }

  std::vector<double> weights;
  if (root.contains("frequency_weights")) {
    const json& w = root.at("frequency_weights");
    if (!w.is_array() || w.size() != grid->frequency_count()) {
      val.fail("/frequency_weights", "expected one weight per frequency");
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double x = val.number(w[i], "/frequency_weights/" + std::to_string(i));
      if (!(x > 0.0)) val.fail("/frequency_weights/" + std::to_string(i), "must be > 0");
      weights.push_back(x);
    }
  }

  std::filesystem::path out_dir = "out";
  if (root.contains("output_dir")) out_dir = val.string(root.at("output_dir"), "/output_dir");

  return RunConfig{std::move(*grid), std::move(phantom), reference, sigma, seed,
                   std::move(methods), std::move(rois), std::move(out_dir), std::move(weights)};
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

}  // namespace qus
