#include "bladeenv/pipeline/config.hpp"

#include "bladeenv/errors.hpp"
#include "bladeenv/io.hpp"
#include "bladeenv/random.hpp"

#include <cmath>
#include <filesystem>
#include <set>

namespace bladeenv::pipeline {

namespace {

using nlohmann::json;

/// Typed reader over one JSON object; remembers the keys it consumed so
/// unknown (misspelled) keys can be rejected.
class Section {
public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  int integer(const std::string& key, int def, long long lo, long long hi) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + " must be an integer");
    const auto x = v.get<long long>();
    if (x < lo || x > hi) {
      throw ConfigError(where(key) + " = " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
    }
    return static_cast<int>(x);
  }

  long long integer64(const std::string& key, long long def, long long lo, long long hi) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + " must be an integer");
    const auto x = v.get<long long>();
    if (x < lo || x > hi) throw ConfigError(where(key) + " = " + std::to_string(x) + " out of range");
    return x;
  }

  double number(const std::string& key, double def, double lo, double hi, bool open_lo = false) {
    if (!has(key)) return def;
    return check_number(j_.at(key), where(key), lo, hi, open_lo);
  }

  std::string string(const std::string& key, const std::string& def, const std::set<std::string>& allowed = {}) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(where(key) + " must be a string");
    auto s = v.get<std::string>();
    if (!allowed.empty() && !allowed.count(s)) {
      std::string opts;
      for (const auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
      throw ConfigError(where(key) + " = '" + s + "' is not one of: " + opts);
    }
    return s;
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    if (!j_.at(key).is_boolean()) throw ConfigError(where(key) + " must be true or false");
    return j_.at(key).get<bool>();
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, path_ + "." + key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown key " + where(k));
    }
  }

  std::string where(const std::string& key = "") const { return key.empty() ? path_ : path_ + "." + key; }

  static double check_number(const json& v, const std::string& where, double lo, double hi, bool open_lo) {
    if (!v.is_number()) throw ConfigError(where + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x) || x < lo || x > hi || (open_lo && x == lo)) {
      throw ConfigError(where + " = " + io::format_double(x) + " outside " + (open_lo ? "(" : "[") +
                        io::format_double(lo) + ", " + io::format_double(hi) + "]");
    }
    return x;
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

constexpr long long kBig = 1'000'000'000;

}  // namespace

PipelineConfig parse_config(const json& j, const std::string& base_dir) {
  PipelineConfig c;
  c.base_dir = base_dir;
  Section root(j, "config");
  if (root.has("schema_version")) {
    const auto& v = root.raw("schema_version");
    if (!v.is_number_integer() || v.get<int>() != io::kSchemaVersion) {
      throw ConfigError("config.schema_version must be " + std::to_string(io::kSchemaVersion));
    }
  }
  if (root.has("seed")) {
    const auto& v = root.raw("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ConfigError("config.seed must be a nonnegative integer");
    }
    c.seed = v.get<std::uint64_t>();
  }

  {
    auto s = root.child("design_space");
    c.design_space.d = s.integer("d", 20, 1, 1000);
    auto lat = s.child("lattice");
    c.design_space.n_axial = lat.integer("n_axial", 10, 1, 1000);
    c.design_space.n_rows = lat.integer("n_rows", 2, 1, 1000);
    lat.finish();
    c.design_space.amplitude = s.number("amplitude", 0.015, 0.0, 1.0, true);
    c.design_space.margin = s.number("margin", 0.05, 0.0, 10.0, true);
    c.design_space.baseline = s.string("baseline", "synthetic");
    c.design_space.points_per_side = s.integer("points_per_side", 120, 2, 100000);
    s.finish();
    if (c.design_space.n_axial * c.design_space.n_rows != c.design_space.d) {
      throw ConfigError("config.design_space: lattice has " +
                        std::to_string(c.design_space.n_axial * c.design_space.n_rows) + " nodes but d = " +
                        std::to_string(c.design_space.d));
    }
  }
  {
    auto s = root.child("doe");
    c.doe.K = s.integer("K", 1000, 2, kBig);
    c.doe.train = s.integer("train", std::min(800, c.doe.K - 1), 1, kBig);
    s.finish();
    if (c.doe.train >= c.doe.K) throw ConfigError("config.doe.train must be smaller than K (need held-out points)");
  }
  {
    auto s = root.child("qoi");
    c.qoi.source = s.string("source", "oracle", {"oracle", "csv"});
    c.qoi.oracle = s.string("oracle", "ridge", {"linear", "ridge", "quadratic-ridge"});
    c.qoi.direction = s.string("direction", "leading-edge", {"leading-edge", "random"});
    c.qoi.noise = s.number("noise", 0.0, 0.0, 1e6);
    c.qoi.name = s.string("name", "q");
    c.qoi.designs_path = s.string("designs", "");
    c.qoi.qoi_path = s.string("values", "");
    c.qoi.format = s.string("format", "bladeenv", {"bladeenv", "matrix"});
    c.qoi.column = s.integer("column", 0, 0, 100000);
    s.finish();
    if (c.qoi.source == "csv" && (c.qoi.designs_path.empty() || c.qoi.qoi_path.empty())) {
      throw ConfigError("config.qoi: source 'csv' needs both 'designs' and 'values' paths");
    }
    if (c.qoi.source == "oracle" && c.qoi.direction == "leading-edge" && c.qoi.oracle == "quadratic-ridge") {
      throw ConfigError("config.qoi: the leading-edge direction defines a single ridge; use 'random' for quadratic-ridge");
    }
    if (c.qoi.name.empty() || c.qoi.name.find_first_of(", \t") != std::string::npos) {
      throw ConfigError("config.qoi.name must be a nonempty identifier");
    }
  }
  {
    auto s = root.child("surrogate");
    c.surrogate.kind = s.string("kind", "total-order", {"tensorial", "total-order", "euclidean", "hyperbolic"});
    c.surrogate.p = s.integer("p", 3, 0, 20);
    if (s.has("epsilon")) {
      const auto& v = s.raw("epsilon");
      if (v.is_string()) {
        if (v.get<std::string>() != "auto") throw ConfigError("config.surrogate.epsilon must be a number or \"auto\"");
        c.surrogate.epsilon.reset();
      } else {
        c.surrogate.epsilon = Section::check_number(v, "config.surrogate.epsilon", 0.0, 1e12, false);
      }
    }
    c.surrogate.max_iterations = s.integer("max_iterations", 5000, 1, kBig);
    c.surrogate.cv_max_iterations = s.integer("cv_max_iterations", 1000, 1, kBig);
    s.finish();
  }
  {
    auto s = root.child("subspace");
    c.subspace.M = s.integer64("M", 100000, 1, 1'000'000'000'000LL);
    if (s.has("r")) {
      const auto& v = s.raw("r");
      if (v.is_string()) {
        if (v.get<std::string>() != "auto") throw ConfigError("config.subspace.r must be an integer or \"auto\"");
      } else if (v.is_number_integer() && v.get<long long>() >= 1 && v.get<long long>() <= c.design_space.d) {
        c.subspace.r = v.get<int>();
      } else {
        throw ConfigError("config.subspace.r must be \"auto\" or an integer in [1, d]");
      }
    }
    s.finish();
  }
  {
    auto s = root.child("sampler");
    if (s.has("u")) {
      const auto& v = s.raw("u");
      c.sampler.u.clear();
      if (v.is_number()) {
        c.sampler.u.push_back(Section::check_number(v, "config.sampler.u", -1e6, 1e6, false));
      } else if (v.is_array() && !v.empty()) {
        for (std::size_t i = 0; i < v.size(); ++i)
          c.sampler.u.push_back(
              Section::check_number(v[i], "config.sampler.u[" + std::to_string(i) + "]", -1e6, 1e6, false));
      } else {
        throw ConfigError("config.sampler.u must be a number or a nonempty array of numbers");
      }
    }
    c.sampler.H = s.integer("H", 5000, 2, kBig);
    c.sampler.burn_in = s.integer("burn_in", 1000, 0, kBig);
    c.sampler.thin = s.integer("thin", 50, 1, kBig);
    c.sampler.profiles_written = s.integer("profiles_written", 100, 0, kBig);
    c.sampler.invariance_check = s.integer("invariance_check", 500, 0, kBig);
    s.finish();
  }
  {
    auto s = root.child("envelope");
    if (s.has("buffer")) {
      const auto& v = s.raw("buffer");
      if (v.is_string()) {
        if (v.get<std::string>() != "chi2") throw ConfigError("config.envelope.buffer must be \"chi2\" or [lo, hi]");
      } else if (v.is_array() && v.size() == 2) {
        const double lo = Section::check_number(v[0], "config.envelope.buffer[0]", 0.0, 1e12, false);
        const double hi = Section::check_number(v[1], "config.envelope.buffer[1]", lo, 1e12, false);
        c.envelope.buffer = std::array<double, 2>{lo, hi};
      } else {
        throw ConfigError("config.envelope.buffer must be \"chi2\" or [lo, hi]");
      }
    }
    c.envelope.significance = s.number("significance", 0.99, 0.0, 1.0, true);
    if (c.envelope.significance >= 1.0) throw ConfigError("config.envelope.significance must be below 1");
    c.envelope.buffer_ratio = s.number("buffer_ratio", 2.0, 1.0, 1e6);
    if (s.has("gate")) {
      const auto& v = s.raw("gate");
      if (v.is_string()) {
        if (v.get<std::string>() != "calibrate") {
          throw ConfigError("config.envelope.gate must be \"calibrate\" or [beta1, beta2, beta3]");
        }
      } else if (v.is_array() && v.size() == 3) {
        c.envelope.gate = std::array<double, 3>{
            Section::check_number(v[0], "config.envelope.gate[0]", 0.0, 1e12, true),
            Section::check_number(v[1], "config.envelope.gate[1]", 0.0, 1e12, true),
            Section::check_number(v[2], "config.envelope.gate[2]", -1e12, 1e12, false)};
      } else {
        throw ConfigError("config.envelope.gate must be \"calibrate\" or [beta1, beta2, beta3]");
      }
    }
    c.envelope.calibration_random = s.integer("calibration_random", 500, 1, kBig);
    c.envelope.checkpoint_interval = s.integer("checkpoint_interval", 50, 1, kBig);
    s.finish();
  }
  {
    auto s = root.child("gate");
    c.gate.members = s.integer("members", 1000, 0, kBig);
    c.gate.random = s.integer("random", 500, 0, kBig);
    c.gate.kinked = s.integer("kinked", 20, 0, kBig);
    c.gate.kink_scale = s.number("kink_scale", 0.5, 0.0, 1e6, true);
    auto x = s.child("cross_check");
    c.gate.cross_check.enabled = x.boolean("enabled", true);
    c.gate.cross_check.n_axial = x.integer("n_axial", 15, 1, 1000);
    c.gate.cross_check.n_rows = x.integer("n_rows", 2, 1, 1000);
    c.gate.cross_check.amplitude = x.number("amplitude", c.design_space.amplitude, 0.0, 1.0, true);
    c.gate.cross_check.count = x.integer("count", 1000, 2, kBig);
    x.finish();
    s.finish();
  }
  root.finish();
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read config '" + path + "'");
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  const auto parent = std::filesystem::path(path).parent_path().string();
  return parse_config(j, parent.empty() ? "." : parent);
}

nlohmann::json PipelineConfig::resolved() const {
  json j;
  j["schema_version"] = io::kSchemaVersion;
  j["seed"] = seed;
  j["design_space"] = {{"d", design_space.d},
                       {"lattice", {{"n_axial", design_space.n_axial}, {"n_rows", design_space.n_rows}}},
                       {"amplitude", design_space.amplitude},
                       {"margin", design_space.margin},
                       {"baseline", design_space.baseline},
                       {"points_per_side", design_space.points_per_side}};
  j["doe"] = {{"K", doe.K}, {"train", doe.train}};
  j["qoi"] = {{"source", qoi.source}, {"name", qoi.name}};
  if (qoi.source == "oracle") {
    j["qoi"]["oracle"] = qoi.oracle;
    j["qoi"]["direction"] = qoi.direction;
    j["qoi"]["noise"] = qoi.noise;
  } else {
    j["qoi"]["designs"] = qoi.designs_path;
    j["qoi"]["values"] = qoi.qoi_path;
    j["qoi"]["format"] = qoi.format;
    j["qoi"]["column"] = qoi.column;
  }
  j["surrogate"] = {{"kind", surrogate.kind},
                    {"p", surrogate.p},
                    {"max_iterations", surrogate.max_iterations},
                    {"cv_max_iterations", surrogate.cv_max_iterations}};
  if (surrogate.epsilon) j["surrogate"]["epsilon"] = *surrogate.epsilon;
  else j["surrogate"]["epsilon"] = "auto";
  j["subspace"] = {{"M", subspace.M}};
  if (subspace.r) j["subspace"]["r"] = *subspace.r;
  else j["subspace"]["r"] = "auto";
  j["sampler"] = {{"u", sampler.u},
                  {"H", sampler.H},
                  {"burn_in", sampler.burn_in},
                  {"thin", sampler.thin},
                  {"profiles_written", sampler.profiles_written},
                  {"invariance_check", sampler.invariance_check}};
  j["envelope"] = {{"significance", envelope.significance},
                   {"buffer_ratio", envelope.buffer_ratio},
                   {"calibration_random", envelope.calibration_random},
                   {"checkpoint_interval", envelope.checkpoint_interval}};
  if (envelope.buffer) j["envelope"]["buffer"] = *envelope.buffer;
  else j["envelope"]["buffer"] = "chi2";
  if (envelope.gate) j["envelope"]["gate"] = *envelope.gate;
  else j["envelope"]["gate"] = "calibrate";
  j["gate"] = {{"members", gate.members},
               {"random", gate.random},
               {"kinked", gate.kinked},
               {"kink_scale", gate.kink_scale},
               {"cross_check",
                {{"enabled", gate.cross_check.enabled},
                 {"n_axial", gate.cross_check.n_axial},
                 {"n_rows", gate.cross_check.n_rows},
                 {"amplitude", gate.cross_check.amplitude},
                 {"count", gate.cross_check.count}}}};
  return j;
}

std::uint64_t PipelineConfig::stage_seed(const std::string& stage) const { return derive_seed(seed, stage.c_str()); }

std::string PipelineConfig::stage_hash(const std::string& stage) const {
  const json r = resolved();
  json key = {{"stage", stage}, {"seed", stage_seed(stage)}};
  if (stage == "doe") {
    key["doe"] = r["doe"];
    key["d"] = r["design_space"]["d"];
    key["qoi"] = r["qoi"];
  } else if (stage == "evaluate") {
    key["design_space"] = r["design_space"];
    key["qoi"] = r["qoi"];
  } else if (stage == "fit") {
    key["surrogate"] = r["surrogate"];
    key["train"] = r["doe"]["train"];
  } else if (stage == "subspace") {
    key["subspace"] = r["subspace"];
  } else if (stage == "sample") {
    key["sampler"] = r["sampler"];
    key["design_space"] = r["design_space"];
  } else if (stage == "envelope") {
    key["envelope"] = r["envelope"];
  } else if (stage == "gate") {
    key["gate"] = r["gate"];
  }
  return io::hex64(io::fnv1a64(key.dump()));
}

std::string PipelineConfig::resolve_path(const std::string& path) const {
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

}  // namespace bladeenv::pipeline
