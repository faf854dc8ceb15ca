#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bladeenv::pipeline {

struct DesignSpaceSpec {
  int d = 20;
  int n_axial = 10;
  int n_rows = 2;
  double amplitude = 0.015;
  double margin = 0.05;
  std::string baseline = "synthetic";  ///< "synthetic" or a profile CSV path
  int points_per_side = 120;
};

struct DoeSpec {
  int K = 1000;
  int train = 800;
};

struct QoiSpec {
  std::string source = "oracle";  ///< "oracle" or "csv"
  std::string oracle = "ridge";   ///< linear | ridge | quadratic-ridge
  std::string direction = "leading-edge";  ///< leading-edge | random
  double noise = 0.0;
  std::string name = "q";
  // csv source
  std::string designs_path;
  std::string qoi_path;
  std::string format = "bladeenv";  ///< bladeenv (headered CSV) | matrix (plain numeric)
  int column = 0;                   ///< qoi column index for the matrix format
};

struct SurrogateSpec {
  std::string kind = "total-order";
  int p = 3;
  std::optional<double> epsilon = 1e-6;  ///< unset: cross-validated
  int max_iterations = 5000;
  int cv_max_iterations = 1000;
};

struct SubspaceSpec {
  long long M = 100000;
  std::optional<int> r;  ///< unset: eigenvalue gap rule
};

struct SamplerSpec {
  std::vector<double> u{0.0};  ///< a single value is broadcast to every active coordinate
  int H = 5000;
  int burn_in = 1000;
  int thin = 50;
  int profiles_written = 100;
  int invariance_check = 500;
};

struct EnvelopeSpec {
  std::optional<std::array<double, 2>> buffer;  ///< unset: chi-squared buffer
  double significance = 0.99;
  double buffer_ratio = 2.0;  ///< zeta_hi / zeta_lo for the chi-squared buffer
  std::optional<std::array<double, 3>> gate;  ///< unset: calibrate
  int calibration_random = 500;
  int checkpoint_interval = 50;
};

struct CrossCheckSpec {
  bool enabled = true;
  int n_axial = 15;
  int n_rows = 2;
  double amplitude = 0.015;
  int count = 1000;
};

struct GateSpec {
  int members = 1000;
  int random = 500;
  int kinked = 20;
  double kink_scale = 0.5;
  CrossCheckSpec cross_check;
};

struct PipelineConfig {
  std::uint64_t seed = 1;
  DesignSpaceSpec design_space;
  DoeSpec doe;
  QoiSpec qoi;
  SurrogateSpec surrogate;
  SubspaceSpec subspace;
  SamplerSpec sampler;
  EnvelopeSpec envelope;
  GateSpec gate;
  std::string base_dir = ".";  ///< directory of the config file; relative paths resolve against it

  /// Canonical JSON with every default filled in.
  nlohmann::json resolved() const;
  /// Seed of a stage, derived from the top-level seed.
  std::uint64_t stage_seed(const std::string& stage) const;
  /// 64-bit hash (hex) of the config sections a stage depends on.
  std::string stage_hash(const std::string& stage) const;
  std::string resolve_path(const std::string& path) const;
};

/// Parses and schema-checks a config; throws ConfigError naming the offending key.
PipelineConfig parse_config(const nlohmann::json& j, const std::string& base_dir = ".");
PipelineConfig load_config(const std::string& path);

}  // namespace bladeenv::pipeline
