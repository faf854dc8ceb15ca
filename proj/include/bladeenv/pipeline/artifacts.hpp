#pragma once

#include "bladeenv/ingest.hpp"
#include "bladeenv/pipeline/config.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace bladeenv::pipeline {

/// Artifact file names inside the output directory.
namespace files {
inline constexpr const char* kDesigns = "designs.csv";
inline constexpr const char* kQoi = "qoi.csv";
inline constexpr const char* kSurrogate = "surrogate.json";
inline constexpr const char* kValidation = "fit_validation.csv";
inline constexpr const char* kPartition = "partition.json";
inline constexpr const char* kSamples = "samples.csv";
inline constexpr const char* kInactiveProfiles = "inactive_profiles.csv";
inline constexpr const char* kInvariance = "invariance.csv";
inline constexpr const char* kEnvelope = "envelope.json";
inline constexpr const char* kConvergence = "convergence.csv";
inline constexpr const char* kVerdicts = "verdicts.json";
inline constexpr const char* kGateScores = "gate_scores.csv";
inline constexpr const char* kUserVerdicts = "user_verdicts.json";
inline constexpr const char* kResolvedConfig = "config.resolved.json";
inline constexpr const char* kReportDir = "report";
}  // namespace files

/// Recorded hash of one input file.
struct InputHash {
  std::string file;
  std::string hash;
};

/// Provenance stored in an artifact: producing stage, config hash, inputs.
struct Provenance {
  std::string stage;
  std::string config;
  std::vector<InputHash> inputs;
};

/// Output directory of one pipeline run.
class Workspace {
public:
  Workspace(PipelineConfig config, std::string out_dir, int jobs = 1);

  const PipelineConfig& config() const { return config_; }
  const std::string& dir() const { return dir_; }
  int jobs() const { return jobs_; }
  std::string path(const std::string& file) const;

  /// Provenance of `stage` given the artifacts it consumed (hashes taken now).
  Provenance provenance(const std::string& stage, const std::vector<std::string>& inputs) const;
  ingest::Header csv_header(const Provenance& p) const;
  nlohmann::json json_provenance(const Provenance& p) const;

  /// Checks that `file` exists, was written by `stage` under the current
  /// config, and that its recorded inputs are unchanged. Throws ArtifactError
  /// naming the stage to rerun.
  void require(const std::string& stage, const std::string& file) const;

  /// Writes the resolved config next to the artifacts.
  void write_resolved_config() const;

private:
  PipelineConfig config_;
  std::string dir_;
  int jobs_;
};

Provenance read_provenance(const std::string& path);

/// Writes JSON with two-space indentation and a trailing newline.
void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

}  // namespace bladeenv::pipeline
