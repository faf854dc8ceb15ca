#pragma once

#include "bladeenv/geometry.hpp"
#include "bladeenv/pipeline/artifacts.hpp"
#include "bladeenv/testbed.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <optional>
#include <string>

namespace bladeenv::pipeline {

/// Baseline profile and FFD deformer of the configured design space.
geometry::FfdDeformer make_deformer(const PipelineConfig& c);
geometry::FfdDeformer make_deformer(const PipelineConfig& c, int n_axial, int n_rows, double amplitude);

/// Qoi evaluator of the oracle source. The profile-space form exists only for
/// the leading-edge direction, where the qoi is a functional of the ordinates.
class QoiModel {
public:
  QoiModel(const PipelineConfig& c, const geometry::FfdDeformer& deformer);
  double design(const Eigen::VectorXd& x) const { return oracle_.evaluate(x); }
  bool has_profile_form() const { return ridge_.has_value(); }
  double profile(const Eigen::VectorXd& ordinates) const;
  const testbed::SyntheticOracle& oracle() const { return oracle_; }

private:
  testbed::SyntheticOracle oracle_;
  std::optional<testbed::GeometricRidge> ridge_;
};

// Each stage reads its upstream artifacts through Workspace::require, writes
// its own, and returns a short JSON summary.
nlohmann::json stage_doe(const Workspace& ws);
nlohmann::json stage_evaluate(const Workspace& ws);
nlohmann::json stage_fit(const Workspace& ws);
nlohmann::json stage_subspace(const Workspace& ws);
nlohmann::json stage_sample(const Workspace& ws);
nlohmann::json stage_envelope(const Workspace& ws);
nlohmann::json stage_gate(const Workspace& ws);
nlohmann::json stage_report(const Workspace& ws);
/// Every stage in order; returns [{stage, summary}, ...].
nlohmann::json run_all(const Workspace& ws);

/// Gates user-supplied profiles (multi-profile CSV) against an envelope file.
/// Profiles on other stations are resampled onto the envelope's stations.
nlohmann::json gate_profiles(const std::string& envelope_path, const std::string& profiles_path,
                             const std::string& out_path, int jobs = 1);

}  // namespace bladeenv::pipeline
