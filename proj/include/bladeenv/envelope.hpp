#pragma once

#include "bladeenv/geometry.hpp"
#include "bladeenv/numerics.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace bladeenv::envelope {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using geometry::AirfoilProfile;
using numerics::SymmetricMatrix;

/// score(zeta) = beta1 / (1 + exp(-beta2 (zeta - beta3))); grows with zeta.
struct LogisticGate {
  double beta1 = 1.0;
  double beta2 = 5.0;
  double beta3 = 3.0;

  void validate() const;
};

double gate_score(const LogisticGate& g, double zeta);

/// Review band on the Mahalanobis distance.
struct Buffer {
  double zeta_lo = 3.5;
  double zeta_hi = 7.0;

  void validate() const;
};

/// Norms of the running statistics after `count` samples.
struct ConvergencePoint {
  long long count = 0;
  double mu_norm = 0.0;
  double s_norm = 0.0;
};

/// Single-pass mean, covariance (divisor H - 1) and coordinate-wise min/max.
class StreamingMoments {
public:
  explicit StreamingMoments(Eigen::Index n, long long checkpoint_interval = 0);

  void add(const VectorXd& y);
  long long count() const { return count_; }
  const VectorXd& mean() const { return mean_; }
  MatrixXd covariance() const;
  const VectorXd& min() const { return min_; }
  const VectorXd& max() const { return max_; }
  const std::vector<ConvergencePoint>& trace() const { return trace_; }

private:
  Eigen::Index n_;
  long long interval_;
  long long count_ = 0;
  VectorXd mean_, min_, max_;
  MatrixXd m2_;
  std::vector<ConvergencePoint> trace_;
};

/// Largest relative deviation of ||mu||_2 and ||S||_F from their final values
/// over trace points in the last 10% of samples.
struct Drift {
  double mu = 0.0;
  double s = 0.0;
};
Drift last_decile_drift(const std::vector<ConvergencePoint>& trace);

class BladeEnvelope {
public:
  BladeEnvelope(geometry::Stations stations, VectorXd mu, SymmetricMatrix s, VectorXd c_l, VectorXd c_u, long long h,
                LogisticGate gate = {}, Buffer buffer = {});

  const geometry::Stations& stations() const { return stations_; }
  const VectorXd& mu() const { return mu_; }
  const SymmetricMatrix& covariance() const { return s_; }
  const VectorXd& lower() const { return c_l_; }
  const VectorXd& upper() const { return c_u_; }
  long long samples() const { return h_; }
  int rank() const { return pinv_.rank; }
  const numerics::PsdPseudoInverse& pseudo_inverse() const { return pinv_; }
  const LogisticGate& gate() const { return gate_; }
  const Buffer& buffer() const { return buffer_; }
  void set_gate(const LogisticGate& g);
  void set_buffer(const Buffer& b);

  nlohmann::json provenance;

private:
  geometry::Stations stations_;
  VectorXd mu_;
  SymmetricMatrix s_;
  VectorXd c_l_, c_u_;
  long long h_;
  LogisticGate gate_;
  Buffer buffer_;
  numerics::PsdPseudoInverse pinv_;
};

/// Envelope of profiles sharing the baseline's stations.
BladeEnvelope build_envelope(const std::vector<AirfoilProfile>& profiles, const AirfoilProfile& baseline);
/// Envelope from a finished accumulator of ordinate vectors.
BladeEnvelope build_envelope(const StreamingMoments& moments, const geometry::Stations& stations);

inline constexpr double kZoneTolerance = 1e-12;

struct ZoneCheck {
  bool inside = true;
  std::vector<std::size_t> violations;  ///< ordinate indices outside [c_l, c_u]
};

ZoneCheck in_control_zone(const BladeEnvelope& e, const AirfoilProfile& profile);
ZoneCheck in_control_zone(const BladeEnvelope& e, const VectorXd& ordinates);

/// Mahalanobis distance through the rank-aware pseudo-inverse. The part of
/// s - mu outside the span of S adds ||orth||^2 / lambda_min to zeta^2, where
/// lambda_min is the smallest retained eigenvalue.
double mahalanobis(const BladeEnvelope& e, const AirfoilProfile& profile);
double mahalanobis(const BladeEnvelope& e, const VectorXd& ordinates);

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);
/// Quantile of the chi-squared distribution with `dof` degrees of freedom.
double chi2_quantile(double dof, double probability);
/// sqrt of the chi-squared quantile with dof = rank(S).
double chi2_threshold(const BladeEnvelope& e, double significance);

enum class Verdict { kUse, kReview, kScrap };
std::string to_string(Verdict v);

struct VerdictReport {
  std::string id;
  double zeta = 0.0;
  double score = 0.0;
  bool in_zone = true;
  std::vector<std::size_t> zone_violations;
  Verdict verdict = Verdict::kUse;
};

/// scrap outside the control zone; otherwise use below zeta_lo, review inside
/// the buffer, scrap above zeta_hi.
VerdictReport verdict(const BladeEnvelope& e, const AirfoilProfile& profile, const std::string& id = "");
VerdictReport verdict(const BladeEnvelope& e, const VectorXd& ordinates, const std::string& id = "");

struct GateCalibration {
  LogisticGate gate;
  double loss = 0.0;
  std::string warning;
};

/// beta1 = 1; beta2, beta3 minimize the mean cross-entropy of gate_score with
/// labels use = 0 and scrap = 1, by gradient descent from `restarts` seeded
/// starting points.
GateCalibration calibrate_gate(const std::vector<double>& distances_use, const std::vector<double>& distances_scrap,
                               std::uint64_t seed = 0, int restarts = 10);

nlohmann::json to_json(const BladeEnvelope& e);
BladeEnvelope envelope_from_json(const nlohmann::json& j);
nlohmann::json to_json(const VerdictReport& r);

}  // namespace bladeenv::envelope
