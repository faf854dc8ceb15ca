#pragma once

#include "bladeenv/geometry.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace bladeenv::testbed {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class OracleKind { kLinear, kRidge, kQuadraticRidge };

std::string to_string(OracleKind kind);
OracleKind oracle_kind_from_string(const std::string& name);

/// Ridge link g(t) = t^3 + 0.5 t and its derivative.
double ridge_link(double t);
double ridge_link_derivative(double t);

/// Test function with a known active subspace.
///   linear:           w^T x
///   ridge:            g(w^T x)
///   quadratic-ridge:  (w1^T x)^2 + 0.1 (w2^T x)
/// A nonzero noise amplitude adds a Gaussian term seeded by (noise_seed, x).
struct SyntheticOracle {
  OracleKind kind = OracleKind::kRidge;
  std::vector<VectorXd> directions;
  double noise = 0.0;
  std::uint64_t noise_seed = 0;

  int dimension() const { return directions.empty() ? 0 : static_cast<int>(directions.front().size()); }
  double evaluate(const VectorXd& x) const;
  VectorXd evaluate_rows(const MatrixXd& x) const;
  /// Gradient of the noise-free part.
  VectorXd gradient(const VectorXd& x) const;
};

SyntheticOracle make_linear(const VectorXd& w);
SyntheticOracle make_ridge(const VectorXd& w);
SyntheticOracle make_quadratic_ridge(const VectorXd& w1, const VectorXd& w2);
SyntheticOracle with_noise(SyntheticOracle o, double amplitude, std::uint64_t seed);

/// Seeded unit vector, uniform on the sphere.
VectorXd random_direction(int d, std::uint64_t seed);

/// Orthonormal basis of the span of the generator directions.
MatrixXd true_active_subspace(const SyntheticOracle& o);

/// Ridge oracle defined on profiles: q(s) = g(l^T (s - b) / scale) with l a
/// Gaussian weighting of the suction-side ordinates near the leading edge.
/// For profiles produced by the FFD deformer used at construction,
/// q(deform(x)) = g(w^T x) with w = B^T l / ||B^T l||.
class GeometricRidge {
public:
  GeometricRidge(const geometry::FfdDeformer& deformer, double center = 0.05, double width = 0.08);

  double evaluate_profile(const VectorXd& ordinates) const;
  double evaluate_profile(const geometry::AirfoilProfile& profile) const;
  /// Ridge coordinate l^T (s - b) / scale; equals w^T x on deformer output.
  double coordinate(const VectorXd& ordinates) const;
  /// Equivalent design-space ridge oracle.
  const SyntheticOracle& design_oracle() const { return oracle_; }
  const VectorXd& weights() const { return ell_; }

private:
  VectorXd ell_;
  VectorXd base_;
  geometry::Stations stations_;
  double scale_;
  SyntheticOracle oracle_;
};

/// Alternating-sign copy of a member's deviation from mu, clamped to the
/// control zone [c_l, c_u]: inside the zone but off the member manifold.
VectorXd kinked_profile(const VectorXd& member, const VectorXd& mu, const VectorXd& c_l, const VectorXd& c_u,
                        double scale = 0.5);

/// Spearman rank correlation (average ranks for ties).
double rank_correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace bladeenv::testbed
