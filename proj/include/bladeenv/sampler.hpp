#pragma once

#include "bladeenv/geometry.hpp"
#include "bladeenv/subspace.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bladeenv::sampler {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// {z : A z <= b}, the inactive coordinates compatible with the hypercube at
/// fixed active coordinate u. Rows are V z <= 1 - W u followed by
/// -V z <= 1 + W u.
struct InactivePolytope {
  MatrixXd A;
  VectorXd b;
  VectorXd u;
  MatrixXd W;  ///< empty for a bare polytope without a lift
  MatrixXd V;
  std::string warning;

  Eigen::Index dimension() const { return A.cols(); }
  /// Largest constraint violation max_i (a_i^T z - b_i), <= 0 inside.
  double violation(const VectorXd& z) const;
};

InactivePolytope build_polytope(const subspace::SubspacePartition& p, const VectorXd& u);

struct ChebyshevBall {
  VectorXd center;
  double radius = 0.0;
};

/// Largest inscribed ball via the LP  max rho  s.t.  a_i^T z + rho ||a_i|| <= b_i.
/// Throws NumericalError for empty or unbounded polytopes.
ChebyshevBall chebyshev_center(const InactivePolytope& poly);

struct HitAndRunOptions {
  int burn_in = 100;
  int thin = 5;
  /// |a_i^T d| below this treats constraint i as parallel to the ray.
  double parallel_tolerance = 1e-14;
  /// Consecutive zero-length chords tolerated before giving up.
  int retry_cap = 100;
};

/// Hit-and-run chain from `start` (Chebyshev centre when unset): uniform
/// direction on the sphere, uniform point on the chord through the current
/// point. Returns n states after burn-in, keeping every `thin`-th.
std::vector<VectorXd> hit_and_run(const InactivePolytope& poly, int n, std::uint64_t seed,
                                  const HitAndRunOptions& options = {},
                                  std::optional<VectorXd> start = std::nullopt);

/// x = W u + V z, checked against the hypercube and the active coordinate.
geometry::DesignVector lift(const InactivePolytope& poly, const VectorXd& z);

}  // namespace bladeenv::sampler
