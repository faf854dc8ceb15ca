#pragma once

#include "bladeenv/numerics.hpp"
#include "bladeenv/surrogate.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <optional>

namespace bladeenv::subspace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using numerics::SymmetricMatrix;

/// Active/inactive split of the design space.
struct SubspacePartition {
  VectorXd eigenvalues;  ///< descending, length d
  MatrixXd W;            ///< d x r
  MatrixXd V;            ///< d x (d - r)
  int r = 0;
  long long M = 0;       ///< Monte Carlo points behind the covariance (0 if supplied directly)
  std::uint64_t seed = 0;

  int dimension() const { return static_cast<int>(W.rows()); }
};

using GradientFn = std::function<VectorXd(const VectorXd&)>;

/// Monte Carlo estimate of E[grad f grad f^T] under the uniform density on
/// [-1, 1]^d. Point m is drawn from substream m, and partial sums are reduced
/// in block order, so the result is independent of `jobs`.
SymmetricMatrix estimate_covariance(const GradientFn& gradient, int d, long long M, std::uint64_t seed,
                                    int jobs = 1);
SymmetricMatrix estimate_covariance(const surrogate::Surrogate& s, long long M, std::uint64_t seed,
                                    int jobs = 1);

/// Smallest eigenvalue ratio floor relative to the leading eigenvalue.
inline constexpr double kEigenvalueFloor = 1e-14;

/// Eigen-split of C. With r unset the split maximizes lambda_k / lambda_{k+1}
/// (eigenvalues floored at 1e-14 * lambda_1). Throws NumericalError when no
/// gap exists and r must be given explicitly.
SubspacePartition partition(const SymmetricMatrix& c, std::optional<int> r = std::nullopt);

/// u = W^T x.
VectorXd active_coordinate(const SubspacePartition& p, const VectorXd& x);

/// Principal angles (radians, ascending) between the column spans of two
/// matrices with orthonormal columns; returns min(cols) angles.
VectorXd principal_angles(const MatrixXd& a, const MatrixXd& b);

nlohmann::json to_json(const SubspacePartition& p);
SubspacePartition partition_from_json(const nlohmann::json& j);

}  // namespace bladeenv::subspace
