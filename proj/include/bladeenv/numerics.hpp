#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

namespace bladeenv::numerics {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Dense symmetric matrix; construction symmetrizes with (A + A^T) / 2 so the
/// stored entries are exactly symmetric.
class SymmetricMatrix {
public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(const MatrixXd& a);

  static SymmetricMatrix identity(Eigen::Index n);
  static SymmetricMatrix zero(Eigen::Index n);

  Eigen::Index size() const noexcept { return m_.rows(); }
  const MatrixXd& matrix() const noexcept { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  double trace() const { return m_.trace(); }
  double max_abs() const { return m_.size() == 0 ? 0.0 : m_.cwiseAbs().maxCoeff(); }

private:
  MatrixXd m_;
};

/// Eigenpairs sorted by descending eigenvalue; column k of `eigenvectors`
/// pairs with `eigenvalues[k]`.
struct EigenDecomposition {
  VectorXd eigenvalues;
  MatrixXd eigenvectors;
};

/// Cyclic Jacobi eigensolver. Each eigenvector's largest-magnitude component
/// is made positive (first such component on exact ties), so results are
/// reproducible bit for bit. Throws NumericalError naming `name` on
/// non-convergence.
EigenDecomposition eigh(const SymmetricMatrix& a, std::string_view name = "matrix");

// ---------------------------------------------------------------------------
// Linear programming

enum class Sense { kMinimize, kMaximize };

/// optimize objective^T y  s.t.  A y <= b,  lower <= y <= upper.
/// Empty `lower`/`upper` mean unbounded; entries may be +-infinity.
struct LinearProgram {
  VectorXd objective;
  MatrixXd A;
  VectorXd b;
  VectorXd lower;
  VectorXd upper;
  Sense sense = Sense::kMinimize;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  VectorXd x;
  double objective = 0.0;

  bool optimal() const noexcept { return status == LpStatus::kOptimal; }
};

/// Dense two-phase simplex with Bland's anti-cycling rule.
LpResult lp_solve(const LinearProgram& lp);

std::string to_string(LpStatus status);

// ---------------------------------------------------------------------------
// Basis pursuit denoising:  min ||a||_1  s.t.  ||Psi a - f||_2 <= epsilon

struct BpdnOptions {
  int max_iterations = 5000;
  double tolerance = 1e-8;  ///< relative primal/dual residual stop
  /// ADMM penalty is rho_scale / ||Psi_n^T f||_inf with Psi_n the column-normalized matrix.
  double rho_scale = 10.0;
  /// Iterations between feasibility checks of the sparse (thresholded) iterate.
  int sparse_check_interval = 10;
};

struct BpdnResult {
  VectorXd coefficients;
  double residual_norm = 0.0;
  double l1_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  /// epsilon was below the least-squares residual; the result is the
  /// least-squares-closest point of minimal weighted L1 norm.
  bool epsilon_infeasible = false;
  /// L1 norm of the best feasible iterate, recorded at each improvement.
  std::vector<double> l1_trace;
  std::string warning;
};

/// ADMM with an exact projection onto the residual ball (computed from a thin
/// SVD of the column-normalized Psi). Coefficients are returned in the
/// original (unnormalized) column scaling.
BpdnResult bpdn_solve(const MatrixXd& psi, const VectorXd& f, double epsilon,
                      const BpdnOptions& options = {});

// ---------------------------------------------------------------------------
// Pseudo-inverse of a positive semidefinite matrix

struct PsdPseudoInverse {
  SymmetricMatrix pinv;
  int rank = 0;
  MatrixXd basis;             ///< n x rank, eigenvectors of retained eigenvalues
  VectorXd retained;          ///< retained eigenvalues, descending
};

/// Eigenvalues below rel_tol * lambda_max count as zero. Throws
/// NumericalError when an eigenvalue is below -1e-8 * trace.
PsdPseudoInverse pinv_psd(const SymmetricMatrix& s, double rel_tol = 1e-10);

}  // namespace bladeenv::numerics
