#pragma once

#include "bladeenv/numerics.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bladeenv::surrogate {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class IndexSetKind { kTensorial, kTotalOrder, kEuclidean, kHyperbolic };

std::string to_string(IndexSetKind kind);
IndexSetKind index_set_kind_from_string(const std::string& name);

/// Exponent used by the hyperbolic-cross rule (sum_j i_j^q)^(1/q) <= p.
inline constexpr double kHyperbolicQ = 0.5;

/// Isotropic multi-index set, lexicographically sorted without duplicates.
struct MultiIndexSet {
  IndexSetKind kind = IndexSetKind::kTotalOrder;
  int d = 0;
  int p = 0;
  std::vector<std::vector<int>> indices;

  std::size_t size() const { return indices.size(); }
};

/// Membership rule of `kind` for a single multi-index.
bool admits(IndexSetKind kind, int p, const std::vector<int>& index);

MultiIndexSet build_index_set(IndexSetKind kind, int d, int p);

/// Number of total-order terms, C(p + d, p).
std::uint64_t total_order_count(int d, int p);

/// Orthonormal Legendre polynomials (uniform weight on [-1, 1]) and their
/// derivatives for degrees 0..p at x.
void legendre(int p, double x, double* values, double* derivatives = nullptr);

/// K x O design matrix of the basis at the rows of X.
MatrixXd eval_basis(const MultiIndexSet& basis, const MatrixXd& x);

struct FitDiagnostics {
  double residual_norm = 0.0;
  double r2_train = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string warning;
  /// Cross-validation error per candidate epsilon when epsilon was selected automatically.
  std::vector<std::pair<double, double>> cv_errors;
};

/// Global polynomial f(x) ~ sum_i a_i psi_i(x).
class Surrogate {
public:
  Surrogate(MultiIndexSet basis, VectorXd coefficients, double epsilon = 0.0, FitDiagnostics diagnostics = {});

  const MultiIndexSet& basis() const { return basis_; }
  const VectorXd& coefficients() const { return coefficients_; }
  double epsilon() const { return epsilon_; }
  const FitDiagnostics& diagnostics() const { return diagnostics_; }
  int dimension() const { return basis_.d; }

  double predict(const VectorXd& x) const;
  VectorXd predict(const MatrixXd& x) const;
  VectorXd gradient(const VectorXd& x) const;

private:
  struct Term {
    std::vector<std::pair<int, int>> factors;  // (dimension, degree > 0)
    double coefficient;
  };
  void check_point(const VectorXd& x) const;

  MultiIndexSet basis_;
  VectorXd coefficients_;
  double epsilon_;
  FitDiagnostics diagnostics_;
  std::vector<Term> terms_;  // nonzero coefficients only
};

struct FitOptions {
  numerics::BpdnOptions bpdn;
  int cv_folds = 5;
  std::vector<double> epsilon_grid;  ///< empty: 10 log-spaced points on [1e-5, 1e-1]
  /// Iteration cap for the cross-validation solves (0: same as bpdn.max_iterations).
  int cv_max_iterations = 1000;
};

std::vector<double> default_epsilon_grid();

/// Basis pursuit denoising fit. `epsilon` unset selects it by k-fold
/// cross-validated prediction error over the grid.
Surrogate fit(const MultiIndexSet& basis, const MatrixXd& x, const VectorXd& f,
              std::optional<double> epsilon, const FitOptions& options = {});

/// 1 - SS_res / SS_tot. Throws DomainError for zero-variance targets.
double r_squared(const Surrogate& s, const MatrixXd& x_test, const VectorXd& f_test);

nlohmann::json to_json(const Surrogate& s);
Surrogate surrogate_from_json(const nlohmann::json& j);

}  // namespace bladeenv::surrogate
