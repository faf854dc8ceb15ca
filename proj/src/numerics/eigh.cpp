#include "bladeenv/errors.hpp"
#include "bladeenv/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace bladeenv::numerics {

SymmetricMatrix::SymmetricMatrix(const MatrixXd& a) {
  if (a.rows() != a.cols()) throw DomainError("SymmetricMatrix: matrix is not square");
  m_ = 0.5 * (a + a.transpose());
}

SymmetricMatrix SymmetricMatrix::identity(Eigen::Index n) {
  return SymmetricMatrix(MatrixXd::Identity(n, n));
}

SymmetricMatrix SymmetricMatrix::zero(Eigen::Index n) { return SymmetricMatrix(MatrixXd::Zero(n, n)); }

namespace {

constexpr int kMaxSweeps = 100;

double off_diagonal_sq(const MatrixXd& a) {
  double off = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i) off += a(i, j) * a(i, j);
  return 2.0 * off;
}

}  // namespace

EigenDecomposition eigh(const SymmetricMatrix& sym, std::string_view name) {
  const Eigen::Index n = sym.size();
  MatrixXd a = sym.matrix();
  if (!a.allFinite()) {
    throw DomainError("eigh: " + std::string(name) + " has non-finite entries");
  }
  MatrixXd v = MatrixXd::Identity(n, n);

  const double norm_f = a.norm();
  const double tiny = std::numeric_limits<double>::min();
  const double stop = std::pow(1e-15 * norm_f, 2);
  bool converged = n <= 1 || norm_f == 0.0;
  double off = 0.0;

  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    off = off_diagonal_sq(a);
    if (off <= stop) {
      converged = true;
      break;
    }
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= tiny) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        // Skip elements that cannot change the diagonal in floating point.
        if (sweep > 3 && std::abs(apq) < 1e-18 * (std::abs(app) + std::abs(aqq))) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const double theta = (aqq - app) / (2.0 * apq);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        auto col_p = a.col(p);
        auto col_q = a.col(q);
        for (Eigen::Index k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = col_p(k);
          const double akq = col_q(k);
          col_p(k) = c * akp - s * akq;
          col_q(k) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          a(p, k) = col_p(k);
          a(q, k) = col_q(k);
        }
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = a(q, p) = 0.0;

        auto vp = v.col(p);
        auto vq = v.col(q);
        for (Eigen::Index k = 0; k < n; ++k) {
          const double x = vp(k);
          const double y = vq(k);
          vp(k) = c * x - s * y;
          vq(k) = s * x + c * y;
        }
      }
    }
  }
  if (!converged) {
    off = off_diagonal_sq(a);
    if (off > stop) {
      std::ostringstream msg;
      msg << "eigh: Jacobi iteration did not converge for " << name << " (n=" << n
          << ", off-diagonal residual " << std::sqrt(off) << ")";
      throw NumericalError(msg.str());
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });

  EigenDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.eigenvalues(k) = a(src, src);
    VectorXd vec = v.col(src);
    Eigen::Index lead = 0;
    for (Eigen::Index i = 1; i < n; ++i)
      if (std::abs(vec(i)) > std::abs(vec(lead))) lead = i;
    if (vec(lead) < 0.0) vec = -vec;
    out.eigenvectors.col(k) = vec;
  }
  return out;
}

}  // namespace bladeenv::numerics
