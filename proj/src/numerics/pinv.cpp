#include "bladeenv/errors.hpp"
#include "bladeenv/numerics.hpp"

#include <sstream>

namespace bladeenv::numerics {

PsdPseudoInverse pinv_psd(const SymmetricMatrix& s, double rel_tol) {
  if (!(rel_tol > 0.0)) throw DomainError("pinv_psd: rel_tol must be positive");
  const Eigen::Index n = s.size();
  const EigenDecomposition eig = eigh(s, "covariance");
  const double trace = std::max(s.trace(), 0.0);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (eig.eigenvalues(k) < -1e-8 * trace) {
      std::ostringstream msg;
      msg << "pinv_psd: matrix is not positive semidefinite (eigenvalue " << eig.eigenvalues(k)
          << " at index " << k << ", trace " << trace << ")";
      throw NumericalError(msg.str());
    }
  }

  PsdPseudoInverse out;
  const double lmax = n ? eig.eigenvalues(0) : 0.0;
  int rank = 0;
  if (lmax > 0.0)
    while (rank < n && eig.eigenvalues(rank) > rel_tol * lmax) ++rank;
  out.rank = rank;
  out.basis = eig.eigenvectors.leftCols(rank);
  out.retained = eig.eigenvalues.head(rank);
  const MatrixXd scaled = out.basis * out.retained.cwiseInverse().asDiagonal();
  out.pinv = SymmetricMatrix(scaled * out.basis.transpose());
  return out;
}

}  // namespace bladeenv::numerics
