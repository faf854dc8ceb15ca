#include "bladeenv/errors.hpp"
#include "bladeenv/numerics.hpp"

#include <cmath>
#include <limits>

namespace bladeenv::numerics {

namespace {

// Projection onto {a : ||A a - f||_2 <= eps} using the thin SVD A = U S Vt.
// Writing g = S Vt v and c = U^T f, the projection is
//   a(lambda) = (I + lambda A^T A)^{-1} (v + lambda A^T f)
// with squared residual  sum_k (g_k - c_k)^2 / (1 + lambda s_k^2)^2 + |f_perp|^2,
// decreasing in lambda; lambda is found by bisection in log space.
class ResidualBallProjector {
public:
  ResidualBallProjector(const MatrixXd& a, const VectorXd& f, double eps) : eps_(eps) {
    Eigen::BDCSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd& sv = svd.singularValues();
    Eigen::Index rank = 0;
    const double cutoff = sv.size() ? sv(0) * 1e-12 : 0.0;
    while (rank < sv.size() && sv(rank) > cutoff) ++rank;
    s_ = sv.head(rank);
    vt_ = svd.matrixV().leftCols(rank).transpose();
    const MatrixXd u = svd.matrixU().leftCols(rank);
    c_ = u.transpose() * f;
    f_perp_ = (f - u * c_).norm();
  }

  double floor_residual() const { return f_perp_; }
  bool infeasible() const { return f_perp_ > eps_ * (1.0 + 1e-12) + 1e-300; }

  // Residual norm of a point a given Vt a.
  double residual(const VectorXd& vt_a) const {
    return std::sqrt((s_.cwiseProduct(vt_a) - c_).squaredNorm() + f_perp_ * f_perp_);
  }

  VectorXd project(const VectorXd& v, double* residual_out = nullptr) const {
    const VectorXd vtv = vt_ * v;
    const VectorXd delta = s_.cwiseProduct(vtv) - c_;
    const double target = std::max(eps_, f_perp_);
    const double target_sq = target * target;
    auto res_sq = [&](double lambda) {
      return (delta.array() / (1.0 + lambda * s_.array().square())).square().sum() +
             f_perp_ * f_perp_;
    };
    if (res_sq(0.0) <= eps_ * eps_) {
      if (residual_out) *residual_out = std::sqrt(res_sq(0.0));
      return v;
    }
    VectorXd coef;
    if (infeasible() || eps_ == 0.0) {
      // Limit lambda -> infinity: the affine set A a = U c.
      coef = c_.cwiseQuotient(s_) - vtv;
      if (residual_out) *residual_out = f_perp_;
    } else {
      double lo = -60.0, hi = 0.0;  // log10 lambda
      while (res_sq(std::pow(10.0, hi)) > target_sq && hi < 300.0) hi += 5.0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (res_sq(std::pow(10.0, mid)) > target_sq) lo = mid;
        else hi = mid;
      }
      const double lambda = std::pow(10.0, hi);
      const Eigen::ArrayXd ls2 = lambda * s_.array().square();
      coef = (-ls2 / (1.0 + ls2) * vtv.array() +
              lambda * s_.array() / (1.0 + ls2) * c_.array()).matrix();
      if (residual_out) *residual_out = std::sqrt(res_sq(lambda));
    }
    return v + vt_.transpose() * coef;
  }

  const MatrixXd& vt() const { return vt_; }

private:
  double eps_;
  VectorXd s_;
  MatrixXd vt_;
  VectorXd c_;
  double f_perp_ = 0.0;
};

VectorXd soft_threshold(const VectorXd& v, double kappa) {
  return v.unaryExpr([kappa](double x) {
    if (x > kappa) return x - kappa;
    if (x < -kappa) return x + kappa;
    return 0.0;
  });
}

}  // namespace

BpdnResult bpdn_solve(const MatrixXd& psi, const VectorXd& f, double epsilon,
                      const BpdnOptions& options) {
  const Eigen::Index k = psi.rows();
  const Eigen::Index o = psi.cols();
  if (k < 1) throw DomainError("bpdn_solve: at least one sample is required");
  if (f.size() != k) throw DomainError("bpdn_solve: f length does not match Psi rows");
  if (!(epsilon >= 0.0)) throw DomainError("bpdn_solve: epsilon must be nonnegative");
  if (!psi.allFinite() || !f.allFinite()) throw DomainError("bpdn_solve: non-finite input");

  BpdnResult out;
  out.coefficients = VectorXd::Zero(o);
  if (f.norm() <= epsilon || f.isZero(0.0)) {
    out.residual_norm = f.norm();
    out.converged = true;
    out.l1_trace.push_back(0.0);
    return out;
  }

  VectorXd col_norm = psi.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < o; ++j)
    if (col_norm(j) == 0.0) col_norm(j) = 1.0;
  const MatrixXd a = psi * col_norm.cwiseInverse().asDiagonal();

  const ResidualBallProjector proj(a, f, epsilon);
  if (proj.infeasible()) {
    out.epsilon_infeasible = true;
    out.warning = "epsilon below the minimal achievable residual " +
                  std::to_string(proj.floor_residual()) +
                  "; returning the least-squares-closest solution";
  }
  const double tol_residual = std::max(epsilon, proj.floor_residual()) * (1.0 + 1e-6) + 1e-14;

  const double scale = (a.transpose() * f).cwiseAbs().maxCoeff();
  const double rho = options.rho_scale / scale;
  const double kappa = 1.0 / rho;

  VectorXd z = VectorXd::Zero(o);
  VectorXd u = VectorXd::Zero(o);
  VectorXd x(o);
  VectorXd best;
  double best_l1 = std::numeric_limits<double>::infinity();
  double best_residual = 0.0;

  auto consider = [&](const VectorXd& candidate, double residual) {
    const double l1 = candidate.lpNorm<1>();
    if (residual <= tol_residual && l1 < best_l1) {
      best_l1 = l1;
      best = candidate;
      best_residual = residual;
      out.l1_trace.push_back(l1);
    }
  };

  int it = 0;
  for (; it < options.max_iterations; ++it) {
    double res_x = 0.0;
    x = proj.project(z - u, &res_x);
    const VectorXd z_old = z;
    z = soft_threshold(x + u, kappa);
    u += x - z;
    consider(x, res_x);

    const bool check_sparse = (it + 1) % options.sparse_check_interval == 0;
    if (check_sparse) consider(z, proj.residual(proj.vt() * z));

    const double primal = (x - z).norm();
    const double dual = rho * (z - z_old).norm();
    const double primal_scale = std::max({x.norm(), z.norm(), 1e-300});
    const double dual_scale = std::max(rho * u.norm(), 1e-300);
    if (primal <= options.tolerance * primal_scale && dual <= options.tolerance * dual_scale) {
      out.converged = true;
      ++it;
      break;
    }
  }
  consider(z, proj.residual(proj.vt() * z));

  out.iterations = it;
  out.coefficients = best.cwiseQuotient(col_norm);
  out.residual_norm = best_residual;
  out.l1_norm = out.coefficients.lpNorm<1>();
  if (!out.converged && out.warning.empty()) {
    out.warning = "ADMM reached the iteration cap before the residual stop";
  }
  return out;
}

}  // namespace bladeenv::numerics
