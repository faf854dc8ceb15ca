#include "bladeenv/sampler.hpp"

#include "bladeenv/errors.hpp"
#include "bladeenv/io.hpp"
#include "bladeenv/random.hpp"

#include <cmath>
#include <limits>

namespace bladeenv::sampler {

double InactivePolytope::violation(const VectorXd& z) const {
  if (A.rows() == 0) return -std::numeric_limits<double>::infinity();
  return (A * z - b).maxCoeff();
}

InactivePolytope build_polytope(const subspace::SubspacePartition& p, const VectorXd& u) {
  if (u.size() != p.W.cols()) {
    throw DomainError("build_polytope: u has length " + std::to_string(u.size()) + ", expected r = " +
                      std::to_string(p.W.cols()));
  }
  const Eigen::Index d = p.W.rows();
  const VectorXd wu = p.W * u;
  InactivePolytope poly;
  poly.A.resize(2 * d, p.V.cols());
  poly.A << p.V, -p.V;
  poly.b.resize(2 * d);
  poly.b << VectorXd::Ones(d) - wu, VectorXd::Ones(d) + wu;
  poly.u = u;
  poly.W = p.W;
  poly.V = p.V;
  if (d > 0 && wu.cwiseAbs().maxCoeff() > 1.0) {
    poly.warning = "||W u||_inf = " + io::format_double(wu.cwiseAbs().maxCoeff()) +
                   " exceeds 1; the polytope may be empty";
  }
  return poly;
}

ChebyshevBall chebyshev_center(const InactivePolytope& poly) {
  const Eigen::Index n = poly.dimension();
  const Eigen::Index m = poly.A.rows();
  numerics::LinearProgram lp;
  lp.sense = numerics::Sense::kMaximize;
  lp.objective = VectorXd::Zero(n + 1);
  lp.objective(n) = 1.0;
  lp.A.resize(m, n + 1);
  lp.A.leftCols(n) = poly.A;
  lp.A.col(n) = poly.A.rowwise().norm();
  lp.b = poly.b;
  const double inf = std::numeric_limits<double>::infinity();
  lp.lower = VectorXd::Constant(n + 1, -inf);
  lp.lower(n) = 0.0;
  lp.upper = VectorXd::Constant(n + 1, inf);
  const auto res = numerics::lp_solve(lp);
  if (res.status == numerics::LpStatus::kInfeasible) {
    throw NumericalError("chebyshev_center: the inactive polytope is empty" +
                         (poly.warning.empty() ? std::string() : " (" + poly.warning + ")"));
  }
  if (res.status == numerics::LpStatus::kUnbounded) {
    throw NumericalError("chebyshev_center: the polytope is unbounded");
  }
  return {res.x.head(n), res.x(n)};
}

std::vector<VectorXd> hit_and_run(const InactivePolytope& poly, int n, std::uint64_t seed,
                                  const HitAndRunOptions& options, std::optional<VectorXd> start) {
  if (n < 0) throw DomainError("hit_and_run: n must be nonnegative");
  if (options.burn_in < 0 || options.thin < 1) throw DomainError("hit_and_run: need burn_in >= 0 and thin >= 1");
  const Eigen::Index dim = poly.dimension();
  if (dim == 0) return std::vector<VectorXd>(static_cast<std::size_t>(n), VectorXd());

  VectorXd z;
  if (start) {
    z = *start;
    if (z.size() != dim) throw DomainError("hit_and_run: start point has the wrong dimension");
    if (poly.violation(z) > 1e-9) throw DomainError("hit_and_run: start point violates the constraints");
  } else {
    const auto ball = chebyshev_center(poly);
    if (!(ball.radius > 0.0)) throw NumericalError("hit_and_run: polytope has empty interior");
    z = ball.center;
  }

  Rng rng(seed);
  std::vector<VectorXd> out;
  out.reserve(static_cast<std::size_t>(n));
  const long long total = options.burn_in + static_cast<long long>(n) * options.thin;
  VectorXd dir(dim);
  int failures = 0;
  for (long long step = 0; step < total;) {
    for (Eigen::Index j = 0; j < dim; ++j) dir(j) = rng.normal();
    const double norm = dir.norm();
    if (!(norm > 0.0)) continue;
    dir /= norm;
    const VectorXd ad = poly.A * dir;
    const VectorXd slack = (poly.b - poly.A * z).cwiseMax(0.0);
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ad.size(); ++i) {
      if (ad(i) > options.parallel_tolerance) {
        hi = std::min(hi, slack(i) / ad(i));
      } else if (ad(i) < -options.parallel_tolerance) {
        lo = std::max(lo, slack(i) / ad(i));
      }
    }
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw NumericalError("hit_and_run: the polytope is unbounded");
    if (!(hi - lo > 0.0)) {
      if (++failures >= options.retry_cap) {
        throw NumericalError("hit_and_run: " + std::to_string(failures) +
                             " consecutive zero-length chords; the polytope is degenerate");
      }
      continue;
    }
    failures = 0;
    z += rng.uniform(lo, hi) * dir;
    ++step;
    if (step > options.burn_in && (step - options.burn_in) % options.thin == 0) {
      const double v = poly.violation(z);
      if (v > 1e-9) {
        throw NumericalError("hit_and_run: sample violates the constraints by " + io::format_double(v));
      }
      out.push_back(z);
    }
  }
  return out;
}

geometry::DesignVector lift(const InactivePolytope& poly, const VectorXd& z) {
  if (poly.V.size() == 0 && poly.W.size() == 0) throw DomainError("lift: polytope carries no partition");
  if (z.size() != poly.V.cols()) throw DomainError("lift: z has the wrong dimension");
  const double v = poly.violation(z);
  if (v > 1e-9) throw DomainError("lift: z violates the polytope by " + io::format_double(v));
  VectorXd x = poly.V * z;
  if (poly.W.cols() > 0) x += poly.W * poly.u;
  const VectorXd u_back = poly.W.transpose() * x;
  if (u_back.size() > 0 && (u_back - poly.u).cwiseAbs().maxCoeff() > 1e-10) {
    throw NumericalError("lift: active coordinate drifted by " +
                         io::format_double((u_back - poly.u).cwiseAbs().maxCoeff()));
  }
  return geometry::DesignVector(std::move(x));
}

}  // namespace bladeenv::sampler
