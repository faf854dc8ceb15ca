#include "bladeenv/errors.hpp"
#include "bladeenv/numerics.hpp"

#include <cmath>
#include <limits>

namespace bladeenv::numerics {

std::string to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
  }
  return "unknown";
}

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kInf = std::numeric_limits<double>::infinity();

// How an original variable maps onto the nonnegative simplex columns.
struct VariableMap {
  enum Kind { kShiftLower, kReflectUpper, kSplit } kind;
  double offset;
  Eigen::Index col;  // first simplex column
};

// Tableau for  min c^T x  s.t.  T x = rhs, x >= 0, with an explicit basis.
class Tableau {
public:
  Tableau(MatrixXd rows, VectorXd rhs, std::vector<Eigen::Index> basis)
      : t_(std::move(rows)), rhs_(std::move(rhs)), basis_(std::move(basis)) {}

  // Returns false when unbounded. `allowed` limits entering columns.
  bool optimize(const VectorXd& cost, Eigen::Index allowed) {
    const Eigen::Index m = t_.rows();
    for (int guard = 0; guard < 100000; ++guard) {
      // Reduced costs: c_j - c_B^T T_j (tableau is kept in canonical form).
      Eigen::Index entering = -1;
      for (Eigen::Index j = 0; j < allowed; ++j) {
        if (is_basic(j)) continue;
        double reduced = cost(j);
        for (Eigen::Index i = 0; i < m; ++i) reduced -= cost(basis_[i]) * t_(i, j);
        if (reduced < -1e-10) {
          entering = j;  // Bland: lowest index
          break;
        }
      }
      if (entering < 0) return true;

      Eigen::Index leaving = -1;
      double best = kInf;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double a = t_(i, entering);
        if (a <= kPivotTol) continue;
        const double ratio = rhs_(i) / a;
        if (ratio < best - 1e-12 ||
            (std::abs(ratio - best) <= 1e-12 && leaving >= 0 && basis_[i] < basis_[leaving])) {
          best = ratio;
          leaving = i;
        }
      }
      if (leaving < 0) return false;
      pivot(leaving, entering);
    }
    throw NumericalError("lp_solve: simplex iteration guard exceeded");
  }

  void pivot(Eigen::Index row, Eigen::Index col) {
    const double p = t_(row, col);
    t_.row(row) /= p;
    rhs_(row) /= p;
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i == row) continue;
      const double factor = t_(i, col);
      if (factor == 0.0) continue;
      t_.row(i) -= factor * t_.row(row);
      rhs_(i) -= factor * rhs_(row);
    }
    basis_[row] = col;
  }

  bool is_basic(Eigen::Index j) const {
    for (auto b : basis_)
      if (b == j) return true;
    return false;
  }

  VectorXd solution(Eigen::Index ncols) const {
    VectorXd x = VectorXd::Zero(ncols);
    for (std::size_t i = 0; i < basis_.size(); ++i)
      if (basis_[i] < ncols) x(basis_[i]) = rhs_(static_cast<Eigen::Index>(i));
    return x;
  }

  MatrixXd& rows() { return t_; }
  VectorXd& rhs() { return rhs_; }
  std::vector<Eigen::Index>& basis() { return basis_; }

private:
  MatrixXd t_;
  VectorXd rhs_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace

LpResult lp_solve(const LinearProgram& lp) {
  const Eigen::Index n = lp.objective.size();
  if (lp.A.rows() < 1) throw DomainError("lp_solve: at least one constraint row is required");
  if (lp.A.cols() != n || lp.b.size() != lp.A.rows()) {
    throw DomainError("lp_solve: inconsistent dimensions");
  }
  const VectorXd lower = lp.lower.size() ? lp.lower : VectorXd::Constant(n, -kInf);
  const VectorXd upper = lp.upper.size() ? lp.upper : VectorXd::Constant(n, kInf);
  if (lower.size() != n || upper.size() != n) throw DomainError("lp_solve: bound size mismatch");

  // Map each variable to nonnegative simplex columns.
  std::vector<VariableMap> vars;
  Eigen::Index ncols = 0;
  std::vector<std::pair<Eigen::Index, double>> extra_upper;  // column, width
  for (Eigen::Index j = 0; j < n; ++j) {
    if (lower(j) > upper(j)) return {LpStatus::kInfeasible, {}, 0.0};
    if (std::isfinite(lower(j))) {
      vars.push_back({VariableMap::kShiftLower, lower(j), ncols});
      if (std::isfinite(upper(j))) extra_upper.emplace_back(ncols, upper(j) - lower(j));
      ncols += 1;
    } else if (std::isfinite(upper(j))) {
      vars.push_back({VariableMap::kReflectUpper, upper(j), ncols});
      ncols += 1;
    } else {
      vars.push_back({VariableMap::kSplit, 0.0, ncols});
      ncols += 2;
    }
  }

  // Inequalities in simplex columns: G x <= h.
  const Eigen::Index m = lp.A.rows() + static_cast<Eigen::Index>(extra_upper.size());
  MatrixXd g = MatrixXd::Zero(m, ncols);
  VectorXd h(m);
  VectorXd cost = VectorXd::Zero(ncols);
  const double sign = lp.sense == Sense::kMaximize ? -1.0 : 1.0;
  for (Eigen::Index i = 0; i < lp.A.rows(); ++i) h(i) = lp.b(i);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& vm = vars[static_cast<std::size_t>(j)];
    const double cj = sign * lp.objective(j);
    switch (vm.kind) {
      case VariableMap::kShiftLower:
        g.col(vm.col).head(lp.A.rows()) = lp.A.col(j);
        h.head(lp.A.rows()) -= lp.A.col(j) * vm.offset;
        cost(vm.col) = cj;
        break;
      case VariableMap::kReflectUpper:
        g.col(vm.col).head(lp.A.rows()) = -lp.A.col(j);
        h.head(lp.A.rows()) -= lp.A.col(j) * vm.offset;
        cost(vm.col) = -cj;
        break;
      case VariableMap::kSplit:
        g.col(vm.col).head(lp.A.rows()) = lp.A.col(j);
        g.col(vm.col + 1).head(lp.A.rows()) = -lp.A.col(j);
        cost(vm.col) = cj;
        cost(vm.col + 1) = -cj;
        break;
    }
  }
  for (std::size_t k = 0; k < extra_upper.size(); ++k) {
    const Eigen::Index row = lp.A.rows() + static_cast<Eigen::Index>(k);
    g(row, extra_upper[k].first) = 1.0;
    h(row) = extra_upper[k].second;
  }

  // Equality form with slacks; rows with negative rhs get an artificial.
  Eigen::Index nart = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    if (h(i) < 0.0) ++nart;
  const Eigen::Index total = ncols + m + nart;
  MatrixXd rows = MatrixXd::Zero(m, total);
  VectorXd rhs(m);
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  Eigen::Index art = ncols + m;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double s = h(i) < 0.0 ? -1.0 : 1.0;
    rows.row(i).head(ncols) = s * g.row(i);
    rows(i, ncols + i) = s;
    rhs(i) = s * h(i);
    if (s < 0.0) {
      rows(i, art) = 1.0;
      basis[static_cast<std::size_t>(i)] = art++;
    } else {
      basis[static_cast<std::size_t>(i)] = ncols + i;
    }
  }
  Tableau tab(std::move(rows), std::move(rhs), std::move(basis));

  if (nart > 0) {
    VectorXd phase1 = VectorXd::Zero(total);
    phase1.tail(nart).setOnes();
    tab.optimize(phase1, total);
    double infeas = 0.0;
    for (std::size_t i = 0; i < tab.basis().size(); ++i)
      if (tab.basis()[i] >= ncols + m) infeas += tab.rhs()(static_cast<Eigen::Index>(i));
    const double scale = 1.0 + h.cwiseAbs().maxCoeff();
    if (infeas > 1e-9 * scale) return {LpStatus::kInfeasible, {}, 0.0};
    // Drive zero-level artificials out of the basis.
    for (std::size_t i = 0; i < tab.basis().size(); ++i) {
      if (tab.basis()[i] < ncols + m) continue;
      const auto r = static_cast<Eigen::Index>(i);
      for (Eigen::Index j = 0; j < ncols + m; ++j) {
        if (std::abs(tab.rows()(r, j)) > kPivotTol) {
          tab.pivot(r, j);
          break;
        }
      }
    }
  }

  VectorXd phase2 = VectorXd::Zero(total);
  phase2.head(ncols) = cost;
  if (!tab.optimize(phase2, ncols + m)) return {LpStatus::kUnbounded, {}, 0.0};

  const VectorXd xs = tab.solution(ncols);
  LpResult out;
  out.status = LpStatus::kOptimal;
  out.x.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& vm = vars[static_cast<std::size_t>(j)];
    switch (vm.kind) {
      case VariableMap::kShiftLower: out.x(j) = vm.offset + xs(vm.col); break;
      case VariableMap::kReflectUpper: out.x(j) = vm.offset - xs(vm.col); break;
      case VariableMap::kSplit: out.x(j) = xs(vm.col) - xs(vm.col + 1); break;
    }
  }
  out.objective = lp.objective.dot(out.x);
  return out;
}

}  // namespace bladeenv::numerics
