#include "bladeenv/surrogate.hpp"

#include "bladeenv/errors.hpp"
#include "bladeenv/io.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace bladeenv::surrogate {

std::string to_string(IndexSetKind kind) {
  switch (kind) {
    case IndexSetKind::kTensorial: return "tensorial";
    case IndexSetKind::kTotalOrder: return "total-order";
    case IndexSetKind::kEuclidean: return "euclidean";
    case IndexSetKind::kHyperbolic: return "hyperbolic";
  }
  return "unknown";
}

IndexSetKind index_set_kind_from_string(const std::string& name) {
  if (name == "tensorial") return IndexSetKind::kTensorial;
  if (name == "total-order") return IndexSetKind::kTotalOrder;
  if (name == "euclidean") return IndexSetKind::kEuclidean;
  if (name == "hyperbolic") return IndexSetKind::kHyperbolic;
  throw DomainError("unknown multi-index set kind '" + name + "'");
}

namespace {

constexpr double kHyperbolicSlack = 1e-12;
constexpr std::size_t kMaxIndexSetSize = 5'000'000;

// Accumulated measure of a partial index; every rule is monotone in each
// component, so a partial index over budget cannot be completed.
double rule_measure(IndexSetKind kind, int degree) {
  switch (kind) {
    case IndexSetKind::kTensorial: return 0.0;
    case IndexSetKind::kTotalOrder: return degree;
    case IndexSetKind::kEuclidean: return static_cast<double>(degree) * degree;
    case IndexSetKind::kHyperbolic: return std::pow(static_cast<double>(degree), kHyperbolicQ);
  }
  return 0.0;
}

double rule_budget(IndexSetKind kind, int p) {
  switch (kind) {
    case IndexSetKind::kTensorial: return 0.0;
    case IndexSetKind::kTotalOrder: return p;
    case IndexSetKind::kEuclidean: return static_cast<double>(p) * p;
    case IndexSetKind::kHyperbolic: return std::pow(static_cast<double>(p), kHyperbolicQ) + kHyperbolicSlack;
  }
  return 0.0;
}

void enumerate(IndexSetKind kind, int p, double budget, std::vector<int>& prefix, double used,
               std::size_t dim, std::vector<std::vector<int>>& out) {
  if (dim == prefix.size()) {
    out.push_back(prefix);
    if (out.size() > kMaxIndexSetSize) throw DomainError("multi-index set exceeds size limit");
    return;
  }
  for (int deg = 0; deg <= p; ++deg) {
    const double next = used + rule_measure(kind, deg);
    if (kind != IndexSetKind::kTensorial && next > budget) break;
    prefix[dim] = deg;
    enumerate(kind, p, budget, prefix, next, dim + 1, out);
  }
  prefix[dim] = 0;
}

}  // namespace

bool admits(IndexSetKind kind, int p, const std::vector<int>& index) {
  double used = 0.0;
  for (int deg : index) {
    if (deg < 0 || deg > p) return false;
    used += rule_measure(kind, deg);
  }
  return kind == IndexSetKind::kTensorial || used <= rule_budget(kind, p);
}

MultiIndexSet build_index_set(IndexSetKind kind, int d, int p) {
  if (d < 1) throw DomainError("build_index_set: d must be at least 1");
  if (p < 0) throw DomainError("build_index_set: p must be nonnegative");
  MultiIndexSet set{kind, d, p, {}};
  std::vector<int> prefix(static_cast<std::size_t>(d), 0);
  enumerate(kind, p, rule_budget(kind, p), prefix, 0.0, 0, set.indices);
  return set;
}

std::uint64_t total_order_count(int d, int p) {
  // C(p + d, p) computed incrementally; exact while intermediate values fit.
  std::uint64_t c = 1;
  for (int k = 1; k <= p; ++k) c = c * static_cast<std::uint64_t>(d + k) / static_cast<std::uint64_t>(k);
  return c;
}

void legendre(int p, double x, double* values, double* derivatives) {
  // Standard recurrences on P_n, then scale by sqrt(2n + 1).
  double pm1 = 1.0, pn = x;
  double dm1 = 0.0, dn = 1.0;
  for (int n = 0; n <= p; ++n) {
    double pv, dv;
    if (n == 0) {
      pv = 1.0;
      dv = 0.0;
    } else if (n == 1) {
      pv = x;
      dv = 1.0;
    } else {
      const double pnext = ((2.0 * (n - 1) + 1.0) * x * pn - (n - 1) * pm1) / n;
      const double dnext = dm1 + (2.0 * (n - 1) + 1.0) * pn;
      pm1 = pn;
      pn = pnext;
      dm1 = dn;
      dn = dnext;
      pv = pn;
      dv = dn;
    }
    const double scale = std::sqrt(2.0 * n + 1.0);
    values[n] = scale * pv;
    if (derivatives) derivatives[n] = scale * dv;
  }
}

namespace {

void check_rows_in_cube(const MatrixXd& x) {
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      if (!(std::abs(x(i, j)) <= 1.0 + 1e-9)) {
        throw DomainError("input x" + std::to_string(j + 1) + " = " + io::format_double(x(i, j)) + " at row " +
                          std::to_string(i) + " outside [-1, 1]");
      }
}

}  // namespace

MatrixXd eval_basis(const MultiIndexSet& basis, const MatrixXd& x) {
  if (x.cols() != basis.d) throw DomainError("eval_basis: input dimension does not match the basis");
  check_rows_in_cube(x);
  const int p = basis.p;
  const auto o = static_cast<Eigen::Index>(basis.size());
  MatrixXd psi(x.rows(), o);
  std::vector<double> table(static_cast<std::size_t>(basis.d * (p + 1)));
  for (Eigen::Index k = 0; k < x.rows(); ++k) {
    for (int j = 0; j < basis.d; ++j) legendre(p, x(k, j), &table[static_cast<std::size_t>(j * (p + 1))]);
    for (Eigen::Index c = 0; c < o; ++c) {
      const auto& idx = basis.indices[static_cast<std::size_t>(c)];
      double v = 1.0;
      for (int j = 0; j < basis.d; ++j) {
        const int deg = idx[static_cast<std::size_t>(j)];
        if (deg) v *= table[static_cast<std::size_t>(j * (p + 1) + deg)];
      }
      psi(k, c) = v;
    }
  }
  return psi;
}

Surrogate::Surrogate(MultiIndexSet basis, VectorXd coefficients, double epsilon, FitDiagnostics diagnostics)
    : basis_(std::move(basis)),
      coefficients_(std::move(coefficients)),
      epsilon_(epsilon),
      diagnostics_(std::move(diagnostics)) {
  if (static_cast<std::size_t>(coefficients_.size()) != basis_.size()) {
    throw DomainError("Surrogate: " + std::to_string(coefficients_.size()) + " coefficients for " +
                      std::to_string(basis_.size()) + " basis terms");
  }
  if (!coefficients_.allFinite()) throw DomainError("Surrogate: non-finite coefficients");
  for (std::size_t c = 0; c < basis_.size(); ++c) {
    const double a = coefficients_(static_cast<Eigen::Index>(c));
    if (a == 0.0) continue;
    Term t{{}, a};
    for (int j = 0; j < basis_.d; ++j)
      if (basis_.indices[c][static_cast<std::size_t>(j)]) t.factors.emplace_back(j, basis_.indices[c][static_cast<std::size_t>(j)]);
    terms_.push_back(std::move(t));
  }
}

void Surrogate::check_point(const VectorXd& x) const {
  if (x.size() != basis_.d) throw DomainError("surrogate: point dimension does not match the basis");
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if (!(std::abs(x(j)) <= 1.0 + 1e-9)) {
      throw DomainError("surrogate: x" + std::to_string(j + 1) + " = " + io::format_double(x(j)) +
                        " outside [-1, 1]");
    }
}

double Surrogate::predict(const VectorXd& x) const {
  check_point(x);
  const int p = basis_.p;
  std::vector<double> table(static_cast<std::size_t>(basis_.d * (p + 1)));
  for (int j = 0; j < basis_.d; ++j) legendre(p, x(j), &table[static_cast<std::size_t>(j * (p + 1))]);
  double sum = 0.0;
  for (const auto& t : terms_) {
    double v = t.coefficient;
    for (const auto& [j, deg] : t.factors) v *= table[static_cast<std::size_t>(j * (p + 1) + deg)];
    sum += v;
  }
  return sum;
}

VectorXd Surrogate::predict(const MatrixXd& x) const {
  VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = predict(VectorXd(x.row(i).transpose()));
  return out;
}

VectorXd Surrogate::gradient(const VectorXd& x) const {
  check_point(x);
  const int p = basis_.p;
  const auto stride = static_cast<std::size_t>(p + 1);
  std::vector<double> val(static_cast<std::size_t>(basis_.d) * stride), der(val.size());
  for (int j = 0; j < basis_.d; ++j) {
    const auto off = static_cast<std::size_t>(j) * stride;
    legendre(p, x(j), &val[off], &der[off]);
  }
  VectorXd g = VectorXd::Zero(basis_.d);
  for (const auto& t : terms_) {
    const std::size_t nf = t.factors.size();
    for (std::size_t m = 0; m < nf; ++m) {
      double v = t.coefficient;
      for (std::size_t q = 0; q < nf; ++q) {
        const auto [j, deg] = t.factors[q];
        const auto off = static_cast<std::size_t>(j) * stride + static_cast<std::size_t>(deg);
        v *= (q == m) ? der[off] : val[off];
      }
      g(t.factors[m].first) += v;
    }
  }
  return g;
}

std::vector<double> default_epsilon_grid() {
  std::vector<double> grid;
  for (int k = 0; k < 10; ++k) grid.push_back(std::pow(10.0, -5.0 + 4.0 * k / 9.0));
  return grid;
}

namespace {

double r2_of(const VectorXd& pred, const VectorXd& f) {
  const double mean = f.mean();
  const double ss_tot = (f.array() - mean).square().sum();
  if (!(ss_tot > 0.0)) throw DomainError("r_squared: test targets have zero variance");
  const double ss_res = (f - pred).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

}  // namespace

Surrogate fit(const MultiIndexSet& basis, const MatrixXd& x, const VectorXd& f, std::optional<double> epsilon,
              const FitOptions& options) {
  if (x.rows() < 1) throw DomainError("fit: no training samples");
  if (x.rows() != f.size()) throw DomainError("fit: X and f have different lengths");
  if (!f.allFinite()) throw DomainError("fit: non-finite training values");
  const MatrixXd psi = eval_basis(basis, x);
  FitDiagnostics diag;

  double eps = 0.0;
  if (epsilon) {
    eps = *epsilon;
  } else {
    const auto grid = options.epsilon_grid.empty() ? default_epsilon_grid() : options.epsilon_grid;
    const int folds = options.cv_folds;
    if (folds < 2 || x.rows() < folds) throw DomainError("fit: too few samples for cross-validation");
    numerics::BpdnOptions cv_opts = options.bpdn;
    if (options.cv_max_iterations > 0) cv_opts.max_iterations = options.cv_max_iterations;
    double best_err = std::numeric_limits<double>::infinity();
    eps = grid.front();
    for (double candidate : grid) {
      double sq_err = 0.0;
      for (int fold = 0; fold < folds; ++fold) {
        std::vector<Eigen::Index> train, test;
        for (Eigen::Index i = 0; i < x.rows(); ++i) (i % folds == fold ? test : train).push_back(i);
        const MatrixXd psi_train = psi(train, Eigen::all);
        const VectorXd f_train = f(train);
        const auto res = numerics::bpdn_solve(psi_train, f_train, candidate, cv_opts);
        const VectorXd pred = psi(test, Eigen::all) * res.coefficients;
        sq_err += (pred - f(test)).squaredNorm();
      }
      const double mse = sq_err / static_cast<double>(x.rows());
      diag.cv_errors.emplace_back(candidate, mse);
      if (mse < best_err) {
        best_err = mse;
        eps = candidate;
      }
    }
  }

  const auto res = numerics::bpdn_solve(psi, f, eps, options.bpdn);
  diag.residual_norm = res.residual_norm;
  diag.iterations = res.iterations;
  diag.converged = res.converged;
  diag.warning = res.warning;
  const VectorXd pred = psi * res.coefficients;
  const double mean = f.mean();
  const double ss_tot = (f.array() - mean).square().sum();
  diag.r2_train = ss_tot > 0.0 ? 1.0 - (f - pred).squaredNorm() / ss_tot : 1.0;
  return Surrogate(basis, res.coefficients, eps, std::move(diag));
}

double r_squared(const Surrogate& s, const MatrixXd& x_test, const VectorXd& f_test) {
  if (x_test.rows() == 0) throw DomainError("r_squared: empty test set");
  if (x_test.rows() != f_test.size()) throw DomainError("r_squared: X and f have different lengths");
  return r2_of(s.predict(x_test), f_test);
}

nlohmann::json to_json(const Surrogate& s) {
  nlohmann::json j;
  j["schema_version"] = io::kSchemaVersion;
  j["kind"] = to_string(s.basis().kind);
  j["d"] = s.basis().d;
  j["p"] = s.basis().p;
  j["indices"] = s.basis().indices;
  j["coefficients"] = std::vector<double>(s.coefficients().data(), s.coefficients().data() + s.coefficients().size());
  j["epsilon"] = s.epsilon();
  const auto& d = s.diagnostics();
  nlohmann::json diag;
  diag["residual_norm"] = d.residual_norm;
  diag["r2_train"] = d.r2_train;
  diag["iterations"] = d.iterations;
  diag["converged"] = d.converged;
  diag["warning"] = d.warning;
  diag["cv_errors"] = nlohmann::json::array();
  for (const auto& [e, err] : d.cv_errors) diag["cv_errors"].push_back({e, err});
  j["diagnostics"] = diag;
  return j;
}

Surrogate surrogate_from_json(const nlohmann::json& j) {
  MultiIndexSet basis;
  basis.kind = index_set_kind_from_string(j.at("kind").get<std::string>());
  basis.d = j.at("d").get<int>();
  basis.p = j.at("p").get<int>();
  basis.indices = j.at("indices").get<std::vector<std::vector<int>>>();
  for (const auto& idx : basis.indices) {
    if (static_cast<int>(idx.size()) != basis.d || !admits(basis.kind, basis.p, idx)) {
      throw DomainError("surrogate JSON: index violates the " + to_string(basis.kind) + " rule");
    }
  }
  const auto coef = j.at("coefficients").get<std::vector<double>>();
  FitDiagnostics diag;
  if (j.contains("diagnostics")) {
    const auto& d = j["diagnostics"];
    diag.residual_norm = d.value("residual_norm", 0.0);
    diag.r2_train = d.value("r2_train", 0.0);
    diag.iterations = d.value("iterations", 0);
    diag.converged = d.value("converged", false);
    diag.warning = d.value("warning", std::string());
    if (d.contains("cv_errors"))
      for (const auto& e : d["cv_errors"]) diag.cv_errors.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  return Surrogate(std::move(basis), Eigen::Map<const VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size())),
                   j.value("epsilon", 0.0), std::move(diag));
}

}  // namespace bladeenv::surrogate
