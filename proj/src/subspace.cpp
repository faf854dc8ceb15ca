#include "bladeenv/subspace.hpp"

#include "bladeenv/errors.hpp"
#include "bladeenv/io.hpp"
#include "bladeenv/parallel.hpp"
#include "bladeenv/random.hpp"

#include <algorithm>
#include <cmath>

namespace bladeenv::subspace {

namespace {

constexpr long long kBlock = 1024;

}  // namespace

SymmetricMatrix estimate_covariance(const GradientFn& gradient, int d, long long M, std::uint64_t seed, int jobs) {
  if (d < 1) throw DomainError("estimate_covariance: d must be at least 1");
  if (M < 1) throw DomainError("estimate_covariance: M must be at least 1");
  const auto blocks = static_cast<std::size_t>((M + kBlock - 1) / kBlock);
  std::vector<MatrixXd> partial(blocks);
  parallel_for(blocks, jobs, [&](std::size_t b) {
    MatrixXd acc = MatrixXd::Zero(d, d);
    const long long begin = static_cast<long long>(b) * kBlock;
    const long long end = std::min(M, begin + kBlock);
    VectorXd x(d);
    for (long long m = begin; m < end; ++m) {
      Rng rng(seed, static_cast<std::uint64_t>(m));
      for (int j = 0; j < d; ++j) x(j) = rng.uniform(-1.0, 1.0);
      const VectorXd g = gradient(x);
      if (g.size() != d) throw DomainError("estimate_covariance: gradient has wrong length");
      acc.selfadjointView<Eigen::Lower>().rankUpdate(g);
    }
    partial[b] = std::move(acc);
  });
  MatrixXd sum = MatrixXd::Zero(d, d);
  for (const auto& p : partial) sum += p;
  sum /= static_cast<double>(M);
  MatrixXd full = sum.selfadjointView<Eigen::Lower>();
  return SymmetricMatrix(full);
}

SymmetricMatrix estimate_covariance(const surrogate::Surrogate& s, long long M, std::uint64_t seed, int jobs) {
  return estimate_covariance([&s](const VectorXd& x) { return s.gradient(x); }, s.dimension(), M, seed, jobs);
}

SubspacePartition partition(const SymmetricMatrix& c, std::optional<int> r) {
  const auto d = static_cast<int>(c.size());
  if (d < 1) throw DomainError("partition: empty matrix");
  const auto eig = numerics::eigh(c, "gradient covariance");
  SubspacePartition p;
  p.eigenvalues = eig.eigenvalues;
  int split;
  if (r) {
    if (*r < 0 || *r > d) throw DomainError("partition: r = " + std::to_string(*r) + " outside [0, d]");
    split = *r;
  } else {
    const double l1 = eig.eigenvalues(0);
    if (!(l1 > 0.0)) throw NumericalError("partition: covariance is zero; give r explicitly");
    if (d == 1) throw NumericalError("partition: d = 1 has no eigenvalue gap; give r explicitly");
    const double floor = kEigenvalueFloor * l1;
    double best = 0.0;
    split = 0;
    for (int k = 0; k + 1 < d; ++k) {
      const double ratio = std::max(eig.eigenvalues(k), floor) / std::max(eig.eigenvalues(k + 1), floor);
      if (ratio > best) {
        best = ratio;
        split = k + 1;
      }
    }
    if (!(best > 1.0 + 1e-8)) {
      throw NumericalError("partition: eigenvalues are equal within tolerance; give r explicitly");
    }
  }
  p.r = split;
  p.W = eig.eigenvectors.leftCols(split);
  p.V = eig.eigenvectors.rightCols(d - split);
  return p;
}

VectorXd active_coordinate(const SubspacePartition& p, const VectorXd& x) {
  if (x.size() != p.W.rows()) {
    throw DomainError("active_coordinate: design has length " + std::to_string(x.size()) + ", partition has d = " +
                      std::to_string(p.W.rows()));
  }
  return p.W.transpose() * x;
}

VectorXd principal_angles(const MatrixXd& a, const MatrixXd& b) {
  if (a.rows() != b.rows()) throw DomainError("principal_angles: row counts differ");
  const MatrixXd& wide = a.cols() >= b.cols() ? a : b;
  const MatrixXd& narrow = a.cols() >= b.cols() ? b : a;
  if (narrow.cols() == 0) return VectorXd();
  // Sines from the residual of projecting the narrow basis onto the wide one;
  // accurate for small angles where cosines lose precision.
  const MatrixXd resid = narrow - wide * (wide.transpose() * narrow);
  const auto eig = numerics::eigh(SymmetricMatrix(resid.transpose() * resid), "principal angle");
  const Eigen::Index q = narrow.cols();
  VectorXd angles(q);
  for (Eigen::Index k = 0; k < q; ++k) {
    const double s2 = std::clamp(eig.eigenvalues(q - 1 - k), 0.0, 1.0);
    angles(k) = std::asin(std::sqrt(s2));
  }
  return angles;
}

namespace {

nlohmann::json matrix_json(const MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw DomainError(std::string("partition JSON: ") + name + " has the wrong number of rows");
  }
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto row = j[static_cast<std::size_t>(i)].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw DomainError(std::string("partition JSON: ") + name + " has the wrong number of columns");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

}  // namespace

nlohmann::json to_json(const SubspacePartition& p) {
  nlohmann::json j;
  j["schema_version"] = io::kSchemaVersion;
  j["eigenvalues"] = std::vector<double>(p.eigenvalues.data(), p.eigenvalues.data() + p.eigenvalues.size());
  j["W"] = matrix_json(p.W);
  j["V"] = matrix_json(p.V);
  j["r"] = p.r;
  j["M"] = p.M;
  j["seed"] = p.seed;
  return j;
}

SubspacePartition partition_from_json(const nlohmann::json& j) {
  SubspacePartition p;
  const auto ev = j.at("eigenvalues").get<std::vector<double>>();
  const auto d = static_cast<Eigen::Index>(ev.size());
  p.eigenvalues = Eigen::Map<const VectorXd>(ev.data(), d);
  p.r = j.at("r").get<int>();
  if (p.r < 0 || p.r > d) throw DomainError("partition JSON: r outside [0, d]");
  p.W = matrix_from_json(j.at("W"), d, p.r, "W");
  p.V = matrix_from_json(j.at("V"), d, d - p.r, "V");
  p.M = j.value("M", 0LL);
  p.seed = j.value("seed", std::uint64_t{0});
  return p;
}

}  // namespace bladeenv::subspace
