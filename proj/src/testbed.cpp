#include "bladeenv/testbed.hpp"

#include "bladeenv/errors.hpp"
#include "bladeenv/io.hpp"
#include "bladeenv/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bladeenv::testbed {

std::string to_string(OracleKind kind) {
  switch (kind) {
    case OracleKind::kLinear: return "linear";
    case OracleKind::kRidge: return "ridge";
    case OracleKind::kQuadraticRidge: return "quadratic-ridge";
  }
  return "unknown";
}

OracleKind oracle_kind_from_string(const std::string& name) {
  if (name == "linear") return OracleKind::kLinear;
  if (name == "ridge") return OracleKind::kRidge;
  if (name == "quadratic-ridge") return OracleKind::kQuadraticRidge;
  throw DomainError("unknown oracle kind '" + name + "'");
}

double ridge_link(double t) { return t * t * t + 0.5 * t; }
double ridge_link_derivative(double t) { return 3.0 * t * t + 0.5; }

namespace {

VectorXd unit(const VectorXd& w, const char* what) {
  const double n = w.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError(std::string(what) + ": direction must be nonzero");
  return w / n;
}

void check_x(const SyntheticOracle& o, const VectorXd& x) {
  if (x.size() != o.dimension()) {
    throw DomainError("oracle: design has length " + std::to_string(x.size()) + ", expected " +
                      std::to_string(o.dimension()));
  }
  geometry::check_in_hypercube(x);
}

}  // namespace

double SyntheticOracle::evaluate(const VectorXd& x) const {
  check_x(*this, x);
  const double t = directions[0].dot(x);
  double f = 0.0;
  switch (kind) {
    case OracleKind::kLinear: f = t; break;
    case OracleKind::kRidge: f = ridge_link(t); break;
    case OracleKind::kQuadraticRidge: f = t * t + 0.1 * directions[1].dot(x); break;
  }
  if (noise != 0.0) {
    const std::string_view bytes(reinterpret_cast<const char*>(x.data()), sizeof(double) * static_cast<std::size_t>(x.size()));
    Rng rng(noise_seed, io::fnv1a64(bytes));
    f += noise * rng.normal();
  }
  return f;
}

VectorXd SyntheticOracle::evaluate_rows(const MatrixXd& x) const {
  VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = evaluate(VectorXd(x.row(i).transpose()));
  return out;
}

VectorXd SyntheticOracle::gradient(const VectorXd& x) const {
  check_x(*this, x);
  const double t = directions[0].dot(x);
  switch (kind) {
    case OracleKind::kLinear: return directions[0];
    case OracleKind::kRidge: return ridge_link_derivative(t) * directions[0];
    case OracleKind::kQuadraticRidge: return 2.0 * t * directions[0] + 0.1 * directions[1];
  }
  return VectorXd();
}

SyntheticOracle make_linear(const VectorXd& w) { return {OracleKind::kLinear, {unit(w, "make_linear")}, 0.0, 0}; }

SyntheticOracle make_ridge(const VectorXd& w) { return {OracleKind::kRidge, {unit(w, "make_ridge")}, 0.0, 0}; }

SyntheticOracle make_quadratic_ridge(const VectorXd& w1, const VectorXd& w2) {
  if (w1.size() != w2.size()) throw DomainError("make_quadratic_ridge: directions differ in length");
  return {OracleKind::kQuadraticRidge, {unit(w1, "make_quadratic_ridge"), unit(w2, "make_quadratic_ridge")}, 0.0, 0};
}

SyntheticOracle with_noise(SyntheticOracle o, double amplitude, std::uint64_t seed) {
  if (!(amplitude >= 0.0)) throw DomainError("with_noise: amplitude must be nonnegative");
  o.noise = amplitude;
  o.noise_seed = seed;
  return o;
}

VectorXd random_direction(int d, std::uint64_t seed) {
  if (d < 1) throw DomainError("random_direction: d must be at least 1");
  Rng rng(seed);
  VectorXd w(d);
  do {
    for (int j = 0; j < d; ++j) w(j) = rng.normal();
  } while (!(w.norm() > 0.0));
  return w / w.norm();
}

MatrixXd true_active_subspace(const SyntheticOracle& o) {
  if (o.directions.empty()) throw DomainError("true_active_subspace: oracle has no directions");
  MatrixXd a(o.dimension(), static_cast<Eigen::Index>(o.directions.size()));
  for (std::size_t k = 0; k < o.directions.size(); ++k) a.col(static_cast<Eigen::Index>(k)) = o.directions[k];
  const Eigen::HouseholderQR<MatrixXd> qr(a);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(a.rows(), a.cols());
  // Orient so the first basis vector follows the first direction.
  if (q.col(0).dot(o.directions[0]) < 0.0) q.col(0) *= -1.0;
  return q;
}

GeometricRidge::GeometricRidge(const geometry::FfdDeformer& deformer, double center, double width) {
  if (!(width > 0.0)) throw DomainError("GeometricRidge: width must be positive");
  const auto& base = deformer.baseline();
  stations_ = base.stations();
  base_ = base.ordinates();
  ell_ = VectorXd::Zero(static_cast<Eigen::Index>(base.size()));
  const auto& xs = base.x(geometry::Side::kSuction);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double t = (xs[i] - center) / width;
    ell_(static_cast<Eigen::Index>(i)) = std::exp(-t * t);
  }
  const VectorXd btl = deformer.weight_matrix().transpose() * ell_;
  const double n = btl.norm();
  if (!(n > 0.0)) throw DomainError("GeometricRidge: functional is blind to the lattice");
  scale_ = deformer.lattice().amplitude * n;
  oracle_ = make_ridge(btl);
}

double GeometricRidge::coordinate(const VectorXd& ordinates) const {
  if (ordinates.size() != base_.size()) throw DomainError("GeometricRidge: ordinate count mismatch");
  return ell_.dot(ordinates - base_) / scale_;
}

double GeometricRidge::evaluate_profile(const VectorXd& ordinates) const { return ridge_link(coordinate(ordinates)); }

double GeometricRidge::evaluate_profile(const geometry::AirfoilProfile& profile) const {
  if (!(profile.stations() == stations_)) throw DomainError("GeometricRidge: profile stations differ from baseline");
  return evaluate_profile(profile.ordinates());
}

VectorXd kinked_profile(const VectorXd& member, const VectorXd& mu, const VectorXd& c_l, const VectorXd& c_u,
                        double scale) {
  if (member.size() != mu.size() || c_l.size() != mu.size() || c_u.size() != mu.size()) {
    throw DomainError("kinked_profile: length mismatch");
  }
  VectorXd out(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double dev = (i % 2 == 0 ? scale : -scale) * (member(i) - mu(i));
    out(i) = std::clamp(mu(i) + dev, c_l(i), c_u(i));
  }
  return out;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double rank_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw DomainError("rank_correlation: need two equal-length samples");
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw DomainError("rank_correlation: a sample is constant");
  return sab / std::sqrt(saa * sbb);
}

}  // namespace bladeenv::testbed
