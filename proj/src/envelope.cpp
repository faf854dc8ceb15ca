#include "bladeenv/envelope.hpp"

#include "bladeenv/errors.hpp"
#include "bladeenv/io.hpp"
#include "bladeenv/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bladeenv::envelope {

void LogisticGate::validate() const {
  if (!(beta1 > 0.0) || !(beta2 > 0.0) || !std::isfinite(beta3)) {
    throw DomainError("logistic gate needs beta1 > 0, beta2 > 0 and finite beta3");
  }
}

double gate_score(const LogisticGate& g, double zeta) {
  if (!(zeta >= 0.0)) throw DomainError("gate_score: zeta must be nonnegative");
  const double z = g.beta2 * (zeta - g.beta3);
  if (z >= 0.0) return g.beta1 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return g.beta1 * e / (1.0 + e);
}

void Buffer::validate() const {
  if (!(zeta_lo >= 0.0) || !(zeta_hi >= zeta_lo)) {
    throw DomainError("buffer needs 0 <= zeta_lo <= zeta_hi, got (" + io::format_double(zeta_lo) + ", " +
                      io::format_double(zeta_hi) + ")");
  }
}

// ---------------------------------------------------------------------------

StreamingMoments::StreamingMoments(Eigen::Index n, long long checkpoint_interval)
    : n_(n),
      interval_(checkpoint_interval),
      mean_(VectorXd::Zero(n)),
      min_(VectorXd::Constant(n, std::numeric_limits<double>::infinity())),
      max_(VectorXd::Constant(n, -std::numeric_limits<double>::infinity())),
      m2_(MatrixXd::Zero(n, n)) {
  if (n < 1) throw DomainError("StreamingMoments: dimension must be positive");
}

void StreamingMoments::add(const VectorXd& y) {
  if (y.size() != n_) {
    throw DomainError("StreamingMoments: sample has " + std::to_string(y.size()) + " ordinates, expected " +
                      std::to_string(n_));
  }
  ++count_;
  const VectorXd delta = y - mean_;
  mean_ += delta / static_cast<double>(count_);
  const VectorXd delta2 = y - mean_;
  m2_.noalias() += delta * delta2.transpose();
  min_ = min_.cwiseMin(y);
  max_ = max_.cwiseMax(y);
  if (interval_ > 0 && count_ >= 2 && count_ % interval_ == 0) {
    trace_.push_back({count_, mean_.norm(), (m2_ / static_cast<double>(count_ - 1)).norm()});
  }
}

MatrixXd StreamingMoments::covariance() const {
  if (count_ < 2) throw DomainError("covariance needs at least 2 samples, have " + std::to_string(count_));
  const MatrixXd c = m2_ / static_cast<double>(count_ - 1);
  return 0.5 * (c + c.transpose());
}

Drift last_decile_drift(const std::vector<ConvergencePoint>& trace) {
  if (trace.empty()) throw DomainError("last_decile_drift: empty trace");
  const auto& last = trace.back();
  const double from = 0.9 * static_cast<double>(last.count);
  Drift d;
  for (const auto& p : trace) {
    if (static_cast<double>(p.count) < from) continue;
    if (last.mu_norm > 0.0) d.mu = std::max(d.mu, std::abs(p.mu_norm - last.mu_norm) / last.mu_norm);
    if (last.s_norm > 0.0) d.s = std::max(d.s, std::abs(p.s_norm - last.s_norm) / last.s_norm);
  }
  return d;
}

// ---------------------------------------------------------------------------

BladeEnvelope::BladeEnvelope(geometry::Stations stations, VectorXd mu, SymmetricMatrix s, VectorXd c_l, VectorXd c_u,
                             long long h, LogisticGate gate, Buffer buffer)
    : stations_(std::move(stations)),
      mu_(std::move(mu)),
      s_(std::move(s)),
      c_l_(std::move(c_l)),
      c_u_(std::move(c_u)),
      h_(h),
      gate_(gate),
      buffer_(buffer) {
  const auto n = static_cast<Eigen::Index>(stations_.size());
  if (mu_.size() != n || s_.size() != n || c_l_.size() != n || c_u_.size() != n) {
    throw DomainError("BladeEnvelope: inconsistent sizes (N = " + std::to_string(n) + ")");
  }
  if (h_ < 2) throw DomainError("BladeEnvelope: needs H >= 2 samples");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(c_l_(i) <= mu_(i) + kZoneTolerance && mu_(i) <= c_u_(i) + kZoneTolerance)) {
      throw DomainError("BladeEnvelope: mean outside control zone at ordinate " + std::to_string(i));
    }
  }
  gate_.validate();
  buffer_.validate();
  pinv_ = numerics::pinv_psd(s_, 1e-10);
}

void BladeEnvelope::set_gate(const LogisticGate& g) {
  g.validate();
  gate_ = g;
}

void BladeEnvelope::set_buffer(const Buffer& b) {
  b.validate();
  buffer_ = b;
}

BladeEnvelope build_envelope(const StreamingMoments& moments, const geometry::Stations& stations) {
  return BladeEnvelope(stations, moments.mean(), SymmetricMatrix(moments.covariance()), moments.min(), moments.max(),
                       moments.count());
}

BladeEnvelope build_envelope(const std::vector<AirfoilProfile>& profiles, const AirfoilProfile& baseline) {
  if (profiles.size() < 2) {
    throw DomainError("build_envelope: needs H >= 2 profiles, have " + std::to_string(profiles.size()));
  }
  const auto stations = baseline.stations();
  StreamingMoments acc(static_cast<Eigen::Index>(baseline.size()));
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    if (!(profiles[k].stations() == stations)) {
      throw DomainError("build_envelope: profile " + std::to_string(k) +
                        " has different abscissae from the baseline; resample first");
    }
    acc.add(profiles[k].ordinates());
  }
  return build_envelope(acc, stations);
}

namespace {

void check_stations(const BladeEnvelope& e, const AirfoilProfile& profile) {
  if (!(profile.stations() == e.stations())) {
    throw DomainError("profile abscissae differ from the envelope's; resample first");
  }
}

void check_length(const BladeEnvelope& e, const VectorXd& y) {
  if (y.size() != e.mu().size()) {
    throw DomainError("profile has " + std::to_string(y.size()) + " ordinates, envelope has " +
                      std::to_string(e.mu().size()));
  }
}

}  // namespace

ZoneCheck in_control_zone(const BladeEnvelope& e, const VectorXd& y) {
  check_length(e, y);
  ZoneCheck z;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) < e.lower()(i) - kZoneTolerance || y(i) > e.upper()(i) + kZoneTolerance) {
      z.violations.push_back(static_cast<std::size_t>(i));
    }
  }
  z.inside = z.violations.empty();
  return z;
}

ZoneCheck in_control_zone(const BladeEnvelope& e, const AirfoilProfile& profile) {
  check_stations(e, profile);
  return in_control_zone(e, profile.ordinates());
}

double mahalanobis(const BladeEnvelope& e, const VectorXd& y) {
  check_length(e, y);
  const VectorXd d = y - e.mu();
  const auto& p = e.pseudo_inverse();
  if (p.rank == 0) return d.squaredNorm() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  const VectorXd c = p.basis.transpose() * d;
  const VectorXd orth = d - p.basis * c;
  const double floor = p.retained(p.rank - 1);
  const double z2 = (c.array().square() / p.retained.array()).sum() + orth.squaredNorm() / floor;
  return std::sqrt(z2);
}

double mahalanobis(const BladeEnvelope& e, const AirfoilProfile& profile) {
  check_stations(e, profile);
  return mahalanobis(e, profile.ordinates());
}

// ---------------------------------------------------------------------------

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw DomainError("regularized_gamma_p: a must be positive");
  if (!(x >= 0.0)) throw DomainError("regularized_gamma_p: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  constexpr double kEps = 1e-16;
  if (x < a + 1.0) {
    double term = 1.0 / a, sum = term, ap = a;
    for (int n = 0; n < 10000; ++n) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * kEps) break;
    }
    return std::min(1.0, sum * std::exp(log_prefix));
  }
  // Continued fraction for Q(a, x), modified Lentz.
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / kTiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::max(0.0, 1.0 - std::exp(log_prefix) * h);
}

double chi2_quantile(double dof, double probability) {
  if (!(dof > 0.0)) throw DomainError("chi2_quantile: degrees of freedom must be positive");
  if (!(probability > 0.0 && probability < 1.0)) {
    throw DomainError("chi2_quantile: probability " + io::format_double(probability) + " outside (0, 1)");
  }
  auto cdf = [dof](double x) { return regularized_gamma_p(0.5 * dof, 0.5 * x); };
  double lo = 0.0, hi = std::max(1.0, dof);
  while (cdf(hi) < probability) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw NumericalError("chi2_quantile: bracket search failed");
  }
  for (int it = 0; it < 2000 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (cdf(mid) < probability ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double chi2_threshold(const BladeEnvelope& e, double significance) {
  if (!(significance > 0.0 && significance < 1.0)) {
    throw DomainError("chi2_threshold: significance " + io::format_double(significance) + " outside (0, 1)");
  }
  if (e.rank() == 0) throw NumericalError("chi2_threshold: envelope covariance has rank 0");
  return std::sqrt(chi2_quantile(e.rank(), significance));
}

// ---------------------------------------------------------------------------

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kUse: return "use";
    case Verdict::kReview: return "review";
    case Verdict::kScrap: return "scrap";
  }
  return "unknown";
}

VerdictReport verdict(const BladeEnvelope& e, const VectorXd& y, const std::string& id) {
  VerdictReport r;
  r.id = id;
  const auto zone = in_control_zone(e, y);
  r.in_zone = zone.inside;
  r.zone_violations = zone.violations;
  r.zeta = mahalanobis(e, y);
  r.score = gate_score(e.gate(), r.zeta);
  if (!r.in_zone || r.zeta > e.buffer().zeta_hi) {
    r.verdict = Verdict::kScrap;
  } else if (r.zeta < e.buffer().zeta_lo) {
    r.verdict = Verdict::kUse;
  } else {
    r.verdict = Verdict::kReview;
  }
  return r;
}

VerdictReport verdict(const BladeEnvelope& e, const AirfoilProfile& profile, const std::string& id) {
  check_stations(e, profile);
  return verdict(e, profile.ordinates(), id);
}

// ---------------------------------------------------------------------------

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

constexpr double kMaxLogBeta2 = 6.907755278982137;  // log(1000)

struct CrossEntropy {
  const std::vector<double>& zeta;
  const std::vector<double>& label;

  // theta = (log beta2, beta3)
  double loss(double lb2, double b3) const {
    const double b2 = std::exp(lb2);
    double sum = 0.0;
    for (std::size_t i = 0; i < zeta.size(); ++i) {
      const double z = b2 * (zeta[i] - b3);
      sum += label[i] > 0.5 ? softplus(-z) : softplus(z);
    }
    return sum / static_cast<double>(zeta.size());
  }

  void gradient(double lb2, double b3, double& g_lb2, double& g_b3) const {
    const double b2 = std::exp(lb2);
    g_lb2 = g_b3 = 0.0;
    for (std::size_t i = 0; i < zeta.size(); ++i) {
      const double r = logistic(b2 * (zeta[i] - b3)) - label[i];
      g_lb2 += r * (zeta[i] - b3) * b2;
      g_b3 -= r * b2;
    }
    g_lb2 /= static_cast<double>(zeta.size());
    g_b3 /= static_cast<double>(zeta.size());
  }
};

}  // namespace

GateCalibration calibrate_gate(const std::vector<double>& distances_use, const std::vector<double>& distances_scrap,
                               std::uint64_t seed, int restarts) {
  if (distances_use.empty() || distances_scrap.empty()) {
    throw DomainError("calibrate_gate: both distance lists must be nonempty");
  }
  if (restarts < 1) throw DomainError("calibrate_gate: restarts must be positive");
  std::vector<double> zeta, label;
  for (double z : distances_use) {
    if (!(z >= 0.0) || !std::isfinite(z)) throw DomainError("calibrate_gate: distances must be finite and >= 0");
    zeta.push_back(z);
    label.push_back(0.0);
  }
  for (double z : distances_scrap) {
    if (!(z >= 0.0) || !std::isfinite(z)) throw DomainError("calibrate_gate: distances must be finite and >= 0");
    zeta.push_back(z);
    label.push_back(1.0);
  }
  const CrossEntropy ce{zeta, label};
  const auto [zmin_it, zmax_it] = std::minmax_element(zeta.begin(), zeta.end());
  const double zmin = *zmin_it, zmax = *zmax_it;

  GateCalibration best;
  best.loss = std::numeric_limits<double>::infinity();
  bool capped = false;
  for (int k = 0; k < restarts; ++k) {
    Rng rng(seed, static_cast<std::uint64_t>(k));
    double lb2 = rng.uniform(std::log(0.1), std::log(10.0));
    double b3 = rng.uniform(zmin, zmax);
    double f = ce.loss(lb2, b3);
    double step = 1.0;
    for (int it = 0; it < 3000; ++it) {
      double g1, g2;
      ce.gradient(lb2, b3, g1, g2);
      const double gn2 = g1 * g1 + g2 * g2;
      if (gn2 < 1e-24) break;
      bool moved = false;
      step = std::min(step * 2.0, 1e6);
      while (step > 1e-14) {
        const double n1 = std::min(lb2 - step * g1, kMaxLogBeta2);
        const double n2 = b3 - step * g2;
        const double fn = ce.loss(n1, n2);
        if (fn <= f - 1e-4 * step * gn2 || (n1 == kMaxLogBeta2 && fn < f)) {
          lb2 = n1;
          b3 = n2;
          moved = f - fn > 1e-15 * std::max(1.0, f);
          f = fn;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    if (f < best.loss) {
      best.loss = f;
      best.gate = LogisticGate{1.0, std::exp(lb2), b3};
      capped = lb2 >= kMaxLogBeta2;
    }
  }
  if (best.loss > std::log(2.0) - 1e-3) {
    best.warning = "use and scrap distances are not separable; gate is no better than chance";
  } else if (capped) {
    best.warning = "use and scrap distances are perfectly separated; beta2 capped at 1000";
  }
  return best;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> vec(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json to_json(const BladeEnvelope& e) {
  nlohmann::json j;
  j["schema_version"] = io::kSchemaVersion;
  j["abscissae"] = {{"suction", e.stations().suction}, {"pressure", e.stations().pressure}};
  j["mu"] = vec(e.mu());
  const MatrixXd& s = e.covariance().matrix();
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(s.size()));
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index k = 0; k < s.cols(); ++k) flat.push_back(s(i, k));
  j["S"] = flat;
  j["c_l"] = vec(e.lower());
  j["c_u"] = vec(e.upper());
  j["rank"] = e.rank();
  j["H"] = e.samples();
  j["gate"] = {{"beta1", e.gate().beta1}, {"beta2", e.gate().beta2}, {"beta3", e.gate().beta3}};
  j["buffer"] = {e.buffer().zeta_lo, e.buffer().zeta_hi};
  j["provenance"] = e.provenance.is_null() ? nlohmann::json::object() : e.provenance;
  return j;
}

BladeEnvelope envelope_from_json(const nlohmann::json& j) {
  geometry::Stations st{j.at("abscissae").at("suction").get<std::vector<double>>(),
                        j.at("abscissae").at("pressure").get<std::vector<double>>()};
  const auto n = static_cast<Eigen::Index>(st.size());
  const auto flat = j.at("S").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != n * n) throw DomainError("envelope JSON: S has the wrong size");
  MatrixXd s(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) s(i, k) = flat[static_cast<std::size_t>(i * n + k)];
  const auto& g = j.at("gate");
  const auto buf = j.at("buffer").get<std::vector<double>>();
  if (buf.size() != 2) throw DomainError("envelope JSON: buffer must have two entries");
  BladeEnvelope e(std::move(st), from_vec(j.at("mu").get<std::vector<double>>()), SymmetricMatrix(s),
                  from_vec(j.at("c_l").get<std::vector<double>>()), from_vec(j.at("c_u").get<std::vector<double>>()),
                  j.at("H").get<long long>(),
                  LogisticGate{g.at("beta1").get<double>(), g.at("beta2").get<double>(), g.at("beta3").get<double>()},
                  Buffer{buf[0], buf[1]});
  if (j.contains("provenance")) e.provenance = j["provenance"];
  return e;
}

nlohmann::json to_json(const VerdictReport& r) {
  return {{"id", r.id},
          {"zeta", r.zeta},
          {"score", r.score},
          {"verdict", to_string(r.verdict)},
          {"in_zone", r.in_zone},
          {"zone_violations", r.zone_violations}};
}

}  // namespace bladeenv::envelope
