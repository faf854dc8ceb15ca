// Acceptance suite: one PASS/FAIL line per criterion with the measured value
// and wall time. Exit status is nonzero when any criterion fails.

#include "bladeenv/envelope.hpp"
#include "bladeenv/ingest.hpp"
#include "bladeenv/io.hpp"
#include "bladeenv/pipeline/artifacts.hpp"
#include "bladeenv/pipeline/config.hpp"
#include "bladeenv/pipeline/stages.hpp"
#include "bladeenv/random.hpp"
#include "bladeenv/sampler.hpp"
#include "bladeenv/subspace.hpp"
#include "bladeenv/surrogate.hpp"
#include "bladeenv/testbed.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace bladeenv;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
  double secs = -1;  // measured time when the check times itself
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o, double secs, double limit) {
  const bool in_time = secs <= limit;
  const bool ok = o.pass && in_time;
  if (!ok) ++failures;
  char t[64];
  std::snprintf(t, sizeof(t), "%.4g s (limit %g s)", secs, limit);
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << id << ". " << name << ": " << o.detail << "; " << t
            << (in_time ? "" : " TOO SLOW") << std::endl;
}

void run(int id, const std::string& name, double limit, const std::function<Outcome()>& fn) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  report(id, name, o, o.secs >= 0 ? o.secs : seconds_since(t0), limit);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

MatrixXd uniform_points(int k, int d, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd x(k, d);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
  return x;
}

double sample_sd(const VectorXd& v) {
  return std::sqrt((v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
}

double ks_uniform(std::vector<double> v, double lo, double hi) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double dmax = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = (v[i] - lo) / (hi - lo);
    dmax = std::max({dmax, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return dmax;
}

sampler::InactivePolytope box(const VectorXd& lo, const VectorXd& hi) {
  const auto n = lo.size();
  sampler::InactivePolytope p;
  p.A.resize(2 * n, n);
  p.A << MatrixXd::Identity(n, n), -MatrixXd::Identity(n, n);
  p.b.resize(2 * n);
  p.b << hi, -lo;
  return p;
}

std::vector<std::string> tree(const fs::path& root) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).string());
  std::sort(out.begin(), out.end());
  return out;
}

// Shared between criteria 4, 5 and 6.
struct RidgeFit {
  testbed::SyntheticOracle oracle;
  subspace::SubspacePartition partition;
};

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "bladeenv_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  std::cout << "acceptance work directory: " << work.string() << std::endl;

  run(1, "total-order basis count d=20 p=3", 0.001, [] {
    std::vector<double> times;
    std::size_t size = 0;
    std::uint64_t formula = 0;
    for (int rep = 0; rep < 21; ++rep) {
      const auto t0 = Clock::now();
      size = surrogate::build_index_set(surrogate::IndexSetKind::kTotalOrder, 20, 3).size();
      formula = surrogate::total_order_count(20, 3);
      times.push_back(seconds_since(t0));
    }
    std::nth_element(times.begin(), times.begin() + 10, times.end());
    return Outcome{size == 1771 && formula == 1771,
                   "O=" + std::to_string(size) + ", C(23,3)=" + std::to_string(formula) + ", median of 21 calls",
                   times[10]};
  });

  run(2, "surrogate gradient vs central differences", 10, [] {
    double worst = 0;
    for (int c = 0; c < 100; ++c) {
      const int d = 2 + c % 9;
      const auto basis = surrogate::build_index_set(surrogate::IndexSetKind::kTotalOrder, d, 3);
      const VectorXd a = uniform_points(1, static_cast<int>(basis.size()), 7000 + c).row(0).transpose();
      const surrogate::Surrogate s(basis, a);
      const VectorXd x = 0.95 * uniform_points(1, d, 9000 + c).row(0).transpose();
      const VectorXd g = s.gradient(x);
      VectorXd fd(d);
      const double h = 1e-5;
      for (int j = 0; j < d; ++j) {
        VectorXd xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        fd(j) = (s.predict(xp) - s.predict(xm)) / (2 * h);
      }
      worst = std::max(worst, (g - fd).norm() / std::max(1.0, g.norm()));
    }
    return Outcome{worst <= 1e-6, "100 cases, worst relative error " + fmt(worst)};
  });

  run(3, "planted 3-sparse recovery d=5 p=3 K=20", 10, [] {
    const auto basis = surrogate::build_index_set(surrogate::IndexSetKind::kTotalOrder, 5, 3);
    VectorXd a = VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
    a(4) = 1.0;
    a(17) = -0.5;
    a(40) = 0.25;
    const MatrixXd x = uniform_points(20, 5, 31);
    const auto s = surrogate::fit(basis, x, surrogate::eval_basis(basis, x) * a, 1e-8);
    const double err = (s.coefficients() - a).cwiseAbs().maxCoeff();
    return Outcome{basis.size() == 56 && err <= 1e-5, "O=" + std::to_string(basis.size()) + ", max error " + fmt(err)};
  });

  const auto config = pipeline::parse_config(nlohmann::json::object());
  RidgeFit ridge;
  run(4, "ridge subspace recovery d=20 K=800 p=3", 120, [&] {
    const int d = 20;
    ridge.oracle = pipeline::QoiModel(config, pipeline::make_deformer(config)).oracle();
    const MatrixXd x = ingest::doe_uniform(d, 800, 405);
    const VectorXd f = ridge.oracle.evaluate_rows(x);
    const auto basis = surrogate::build_index_set(surrogate::IndexSetKind::kTotalOrder, d, 3);
    const auto s = surrogate::fit(basis, x, f, 1e-6);
    ridge.partition = subspace::partition(subspace::estimate_covariance(s, 100000, 406));
    const VectorXd angles = subspace::principal_angles(ridge.partition.W, testbed::true_active_subspace(ridge.oracle));
    const double angle = angles.size() ? angles.maxCoeff() : 1e300;
    return Outcome{ridge.partition.r == 1 && angle <= 1e-2,
                   "r=" + std::to_string(ridge.partition.r) + ", angle " + fmt(angle) + " rad, eigenvalue gap " +
                       fmt(ridge.partition.eigenvalues(0)) + " vs " + fmt(ridge.partition.eigenvalues(1))};
  });

  run(5, "invariance of oracle over inactive samples", 120, [&] {
    if (ridge.partition.W.size() == 0) return Outcome{false, "criterion 4 produced no partition"};
    const auto poly = sampler::build_polytope(ridge.partition, VectorXd::Zero(ridge.partition.r));
    sampler::HitAndRunOptions opts;
    opts.burn_in = 1000;
    opts.thin = 50;
    const auto zs = sampler::hit_and_run(poly, 500, 501, opts);
    VectorXd inactive(500);
    for (int i = 0; i < 500; ++i) inactive(i) = ridge.oracle.evaluate(sampler::lift(poly, zs[static_cast<std::size_t>(i)]).values());
    const VectorXd random = ridge.oracle.evaluate_rows(ingest::doe_uniform(20, 500, 502));
    const double ratio = sample_sd(inactive) / sample_sd(random);
    return Outcome{ratio <= 0.1, "std " + fmt(sample_sd(inactive)) + " vs " + fmt(sample_sd(random)) + ", ratio " + fmt(ratio)};
  });

  run(6, "sampler soundness", 60, [&] {
    if (ridge.partition.W.size() == 0) return Outcome{false, "criterion 4 produced no partition"};
    int bad = 0, total = 0;
    double worst_u = 0, worst_x = 0;
    for (double u : {0.0, 0.5}) {
      const auto poly = sampler::build_polytope(ridge.partition, VectorXd::Constant(ridge.partition.r, u));
      const auto zs = sampler::hit_and_run(poly, 2500, 601 + static_cast<std::uint64_t>(10 * u));
      for (const auto& z : zs) {
        const VectorXd x = sampler::lift(poly, z).values();
        const double du = (ridge.partition.W.transpose() * x - poly.u).cwiseAbs().maxCoeff();
        const double dx = x.cwiseAbs().maxCoeff() - 1.0;
        worst_u = std::max(worst_u, du);
        worst_x = std::max(worst_x, dx);
        bad += du > 1e-10 || dx > geometry::kHypercubeTolerance;
        ++total;
      }
    }
    VectorXd lo(1), hi(1);
    lo << -1;
    hi << 1;
    std::vector<double> v;
    for (const auto& z : sampler::hit_and_run(box(lo, hi), 10000, 602)) v.push_back(z(0));
    const double ks = ks_uniform(v, -1, 1);
    const double crit = 1.628 / std::sqrt(10000.0);
    return Outcome{bad == 0 && total == 5000 && ks <= crit,
                   std::to_string(total - bad) + "/" + std::to_string(total) + " lifted samples valid (max |W^T x - u| " +
                       fmt(worst_u) + ", max |x|-1 " + fmt(worst_x) + "); KS D=" + fmt(ks) + " vs " + fmt(crit)};
  });

  run(7, "chebyshev centre", 30, [] {
    bool ok = true;
    double box_err = 0;
    for (const auto& [l, h, r] : std::vector<std::tuple<std::vector<double>, std::vector<double>, double>>{
             {{-1, -1}, {1, 1}, 1.0}, {{0, -2}, {4, 2}, 2.0}, {{-3, 0, 1}, {3, 1, 5}, 0.5}}) {
      const VectorXd lo = Eigen::Map<const VectorXd>(l.data(), static_cast<Eigen::Index>(l.size()));
      const VectorXd hi = Eigen::Map<const VectorXd>(h.data(), static_cast<Eigen::Index>(h.size()));
      const auto ball = sampler::chebyshev_center(box(lo, hi));
      box_err = std::max(box_err, std::abs(ball.radius - r));
      const VectorXd slack = (box(lo, hi).b - box(lo, hi).A * ball.center);
      box_err = std::max(box_err, std::abs(slack.minCoeff() - r));
    }
    ok = box_err <= 1e-12;
    double worst = 0;
    int mismatches = 0;
    for (int trial = 0; trial < 20; ++trial) {
      Rng rng(700, static_cast<std::uint64_t>(trial));
      const int m = 4 + trial % 5;
      sampler::InactivePolytope p;
      p.A.resize(m + 4, 2);
      p.b.resize(m + 4);
      for (int i = 0; i < m; ++i) {
        const double ang = rng.uniform(0, 2 * M_PI);
        p.A(i, 0) = std::cos(ang) * rng.uniform(0.5, 2.0);
        p.A(i, 1) = std::sin(ang) * rng.uniform(0.5, 2.0);
        p.b(i) = rng.uniform(0.2, 1.5);
      }
      p.A.bottomRows(4) << 1, 0, -1, 0, 0, 1, 0, -1;
      p.b.tail(4).setConstant(2.0);
      const auto ball = sampler::chebyshev_center(p);
      const VectorXd norms = p.A.rowwise().norm();
      auto depth = [&](double x, double y) {
        double best = 1e300;
        for (int i = 0; i < p.A.rows(); ++i) best = std::min(best, (p.b(i) - p.A(i, 0) * x - p.A(i, 1) * y) / norms(i));
        return best;
      };
      const int n = 400;
      const double h = 4.0 / n;
      double grid = -1e300;
      for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) grid = std::max(grid, depth(-2 + i * h, -2 + j * h));
      worst = std::max(worst, ball.radius - grid);
      mismatches += ball.radius < grid - 1e-12 || ball.radius > grid + h;
    }
    return Outcome{ok && mismatches == 0, "boxes max error " + fmt(box_err) + "; 20 random polytopes, " +
                                              std::to_string(mismatches) + " outside grid resolution (max gap " +
                                              fmt(worst) + ")"};
  });

  {
    // Dense random direction: the cubic ridge then has ~O nonzero coefficients,
    // more than K, so sparse recovery is not expected to reach 1e-2.
    const auto t0 = Clock::now();
    const auto oracle = testbed::make_ridge(testbed::random_direction(20, 404));
    const MatrixXd x = ingest::doe_uniform(20, 800, 405);
    const auto basis = surrogate::build_index_set(surrogate::IndexSetKind::kTotalOrder, 20, 3);
    const auto s = surrogate::fit(basis, x, oracle.evaluate_rows(x), 1e-6);
    const auto part = subspace::partition(subspace::estimate_covariance(s, 100000, 406));
    const double angle = subspace::principal_angles(part.W, testbed::true_active_subspace(oracle)).maxCoeff();
    std::cout << "[INFO] 4b. dense random ridge direction: r=" << part.r << ", angle " << fmt(angle) << " rad; "
              << fmt(seconds_since(t0)) << " s" << std::endl;
  }

  // Criteria 8-11 use the full pipeline at the default shape parameters.
  const auto dir_a = work / "run_a", dir_b = work / "run_b";
  std::vector<std::pair<std::string, double>> stage_times;
  double run_a_secs = 0, run_b_secs = 0;
  std::string pipeline_error;
  {
    const auto t0 = Clock::now();
    try {
      const pipeline::Workspace ws(config, dir_a.string());
      const std::vector<std::pair<std::string, std::function<nlohmann::json(const pipeline::Workspace&)>>> stages = {
          {"doe", pipeline::stage_doe},           {"evaluate", pipeline::stage_evaluate},
          {"fit", pipeline::stage_fit},           {"subspace", pipeline::stage_subspace},
          {"sample", pipeline::stage_sample},     {"envelope", pipeline::stage_envelope},
          {"gate", pipeline::stage_gate},         {"report", pipeline::stage_report}};
      for (const auto& [name, fn] : stages) {
        const auto ts = Clock::now();
        fn(ws);
        stage_times.emplace_back(name, seconds_since(ts));
      }
    } catch (const std::exception& e) {
      pipeline_error = e.what();
    }
    run_a_secs = seconds_since(t0);
    std::cout << "pipeline run A: " << fmt(run_a_secs) << " s";
    for (const auto& [n, s] : stage_times) std::cout << ", " << n << " " << fmt(s);
    std::cout << (pipeline_error.empty() ? "" : ", error: " + pipeline_error) << std::endl;
  }
  auto stage_secs = [&](const std::string& name) -> double {
    for (const auto& [n, s] : stage_times)
      if (n == name) return s;
    return INFINITY;
  };

  run(8, "envelope statistics", 60, [&] {
    Rng rng(800);
    const int n = 16, h = 4000;
    MatrixXd y(h, n);
    for (int k = 0; k < h; ++k)
      for (int i = 0; i < n; ++i) y(k, i) = 0.3 + 0.01 * (i + 1) * rng.normal() + (i ? 0.5 * y(k, i - 1) : 0.0);
    envelope::StreamingMoments acc(n);
    for (int k = 0; k < h; ++k) acc.add(y.row(k).transpose());
    const VectorXd mean = y.colwise().mean();
    const MatrixXd centered = y.rowwise() - mean.transpose();
    const MatrixXd cov = centered.transpose() * centered / (h - 1);
    const double em = (acc.mean() - mean).norm() / mean.norm();
    const double ec = (acc.covariance() - cov).norm() / cov.norm();
    const auto env = pipeline::read_json((dir_a / pipeline::files::kEnvelope).string());
    const auto& drift = env.at("provenance").at("drift");
    const double dm = drift.at("mu").get<double>(), ds = drift.at("s").get<double>();
    const long long hh = env.at("H").get<long long>();
    return Outcome{em <= 1e-10 && ec <= 1e-10 && hh == 5000 && dm <= 0.01 && ds <= 0.01,
                   "streaming vs two-pass mean " + fmt(em) + ", covariance " + fmt(ec) + "; H=" + std::to_string(hh) +
                       " last-decile drift ||mu|| " + fmt(100 * dm) + "%, ||S||_F " + fmt(100 * ds) + "%"};
  });

  run(9, "gate behaviour", 120, [&] {
    const auto env = envelope::envelope_from_json(pipeline::read_json((dir_a / pipeline::files::kEnvelope).string()));
    const double zeta_mu = envelope::mahalanobis(env, env.mu());
    const double half = envelope::gate_score(envelope::LogisticGate{1, 5, 3}, 3.0);
    // Full-rank Gaussian envelopes: coverage of the chi-squared threshold.
    int inside = 0, total = 0;
    for (int trial = 0; trial < 3; ++trial) {
      const int n = 6 + 4 * trial, h = 10000;
      Rng rng(900, static_cast<std::uint64_t>(trial));
      MatrixXd l = MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) l(i, j) = rng.normal() * 0.1 + (i == j ? 1.0 : 0.0);
      envelope::StreamingMoments acc(n);
      MatrixXd s(h, n);
      for (int k = 0; k < h; ++k) {
        VectorXd z(n);
        for (int i = 0; i < n; ++i) z(i) = rng.normal();
        s.row(k) = (l * z).transpose();
        acc.add(s.row(k).transpose());
      }
      std::vector<double> sx{0.0, 1.0}, px;
      for (int i = 0; i < n - 2; ++i) px.push_back(static_cast<double>(i) / (n - 3));
      const auto e = envelope::build_envelope(acc, geometry::Stations{sx, px});
      const double thr = envelope::chi2_threshold(e, 0.99);
      for (int k = 0; k < h; ++k) inside += envelope::mahalanobis(e, VectorXd(s.row(k).transpose())) <= thr, ++total;
    }
    const double coverage = static_cast<double>(inside) / total;
    const auto v = pipeline::read_json((dir_a / pipeline::files::kVerdicts).string());
    const double member_use = v.at("sets").at("member").at("use_fraction").get<double>();
    const auto& kinked = v.at("sets").at("kinked");
    const bool kinked_ok = kinked.at("in_zone") == kinked.at("count") && kinked.at("scrap") == kinked.at("count");
    return Outcome{zeta_mu == 0.0 && half == 0.5 && coverage >= 0.95 && member_use >= 0.99 && kinked_ok,
                   "zeta(mu)=" + fmt(zeta_mu) + ", score(beta3)=" + fmt(half) + ", chi2 coverage " + fmt(100 * coverage) +
                       "%, members use " + fmt(100 * member_use) + "%, kinked in zone " + kinked.at("in_zone").dump() +
                       "/" + kinked.at("count").dump() + " scrap " + kinked.at("scrap").dump()};
  });

  run(10, "d=30 cross-parameterization rank correlation", 300, [&] {
    const auto v = pipeline::read_json((dir_a / pipeline::files::kVerdicts).string());
    const auto& c = v.at("rank_correlation").at("cross");
    const double rho = c.at("spearman").get<double>();
    const double t = stage_secs("gate");
    return Outcome{rho >= 0.5 && t <= 300, "Spearman(zeta, |dq|) = " + fmt(rho) + " over " + c.at("n").dump() +
                                               " profiles (in zone: " + c.at("n_in_zone").dump() + ", " +
                                               c.at("spearman_in_zone").dump() + "); gate stage " + fmt(t) + " s"};
  });

  run(11, "run-all determinism", 600 - run_a_secs, [&] {
    const auto t0 = Clock::now();
    pipeline::run_all(pipeline::Workspace(config, dir_b.string()));
    run_b_secs = seconds_since(t0);
    const auto fa = tree(dir_a), fb = tree(dir_b);
    int differ = 0;
    for (const auto& f : fa) {
      if (std::find(fb.begin(), fb.end(), f) == fb.end() ||
          io::read_text((dir_a / f).string()) != io::read_text((dir_b / f).string()))
        ++differ;
    }
    return Outcome{pipeline_error.empty() && fa == fb && differ == 0 && !fa.empty(),
                   std::to_string(fa.size()) + " artifacts, " + std::to_string(differ) + " differ; runs " +
                       fmt(run_a_secs) + " s + " + fmt(run_b_secs) + " s"};
  });

  std::cout << "[SKIP] 12. external-data surrogate R^2: needs the published cascade dataset, not available offline"
            << std::endl;

  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << std::endl;
  return failures ? 1 : 0;
}
