#include "bladeenv/pipeline/stages.hpp"

#include "bladeenv/envelope.hpp"
#include "bladeenv/errors.hpp"
#include "bladeenv/ingest.hpp"
#include "bladeenv/io.hpp"
#include "bladeenv/parallel.hpp"
#include "bladeenv/random.hpp"
#include "bladeenv/sampler.hpp"
#include "bladeenv/subspace.hpp"
#include "bladeenv/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <sstream>

namespace bladeenv::pipeline {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) { return std::isnan(v) ? std::string() : io::format_double(v); }

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

geometry::AirfoilProfile load_baseline(const PipelineConfig& c) {
  if (c.design_space.baseline == "synthetic") return geometry::synthetic_baseline(c.design_space.points_per_side);
  return geometry::read_profile_csv(c.resolve_path(c.design_space.baseline));
}

VectorXd active_u(const PipelineConfig& c, int r) {
  const auto& u = c.sampler.u;
  if (u.size() == 1) return VectorXd::Constant(r, u[0]);
  if (static_cast<int>(u.size()) != r) {
    throw ConfigError("config.sampler.u has " + std::to_string(u.size()) + " entries but the partition has r = " +
                      std::to_string(r));
  }
  return Eigen::Map<const VectorXd>(u.data(), r);
}

/// Surrogate prediction, or the oracle when the qoi comes from one.
struct DesignQoi {
  std::optional<QoiModel> model;
  std::optional<surrogate::Surrogate> fit;
  double operator()(const VectorXd& x) const { return model ? model->design(x) : fit->predict(x); }
};

DesignQoi design_qoi(const Workspace& ws, const geometry::FfdDeformer& deformer) {
  DesignQoi q;
  if (ws.config().qoi.source == "oracle") {
    q.model.emplace(ws.config(), deformer);
  } else {
    ws.require("fit", files::kSurrogate);
    q.fit.emplace(surrogate::surrogate_from_json(read_json(ws.path(files::kSurrogate))));
  }
  return q;
}

std::string csv_text(const Workspace& ws, const Provenance& p, const std::string& header,
                     const std::vector<std::string>& rows) {
  std::ostringstream os;
  os << ingest::format_header(ws.csv_header(p)) << header << '\n';
  for (const auto& r : rows) os << r << '\n';
  return os.str();
}

std::uint64_t external_hash(const std::string& path, const char* what) {
  try {
    return io::hash_file(path);
  } catch (const std::exception&) {
    throw ConfigError(std::string("cannot read ") + what + " file '" + path + "'");
  }
}

}  // namespace

geometry::FfdDeformer make_deformer(const PipelineConfig& c, int n_axial, int n_rows, double amplitude) {
  auto baseline = load_baseline(c);
  auto lattice = geometry::FfdLattice::enclosing(baseline, n_axial, n_rows, amplitude, c.design_space.margin);
  return geometry::FfdDeformer(std::move(baseline), lattice);
}

geometry::FfdDeformer make_deformer(const PipelineConfig& c) {
  return make_deformer(c, c.design_space.n_axial, c.design_space.n_rows, c.design_space.amplitude);
}

QoiModel::QoiModel(const PipelineConfig& c, const geometry::FfdDeformer& deformer) {
  const auto kind = testbed::oracle_kind_from_string(c.qoi.oracle);
  const int d = c.design_space.d;
  if (c.qoi.direction == "leading-edge") {
    ridge_.emplace(deformer);
    const VectorXd& w = ridge_->design_oracle().directions[0];
    oracle_ = kind == testbed::OracleKind::kLinear ? testbed::make_linear(w) : testbed::make_ridge(w);
  } else {
    const VectorXd w1 = testbed::random_direction(d, derive_seed(c.seed, "oracle-w1"));
    switch (kind) {
      case testbed::OracleKind::kLinear: oracle_ = testbed::make_linear(w1); break;
      case testbed::OracleKind::kRidge: oracle_ = testbed::make_ridge(w1); break;
      case testbed::OracleKind::kQuadraticRidge:
        oracle_ = testbed::make_quadratic_ridge(w1, testbed::random_direction(d, derive_seed(c.seed, "oracle-w2")));
        break;
    }
  }
  if (c.qoi.noise > 0.0) oracle_ = testbed::with_noise(oracle_, c.qoi.noise, derive_seed(c.seed, "oracle-noise"));
}

double QoiModel::profile(const VectorXd& ordinates) const {
  if (!ridge_) return kNaN;
  const double t = ridge_->coordinate(ordinates);
  return oracle_.kind == testbed::OracleKind::kLinear ? t : testbed::ridge_link(t);
}

json stage_doe(const Workspace& ws) {
  const auto& c = ws.config();
  MatrixXd x;
  auto prov = ws.provenance("doe", {});
  auto header = ws.csv_header(prov);
  if (c.qoi.source == "oracle") {
    x = ingest::doe_uniform(c.design_space.d, c.doe.K, c.stage_seed("doe"));
  } else {
    const auto path = c.resolve_path(c.qoi.designs_path);
    header["source"] = io::hex64(external_hash(path, "designs"));
    x = c.qoi.format == "matrix" ? ingest::read_numeric_matrix(path) : ingest::read_designs_csv(path);
    if (x.cols() != c.design_space.d) {
      throw ConfigError("'" + path + "' has " + std::to_string(x.cols()) + " design columns, config d = " +
                        std::to_string(c.design_space.d));
    }
    if (x.rows() != c.doe.K) {
      throw ConfigError("'" + path + "' has " + std::to_string(x.rows()) + " designs, config K = " +
                        std::to_string(c.doe.K));
    }
    for (Eigen::Index i = 0; i < x.rows(); ++i) geometry::check_in_hypercube(x.row(i).transpose());
  }
  ingest::write_designs_csv(ws.path(files::kDesigns), x, header);
  ws.write_resolved_config();
  return {{"designs", x.rows()}, {"d", x.cols()}};
}

json stage_evaluate(const Workspace& ws) {
  const auto& c = ws.config();
  ws.require("doe", files::kDesigns);
  const MatrixXd x = ingest::read_designs_csv(ws.path(files::kDesigns));
  auto prov = ws.provenance("evaluate", {files::kDesigns});
  auto header = ws.csv_header(prov);
  VectorXd q;
  if (c.qoi.source == "oracle") {
    const auto deformer = make_deformer(c);
    q = QoiModel(c, deformer).oracle().evaluate_rows(x);
  } else {
    const auto path = c.resolve_path(c.qoi.qoi_path);
    header["source"] = io::hex64(external_hash(path, "qoi"));
    if (c.qoi.format == "matrix") {
      const MatrixXd m = ingest::read_numeric_matrix(path);
      if (c.qoi.column >= m.cols()) {
        throw ConfigError("config.qoi.column = " + std::to_string(c.qoi.column) + " but '" + path + "' has " +
                          std::to_string(m.cols()) + " columns");
      }
      q = m.col(c.qoi.column);
    } else {
      q = ingest::read_qoi_csv(path).column(c.qoi.name);
    }
    if (q.size() != x.rows()) {
      throw ConfigError("'" + path + "' has " + std::to_string(q.size()) + " values for " +
                        std::to_string(x.rows()) + " designs");
    }
  }
  if (!q.allFinite()) throw DomainError("evaluate: qoi contains non-finite values");
  ingest::QoiTable table;
  table.names = {c.qoi.name};
  for (Eigen::Index i = 0; i < x.rows(); ++i) table.design_ids.push_back(i);
  table.values = q;
  ingest::write_qoi_csv(ws.path(files::kQoi), table, header);
  ws.write_resolved_config();
  return {{"evaluated", q.size()}, {"qoi", c.qoi.name}, {"min", q.minCoeff()}, {"max", q.maxCoeff()}};
}

json stage_fit(const Workspace& ws) {
  const auto& c = ws.config();
  ws.require("doe", files::kDesigns);
  ws.require("evaluate", files::kQoi);
  const MatrixXd x = ingest::read_designs_csv(ws.path(files::kDesigns));
  const VectorXd q = ingest::read_qoi_csv(ws.path(files::kQoi)).column(c.qoi.name);
  if (q.size() != x.rows()) throw ArtifactError("evaluate", "qoi and design counts differ");
  const Eigen::Index n_train = c.doe.train;
  if (n_train >= x.rows()) throw ConfigError("config.doe.train must be below the number of designs");

  const auto basis =
      surrogate::build_index_set(surrogate::index_set_kind_from_string(c.surrogate.kind), c.design_space.d, c.surrogate.p);
  surrogate::FitOptions opts;
  opts.bpdn.max_iterations = c.surrogate.max_iterations;
  opts.cv_max_iterations = c.surrogate.cv_max_iterations;
  const auto s = surrogate::fit(basis, x.topRows(n_train), q.head(n_train), c.surrogate.epsilon, opts);
  const Eigen::Index n_test = x.rows() - n_train;
  const double r2_test = surrogate::r_squared(s, x.bottomRows(n_test), q.tail(n_test));
  const VectorXd pred = s.predict(x);

  const auto prov = ws.provenance("fit", {files::kDesigns, files::kQoi});
  json j = surrogate::to_json(s);
  j["validation"] = {{"n_train", n_train}, {"n_test", n_test}, {"r2_train", s.diagnostics().r2_train}, {"r2_test", r2_test}};
  j["provenance"] = ws.json_provenance(prov);
  write_json(ws.path(files::kSurrogate), j);

  std::vector<std::string> rows;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    rows.push_back(std::to_string(i) + (i < n_train ? ",train," : ",test,") + num(q(i)) + "," + num(pred(i)));
  }
  io::write_text(ws.path(files::kValidation), csv_text(ws, prov, "design_id,split,actual,predicted", rows));
  ws.write_resolved_config();

  long long nnz = 0;
  for (Eigen::Index i = 0; i < s.coefficients().size(); ++i) nnz += s.coefficients()(i) != 0.0;
  return {{"terms", basis.size()},     {"nonzero", nnz},
          {"epsilon", s.epsilon()},    {"converged", s.diagnostics().converged},
          {"r2_train", s.diagnostics().r2_train}, {"r2_test", r2_test},
          {"warning", s.diagnostics().warning}};
}

json stage_subspace(const Workspace& ws) {
  const auto& c = ws.config();
  ws.require("fit", files::kSurrogate);
  const auto s = surrogate::surrogate_from_json(read_json(ws.path(files::kSurrogate)));
  const auto seed = c.stage_seed("subspace");
  const auto cov = subspace::estimate_covariance(s, c.subspace.M, seed, ws.jobs());
  auto p = subspace::partition(cov, c.subspace.r);
  p.M = c.subspace.M;
  p.seed = seed;

  json j = subspace::to_json(p);
  json summary = {{"r", p.r}, {"eigenvalues", to_std(p.eigenvalues.head(std::min<Eigen::Index>(4, p.eigenvalues.size())))}};
  if (c.qoi.source == "oracle") {
    const auto deformer = make_deformer(c);
    const MatrixXd truth = testbed::true_active_subspace(QoiModel(c, deformer).oracle());
    const VectorXd angles = subspace::principal_angles(p.W, truth);
    const double max_angle = angles.size() ? angles.maxCoeff() : kNaN;
    j["oracle_check"] = {{"true_rank", truth.cols()}, {"max_angle", max_angle}};
    summary["true_rank"] = truth.cols();
    summary["max_angle"] = max_angle;
  }
  j["provenance"] = ws.json_provenance(ws.provenance("subspace", {files::kSurrogate}));
  write_json(ws.path(files::kPartition), j);
  ws.write_resolved_config();
  return summary;
}

json stage_sample(const Workspace& ws) {
  const auto& c = ws.config();
  ws.require("subspace", files::kPartition);
  ws.require("fit", files::kSurrogate);
  const auto part = subspace::partition_from_json(read_json(ws.path(files::kPartition)));
  const auto s = surrogate::surrogate_from_json(read_json(ws.path(files::kSurrogate)));
  const auto deformer = make_deformer(c);
  const VectorXd u = active_u(c, part.r);

  const auto poly = sampler::build_polytope(part, u);
  sampler::HitAndRunOptions opts;
  opts.burn_in = c.sampler.burn_in;
  opts.thin = c.sampler.thin;
  const auto zs = sampler::hit_and_run(poly, c.sampler.H, c.stage_seed("sample"), opts);
  MatrixXd x(c.sampler.H, c.design_space.d);
  for (std::size_t i = 0; i < zs.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = sampler::lift(poly, zs[i]).values();

  const auto prov = ws.provenance("sample", {files::kPartition, files::kSurrogate});
  auto header = ws.csv_header(prov);
  header["u"] = [&] {
    std::string t;
    for (Eigen::Index i = 0; i < u.size(); ++i) t += (i ? ";" : "") + io::format_double(u(i));
    return t.empty() ? std::string("-") : t;
  }();
  ingest::write_designs_csv(ws.path(files::kSamples), x, header);

  // Qoi over inactive samples against uniform random designs.
  const int n_inv = std::min(c.sampler.invariance_check, c.sampler.H);
  std::optional<QoiModel> model;
  if (c.qoi.source == "oracle") model.emplace(c, deformer);
  std::vector<std::string> rows;
  json ratio = nullptr;
  if (n_inv > 0) {
    const MatrixXd rnd = ingest::doe_uniform(c.design_space.d, n_inv, c.stage_seed("invariance"));
    std::vector<double> inactive_vals, random_vals;
    for (const auto& [set, m] : {std::pair<const char*, const MatrixXd*>{"inactive", &x}, {"random", &rnd}}) {
      for (int i = 0; i < n_inv; ++i) {
        const VectorXd xi = m->row(i).transpose();
        const double sv = s.predict(xi);
        const double ov = model ? model->design(xi) : kNaN;
        (std::string(set) == "inactive" ? inactive_vals : random_vals).push_back(model ? ov : sv);
        rows.push_back(std::string(set) + "," + std::to_string(i) + "," + num(sv) + "," + num(ov));
      }
    }
    auto sd = [](const std::vector<double>& v) {
      double m = 0.0;
      for (double a : v) m += a;
      m /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double a : v) ss += (a - m) * (a - m);
      return v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    };
    const double sr = sd(random_vals);
    if (sr > 0.0) ratio = sd(inactive_vals) / sr;
  }
  io::write_text(ws.path(files::kInvariance), csv_text(ws, prov, "set,index,surrogate,oracle", rows));

  std::vector<std::pair<std::string, geometry::AirfoilProfile>> profiles;
  for (int i = 0; i < std::min(c.sampler.profiles_written, c.sampler.H); ++i) {
    profiles.emplace_back(std::to_string(i), deformer.apply(geometry::DesignVector(x.row(i).transpose())));
  }
  std::ostringstream os;
  os << ingest::format_header(ws.csv_header(prov));
  geometry::write_profiles_csv(os, profiles);
  io::write_text(ws.path(files::kInactiveProfiles), os.str());
  ws.write_resolved_config();

  json out = {{"samples", x.rows()}, {"inactive_dimension", poly.dimension()}, {"invariance_std_ratio", ratio}};
  if (!poly.warning.empty()) out["warning"] = poly.warning;
  return out;
}

json stage_envelope(const Workspace& ws) {
  const auto& c = ws.config();
  ws.require("subspace", files::kPartition);
  ws.require("sample", files::kSamples);
  const auto part = subspace::partition_from_json(read_json(ws.path(files::kPartition)));
  const MatrixXd x = ingest::read_designs_csv(ws.path(files::kSamples));
  const auto deformer = make_deformer(c);
  const auto n = static_cast<Eigen::Index>(deformer.baseline().size());

  envelope::StreamingMoments moments(n, c.envelope.checkpoint_interval);
  std::vector<VectorXd> members(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    members[static_cast<std::size_t>(i)] = deformer.ordinates(x.row(i).transpose());
    moments.add(members[static_cast<std::size_t>(i)]);
  }
  auto env = envelope::build_envelope(moments, deformer.baseline().stations());
  const auto drift = envelope::last_decile_drift(moments.trace());

  std::string buffer_source;
  if (c.envelope.buffer) {
    env.set_buffer({(*c.envelope.buffer)[0], (*c.envelope.buffer)[1]});
    buffer_source = "config";
  } else {
    const double lo = envelope::chi2_threshold(env, c.envelope.significance);
    env.set_buffer({lo, c.envelope.buffer_ratio * lo});
    buffer_source = "chi2";
  }

  json calibration;
  if (c.envelope.gate) {
    env.set_gate({(*c.envelope.gate)[0], (*c.envelope.gate)[1], (*c.envelope.gate)[2]});
    calibration = {{"source", "config"}};
  } else {
    std::vector<double> use(members.size());
    parallel_for(members.size(), ws.jobs(), [&](std::size_t i) { use[i] = envelope::mahalanobis(env, members[i]); });
    // Off-manifold designs that still sit inside the control zone.
    std::vector<double> scrap;
    const auto seed = c.stage_seed("calibrate");
    const long long cap = 200LL * c.envelope.calibration_random;
    long long attempts = 0;
    VectorXd xi(c.design_space.d);
    for (; attempts < cap && static_cast<int>(scrap.size()) < c.envelope.calibration_random; ++attempts) {
      Rng rng(seed, static_cast<std::uint64_t>(attempts));
      for (int j = 0; j < c.design_space.d; ++j) xi(j) = rng.uniform(-1.0, 1.0);
      const VectorXd s = deformer.ordinates(xi);
      if (envelope::in_control_zone(env, s).inside) scrap.push_back(envelope::mahalanobis(env, s));
    }
    calibration = {{"source", "calibrated"}, {"n_use", use.size()}, {"n_scrap", scrap.size()}, {"attempts", attempts}};
    if (!use.empty() && !scrap.empty()) {
      const auto cal = envelope::calibrate_gate(use, scrap, c.stage_seed("calibrate-restarts"));
      env.set_gate(cal.gate);
      calibration["loss"] = cal.loss;
      calibration["warning"] = cal.warning;
    } else {
      calibration["warning"] = "no in-zone random designs found; default gate kept";
    }
  }

  const auto prov = ws.provenance("envelope", {files::kPartition, files::kSamples});
  env.provenance = ws.json_provenance(prov);
  env.provenance["partition"] = {{"r", part.r}, {"eigenvalues", to_std(part.eigenvalues)}, {"u", to_std(active_u(c, part.r))}};
  env.provenance["sampler"] = {{"H", c.sampler.H},
                               {"burn_in", c.sampler.burn_in},
                               {"thin", c.sampler.thin},
                               {"seed", c.stage_seed("sample")}};
  env.provenance["drift"] = {{"mu", drift.mu}, {"s", drift.s}};
  env.provenance["buffer_source"] = buffer_source;
  env.provenance["calibration"] = calibration;
  write_json(ws.path(files::kEnvelope), envelope::to_json(env));

  std::vector<std::string> rows;
  for (const auto& t : moments.trace()) rows.push_back(std::to_string(t.count) + "," + num(t.mu_norm) + "," + num(t.s_norm));
  io::write_text(ws.path(files::kConvergence), csv_text(ws, prov, "count,mu_norm,s_norm", rows));
  ws.write_resolved_config();

  return {{"H", env.samples()},
          {"rank", env.rank()},
          {"buffer", {env.buffer().zeta_lo, env.buffer().zeta_hi}},
          {"gate", {env.gate().beta1, env.gate().beta2, env.gate().beta3}},
          {"drift", {{"mu", drift.mu}, {"s", drift.s}}}};
}

namespace {

struct GateItem {
  std::string set;
  VectorXd ordinates;
  double qoi = kNaN;
  envelope::VerdictReport report;
};

void run_verdicts(const envelope::BladeEnvelope& env, std::vector<GateItem>& items, int jobs) {
  std::vector<std::size_t> index_in_set(items.size());
  std::map<std::string, std::size_t> counters;
  for (std::size_t i = 0; i < items.size(); ++i) index_in_set[i] = counters[items[i].set]++;
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    items[i].report = envelope::verdict(env, items[i].ordinates, items[i].set + "-" + std::to_string(index_in_set[i]));
  });
}

json set_summary(const std::vector<GateItem>& items, const std::string& set) {
  long long n = 0, use = 0, review = 0, scrap = 0, in_zone = 0;
  for (const auto& it : items) {
    if (it.set != set) continue;
    ++n;
    in_zone += it.report.in_zone;
    switch (it.report.verdict) {
      case envelope::Verdict::kUse: ++use; break;
      case envelope::Verdict::kReview: ++review; break;
      case envelope::Verdict::kScrap: ++scrap; break;
    }
  }
  const double dn = n > 0 ? static_cast<double>(n) : 1.0;
  return {{"count", n},
          {"use", use},
          {"review", review},
          {"scrap", scrap},
          {"in_zone", in_zone},
          {"use_fraction", static_cast<double>(use) / dn},
          {"scrap_fraction", static_cast<double>(scrap) / dn}};
}

json spearman(const std::vector<GateItem>& items, const std::string& set, double q_ref) {
  std::vector<double> z, dq, z_in, dq_in;
  for (const auto& it : items) {
    if (it.set != set || std::isnan(it.qoi)) continue;
    z.push_back(it.report.zeta);
    dq.push_back(std::abs(it.qoi - q_ref));
    if (it.report.in_zone) {
      z_in.push_back(it.report.zeta);
      dq_in.push_back(std::abs(it.qoi - q_ref));
    }
  }
  auto corr = [](const std::vector<double>& a, const std::vector<double>& b) -> json {
    try {
      return testbed::rank_correlation(a, b);
    } catch (const DomainError&) {
      return nullptr;
    }
  };
  return {{"n", z.size()}, {"spearman", corr(z, dq)}, {"n_in_zone", z_in.size()}, {"spearman_in_zone", corr(z_in, dq_in)}};
}

}  // namespace

json stage_gate(const Workspace& ws) {
  const auto& c = ws.config();
  ws.require("envelope", files::kEnvelope);
  ws.require("sample", files::kSamples);
  const auto env = envelope::envelope_from_json(read_json(ws.path(files::kEnvelope)));
  const MatrixXd samples = ingest::read_designs_csv(ws.path(files::kSamples));
  const auto deformer = make_deformer(c);
  const auto qoi = design_qoi(ws, deformer);
  std::optional<QoiModel> model;
  if (c.qoi.source == "oracle") model.emplace(c, deformer);
  auto profile_qoi = [&](const VectorXd& s) { return model ? model->profile(s) : kNaN; };

  std::vector<GateItem> items;
  const int n_members = std::min<int>(c.gate.members, static_cast<int>(samples.rows()));
  for (int i = 0; i < n_members; ++i) {
    const VectorXd xi = samples.row(i).transpose();
    items.push_back({"member", deformer.ordinates(xi), qoi(xi), {}});
  }
  if (c.gate.random > 0) {
    const MatrixXd rnd = ingest::doe_uniform(c.design_space.d, c.gate.random, c.stage_seed("gate-random"));
    for (Eigen::Index i = 0; i < rnd.rows(); ++i) {
      const VectorXd xi = rnd.row(i).transpose();
      items.push_back({"random", deformer.ordinates(xi), qoi(xi), {}});
    }
  }
  const int n_kinked = std::min(c.gate.kinked, n_members);
  for (int i = 0; i < n_kinked; ++i) {
    const VectorXd s = testbed::kinked_profile(items[static_cast<std::size_t>(i)].ordinates, env.mu(), env.lower(),
                                               env.upper(), c.gate.kink_scale);
    items.push_back({"kinked", s, profile_qoi(s), {}});
  }
  json cross_note = nullptr;
  const auto& xc = c.gate.cross_check;
  if (xc.enabled && model && model->has_profile_form()) {
    const auto cross = make_deformer(c, xc.n_axial, xc.n_rows, xc.amplitude);
    const MatrixXd xd = ingest::doe_uniform(xc.n_axial * xc.n_rows, xc.count, c.stage_seed("cross-check"));
    for (Eigen::Index i = 0; i < xd.rows(); ++i) {
      const VectorXd s = cross.ordinates(xd.row(i).transpose());
      items.push_back({"cross", s, profile_qoi(s), {}});
    }
  } else if (xc.enabled) {
    cross_note = "skipped: needs the oracle qoi source with the leading-edge direction";
  }
  run_verdicts(env, items, ws.jobs());

  double q_ref = profile_qoi(env.mu());
  if (n_members > 0) {
    q_ref = 0.0;
    for (int i = 0; i < n_members; ++i) q_ref += items[static_cast<std::size_t>(i)].qoi;
    q_ref /= n_members;
  }

  const auto prov = ws.provenance("gate", {files::kEnvelope, files::kSamples});
  json sets = json::object();
  for (const char* set : {"member", "random", "kinked", "cross"}) {
    const auto sm = set_summary(items, set);
    if (sm["count"].get<long long>() > 0) sets[set] = sm;
  }
  json correlation = json::object();
  for (const char* set : {"random", "cross"}) {
    if (sets.contains(set)) correlation[set] = spearman(items, set, q_ref);
  }
  json reports = json::array();
  std::vector<std::string> rows;
  for (const auto& it : items) {
    json r = envelope::to_json(it.report);
    r["set"] = it.set;
    reports.push_back(r);
    const double dev = std::isnan(it.qoi) ? kNaN : std::abs(it.qoi - q_ref);
    rows.push_back(it.set + "," + it.report.id + "," + num(it.report.zeta) + "," + num(it.report.score) + "," +
                   (it.report.in_zone ? "1" : "0") + "," + envelope::to_string(it.report.verdict) + "," +
                   num(it.qoi) + "," + num(dev));
  }
  json j = {{"schema_version", io::kSchemaVersion},
            {"buffer", {env.buffer().zeta_lo, env.buffer().zeta_hi}},
            {"gate", {{"beta1", env.gate().beta1}, {"beta2", env.gate().beta2}, {"beta3", env.gate().beta3}}},
            {"qoi_reference", num(q_ref).empty() ? json(nullptr) : json(q_ref)},
            {"sets", sets},
            {"rank_correlation", correlation},
            {"reports", reports},
            {"provenance", ws.json_provenance(prov)}};
  if (!cross_note.is_null()) j["cross_check_note"] = cross_note;
  write_json(ws.path(files::kVerdicts), j);
  io::write_text(ws.path(files::kGateScores),
                 csv_text(ws, prov, "set,id,zeta,score,in_zone,verdict,qoi,qoi_deviation", rows));
  ws.write_resolved_config();
  return {{"sets", sets}, {"rank_correlation", correlation}};
}

json gate_profiles(const std::string& envelope_path, const std::string& profiles_path, const std::string& out_path,
                   int jobs) {
  if (!std::filesystem::exists(envelope_path)) throw ArtifactError("envelope", "missing envelope '" + envelope_path + "'");
  envelope::BladeEnvelope env = [&] {
    try {
      return envelope::envelope_from_json(read_json(envelope_path));
    } catch (const nlohmann::json::exception& e) {
      throw ArtifactError("envelope", "malformed envelope '" + envelope_path + "': " + e.what());
    }
  }();
  const auto profiles = geometry::read_profiles_csv(profiles_path);
  std::vector<GateItem> items;
  std::vector<std::string> ids;
  bool resampled = false;
  for (const auto& [id, p] : profiles) {
    if (p.stations() == env.stations()) {
      items.push_back({"user", p.ordinates(), kNaN, {}});
    } else {
      items.push_back({"user", geometry::resample(p, env.stations()).ordinates(), kNaN, {}});
      resampled = true;
    }
    ids.push_back(id);
  }
  parallel_for(items.size(), jobs, [&](std::size_t i) { items[i].report = envelope::verdict(env, items[i].ordinates, ids[i]); });
  json reports = json::array();
  for (const auto& it : items) reports.push_back(envelope::to_json(it.report));
  json j = {{"schema_version", io::kSchemaVersion},
            {"envelope", {{"file", envelope_path}, {"hash", io::hex64(io::hash_file(envelope_path))}}},
            {"profiles", {{"file", profiles_path}, {"hash", io::hex64(io::hash_file(profiles_path))}}},
            {"resampled", resampled},
            {"summary", set_summary(items, "user")},
            {"reports", reports}};
  write_json(out_path, j);
  return j["summary"];
}

json run_all(const Workspace& ws) {
  using Stage = json (*)(const Workspace&);
  const std::pair<const char*, Stage> stages[] = {
      {"doe", stage_doe},           {"evaluate", stage_evaluate}, {"fit", stage_fit},
      {"subspace", stage_subspace}, {"sample", stage_sample},     {"envelope", stage_envelope},
      {"gate", stage_gate},         {"report", stage_report},
  };
  json out = json::array();
  for (const auto& [name, fn] : stages) out.push_back({{"stage", name}, {"summary", fn(ws)}});
  return out;
}

}  // namespace bladeenv::pipeline
