#include "bladeenv/envelope.hpp"
#include "bladeenv/errors.hpp"
#include "bladeenv/ingest.hpp"
#include "bladeenv/io.hpp"
#include "bladeenv/pipeline/stages.hpp"
#include "bladeenv/pipeline/svg.hpp"
#include "bladeenv/subspace.hpp"
#include "bladeenv/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <sstream>

namespace bladeenv::pipeline {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

std::string num(double v) { return std::isfinite(v) ? io::format_double(v) : std::string(); }

double parse_or_nan(const std::string& s) { return s.empty() ? std::nan("") : io::parse_double(s); }

class ReportWriter {
public:
  ReportWriter(const Workspace& ws, const Provenance& prov) : ws_(ws), prov_(prov) {
    dir_ = std::filesystem::path(ws.dir()) / files::kReportDir;
    std::filesystem::create_directories(dir_);
  }

  void csv(const std::string& name, const std::string& header, const std::vector<std::string>& rows) {
    std::ostringstream os;
    os << ingest::format_header(ws_.csv_header(prov_)) << header << '\n';
    for (const auto& r : rows) os << r << '\n';
    io::write_text((dir_ / (name + ".csv")).string(), os.str());
    written_.push_back(name + ".csv");
  }

  void svg(const std::string& name, const std::string& doc) {
    std::string h = ingest::format_header(ws_.csv_header(prov_));
    h = "<!-- " + h.substr(2, h.size() - 3) + " -->\n";
    io::write_text((dir_ / (name + ".svg")).string(), h + doc);
    written_.push_back(name + ".svg");
  }

  const std::vector<std::string>& written() const { return written_; }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

private:
  const Workspace& ws_;
  const Provenance& prov_;
  std::filesystem::path dir_;
  std::vector<std::string> written_;
};

/// Columns of a headered artifact CSV by name.
std::vector<std::vector<std::string>> columns(const io::CsvTable& t, const std::vector<std::string>& names) {
  std::vector<std::vector<std::string>> out;
  for (const auto& n : names) {
    const auto c = t.column(n);
    std::vector<std::string> col;
    col.reserve(t.rows.size());
    for (const auto& r : t.rows) col.push_back(c < r.size() ? r[c] : std::string());
    out.push_back(std::move(col));
  }
  return out;
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return std::nan("");
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double a : v) ss += (a - m) * (a - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string index_label(const std::vector<int>& idx) {
  std::string s;
  for (std::size_t j = 0; j < idx.size(); ++j)
    if (idx[j] > 0) s += (s.empty() ? "" : " ") + std::string("x") + std::to_string(j + 1) + "^" + std::to_string(idx[j]);
  return s.empty() ? "1" : s;
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json stage_report(const Workspace& ws) {
  const auto& c = ws.config();
  ws.require("doe", files::kDesigns);
  ws.require("evaluate", files::kQoi);
  ws.require("fit", files::kSurrogate);
  ws.require("fit", files::kValidation);
  ws.require("subspace", files::kPartition);
  ws.require("sample", files::kInvariance);
  ws.require("envelope", files::kEnvelope);
  ws.require("envelope", files::kConvergence);
  ws.require("gate", files::kVerdicts);
  ws.require("gate", files::kGateScores);
  const auto prov = ws.provenance("report", {files::kDesigns, files::kQoi, files::kSurrogate, files::kValidation,
                                             files::kPartition, files::kInvariance, files::kEnvelope,
                                             files::kConvergence, files::kVerdicts, files::kGateScores});
  ReportWriter out(ws, prov);
  json summary;

  // Eigenvalue decay.
  const json pj = read_json(ws.path(files::kPartition));
  const auto part = subspace::partition_from_json(pj);
  {
    std::vector<std::string> rows;
    svg::Series s{"eigenvalue", {}, {}, svg::Style::kLine};
    svg::Series pts{"", {}, {}, svg::Style::kPoints};
    for (Eigen::Index k = 0; k < part.eigenvalues.size(); ++k) {
      rows.push_back(std::to_string(k + 1) + "," + num(part.eigenvalues(k)));
      s.x.push_back(static_cast<double>(k + 1));
      s.y.push_back(part.eigenvalues(k));
    }
    pts.x = s.x;
    pts.y = s.y;
    out.csv("eigenvalues", "index,eigenvalue", rows);
    out.svg("eigenvalues", svg::render({"Gradient covariance eigenvalues", "index", "eigenvalue", true, {s, pts}, {}}));
    summary["subspace"] = {{"r", part.r}, {"eigenvalues", std::vector<double>(part.eigenvalues.data(), part.eigenvalues.data() + part.eigenvalues.size())}};
    if (part.r > 0 && part.r < part.eigenvalues.size() && part.eigenvalues(part.r) > 0.0) {
      summary["subspace"]["gap_ratio"] = part.eigenvalues(part.r - 1) / part.eigenvalues(part.r);
    }
    if (pj.contains("oracle_check")) summary["subspace"]["oracle_check"] = pj["oracle_check"];
  }

  // Sorted coefficient magnitudes.
  const json sj = read_json(ws.path(files::kSurrogate));
  const auto sur = surrogate::surrogate_from_json(sj);
  {
    const VectorXd& a = sur.coefficients();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(a.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return std::abs(a(i)) > std::abs(a(j)); });
    std::vector<std::string> rows;
    svg::Series s{"|a_i|", {}, {}, svg::Style::kPoints};
    long long nnz = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto i = order[k];
      if (a(i) != 0.0) ++nnz;
      rows.push_back(std::to_string(k + 1) + "," + std::to_string(i) + "," + index_label(sur.basis().indices[static_cast<std::size_t>(i)]) +
                     "," + num(a(i)));
      s.x.push_back(static_cast<double>(k + 1));
      s.y.push_back(std::abs(a(i)));
    }
    out.csv("coefficients", "rank,term,monomial,coefficient", rows);
    out.svg("coefficients", svg::render({"Sorted surrogate coefficients", "rank", "|coefficient|", true, {s}, {}}));
    summary["surrogate"] = {{"kind", c.surrogate.kind},        {"p", c.surrogate.p},
                            {"terms", a.size()},                {"nonzero", nnz},
                            {"epsilon", sur.epsilon()},         {"validation", sj.value("validation", json::object())},
                            {"converged", sur.diagnostics().converged}};
  }

  // Held-out validation.
  {
    const auto t = io::read_csv(ws.path(files::kValidation));
    const auto cols = columns(t, {"design_id", "split", "actual", "predicted"});
    svg::Series train{"train", {}, {}, svg::Style::kPoints}, test{"test", {}, {}, svg::Style::kPoints};
    std::vector<std::string> rows;
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const double y = io::parse_double(cols[2][i]), p = io::parse_double(cols[3][i]);
      (cols[1][i] == "test" ? test : train).x.push_back(y);
      (cols[1][i] == "test" ? test : train).y.push_back(p);
      lo = std::min(lo, y);
      hi = std::max(hi, y);
      rows.push_back(cols[0][i] + "," + cols[1][i] + "," + cols[2][i] + "," + cols[3][i]);
    }
    out.csv("validation", "design_id,split,actual,predicted", rows);
    svg::Series diag{"y = x", {lo, hi}, {lo, hi}, svg::Style::kLine};
    out.svg("validation", svg::render({"Surrogate validation", "actual " + c.qoi.name, "predicted " + c.qoi.name, false,
                                       {train, test, diag}, {}}));
  }

  // Sufficient summary: qoi against the leading active coordinate.
  if (part.r > 0) {
    const MatrixXd x = ingest::read_designs_csv(ws.path(files::kDesigns));
    const VectorXd q = ingest::read_qoi_csv(ws.path(files::kQoi)).column(c.qoi.name);
    const VectorXd u = x * part.W.col(0);
    std::vector<std::string> rows;
    svg::Series s{c.qoi.name, {}, {}, svg::Style::kPoints};
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      rows.push_back(std::to_string(i) + "," + num(u(i)) + "," + num(q(i)));
      s.x.push_back(u(i));
      s.y.push_back(q(i));
    }
    out.csv("sufficient_summary", "design_id,u1," + c.qoi.name, rows);
    out.svg("sufficient_summary", svg::render({"Sufficient summary", "u1 = w1^T x", c.qoi.name, false, {s}, {}}));
  }

  // Invariance: qoi over inactive samples against random designs.
  {
    const auto t = io::read_csv(ws.path(files::kInvariance));
    const auto cols = columns(t, {"set", "index", "surrogate", "oracle"});
    const bool has_oracle = !t.rows.empty() && !cols[3][0].empty();
    svg::Series inactive{"inactive samples", {}, {}, svg::Style::kPoints}, random{"random designs", {}, {}, svg::Style::kPoints};
    std::vector<double> vi, vr, si, sr;
    std::vector<std::string> rows;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const double v = parse_or_nan(has_oracle ? cols[3][i] : cols[2][i]);
      const bool in = cols[0][i] == "inactive";
      (in ? inactive : random).x.push_back(io::parse_double(cols[1][i]));
      (in ? inactive : random).y.push_back(v);
      (in ? vi : vr).push_back(v);
      (in ? si : sr).push_back(parse_or_nan(cols[2][i]));
      rows.push_back(cols[0][i] + "," + cols[1][i] + "," + cols[2][i] + "," + cols[3][i]);
    }
    out.csv("invariance", "set,index,surrogate,oracle", rows);
    out.svg("invariance", svg::render({"Qoi over inactive and random designs", "sample",
                                       c.qoi.name + (has_oracle ? " (oracle)" : " (surrogate)"), false,
                                       {random, inactive}, {}}));
    const double ratio = sample_sd(vi) / sample_sd(vr);
    summary["invariance"] = {{"values", has_oracle ? "oracle" : "surrogate"},
                             {"n", vi.size()},
                             {"std_inactive", nullable(sample_sd(vi))},
                             {"std_random", nullable(sample_sd(vr))},
                             {"std_ratio", nullable(ratio)},
                             {"surrogate_std_ratio", nullable(sample_sd(si) / sample_sd(sr))}};
  }

  // Envelope bands, covariance heatmap, convergence.
  const json ej = read_json(ws.path(files::kEnvelope));
  const auto env = envelope::envelope_from_json(ej);
  {
    const auto base = make_deformer(c).baseline();
    if (!(base.stations() == env.stations())) throw ArtifactError("envelope", "envelope stations differ from the design space");
    const VectorXd b = base.ordinates();
    const VectorXd sd = env.covariance().matrix().diagonal().cwiseMax(0.0).cwiseSqrt();
    const VectorXd xs = base.abscissae();
    std::vector<std::string> rows;
    const auto ns = static_cast<Eigen::Index>(base.suction_size());
    for (const bool suction : {true, false}) {
      svg::Series mu{"mean", {}, {}, svg::Style::kLine}, lo{"c_l", {}, {}, svg::Style::kLine},
          hi{"c_u", {}, {}, svg::Style::kLine}, m2{"mean - 2 sd", {}, {}, svg::Style::kLine},
          p2{"mean + 2 sd", {}, {}, svg::Style::kLine};
      const Eigen::Index begin = suction ? 0 : ns, end = suction ? ns : b.size();
      for (Eigen::Index i = begin; i < end; ++i) {
        const double x = xs(i);
        mu.x.push_back(x), mu.y.push_back(env.mu()(i) - b(i));
        lo.x.push_back(x), lo.y.push_back(env.lower()(i) - b(i));
        hi.x.push_back(x), hi.y.push_back(env.upper()(i) - b(i));
        m2.x.push_back(x), m2.y.push_back(env.mu()(i) - 2 * sd(i) - b(i));
        p2.x.push_back(x), p2.y.push_back(env.mu()(i) + 2 * sd(i) - b(i));
        rows.push_back(std::string(suction ? "suction," : "pressure,") + num(x) + "," + num(b(i)) + "," +
                       num(env.mu()(i)) + "," + num(env.lower()(i)) + "," + num(env.upper()(i)) + "," + num(sd(i)));
      }
      const std::string side = suction ? "suction" : "pressure";
      out.svg("envelope_" + side, svg::render({"Blade envelope, " + side + " side", "x / axial chord",
                                               "displacement from baseline", false, {mu, lo, hi, m2, p2}, {}}));
    }
    out.csv("envelope", "side,x,baseline,mean,c_l,c_u,sd", rows);

    const MatrixXd& s = env.covariance().matrix();
    std::vector<std::string> srows;
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      std::string r = std::to_string(i);
      for (Eigen::Index j = 0; j < s.cols(); ++j) r += "," + num(s(i, j));
      srows.push_back(r);
    }
    std::string sh = "row";
    for (Eigen::Index j = 0; j < s.cols(); ++j) sh += ",c" + std::to_string(j);
    out.csv("covariance", sh, srows);
    out.svg("covariance", svg::heatmap(s, "Tolerance covariance S"));

    const auto t = io::read_csv(ws.path(files::kConvergence));
    const auto cols = columns(t, {"count", "mu_norm", "s_norm"});
    svg::Series mun{"||mu|| / final", {}, {}, svg::Style::kLine}, sn{"||S||_F / final", {}, {}, svg::Style::kLine};
    std::vector<std::string> crows;
    if (!t.rows.empty()) {
      const double mf = io::parse_double(cols[1].back()), sf = io::parse_double(cols[2].back());
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double n = io::parse_double(cols[0][i]);
        const double mr = io::parse_double(cols[1][i]) / mf, sr = io::parse_double(cols[2][i]) / sf;
        mun.x.push_back(n), mun.y.push_back(mr);
        sn.x.push_back(n), sn.y.push_back(sr);
        crows.push_back(cols[0][i] + "," + num(mr) + "," + num(sr));
      }
    }
    out.csv("convergence", "count,mu_norm_relative,s_norm_relative", crows);
    out.svg("convergence", svg::render({"Envelope statistics convergence", "samples", "relative to final", false, {mun, sn}, {}}));
    const auto& pv = ej.at("provenance");
    summary["envelope"] = {{"H", env.samples()},
                           {"rank", env.rank()},
                           {"buffer", {env.buffer().zeta_lo, env.buffer().zeta_hi}},
                           {"buffer_source", pv.value("buffer_source", "")},
                           {"gate", {env.gate().beta1, env.gate().beta2, env.gate().beta3}},
                           {"calibration", pv.value("calibration", json::object())},
                           {"drift", pv.value("drift", json::object())}};
  }

  // Gate: zeta against qoi deviation, gate curve, cross-parameterization check.
  {
    const auto t = io::read_csv(ws.path(files::kGateScores));
    const auto cols = columns(t, {"set", "id", "zeta", "score", "in_zone", "verdict", "qoi", "qoi_deviation"});
    std::map<std::string, svg::Series> by_set;
    std::vector<std::string> order;
    std::vector<std::string> rows;
    double zmax = 0.0;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& set = cols[0][i];
      if (!by_set.count(set)) {
        by_set[set] = {set, {}, {}, svg::Style::kPoints};
        order.push_back(set);
      }
      const double z = io::parse_double(cols[2][i]);
      if (std::isfinite(z)) zmax = std::max(zmax, z);
      by_set[set].x.push_back(z);
      by_set[set].y.push_back(parse_or_nan(cols[7][i]));
      rows.push_back(cols[0][i] + "," + cols[1][i] + "," + cols[2][i] + "," + cols[3][i] + "," + cols[4][i] + "," +
                     cols[5][i] + "," + cols[6][i] + "," + cols[7][i]);
    }
    std::vector<svg::Series> zs;
    for (const auto& s : order) zs.push_back(by_set[s]);
    const std::vector<double> marks{env.buffer().zeta_lo, env.buffer().zeta_hi};
    out.csv("zeta_qoi", "set,id,zeta,score,in_zone,verdict,qoi,qoi_deviation", rows);
    out.svg("zeta_qoi", svg::render({"Mahalanobis distance against qoi deviation", "zeta", "|q - q_ref|", false, zs, marks}));

    if (by_set.count("cross")) {
      const auto& s = by_set["cross"];
      svg::Series in{"in zone", {}, {}, svg::Style::kPoints}, outz{"outside zone", {}, {}, svg::Style::kPoints};
      std::size_t k = 0;
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        if (cols[0][i] != "cross") continue;
        (cols[4][i] == "1" ? in : outz).x.push_back(s.x[k]);
        (cols[4][i] == "1" ? in : outz).y.push_back(s.y[k]);
        ++k;
      }
      out.svg("cross_check", svg::render({"Cross-parameterization check", "zeta", "|q - q_ref|", false, {outz, in}, marks}));
    }

    const double top = std::max(zmax, env.buffer().zeta_hi) * 1.1;
    svg::Series curve{"score", {}, {}, svg::Style::kLine};
    std::vector<std::string> grows;
    for (int k = 0; k <= 400; ++k) {
      const double z = top * k / 400.0;
      const double sc = envelope::gate_score(env.gate(), z);
      curve.x.push_back(z);
      curve.y.push_back(sc);
      grows.push_back(num(z) + "," + num(sc));
    }
    std::vector<svg::Series> gs{curve};
    for (const auto& s : order) {
      svg::Series pts{s, by_set[s].x, {}, svg::Style::kPoints};
      for (double z : pts.x) pts.y.push_back(envelope::gate_score(env.gate(), z));
      gs.push_back(pts);
    }
    out.csv("gate_curve", "zeta,score", grows);
    out.svg("gate_curve", svg::render({"Logistic gate", "zeta", "score", false, gs, marks}));

    const json vj = read_json(ws.path(files::kVerdicts));
    summary["gate"] = {{"sets", vj.value("sets", json::object())},
                       {"rank_correlation", vj.value("rank_correlation", json::object())}};
  }

  summary["schema_version"] = io::kSchemaVersion;
  summary["provenance"] = ws.json_provenance(prov);
  summary["files"] = out.written();
  write_json(out.path("summary.json"), summary);
  ws.write_resolved_config();
  return {{"directory", (std::filesystem::path(ws.dir()) / files::kReportDir).string()}, {"files", out.written().size() + 1}};
}

}  // namespace bladeenv::pipeline
