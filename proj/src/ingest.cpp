#include "bladeenv/ingest.hpp"

#include "bladeenv/errors.hpp"
#include "bladeenv/io.hpp"
#include "bladeenv/random.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace bladeenv::ingest {

void FlowConditions::validate() const {
  const std::pair<const char*, double> fields[] = {{"p01", p01}, {"T01", T01}, {"p2", p2},
                                                   {"gamma", gamma}, {"rho", rho}, {"Re", Re}};
  for (const auto& [name, v] : fields) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DomainError(std::string("flow condition ") + name + " must be positive and finite");
    }
  }
  if (!(gamma > 1.0)) throw DomainError("flow condition gamma must exceed 1");
}

double loss_coefficient(double p01, double p02, double p2) {
  if (p02 == p2) throw DomainError("loss_coefficient: p02 equals p2 (division by zero)");
  return (p02 - p01) / (p02 - p2);
}

double mass_flow_function(double mdot, double T01, double p01) {
  if (!(mdot > 0.0) || !(T01 > 0.0) || !(p01 > 0.0)) {
    throw DomainError("mass_flow_function: mdot, T01 and p01 must be positive");
  }
  return mdot * std::sqrt(T01) / p01 * 1e4;
}

double isentropic_mach(double p01, double p, double gamma) {
  if (!(gamma > 1.0)) throw DomainError("isentropic_mach: gamma must exceed 1");
  if (!(p > 0.0)) throw DomainError("isentropic_mach: static pressure must be positive");
  if (p > p01) {
    throw DomainError("isentropic_mach: static pressure " + io::format_double(p) +
                      " exceeds stagnation pressure " + io::format_double(p01));
  }
  const double radicand = 2.0 / (gamma - 1.0) * (std::pow(p01 / p, (gamma - 1.0) / gamma) - 1.0);
  return std::sqrt(std::max(radicand, 0.0));
}

VectorXd mach_distribution(double p01, const VectorXd& pressures, double gamma) {
  VectorXd m(pressures.size());
  for (Eigen::Index i = 0; i < pressures.size(); ++i) m(i) = isentropic_mach(p01, pressures(i), gamma);
  return m;
}

MatrixXd doe_uniform(int d, int k, std::uint64_t seed) {
  if (d < 1) throw DomainError("doe_uniform: d must be at least 1");
  if (k < 1) throw DomainError("doe_uniform: K must be at least 1");
  MatrixXd x(k, d);
  for (int row = 0; row < k; ++row) {
    Rng rng(seed, static_cast<std::uint64_t>(row));
    for (int j = 0; j < d; ++j) x(row, j) = rng.uniform(-1.0, 1.0);
  }
  return x;
}

double QoiRecord::value(const std::string& name) const {
  for (const auto& [n, v] : values)
    if (n == name) return v;
  throw DomainError("qoi '" + name + "' not present in record");
}

VectorXd QoiTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return values.col(static_cast<Eigen::Index>(j));
  throw DomainError("qoi column '" + name + "' not present");
}

std::string format_header(const Header& header) {
  std::string out = "# bladeenv schema=" + std::to_string(io::kSchemaVersion);
  for (const auto& [k, v] : header) {
    if (k == "schema") continue;
    out += " " + k + "=" + v;
  }
  return out + "\n";
}

Header parse_header(const std::vector<std::string>& comments) {
  Header h;
  for (const auto& line : comments) {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
      const auto eq = tok.find('=');
      if (eq != std::string::npos) h[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
  }
  return h;
}

namespace {

void check_schema(const Header& h, const std::string& path) {
  const auto it = h.find("schema");
  if (it != h.end() && it->second != std::to_string(io::kSchemaVersion)) {
    throw DomainError("'" + path + "': unsupported schema version " + it->second);
  }
}

}  // namespace

void write_designs_csv(const std::string& path, const MatrixXd& designs, const Header& header) {
  std::ostringstream os;
  os << format_header(header);
  for (Eigen::Index j = 0; j < designs.cols(); ++j) os << (j ? "," : "") << 'x' << (j + 1);
  os << '\n';
  for (Eigen::Index i = 0; i < designs.rows(); ++i) {
    for (Eigen::Index j = 0; j < designs.cols(); ++j) os << (j ? "," : "") << io::format_double(designs(i, j));
    os << '\n';
  }
  io::write_text(path, os.str());
}

MatrixXd read_designs_csv(const std::string& path, Header* header) {
  const io::CsvTable t = io::read_csv(path);
  const Header h = parse_header(t.comments);
  check_schema(h, path);
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (t.header[j] != "x" + std::to_string(j + 1)) {
      throw DomainError("'" + path + "': expected design header x1..xd, found '" + t.header[j] + "'");
    }
  }
  MatrixXd x(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (std::size_t j = 0; j < t.header.size(); ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = io::parse_double(t.rows[i][j]);
  if (header) *header = h;
  return x;
}

void write_qoi_csv(const std::string& path, const QoiTable& table, const Header& header) {
  std::ostringstream os;
  os << format_header(header) << "design_id";
  for (const auto& n : table.names) os << ',' << n;
  os << '\n';
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    os << table.design_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < table.values.cols(); ++j) os << ',' << io::format_double(table.values(i, j));
    os << '\n';
  }
  io::write_text(path, os.str());
}

QoiTable read_qoi_csv(const std::string& path, Header* header) {
  const io::CsvTable t = io::read_csv(path);
  const Header h = parse_header(t.comments);
  check_schema(h, path);
  const std::size_t id_col = t.column("design_id");
  QoiTable out;
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (j == id_col) continue;
    for (const auto& n : out.names)
      if (n == t.header[j]) throw DomainError("'" + path + "': duplicate qoi name '" + n + "'");
    out.names.push_back(t.header[j]);
    cols.push_back(j);
  }
  out.values.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out.design_ids.push_back(io::parse_int(t.rows[i][id_col]));
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const double v = io::parse_double(t.rows[i][cols[c]]);
      if (!std::isfinite(v)) throw DomainError("'" + path + "': non-finite qoi value");
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v;
    }
  }
  if (header) *header = h;
  return out;
}

void write_pressure_csv(const std::string& path, const std::vector<long long>& design_ids,
                        const std::vector<VectorXd>& pressures, const Header& header) {
  if (design_ids.size() != pressures.size()) throw DomainError("write_pressure_csv: size mismatch");
  std::ostringstream os;
  os << format_header(header) << "design_id,s_index,p\n";
  for (std::size_t k = 0; k < design_ids.size(); ++k)
    for (Eigen::Index i = 0; i < pressures[k].size(); ++i)
      os << design_ids[k] << ',' << i << ',' << io::format_double(pressures[k](i)) << '\n';
  io::write_text(path, os.str());
}

std::map<long long, VectorXd> read_pressure_csv(const std::string& path) {
  const io::CsvTable t = io::read_csv(path);
  check_schema(parse_header(t.comments), path);
  const std::size_t c_id = t.column("design_id"), c_s = t.column("s_index"), c_p = t.column("p");
  std::map<long long, std::map<long long, double>> grouped;
  for (const auto& r : t.rows) grouped[io::parse_int(r[c_id])][io::parse_int(r[c_s])] = io::parse_double(r[c_p]);
  std::map<long long, VectorXd> out;
  for (const auto& [id, m] : grouped) {
    VectorXd v(static_cast<Eigen::Index>(m.size()));
    long long expect = 0;
    for (const auto& [s, p] : m) {
      if (s != expect) throw DomainError("'" + path + "': design " + std::to_string(id) + " has gaps in s_index");
      v(static_cast<Eigen::Index>(expect++)) = p;
    }
    out.emplace(id, std::move(v));
  }
  return out;
}

std::vector<QoiRecord> to_records(const MatrixXd& designs, const QoiTable& table) {
  std::vector<QoiRecord> out;
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    const long long id = table.design_ids[static_cast<std::size_t>(i)];
    if (id < 0 || id >= designs.rows()) {
      throw DomainError("qoi table references design_id " + std::to_string(id) + " not in the design matrix");
    }
    QoiRecord rec;
    rec.design = designs.row(id).transpose();
    for (std::size_t j = 0; j < table.names.size(); ++j)
      rec.values.emplace_back(table.names[j], table.values(i, static_cast<Eigen::Index>(j)));
    out.push_back(std::move(rec));
  }
  return out;
}

MatrixXd read_numeric_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    for (char& c : line)
      if (c == ',' || c == '\t' || c == ';' || c == '\r') c = ' ';
    std::istringstream ss(line);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) row.push_back(io::parse_double(tok));
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DomainError("'" + path + "': ragged numeric matrix at data row " + std::to_string(rows.size() + 1));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DomainError("'" + path + "': no numeric rows");
  MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

QoiTable derive_scalar_qois(const QoiTable& raw, const FlowConditions& flow) {
  flow.validate();
  QoiTable out = raw;
  auto has = [&](const std::string& n) {
    for (const auto& x : out.names)
      if (x == n) return true;
    return false;
  };
  auto append = [&](const std::string& name, const VectorXd& col) {
    out.names.push_back(name);
    out.values.conservativeResize(Eigen::NoChange, out.values.cols() + 1);
    out.values.col(out.values.cols() - 1) = col;
  };
  if (has("p02") && !has("Yp")) {
    const VectorXd p02 = raw.column("p02");
    VectorXd yp(p02.size());
    for (Eigen::Index i = 0; i < p02.size(); ++i) yp(i) = loss_coefficient(flow.p01, p02(i), flow.p2);
    append("Yp", yp);
  }
  if (has("mdot") && !has("fm")) {
    const VectorXd mdot = raw.column("mdot");
    VectorXd fm(mdot.size());
    for (Eigen::Index i = 0; i < mdot.size(); ++i) fm(i) = mass_flow_function(mdot(i), flow.T01, flow.p01);
    append("fm", fm);
  }
  return out;
}

}  // namespace bladeenv::ingest
