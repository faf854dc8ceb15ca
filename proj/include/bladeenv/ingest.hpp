#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bladeenv::ingest {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Inlet/exit flow conditions. Defaults are the LS89 operating point.
struct FlowConditions {
  double p01 = 1.1e6;      ///< inlet stagnation pressure, Pa
  double T01 = 592.295;    ///< inlet stagnation temperature, K
  double p2 = 5.23e5;      ///< exit static pressure, Pa
  double gamma = 1.4;
  double rho = 1.2866;     ///< inlet density, kg/m^3
  double Re = 6.0e5;

  /// Throws DomainError unless every field is positive and gamma > 1.
  void validate() const;
};

/// Stagnation pressure loss coefficient (p02 - p01) / (p02 - p2). Negative
/// whenever p02 < p01; no absolute value is taken.
double loss_coefficient(double p01, double p02, double p2);

/// Exit mass flow function mdot * sqrt(T01) / p01 * 1e4.
double mass_flow_function(double mdot, double T01, double p01);

/// Isentropic Mach number from local static pressure p <= p01.
double isentropic_mach(double p01, double p, double gamma);

/// Pointwise isentropic Mach over a surface pressure distribution.
VectorXd mach_distribution(double p01, const VectorXd& pressures, double gamma);

/// K designs i.i.d. uniform on [-1, 1]^d (rows). Design k draws from
/// substream k of the seeded generator, so any row can be regenerated alone.
MatrixXd doe_uniform(int d, int k, std::uint64_t seed);

/// One row of the input-output database.
struct QoiRecord {
  VectorXd design;
  std::vector<std::pair<std::string, double>> values;
  std::optional<VectorXd> surface_pressure;

  double value(const std::string& name) const;
};

/// Qoi table `design_id,<name1>,<name2>,...` in memory.
struct QoiTable {
  std::vector<std::string> names;
  std::vector<long long> design_ids;
  MatrixXd values;  ///< rows = designs, columns = names

  VectorXd column(const std::string& name) const;
};

/// Key/value metadata carried in the first-line comment of every file.
using Header = std::map<std::string, std::string>;

std::string format_header(const Header& header);
Header parse_header(const std::vector<std::string>& comments);

void write_designs_csv(const std::string& path, const MatrixXd& designs, const Header& header);
MatrixXd read_designs_csv(const std::string& path, Header* header = nullptr);

void write_qoi_csv(const std::string& path, const QoiTable& table, const Header& header);
QoiTable read_qoi_csv(const std::string& path, Header* header = nullptr);

/// Long-format surface pressures `design_id,s_index,p`.
void write_pressure_csv(const std::string& path, const std::vector<long long>& design_ids,
                        const std::vector<VectorXd>& pressures, const Header& header);
std::map<long long, VectorXd> read_pressure_csv(const std::string& path);

std::vector<QoiRecord> to_records(const MatrixXd& designs, const QoiTable& table);

/// Adapter for plain numeric text: one row per line, values separated by
/// commas or whitespace, optional `#` comments, no header. Used to ingest
/// design/output matrices exported from external DoE campaigns.
MatrixXd read_numeric_matrix(const std::string& path);

/// Fills Yp and fm from raw `p02` and `mdot` columns when they are present.
QoiTable derive_scalar_qois(const QoiTable& raw, const FlowConditions& flow);

}  // namespace bladeenv::ingest
