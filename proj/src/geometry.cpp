#include "bladeenv/geometry.hpp"

#include "bladeenv/errors.hpp"
#include "bladeenv/io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

namespace bladeenv::geometry {

std::string to_string(Side side) { return side == Side::kSuction ? "suction" : "pressure"; }

Side side_from_string(const std::string& s) {
  if (s == "suction") return Side::kSuction;
  if (s == "pressure") return Side::kPressure;
  throw DomainError("unknown profile side '" + s + "' (expected suction or pressure)");
}

namespace {

void check_side(const std::vector<double>& x, const std::vector<double>& y, Side side) {
  if (x.size() != y.size()) {
    throw DomainError(to_string(side) + " side: abscissa and ordinate counts differ");
  }
  if (x.empty()) throw DomainError(to_string(side) + " side has no points");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw DomainError(to_string(side) + " side: non-finite coordinate at point " + std::to_string(i));
    }
    if (i > 0 && !(x[i] > x[i - 1])) {
      throw DomainError(to_string(side) + " side: abscissae not strictly ascending at point " +
                        std::to_string(i));
    }
  }
}

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x, Side side) {
  const double lo = xs.front();
  const double hi = xs.back();
  if (x < lo || x > hi) {
    std::ostringstream msg;
    msg << "resample: abscissa " << io::format_double(x) << " outside the " << to_string(side)
        << " side span [" << io::format_double(lo) << ", " << io::format_double(hi) << "]";
    throw DomainError(msg.str());
  }
  const auto it = std::lower_bound(xs.begin(), xs.end(), x);
  const auto k = static_cast<std::size_t>(it - xs.begin());
  if (xs[k] == x) return ys[k];
  const double x0 = xs[k - 1], x1 = xs[k];
  const double y0 = ys[k - 1], y1 = ys[k];
  return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

}  // namespace

AirfoilProfile::AirfoilProfile(std::vector<double> suction_x, std::vector<double> suction_y,
                               std::vector<double> pressure_x, std::vector<double> pressure_y)
    : suction_x_(std::move(suction_x)),
      suction_y_(std::move(suction_y)),
      pressure_x_(std::move(pressure_x)),
      pressure_y_(std::move(pressure_y)) {
  check_side(suction_x_, suction_y_, Side::kSuction);
  check_side(pressure_x_, pressure_y_, Side::kPressure);
  if (size() < 3) throw DomainError("airfoil profile needs at least 3 points");
}

const std::vector<double>& AirfoilProfile::x(Side side) const {
  return side == Side::kSuction ? suction_x_ : pressure_x_;
}

const std::vector<double>& AirfoilProfile::y(Side side) const {
  return side == Side::kSuction ? suction_y_ : pressure_y_;
}

VectorXd AirfoilProfile::abscissae() const {
  VectorXd out(static_cast<Eigen::Index>(size()));
  std::size_t k = 0;
  for (double v : suction_x_) out(static_cast<Eigen::Index>(k++)) = v;
  for (double v : pressure_x_) out(static_cast<Eigen::Index>(k++)) = v;
  return out;
}

VectorXd AirfoilProfile::ordinates() const {
  VectorXd out(static_cast<Eigen::Index>(size()));
  std::size_t k = 0;
  for (double v : suction_y_) out(static_cast<Eigen::Index>(k++)) = v;
  for (double v : pressure_y_) out(static_cast<Eigen::Index>(k++)) = v;
  return out;
}

AirfoilProfile AirfoilProfile::with_ordinates(const VectorXd& ordinates) const {
  if (static_cast<std::size_t>(ordinates.size()) != size()) {
    throw DomainError("with_ordinates: expected " + std::to_string(size()) + " ordinates, got " +
                      std::to_string(ordinates.size()));
  }
  const std::size_t ns = suction_x_.size();
  std::vector<double> ys(ordinates.data(), ordinates.data() + ns);
  std::vector<double> yp(ordinates.data() + ns, ordinates.data() + ordinates.size());
  return AirfoilProfile(suction_x_, std::move(ys), pressure_x_, std::move(yp));
}

DesignVector::DesignVector(VectorXd x) : x_(std::move(x)) { check_in_hypercube(x_); }

void check_in_hypercube(const VectorXd& x, double tol) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x(i) >= -1.0 - tol && x(i) <= 1.0 + tol)) {
      throw DomainError("design component x" + std::to_string(i + 1) + " = " + io::format_double(x(i)) +
                        " outside [-1, 1]");
    }
  }
}

double bernstein(int degree, int i, double t) {
  if (i < 0 || i > degree) return 0.0;
  double binom = 1.0;
  for (int k = 1; k <= i; ++k) binom = binom * (degree - i + k) / k;
  return binom * std::pow(t, i) * std::pow(1.0 - t, degree - i);
}

FfdLattice FfdLattice::enclosing(const AirfoilProfile& baseline, int n_axial, int n_rows,
                                 double amplitude, double margin) {
  if (n_axial < 1 || n_rows < 1) throw DomainError("FFD lattice needs at least one node per direction");
  if (!(margin > 0.0)) throw DomainError("FFD lattice margin must be positive");
  const VectorXd xs = baseline.abscissae();
  const VectorXd ys = baseline.ordinates();
  FfdLattice lat;
  lat.n_axial = n_axial;
  lat.n_rows = n_rows;
  lat.amplitude = amplitude;
  lat.x_min = xs.minCoeff() - margin;
  lat.x_max = xs.maxCoeff() + margin;
  lat.y_min = ys.minCoeff() - margin;
  lat.y_max = ys.maxCoeff() + margin;
  return lat;
}

VectorXd FfdLattice::weights(double x, double y) const {
  const double s = (x - x_min) / (x_max - x_min);
  const double t = (y - y_min) / (y_max - y_min);
  VectorXd w(dimension());
  for (int j = 0; j < n_rows; ++j) {
    const double bt = bernstein(n_rows - 1, j, t);
    for (int i = 0; i < n_axial; ++i) w(j * n_axial + i) = bernstein(n_axial - 1, i, s) * bt;
  }
  return w;
}

MatrixXd FfdLattice::weight_matrix(const AirfoilProfile& profile) const {
  const VectorXd xs = profile.abscissae();
  const VectorXd ys = profile.ordinates();
  MatrixXd b(xs.size(), dimension());
  for (Eigen::Index k = 0; k < xs.size(); ++k) b.row(k) = weights(xs(k), ys(k)).transpose();
  return b;
}

bool FfdLattice::strictly_contains(const AirfoilProfile& profile) const {
  const VectorXd xs = profile.abscissae();
  const VectorXd ys = profile.ordinates();
  return xs.minCoeff() > x_min && xs.maxCoeff() < x_max && ys.minCoeff() > y_min && ys.maxCoeff() < y_max;
}

AirfoilProfile deform(const AirfoilProfile& baseline, const FfdLattice& lattice, const DesignVector& x) {
  return FfdDeformer(baseline, lattice).apply(x);
}

FfdDeformer::FfdDeformer(AirfoilProfile baseline, FfdLattice lattice)
    : baseline_(std::move(baseline)), lattice_(lattice) {
  if (!lattice_.strictly_contains(baseline_)) {
    throw DomainError("FFD lattice box does not strictly enclose the baseline profile");
  }
  weights_ = lattice_.weight_matrix(baseline_);
  base_ordinates_ = baseline_.ordinates();
}

VectorXd FfdDeformer::ordinates(const VectorXd& x) const {
  if (x.size() != lattice_.dimension()) {
    throw DomainError("deform: design vector has " + std::to_string(x.size()) +
                      " components, lattice has " + std::to_string(lattice_.dimension()) + " nodes");
  }
  check_in_hypercube(x);
  return base_ordinates_ + lattice_.amplitude * (weights_ * x);
}

AirfoilProfile FfdDeformer::apply(const DesignVector& x) const {
  return baseline_.with_ordinates(ordinates(x.values()));
}

AirfoilProfile resample(const AirfoilProfile& profile, const Stations& target) {
  auto side = [&](Side sd, const std::vector<double>& tx) {
    std::vector<double> out;
    out.reserve(tx.size());
    for (double x : tx) out.push_back(interpolate(profile.x(sd), profile.y(sd), x, sd));
    return out;
  };
  auto ys = side(Side::kSuction, target.suction);
  auto yp = side(Side::kPressure, target.pressure);
  return AirfoilProfile(target.suction, std::move(ys), target.pressure, std::move(yp));
}

VectorXd displacement(const AirfoilProfile& profile, const AirfoilProfile& baseline) {
  if (!(profile.stations() == baseline.stations())) {
    throw DomainError("displacement: profiles do not share abscissae; resample first");
  }
  return profile.ordinates() - baseline.ordinates();
}

AirfoilProfile synthetic_baseline(int n_per_side) {
  if (n_per_side < 2) throw DomainError("synthetic_baseline: need at least 2 points per side");
  std::vector<double> x(static_cast<std::size_t>(n_per_side));
  std::vector<double> ys(x.size()), yp(x.size());
  for (int k = 0; k < n_per_side; ++k) {
    const double xi = 0.5 * (1.0 - std::cos(std::numbers::pi * k / (n_per_side - 1)));
    const auto i = static_cast<std::size_t>(k);
    x[i] = xi;
    ys[i] = xi * (1.0 - xi) * (0.55 - 0.25 * xi);
    yp[i] = xi * (1.0 - xi) * (0.25 - 0.20 * xi);
  }
  return AirfoilProfile(x, ys, x, yp);
}

namespace {

AirfoilProfile profile_from_rows(const std::vector<const std::vector<std::string>*>& rows,
                                 std::size_t side_col, std::size_t x_col, std::size_t y_col,
                                 const std::string& where) {
  std::vector<double> sx, sy, px, py;
  for (const auto* row : rows) {
    const Side side = side_from_string((*row)[side_col]);
    const double x = io::parse_double((*row)[x_col]);
    const double y = io::parse_double((*row)[y_col]);
    if (side == Side::kSuction) {
      sx.push_back(x);
      sy.push_back(y);
    } else {
      px.push_back(x);
      py.push_back(y);
    }
  }
  try {
    return AirfoilProfile(std::move(sx), std::move(sy), std::move(px), std::move(py));
  } catch (const DomainError& e) {
    throw DomainError(where + ": " + e.what());
  }
}

}  // namespace

AirfoilProfile read_profile_csv(const std::string& path) {
  const io::CsvTable t = io::read_csv(path);
  std::vector<const std::vector<std::string>*> rows;
  for (const auto& r : t.rows) rows.push_back(&r);
  return profile_from_rows(rows, t.column("side"), t.column("x"), t.column("y"), path);
}

std::vector<std::pair<std::string, AirfoilProfile>> read_profiles_csv(const std::string& path) {
  const io::CsvTable t = io::read_csv(path);
  if (!t.has_column("profile_id")) return {{"0", read_profile_csv(path)}};
  const std::size_t id_col = t.column("profile_id");
  std::vector<std::string> order;
  std::vector<std::vector<const std::vector<std::string>*>> groups;
  for (const auto& r : t.rows) {
    const std::string& id = r[id_col];
    auto it = std::find(order.begin(), order.end(), id);
    if (it == order.end()) {
      order.push_back(id);
      groups.emplace_back();
      groups.back().push_back(&r);
    } else {
      groups[static_cast<std::size_t>(it - order.begin())].push_back(&r);
    }
  }
  std::vector<std::pair<std::string, AirfoilProfile>> out;
  for (std::size_t g = 0; g < order.size(); ++g) {
    out.emplace_back(order[g], profile_from_rows(groups[g], t.column("side"), t.column("x"), t.column("y"),
                                                 path + " profile " + order[g]));
  }
  return out;
}

namespace {

void write_points(std::ostream& os, const std::string& prefix, const AirfoilProfile& p) {
  for (Side sd : {Side::kSuction, Side::kPressure}) {
    const auto& xs = p.x(sd);
    const auto& ys = p.y(sd);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      os << prefix << to_string(sd) << ',' << io::format_double(xs[i]) << ',' << io::format_double(ys[i])
         << '\n';
    }
  }
}

}  // namespace

void write_profile_csv(const std::string& path, const AirfoilProfile& profile, const std::string& comment) {
  std::ostringstream os;
  if (!comment.empty()) os << "# " << comment << '\n';
  os << "side,x,y\n";
  write_points(os, "", profile);
  io::write_text(path, os.str());
}

void write_profiles_csv(std::ostream& os, const std::vector<std::pair<std::string, AirfoilProfile>>& profiles) {
  os << "profile_id,side,x,y\n";
  for (const auto& [id, p] : profiles) write_points(os, id + ",", p);
}

}  // namespace bladeenv::geometry
