#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <utility>
#include <string>
#include <vector>

namespace bladeenv::geometry {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Side { kSuction, kPressure };

std::string to_string(Side side);
Side side_from_string(const std::string& s);

/// Chordwise stations of one profile: abscissae per side, strictly ascending.
struct Stations {
  std::vector<double> suction;
  std::vector<double> pressure;

  std::size_t size() const { return suction.size() + pressure.size(); }
  bool operator==(const Stations&) const = default;
};

/// Airfoil profile in axial-chord units. Points are ordered suction side
/// LE->TE followed by pressure side LE->TE; that concatenation defines the
/// length-N ordinate vector used for envelope statistics.
class AirfoilProfile {
public:
  AirfoilProfile(std::vector<double> suction_x, std::vector<double> suction_y,
                 std::vector<double> pressure_x, std::vector<double> pressure_y);

  std::size_t size() const { return suction_x_.size() + pressure_x_.size(); }
  std::size_t suction_size() const { return suction_x_.size(); }

  const std::vector<double>& x(Side side) const;
  const std::vector<double>& y(Side side) const;
  Side side_of(std::size_t i) const { return i < suction_x_.size() ? Side::kSuction : Side::kPressure; }

  Stations stations() const { return {suction_x_, pressure_x_}; }
  VectorXd abscissae() const;
  VectorXd ordinates() const;
  /// Same stations, new ordinates (concatenated layout).
  AirfoilProfile with_ordinates(const VectorXd& ordinates) const;

  bool operator==(const AirfoilProfile&) const = default;

private:
  std::vector<double> suction_x_, suction_y_, pressure_x_, pressure_y_;
};

/// Slack allowed on the hypercube bounds for points produced by floating-point
/// sampling (hit-and-run chords end exactly on the faces).
inline constexpr double kHypercubeTolerance = 1e-9;

/// Design vector in the scaled hypercube [-1, 1]^d.
class DesignVector {
public:
  explicit DesignVector(VectorXd x);
  const VectorXd& values() const noexcept { return x_; }
  Eigen::Index size() const noexcept { return x_.size(); }
  double operator[](Eigen::Index i) const { return x_(i); }

private:
  VectorXd x_;
};

/// Throws DomainError naming the first component outside [-1 - tol, 1 + tol].
void check_in_hypercube(const VectorXd& x, double tol = kHypercubeTolerance);

/// Free-form deformation lattice of n_axial x n_rows control nodes over a box
/// enclosing the profile. Nodes move pitchwise only; the displacement of a
/// point with local box coordinates (s, t) is
///   amplitude * sum_{i,j} B_i^{n_axial-1}(s) B_j^{n_rows-1}(t) x_{j*n_axial+i}.
struct FfdLattice {
  int n_axial = 10;
  int n_rows = 2;
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  double amplitude = 0.015;

  int dimension() const { return n_axial * n_rows; }

  /// Box with `margin` (axial chords) around the profile's bounding box.
  static FfdLattice enclosing(const AirfoilProfile& baseline, int n_axial, int n_rows = 2,
                              double amplitude = 0.015, double margin = 0.05);

  /// Bernstein weights of every node at (x, y); length d.
  VectorXd weights(double x, double y) const;
  /// N x d matrix of node weights at the profile's points.
  MatrixXd weight_matrix(const AirfoilProfile& profile) const;
  bool strictly_contains(const AirfoilProfile& profile) const;
};

double bernstein(int degree, int i, double t);

/// Pitchwise FFD of `baseline` driven by design vector x.
AirfoilProfile deform(const AirfoilProfile& baseline, const FfdLattice& lattice, const DesignVector& x);

/// Deformation operator with the weight matrix of a fixed baseline cached;
/// apply(x) equals deform(baseline, lattice, x).
class FfdDeformer {
public:
  FfdDeformer(AirfoilProfile baseline, FfdLattice lattice);
  AirfoilProfile apply(const DesignVector& x) const;
  /// Ordinate vector of the deformed profile.
  VectorXd ordinates(const VectorXd& x) const;
  const AirfoilProfile& baseline() const { return baseline_; }
  const FfdLattice& lattice() const { return lattice_; }
  const MatrixXd& weight_matrix() const { return weights_; }

private:
  AirfoilProfile baseline_;
  FfdLattice lattice_;
  MatrixXd weights_;
  VectorXd base_ordinates_;
};

/// Piecewise-linear interpolation per side onto `target` stations.
AirfoilProfile resample(const AirfoilProfile& profile, const Stations& target);

/// Elementwise ordinate difference profile - baseline; requires identical stations.
VectorXd displacement(const AirfoilProfile& profile, const AirfoilProfile& baseline);

/// Synthetic cambered profile made of two cubic arcs on cosine-spaced stations
/// (n_per_side points per side; default N = 240).
AirfoilProfile synthetic_baseline(int n_per_side = 120);

// CSV: header `side,x,y`; multi-profile files add a leading `profile_id` column.
AirfoilProfile read_profile_csv(const std::string& path);
void write_profile_csv(const std::string& path, const AirfoilProfile& profile,
                       const std::string& comment = "");
std::vector<std::pair<std::string, AirfoilProfile>> read_profiles_csv(const std::string& path);
void write_profiles_csv(std::ostream& os, const std::vector<std::pair<std::string, AirfoilProfile>>& profiles);

}  // namespace bladeenv::geometry
