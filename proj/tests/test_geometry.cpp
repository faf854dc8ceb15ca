#include "doctest.h"

#include "bladeenv/errors.hpp"
#include "bladeenv/geometry.hpp"
#include "bladeenv/random.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace bladeenv;
using namespace bladeenv::geometry;

namespace {

VectorXd random_design(int d, std::uint64_t seed) {
  Rng rng(seed);
  VectorXd x(d);
  for (int j = 0; j < d; ++j) x(j) = rng.uniform(-1.0, 1.0);
  return x;
}

}  // namespace

TEST_CASE("profile validation") {
  CHECK_THROWS_AS(AirfoilProfile({0, 1}, {0, 0}, {}, {}), DomainError);
  CHECK_THROWS_AS(AirfoilProfile({0, 0.5, 0.4}, {0, 0, 0}, {0, 1}, {0, 0}), DomainError);
  CHECK_THROWS_AS(AirfoilProfile({0, 0.5}, {0, NAN}, {0, 1}, {0, 0}), DomainError);
  const AirfoilProfile p({0, 0.5, 1}, {0, 0.1, 0}, {0, 1}, {0, 0});
  CHECK(p.size() == 5);
  CHECK(p.side_of(2) == Side::kSuction);
  CHECK(p.side_of(3) == Side::kPressure);
  CHECK(p.ordinates()(1) == 0.1);
}

TEST_CASE("synthetic baseline has 240 points and positive thickness") {
  const auto b = synthetic_baseline();
  CHECK(b.size() == 240);
  const auto& ys = b.y(Side::kSuction);
  const auto& yp = b.y(Side::kPressure);
  for (std::size_t i = 1; i + 1 < ys.size(); ++i) CHECK(ys[i] > yp[i]);
}

TEST_CASE("hypercube checks name the component") {
  VectorXd x = VectorXd::Zero(3);
  x(1) = 1.5;
  try {
    check_in_hypercube(x);
    FAIL("expected throw");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("x2") != std::string::npos);
  }
  x(1) = 1.0 + 1e-12;
  CHECK_NOTHROW(check_in_hypercube(x));
  CHECK_THROWS_AS(DesignVector(VectorXd::Constant(2, -1.1)), DomainError);
}

TEST_CASE("bernstein partition of unity") {
  for (int n : {1, 3, 9, 14})
    for (double t : {0.0, 0.3, 0.77, 1.0}) {
      double sum = 0;
      for (int i = 0; i <= n; ++i) sum += bernstein(n, i, t);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("deform at zero is the baseline exactly") {
  const auto b = synthetic_baseline();
  const auto lat = FfdLattice::enclosing(b, 10);
  CHECK(lat.strictly_contains(b));
  CHECK(deform(b, lat, DesignVector(VectorXd::Zero(20))) == b);
}

TEST_CASE("deform is linear in the design vector") {
  const auto b = synthetic_baseline(60);
  const auto lat = FfdLattice::enclosing(b, 10);
  const FfdDeformer def(b, lat);
  const VectorXd x = random_design(20, 1), y = random_design(20, 2);
  const VectorXd dx = displacement(def.apply(DesignVector(x)), b);
  const VectorXd dy = displacement(def.apply(DesignVector(y)), b);
  const VectorXd dxy = displacement(def.apply(DesignVector(0.3 * x - 0.6 * y)), b);
  CHECK((dxy - (0.3 * dx - 0.6 * dy)).cwiseAbs().maxCoeff() <= 1e-12);
  const VectorXd dneg = displacement(def.apply(DesignVector(-x)), b);
  CHECK((dneg + dx).cwiseAbs().maxCoeff() <= 1e-15);
  const VectorXd node_shift = def.weight_matrix() * (lat.amplitude * x);
  CHECK(def.weight_matrix() * (lat.amplitude * -x) == -node_shift);
  CHECK((dx - def.weight_matrix() * (lat.amplitude * x)).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(def.apply(DesignVector(x)).stations() == b.stations());
}

TEST_CASE("single node displacement equals its weight times amplitude") {
  const auto b = synthetic_baseline(40);
  const auto lat = FfdLattice::enclosing(b, 10);
  VectorXd x = VectorXd::Zero(20);
  x(13) = 1.0;
  const VectorXd d = displacement(deform(b, lat, DesignVector(x)), b);
  const VectorXd xs = b.abscissae(), ys = b.ordinates();
  for (Eigen::Index i = 0; i < d.size(); i += 7) {
    CHECK(d(i) == doctest::Approx(lat.weights(xs(i), ys(i))(13) * lat.amplitude).epsilon(1e-14));
  }
}

TEST_CASE("design recovered from displacement through the lattice") {
  const auto b = synthetic_baseline();
  const FfdDeformer def(b, FfdLattice::enclosing(b, 10));
  const VectorXd x = random_design(20, 5);
  const VectorXd d = displacement(def.apply(DesignVector(x)), b);
  const VectorXd back = (def.lattice().amplitude * def.weight_matrix()).completeOrthogonalDecomposition().solve(d);
  CHECK((back - x).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("deform rejects out-of-range designs") {
  const auto b = synthetic_baseline(20);
  const FfdDeformer def(b, FfdLattice::enclosing(b, 10));
  VectorXd x = VectorXd::Zero(20);
  x(4) = -1.2;
  CHECK_THROWS_AS(def.ordinates(x), DomainError);
  CHECK_THROWS_AS(def.ordinates(VectorXd::Zero(19)), DomainError);
}

TEST_CASE("resample") {
  const AirfoilProfile two({0, 1}, {0, 1}, {0, 1}, {0, -1});
  const auto r = resample(two, Stations{{0, 0.5, 1}, {0.25, 1}});
  CHECK(r.y(Side::kSuction)[1] == 0.5);
  CHECK(r.y(Side::kPressure)[0] == -0.25);
  const auto b = synthetic_baseline(50);
  CHECK(resample(b, b.stations()) == b);
  CHECK_THROWS_AS(resample(two, Stations{{0, 1.2}, {0, 1}}), DomainError);
}

TEST_CASE("resample error is bounded by mesh spacing squared") {
  const int n = 400;
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = static_cast<double>(i) / (n - 1);
    y[i] = std::sin(3 * x[i]);
  }
  const AirfoilProfile dense(x, y, x, y);
  std::vector<double> t;
  for (int i = 0; i <= 37; ++i) t.push_back(i / 37.0);
  const auto r = resample(dense, Stations{t, t});
  const double h = 1.0 / (n - 1);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(r.y(Side::kSuction)[i] - std::sin(3 * t[i])) <= 9 * h * h / 8);
}

TEST_CASE("displacement") {
  const auto b = synthetic_baseline(30);
  CHECK(displacement(b, b).isZero(0.0));
  const auto shifted = b.with_ordinates(b.ordinates().array() + 0.01);
  CHECK((displacement(shifted, b).array() - 0.01).abs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(displacement(synthetic_baseline(31), b), DomainError);
}

TEST_CASE("profile CSV round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "bladeenv_test_geometry";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "p.csv").string();
  const auto b = synthetic_baseline(25);
  write_profile_csv(path, b, "test");
  CHECK(read_profile_csv(path) == b);

  std::ostringstream os;
  write_profiles_csv(os, {{"a", b}, {"b", b.with_ordinates(b.ordinates() * 2)}});
  const auto multi = (dir / "m.csv").string();
  std::ofstream(multi) << os.str();
  const auto back = read_profiles_csv(multi);
  REQUIRE(back.size() == 2);
  CHECK(back[0].first == "a");
  CHECK(back[1].second.ordinates() == b.ordinates() * 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("profile CSV rejects bad sides") {
  const auto dir = std::filesystem::temp_directory_path() / "bladeenv_test_geometry2";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "bad.csv").string();
  std::ofstream(path) << "side,x,y\nsuction,0,0\ntop,1,0\npressure,0,0\npressure,1,0\n";
  CHECK_THROWS_AS(read_profile_csv(path), DomainError);
  std::filesystem::remove_all(dir);
}
