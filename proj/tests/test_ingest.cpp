#include "doctest.h"

#include "bladeenv/errors.hpp"
#include "bladeenv/ingest.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace bladeenv;
using namespace bladeenv::ingest;

TEST_CASE("loss coefficient") {
  CHECK(loss_coefficient(1.1e6, 1.1e6, 5.23e5) == 0.0);
  CHECK(loss_coefficient(1.1e6, 1.05e6, 5.23e5) == doctest::Approx(-0.0948767).epsilon(1e-5));
  CHECK(loss_coefficient(3.3e6, 3.15e6, 1.569e6) == doctest::Approx(loss_coefficient(1.1e6, 1.05e6, 5.23e5)));
  CHECK_THROWS_AS(loss_coefficient(1, 2, 2), DomainError);
}

TEST_CASE("mass flow function") {
  CHECK(mass_flow_function(1, 1, 1e4) == doctest::Approx(1.0));
  CHECK(mass_flow_function(2, 592.295, 1.1e6) == doctest::Approx(2 * mass_flow_function(1, 592.295, 1.1e6)));
  CHECK(mass_flow_function(10, 592.295, 1.1e6) == doctest::Approx(2.2125).epsilon(1e-4));
  CHECK_THROWS_AS(mass_flow_function(-1, 1, 1), DomainError);
}

TEST_CASE("isentropic mach") {
  CHECK(isentropic_mach(1e5, 1e5, 1.4) == 0.0);
  CHECK(isentropic_mach(std::pow(1.2, 3.5), 1.0, 1.4) == doctest::Approx(1.0).epsilon(1e-12));
  double prev = 1e9;
  for (double p = 1e4; p <= 1e5; p += 1e4) {
    const double m = isentropic_mach(1e5, p, 1.4);
    CHECK(m < prev);
    prev = m;
  }
  CHECK_THROWS_AS(isentropic_mach(1e5, 2e5, 1.4), DomainError);
  VectorXd ps(2);
  ps << 1e5, 5e4;
  CHECK(mach_distribution(1e5, ps, 1.4)(0) == 0.0);
}

TEST_CASE("flow conditions validation") {
  FlowConditions fc;
  CHECK_NOTHROW(fc.validate());
  fc.gamma = 1.0;
  CHECK_THROWS_AS(fc.validate(), DomainError);
}

TEST_CASE("doe uniform") {
  const MatrixXd x = doe_uniform(20, 1000, 7);
  CHECK(x.rows() == 1000);
  CHECK(x.cwiseAbs().maxCoeff() <= 1.0);
  CHECK(doe_uniform(20, 1, 3) == doe_uniform(20, 1, 3));
  CHECK(doe_uniform(20, 5, 3).row(4) == doe_uniform(20, 10, 3).row(4));
  const MatrixXd big = doe_uniform(3, 100000, 11);
  CHECK(big.colwise().mean().cwiseAbs().maxCoeff() <= 0.02);
  CHECK_THROWS_AS(doe_uniform(0, 1, 0), DomainError);
}

TEST_CASE("design and qoi CSV round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "bladeenv_test_ingest";
  std::filesystem::create_directories(dir);
  const MatrixXd x = doe_uniform(4, 6, 1);
  write_designs_csv((dir / "d.csv").string(), x, {{"seed", "1"}});
  Header h;
  CHECK(read_designs_csv((dir / "d.csv").string(), &h) == x);
  CHECK(h.at("seed") == "1");
  CHECK(h.at("schema") == "1");

  QoiTable t;
  t.names = {"Yp", "fm"};
  t.design_ids = {0, 1, 2};
  t.values = MatrixXd::Random(3, 2);
  write_qoi_csv((dir / "q.csv").string(), t, {});
  const auto back = read_qoi_csv((dir / "q.csv").string());
  CHECK(back.values == t.values);
  CHECK(back.column("fm") == t.values.col(1));
  const auto recs = to_records(x, back);
  CHECK(recs[2].design == x.row(2).transpose());
  CHECK(recs[1].value("Yp") == t.values(1, 0));

  std::ofstream((dir / "bad.csv").string()) << "# bladeenv schema=9\nx1\n0.5\n";
  CHECK_THROWS_AS(read_designs_csv((dir / "bad.csv").string()), DomainError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("pressure CSV round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "bladeenv_test_ingest2";
  std::filesystem::create_directories(dir);
  VectorXd a(3), b(2);
  a << 1, 2, 3;
  b << 4, 5;
  write_pressure_csv((dir / "p.csv").string(), {0, 5}, {a, b}, {});
  const auto back = read_pressure_csv((dir / "p.csv").string());
  CHECK(back.at(0) == a);
  CHECK(back.at(5) == b);
  std::filesystem::remove_all(dir);
}

TEST_CASE("numeric matrix adapter and derived qois") {
  const auto dir = std::filesystem::temp_directory_path() / "bladeenv_test_ingest3";
  std::filesystem::create_directories(dir);
  std::ofstream((dir / "m.txt").string()) << "# exported\n1 2 3\n4,5,6\n\n";
  const MatrixXd m = read_numeric_matrix((dir / "m.txt").string());
  CHECK(m.rows() == 2);
  CHECK(m(1, 2) == 6);
  std::ofstream((dir / "r.txt").string()) << "1 2\n3\n";
  CHECK_THROWS_AS(read_numeric_matrix((dir / "r.txt").string()), DomainError);

  QoiTable raw;
  raw.names = {"p02", "mdot"};
  raw.design_ids = {0};
  raw.values.resize(1, 2);
  raw.values << 1.05e6, 10;
  const auto out = derive_scalar_qois(raw, FlowConditions{});
  CHECK(out.column("Yp")(0) == doctest::Approx(-0.0948767).epsilon(1e-5));
  CHECK(out.column("fm")(0) == doctest::Approx(2.2125).epsilon(1e-4));
  std::filesystem::remove_all(dir);
}
