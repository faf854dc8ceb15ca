#include "doctest.h"

#include "bladeenv/errors.hpp"
#include "bladeenv/random.hpp"
#include "bladeenv/subspace.hpp"

#include <cmath>
#include <numbers>

using namespace bladeenv;
using namespace bladeenv::subspace;

namespace {

VectorXd random_vector(int d, std::uint64_t seed) {
  Rng rng(seed);
  VectorXd v(d);
  for (int j = 0; j < d; ++j) v(j) = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("covariance of a linear function is c c^T") {
  const VectorXd c = random_vector(6, 1);
  const auto cov = estimate_covariance([&](const VectorXd&) { return c; }, 6, 37, 5);
  CHECK((cov.matrix() - c * c.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("covariance of x1^2 approaches diag(4/3, 0)") {
  const auto cov = estimate_covariance(
      [](const VectorXd& x) {
        VectorXd g = VectorXd::Zero(2);
        g(0) = 2 * x(0);
        return g;
      },
      2, 100000, 3);
  CHECK(cov(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(0.05 * 3 / 4));
  CHECK(cov(1, 1) == 0.0);
}

TEST_CASE("covariance does not depend on the number of jobs") {
  const VectorXd w = random_vector(5, 2);
  auto grad = [&](const VectorXd& x) { return VectorXd(3 * std::pow(w.dot(x), 2) * w + x); };
  const auto a = estimate_covariance(grad, 5, 5000, 8, 1);
  const auto b = estimate_covariance(grad, 5, 5000, 8, 4);
  CHECK(a.matrix() == b.matrix());
}

TEST_CASE("covariance from a surrogate") {
  const auto basis = surrogate::build_index_set(surrogate::IndexSetKind::kTotalOrder, 3, 1);
  VectorXd a = VectorXd::Zero(4);
  a(3) = 1.0;  // psi_1(x1) = sqrt(3) x1
  const surrogate::Surrogate s(basis, a);
  const auto cov = estimate_covariance(s, 100, 1);
  CHECK(cov(0, 0) == doctest::Approx(3.0));
  CHECK(cov(1, 1) == 0.0);
}

TEST_CASE("partition of a rank-one matrix") {
  VectorXd c(4);
  c << 1, 2, 2, 4;
  const auto p = partition(SymmetricMatrix(c * c.transpose()));
  CHECK(p.r == 1);
  CHECK(std::abs(std::abs(p.W.col(0).dot(c.normalized())) - 1.0) < 1e-14);
  CHECK(p.V.cols() == 3);
}

TEST_CASE("partition selects the largest eigenvalue ratio") {
  VectorXd ev(5);
  ev << 10, 9, 0.01, 0.009, 0.008;
  const auto p = partition(SymmetricMatrix(MatrixXd(ev.asDiagonal())));
  CHECK(p.r == 2);
  CHECK(partition(SymmetricMatrix(MatrixXd(ev.asDiagonal())), 4).r == 4);
}

TEST_CASE("partition requires explicit r without a gap") {
  CHECK_THROWS_AS(partition(SymmetricMatrix::identity(3)), NumericalError);
  const auto p = partition(SymmetricMatrix::identity(3), 2);
  CHECK(p.r == 2);
  CHECK_THROWS_AS(partition(SymmetricMatrix::identity(3), 4), DomainError);
}

TEST_CASE("partition invariants") {
  const MatrixXd g = [] {
    MatrixXd m(8, 8);
    for (int j = 0; j < 8; ++j) m.col(j) = random_vector(8, 30 + j);
    return m;
  }();
  const auto p = partition(SymmetricMatrix(g * g.transpose()), 3);
  MatrixXd q(8, 8);
  q << p.W, p.V;
  CHECK((q.transpose() * q - MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() <= 1e-10);
  for (int k = 0; k < 1000; ++k) {
    const VectorXd x = random_vector(8, 1000 + k);
    CHECK((p.W * p.W.transpose() * x + p.V * p.V.transpose() * x - x).cwiseAbs().maxCoeff() <= 1e-10);
    const VectorXd u = active_coordinate(p, x);
    CHECK(std::abs(x.squaredNorm() - u.squaredNorm() - (p.V.transpose() * x).squaredNorm()) <= 1e-10 * x.squaredNorm());
  }
  CHECK(active_coordinate(p, VectorXd::Zero(8)).isZero(0.0));
  CHECK((active_coordinate(p, p.W.col(0)) - VectorXd::Unit(3, 0)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(active_coordinate(p, VectorXd::Zero(7)), DomainError);
}

TEST_CASE("ridge direction recovered at M = 1e5 and stable across seeds") {
  const VectorXd w = random_vector(20, 77).normalized();
  auto grad = [&](const VectorXd& x) {
    const double t = w.dot(x);
    return VectorXd((3 * t * t + 0.5) * w);
  };
  const auto p1 = partition(estimate_covariance(grad, 20, 100000, 1));
  const auto p2 = partition(estimate_covariance(grad, 20, 100000, 2), 1);
  CHECK(p1.r == 1);
  CHECK(principal_angles(p1.W, w)(0) <= 1e-2);
  CHECK(principal_angles(p1.W, p2.W)(0) <= 1e-2);
}

TEST_CASE("principal angles") {
  MatrixXd a = MatrixXd::Zero(3, 1), b = MatrixXd::Zero(3, 1);
  a(0, 0) = 1;
  b(0, 0) = std::cos(0.3);
  b(1, 0) = std::sin(0.3);
  CHECK(principal_angles(a, b)(0) == doctest::Approx(0.3).epsilon(1e-12));
  b.setZero();
  b(0, 0) = std::cos(1e-9);
  b(2, 0) = std::sin(1e-9);
  CHECK(principal_angles(a, b)(0) == doctest::Approx(1e-9).epsilon(1e-6));
  const MatrixXd id = MatrixXd::Identity(3, 2);
  CHECK(principal_angles(id, a)(0) == 0.0);
  MatrixXd e3 = MatrixXd::Zero(3, 1);
  e3(2, 0) = 1;
  CHECK(principal_angles(id, e3)(0) == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("partition JSON round trip") {
  VectorXd ev(4);
  ev << 5, 1, 0.1, 0.0;
  auto p = partition(SymmetricMatrix(MatrixXd(ev.asDiagonal())));
  p.M = 1000;
  p.seed = 99;
  const auto back = partition_from_json(nlohmann::json::parse(to_json(p).dump()));
  CHECK(back.W == p.W);
  CHECK(back.V == p.V);
  CHECK(back.eigenvalues == p.eigenvalues);
  CHECK(back.r == p.r);
  CHECK(back.M == 1000);
  CHECK(back.seed == 99);
}
