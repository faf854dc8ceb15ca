#include "doctest.h"

#include "bladeenv/errors.hpp"
#include "bladeenv/numerics.hpp"
#include "bladeenv/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace bladeenv;
using namespace bladeenv::numerics;

namespace {

MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

SymmetricMatrix random_symmetric(int n, std::uint64_t seed) {
  const MatrixXd a = random_matrix(n, n, seed);
  return SymmetricMatrix(a + a.transpose());
}

void check_decomposition(const SymmetricMatrix& a) {
  const auto eig = eigh(a);
  const Eigen::Index n = a.size();
  const MatrixXd& q = eig.eigenvectors;
  CHECK((q.transpose() * q - MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-10);
  const double scale = std::max(1.0, a.max_abs());
  CHECK((a.matrix() * q - q * eig.eigenvalues.asDiagonal()).cwiseAbs().maxCoeff() <= 1e-8 * scale);
  for (Eigen::Index k = 1; k < n; ++k) CHECK(eig.eigenvalues(k) <= eig.eigenvalues(k - 1));
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index arg;
    q.col(k).cwiseAbs().maxCoeff(&arg);
    CHECK(q(arg, k) > 0.0);
  }
}

}  // namespace

TEST_CASE("SymmetricMatrix symmetrizes exactly") {
  MatrixXd a(2, 2);
  a << 1, 2, 4, 3;
  const SymmetricMatrix s(a);
  CHECK(s(0, 1) == s(1, 0));
  CHECK(s(0, 1) == 3.0);
  CHECK(SymmetricMatrix::identity(3).trace() == 3.0);
}

TEST_CASE("eigh identity and rank one") {
  const auto id = eigh(SymmetricMatrix::identity(2));
  CHECK(id.eigenvalues(0) == 1.0);
  CHECK(id.eigenvalues(1) == 1.0);
  VectorXd c(2);
  c << 0.6, 0.8;
  const auto r1 = eigh(SymmetricMatrix(c * c.transpose()));
  CHECK(r1.eigenvalues(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(r1.eigenvalues(1)) < 1e-15);
  CHECK((r1.eigenvectors.col(0) - c).norm() < 1e-14);
}

TEST_CASE("eigh matches a reference solver on random matrices") {
  for (int n : {1, 2, 5, 20, 60}) {
    const auto a = random_symmetric(n, 100 + n);
    check_decomposition(a);
    Eigen::SelfAdjointEigenSolver<MatrixXd> ref(a.matrix());
    VectorXd expect = ref.eigenvalues().reverse();
    CHECK((eigh(a).eigenvalues - expect).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, a.max_abs()));
  }
}

TEST_CASE("eigh handles 240x240 low-rank covariance") {
  const MatrixXd g = random_matrix(240, 7, 5);
  check_decomposition(SymmetricMatrix(g * g.transpose() * 1e-6));
}

TEST_CASE("eigh is deterministic") {
  const auto a = random_symmetric(30, 9);
  const auto e1 = eigh(a), e2 = eigh(a);
  CHECK(e1.eigenvalues == e2.eigenvalues);
  CHECK(e1.eigenvectors == e2.eigenvectors);
}

TEST_CASE("eigh rejects non-finite input") {
  MatrixXd a = MatrixXd::Identity(3, 3);
  a(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(eigh(SymmetricMatrix(a)));
}

// ---------------------------------------------------------------------------

TEST_CASE("lp trivial maximize") {
  LinearProgram lp;
  lp.objective = VectorXd::Ones(1);
  lp.sense = Sense::kMaximize;
  lp.A.resize(2, 1);
  lp.A << 1, -1;
  lp.b = VectorXd::Zero(2);
  lp.b(0) = 1;
  const auto res = lp_solve(lp);
  REQUIRE(res.optimal());
  CHECK(res.x(0) == doctest::Approx(1.0));
  CHECK(res.objective == doctest::Approx(1.0));
}

TEST_CASE("lp infeasible and unbounded are distinguished") {
  LinearProgram lp;
  lp.objective = VectorXd::Ones(1);
  lp.A.resize(2, 1);
  lp.A << 1, -1;
  lp.b.resize(2);
  lp.b << -1, -1;  // y <= -1 and y >= 1
  CHECK(lp_solve(lp).status == LpStatus::kInfeasible);

  LinearProgram un;
  un.objective = VectorXd::Ones(1);
  un.sense = Sense::kMaximize;
  un.A.resize(1, 1);
  un.A << -1;
  un.b = VectorXd::Zero(1);
  CHECK(lp_solve(un).status == LpStatus::kUnbounded);
  CHECK(to_string(LpStatus::kUnbounded) == "unbounded");
}

TEST_CASE("lp respects variable bounds") {
  LinearProgram lp;
  lp.objective.resize(2);
  lp.objective << 1, 1;
  lp.sense = Sense::kMaximize;
  lp.A.resize(1, 2);
  lp.A << 1, 1;
  lp.b = VectorXd::Constant(1, 10.0);
  lp.lower = VectorXd::Constant(2, -2.0);
  lp.upper.resize(2);
  lp.upper << 3, 4;
  const auto res = lp_solve(lp);
  REQUIRE(res.optimal());
  CHECK(res.objective == doctest::Approx(7.0));
}

TEST_CASE("lp degenerate cycling example terminates") {
  // Beale's example, which cycles under the textbook largest-coefficient rule.
  LinearProgram lp;
  lp.objective.resize(4);
  lp.objective << -0.75, 20, -0.5, 6;
  lp.A.resize(3, 4);
  lp.A << 0.25, -8, -1, 9, 0.5, -12, -0.5, 3, 0, 0, 1, 0;
  lp.b.resize(3);
  lp.b << 0, 0, 1;
  lp.lower = VectorXd::Zero(4);
  const auto res = lp_solve(lp);
  REQUIRE(res.optimal());
  CHECK(res.objective == doctest::Approx(-1.25));
}

TEST_CASE("lp matches vertex enumeration on random 2D programs") {
  for (int trial = 0; trial < 50; ++trial) {
    Rng rng(1000, static_cast<std::uint64_t>(trial));
    const int m = 3 + trial % 6;
    LinearProgram lp;
    lp.A.resize(m + 4, 2);
    lp.b.resize(m + 4);
    for (int i = 0; i < m; ++i) {
      lp.A(i, 0) = rng.normal();
      lp.A(i, 1) = rng.normal();
      lp.b(i) = rng.uniform(0.1, 2.0);  // origin strictly feasible
    }
    // bounding box keeps the program bounded
    lp.A.bottomRows(4) << 1, 0, -1, 0, 0, 1, 0, -1;
    lp.b.tail(4).setConstant(5.0);
    lp.objective.resize(2);
    lp.objective << rng.normal(), rng.normal();
    lp.sense = trial % 2 ? Sense::kMaximize : Sense::kMinimize;
    const auto res = lp_solve(lp);
    REQUIRE(res.optimal());
    CHECK((lp.A * res.x - lp.b).maxCoeff() <= 1e-9);

    double best = lp.sense == Sense::kMaximize ? -1e300 : 1e300;
    for (int i = 0; i < lp.A.rows(); ++i)
      for (int j = i + 1; j < lp.A.rows(); ++j) {
        Eigen::Matrix2d m2;
        m2 << lp.A.row(i), lp.A.row(j);
        if (std::abs(m2.determinant()) < 1e-12) continue;
        const Eigen::Vector2d v = m2.partialPivLu().solve(Eigen::Vector2d(lp.b(i), lp.b(j)));
        if ((lp.A * v - lp.b).maxCoeff() > 1e-9) continue;
        const double obj = lp.objective.dot(v);
        best = lp.sense == Sense::kMaximize ? std::max(best, obj) : std::min(best, obj);
      }
    CHECK(res.objective == doctest::Approx(best).epsilon(1e-9));
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("bpdn square interpolation") {
  const MatrixXd psi = random_matrix(8, 8, 3);
  const VectorXd f = random_matrix(8, 1, 4).col(0);
  const auto res = bpdn_solve(psi, f, 0.0);
  const VectorXd exact = psi.fullPivLu().solve(f);
  CHECK((res.coefficients - exact).norm() <= 1e-6 * exact.norm());
}

TEST_CASE("bpdn zero data gives zero") {
  const auto res = bpdn_solve(random_matrix(5, 10, 1), VectorXd::Zero(5), 1e-6);
  CHECK(res.coefficients.isZero(0.0));
}

TEST_CASE("bpdn recovers a planted sparse vector") {
  const int o = 60, k = 15;
  const MatrixXd psi = random_matrix(k, o, 11);
  VectorXd a = VectorXd::Zero(o);
  a(3) = 1.5;
  a(27) = -0.7;
  a(44) = 0.4;
  const VectorXd f = psi * a;
  const auto res = bpdn_solve(psi, f, 1e-8);
  CHECK(res.residual_norm <= 1e-8 * (1 + 1e-6));
  CHECK((res.coefficients - a).cwiseAbs().maxCoeff() <= 1e-5);
  for (std::size_t i = 1; i < res.l1_trace.size(); ++i) CHECK(res.l1_trace[i] <= res.l1_trace[i - 1]);
}

TEST_CASE("bpdn least squares when the solution is sparse and K >= O") {
  const MatrixXd psi = random_matrix(40, 10, 21);
  VectorXd a = VectorXd::Zero(10);
  a(2) = 2.0;
  a(7) = -1.0;
  const auto res = bpdn_solve(psi, psi * a, 0.0);
  CHECK((res.coefficients - a).norm() <= 1e-6 * a.norm());
}

TEST_CASE("bpdn flags infeasible epsilon") {
  const MatrixXd psi = random_matrix(30, 5, 31);
  const VectorXd f = random_matrix(30, 1, 32).col(0);
  const auto res = bpdn_solve(psi, f, 1e-6);
  CHECK(res.epsilon_infeasible);
  CHECK_FALSE(res.warning.empty());
  const VectorXd ls = psi.colPivHouseholderQr().solve(f);
  CHECK((res.coefficients - ls).norm() <= 1e-6 * ls.norm());
}

TEST_CASE("bpdn matches the linear-programming formulation") {
  // min sum t  s.t.  -t <= a <= t,  Psi a = f   (epsilon = 0)
  const int k = 6, o = 12;
  const MatrixXd psi = random_matrix(k, o, 41);
  const VectorXd f = random_matrix(k, 1, 42).col(0);
  LinearProgram lp;
  lp.objective = VectorXd::Zero(2 * o);
  lp.objective.tail(o).setOnes();
  lp.A = MatrixXd::Zero(2 * o + 2 * k, 2 * o);
  lp.b = VectorXd::Zero(2 * o + 2 * k);
  lp.A.block(0, 0, o, o) = MatrixXd::Identity(o, o);
  lp.A.block(0, o, o, o) = -MatrixXd::Identity(o, o);
  lp.A.block(o, 0, o, o) = -MatrixXd::Identity(o, o);
  lp.A.block(o, o, o, o) = -MatrixXd::Identity(o, o);
  lp.A.block(2 * o, 0, k, o) = psi;
  lp.b.segment(2 * o, k) = f;
  lp.A.block(2 * o + k, 0, k, o) = -psi;
  lp.b.segment(2 * o + k, k) = -f;
  const auto ref = lp_solve(lp);
  REQUIRE(ref.optimal());
  const auto res = bpdn_solve(psi, f, 0.0);
  CHECK(res.coefficients.lpNorm<1>() == doctest::Approx(ref.objective).epsilon(1e-6));
}

TEST_CASE("bpdn rejects bad arguments") {
  CHECK_THROWS_AS(bpdn_solve(MatrixXd::Ones(2, 2), VectorXd::Ones(3), 0.0), DomainError);
  CHECK_THROWS_AS(bpdn_solve(MatrixXd::Ones(2, 2), VectorXd::Ones(2), -1.0), DomainError);
}

// ---------------------------------------------------------------------------

TEST_CASE("pinv identity and diagonal") {
  const auto p = pinv_psd(SymmetricMatrix::identity(4));
  CHECK(p.rank == 4);
  CHECK((p.pinv.matrix() - MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-15);
  MatrixXd d = MatrixXd::Zero(2, 2);
  d(0, 0) = 4;
  const auto q = pinv_psd(SymmetricMatrix(d));
  CHECK(q.rank == 1);
  CHECK(q.pinv(0, 0) == doctest::Approx(0.25));
  CHECK(q.pinv(1, 1) == 0.0);
}

TEST_CASE("pinv detects rank of a low-rank sample covariance") {
  const MatrixXd gen = random_matrix(20, 5, 51);
  MatrixXd samples(30, 20);
  for (int i = 0; i < 30; ++i) samples.row(i) = (gen * random_matrix(5, 1, 60 + i)).transpose();
  const MatrixXd centered = samples.rowwise() - samples.colwise().mean();
  const SymmetricMatrix s(centered.transpose() * centered / 29.0);
  const auto p = pinv_psd(s, 1e-10);
  CHECK(p.rank == 5);
  CHECK((s.matrix() * p.pinv.matrix() * s.matrix() - s.matrix()).cwiseAbs().maxCoeff() <= 1e-8 * s.max_abs());
}

TEST_CASE("pinv rejects indefinite matrices") {
  MatrixXd d = MatrixXd::Identity(2, 2);
  d(1, 1) = -0.5;
  CHECK_THROWS_AS(pinv_psd(SymmetricMatrix(d)), NumericalError);
}
