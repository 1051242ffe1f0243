#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "qp_oracle.hpp"
#include "vicscan/qp_solver.hpp"

using namespace vicscan;
using qp_test::OracleResult;
using qp_test::UnifiedRows;
using qp_test::feasible_at;
using qp_test::objective;
using qp_test::qp_oracle;
using qp_test::unify;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

QpProblem random_problem(std::mt19937_64& gen, bool force_feasible) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 3;
  QpProblem p;
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = u(gen);
  p.H = M.transpose() * M + 0.05 * Eigen::MatrixXd::Identity(n, n);
  p.g = Eigen::VectorXd::NullaryExpr(n, [&]() { return 3.0 * u(gen); });
  p.lb = Eigen::VectorXd::NullaryExpr(n, [&]() { return -1.0 - u(gen); });
  p.ub = p.lb + Eigen::VectorXd::NullaryExpr(n, [&]() { return 1.5 + u(gen); });

  std::uniform_int_distribution<int> rows_dist(0, 8);
  const int m = rows_dist(gen);
  p.A.resize(m, n);
  p.b.resize(m);
  Eigen::VectorXd interior = 0.5 * (p.lb + p.ub);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) p.A(i, j) = u(gen);
    if (force_feasible) {
      p.b(i) = p.A.row(i).dot(interior) + 0.1 + std::abs(u(gen));
    } else {
      p.b(i) = p.A.row(i).dot(interior) + 1.5 * u(gen);
    }
  }
  return p;
}

}  // namespace

TEST_CASE("unconstrained interior optimum") {
  QpProblem p;
  p.H = Eigen::MatrixXd::Identity(3, 3);
  p.g = Eigen::VectorXd::Zero(3);
  p.lb = Eigen::VectorXd::Constant(3, -1.0);
  p.ub = Eigen::VectorXd::Constant(3, 1.0);
  p.A.resize(0, 3);
  p.b.resize(0);
  const QpSolution s = qp_solve(p);
  REQUIRE(s.status == QpStatus::optimal);
  CHECK(s.u.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(s.objective == doctest::Approx(0.0));
}

TEST_CASE("separable clipping onto the box") {
  QpProblem p;
  p.H = Eigen::MatrixXd::Identity(3, 3);
  p.g = Eigen::VectorXd::Zero(3);
  p.g(0) = -3.0;
  p.lb = Eigen::VectorXd::Constant(3, -1.0);
  p.ub = Eigen::VectorXd::Constant(3, 1.0);
  p.A.resize(0, 3);
  p.b.resize(0);
  const QpSolution s = qp_solve(p);
  REQUIRE(s.status == QpStatus::optimal);
  CHECK(s.u(0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(s.u(1)) < 1e-12);
  CHECK(std::abs(s.u(2)) < 1e-12);
}

TEST_CASE("random instances match the brute-force oracle") {
  std::mt19937_64 gen(9);
  int solved = 0, infeasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const QpProblem p = random_problem(gen, trial % 3 != 0);
    const QpSolution s = qp_solve(p);
    const OracleResult o = qp_oracle(p);
    if (s.status == QpStatus::optimal) {
      REQUIRE(o.feasible);
      CHECK(o.objective <= o.grid_objective + 1e-9);
      const double denom = 1.0 + std::abs(o.objective);
      CHECK(std::abs(s.objective - o.objective) / denom < 1e-6);
      CHECK(kkt_check(p, s.u).max_residual() < 1e-7);
      ++solved;
    } else if (s.status == QpStatus::infeasible) {
      CHECK_FALSE(o.feasible);
      CHECK(s.certificate.size() == p.A.rows());
      ++infeasible;
    }
  }
  CHECK(solved > 150);
  CHECK(infeasible > 10);
}

TEST_CASE("repeated solves are bitwise identical") {
  std::mt19937_64 gen(10);
  const QpProblem p = random_problem(gen, true);
  const QpSolution a = qp_solve(p);
  const QpSolution b = qp_solve(p);
  REQUIRE(a.u.size() == b.u.size());
  CHECK(std::memcmp(a.u.data(), b.u.data(), sizeof(double) * a.u.size()) == 0);
  CHECK(std::memcmp(&a.objective, &b.objective, sizeof(double)) == 0);
}

TEST_CASE("warm start converges to the cold-start optimum") {
  std::mt19937_64 gen(11);
  QpSolver warm;
  for (int trial = 0; trial < 50; ++trial) {
    QpProblem p = random_problem(gen, true);
    const QpSolution cold = qp_solve(p);
    const QpSolution w = warm.solve(p);
    REQUIRE(cold.status == QpStatus::optimal);
    REQUIRE(w.status == QpStatus::optimal);
    CHECK((w.u - cold.u).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + cold.u.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("optimum beats every feasible box vertex") {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 40; ++trial) {
    const QpProblem p = random_problem(gen, true);
    const QpSolution s = qp_solve(p);
    REQUIRE(s.status == QpStatus::optimal);
    const UnifiedRows rows = unify(p);
    for (int mask = 0; mask < 8; ++mask) {
      Eigen::VectorXd v(3);
      for (int i = 0; i < 3; ++i) v(i) = (mask >> i) & 1 ? p.ub(i) : p.lb(i);
      if (!feasible_at(rows, v, 1e-9)) continue;
      CHECK(s.objective <= objective(p, v) + 1e-8 * (1.0 + std::abs(s.objective)));
    }
  }
}

TEST_CASE("kkt_check diagnostics") {
  QpProblem p;
  p.H = Eigen::MatrixXd::Identity(3, 3) * 2.0;
  p.g = Eigen::VectorXd::Constant(3, -1.0);
  p.lb = Eigen::VectorXd::Constant(3, 0.0);
  p.ub = Eigen::VectorXd::Constant(3, 1.0);
  p.A.resize(1, 3);
  p.A << 1.0, 1.0, 0.0;
  p.b.resize(1);
  p.b << 0.6;

  const QpSolution s = qp_solve(p);
  REQUIRE(s.status == QpStatus::optimal);
  CHECK(kkt_check(p, s.u).max_residual() < 1e-7);

  SUBCASE("interior non-optimal point has a visible stationarity gap") {
    Eigen::VectorXd u = Eigen::VectorXd::Constant(3, 0.1);
    const KktReport rep = kkt_check(p, u);
    CHECK(rep.stationarity > 1e-3);
  }
  SUBCASE("bound violation shows up as primal residual") {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(3);
    u(2) = -0.1;
    const KktReport rep = kkt_check(p, u);
    CHECK(rep.primal == doctest::Approx(0.1).epsilon(1e-9));
  }
}

TEST_CASE("infeasible window is reported with a certificate") {
  QpProblem p;
  p.H = Eigen::MatrixXd::Identity(2, 2);
  p.g = Eigen::VectorXd::Zero(2);
  p.lb = Eigen::VectorXd::Constant(2, -1.0);
  p.ub = Eigen::VectorXd::Constant(2, 1.0);
  p.A.resize(1, 2);
  p.A << -1.0, 0.0;  // -u0 <= -2  =>  u0 >= 2, impossible inside the box
  p.b.resize(1);
  p.b << -2.0;
  const QpSolution s = qp_solve(p);
  REQUIRE(s.status == QpStatus::infeasible);
  REQUIRE(s.certificate.size() == 1);
  CHECK(s.certificate(0) > 0.0);
}

TEST_CASE("rows with infinite rhs are one-sided windows, not constraints") {
  QpProblem p;
  p.H = Eigen::MatrixXd::Identity(2, 2);
  p.g = Eigen::VectorXd::Constant(2, -5.0);
  p.lb = Eigen::VectorXd::Constant(2, -10.0);
  p.ub = Eigen::VectorXd::Constant(2, 10.0);
  p.A.resize(2, 2);
  p.A << 1.0, 0.0, 0.0, 1.0;
  p.b.resize(2);
  p.b << kInf, 2.0;
  const QpSolution s = qp_solve(p);
  REQUIRE(s.status == QpStatus::optimal);
  CHECK(s.u(0) == doctest::Approx(5.0).epsilon(1e-9));  // unconstrained
  CHECK(s.u(1) == doctest::Approx(2.0).epsilon(1e-9));  // capped by the row
}

TEST_CASE("problem dump emits one block per matrix") {
  QpProblem p;
  p.H = Eigen::MatrixXd::Identity(2, 2);
  p.g = Eigen::VectorXd::Zero(2);
  p.lb = Eigen::VectorXd::Constant(2, 0.0);
  p.ub = Eigen::VectorXd::Constant(2, 1.0);
  p.A.resize(1, 2);
  p.A << 1.0, 1.0;
  p.b.resize(1);
  p.b << 1.0;
  std::ostringstream out;
  dump_qp(p, out);
  const std::string text = out.str();
  for (const char* tag : {"H ", "g ", "lb ", "ub ", "A ", "b "})
    CHECK(text.find(tag) != std::string::npos);
}
