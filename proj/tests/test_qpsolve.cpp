#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "gridscc/qpsolve.hpp"
#include "support/helpers.hpp"

using namespace gridscc;
namespace gt = gridscc::testing;

namespace {

QpProblem scalar_problem(double center, double bound) {
  QpProblem qp;
  qp.hessian_diag = Vector::Constant(1, 1.0);
  qp.linear_center = Vector::Constant(1, center);
  ConstraintRow row;
  row.coeff_u = Vector::Constant(1, 1.0);
  row.coeff_delta = Vector(0);
  row.rhs = bound;
  qp.rows.push_back(row);
  return qp;
}

}  // namespace

TEST_CASE("unconstrained solve returns the center") {
  QpProblem qp;
  qp.hessian_diag = Vector::Constant(3, 2.0);
  qp.linear_center = Vector(3);
  qp.linear_center << 1.0, -2.0, 0.5;
  const QpSolution sol = solve_qp(qp);
  REQUIRE(sol.status == QpStatus::ok);
  CHECK((sol.w_star - qp.linear_center).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sol.active_set.empty());
  CHECK(sol.kkt_residual <= 1e-12);
}

TEST_CASE("a single cutting row projects onto its boundary") {
  const QpProblem qp = scalar_problem(3.0, 1.0);
  const QpSolution sol = solve_qp(qp);
  REQUIRE(sol.status == QpStatus::ok);
  CHECK(sol.w_star[0] == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(sol.active_set.size() == 1);
  CHECK(sol.active_set[0] == 0);
  CHECK(sol.multipliers[0] > 0.0);
}

TEST_CASE("a slack row stays inactive") {
  const QpProblem qp = scalar_problem(-1.0, 1.0);
  const QpSolution sol = solve_qp(qp);
  REQUIRE(sol.status == QpStatus::ok);
  CHECK(sol.w_star[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(sol.active_set.empty());
  CHECK(sol.multipliers[0] == 0.0);
}

TEST_CASE("contradictory rows are reported infeasible") {
  QpProblem qp = scalar_problem(0.0, -1.0);  // w <= -1
  ConstraintRow row;
  row.coeff_u = Vector::Constant(1, -1.0);  // -w <= -2, i.e. w >= 2
  row.coeff_delta = Vector(0);
  row.rhs = -2.0;
  qp.rows.push_back(row);
  const QpSolution sol = solve_qp(qp);
  CHECK(sol.status == QpStatus::infeasible);
}

TEST_CASE("duplicate rows do not disturb the optimum") {
  QpProblem qp = scalar_problem(3.0, 1.0);
  qp.rows.push_back(qp.rows[0]);
  qp.rows.push_back(qp.rows[0]);
  const QpSolution sol = solve_qp(qp);
  REQUIRE(sol.status == QpStatus::ok);
  CHECK(sol.w_star[0] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("random problems agree with the exhaustive and gradient oracles") {
  gt::Rng rng(777);
  int feasible_seen = 0;
  int infeasible_seen = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const QpProblem qp = gt::random_qp(rng, 6, 4);
    const QpSolution sol = solve_qp(qp);
    const gt::ExhaustiveResult oracle = gt::qp_exhaustive(qp);

    if (sol.status == QpStatus::ok) {
      ++feasible_seen;
      REQUIRE(oracle.feasible);
      CHECK((sol.w_star - oracle.w).cwiseAbs().maxCoeff() <= 1e-7);
      CHECK(gt::qp_max_violation(qp, sol.w_star) <= 1e-8);
      CHECK(sol.kkt_residual <= 1e-8);
      CHECK(gt::qp_cost(qp, sol.w_star) <= oracle.cost + 1e-9 * (1.0 + oracle.cost));

      if (!qp.rows.empty()) {
        const Vector pg = gt::qp_dual_gradient(qp, 200000);
        CHECK((sol.w_star - pg).cwiseAbs().maxCoeff() <= 1e-6);
      }
    } else {
      ++infeasible_seen;
      CHECK_FALSE(oracle.feasible);
    }
  }
  CHECK(feasible_seen >= 250);  // the generator aims for mostly feasible draws
}

TEST_CASE("solutions are deterministic") {
  gt::Rng rng(888);
  const QpProblem qp = gt::random_qp(rng, 5, 4);
  const QpSolution a = solve_qp(qp);
  const QpSolution b = solve_qp(qp);
  REQUIRE(a.status == b.status);
  if (a.status == QpStatus::ok) {
    CHECK((a.w_star - b.w_star).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.active_set == b.active_set);
  }
}

TEST_CASE("malformed problems are rejected") {
  QpProblem qp;
  qp.hessian_diag = Vector::Constant(2, 1.0);
  qp.linear_center = Vector::Constant(3, 0.0);
  CHECK_THROWS_AS(solve_qp(qp), std::invalid_argument);

  qp.linear_center = Vector::Constant(2, 0.0);
  qp.hessian_diag[1] = 0.0;
  CHECK_THROWS_AS(solve_qp(qp), std::invalid_argument);

  qp.hessian_diag[1] = 1.0;
  ConstraintRow row;
  row.coeff_u = Vector::Constant(1, 1.0);
  row.coeff_delta = Vector(0);  // widths must sum to the variable count
  row.rhs = 0.0;
  qp.rows.push_back(row);
  CHECK_THROWS_AS(solve_qp(qp), std::invalid_argument);
}

TEST_CASE("row counts beyond the enumeration budget are rejected") {
  QpProblem qp;
  qp.hessian_diag = Vector::Constant(2, 1.0);
  qp.linear_center = Vector::Constant(2, 0.0);
  ConstraintRow row;
  row.coeff_u = Vector::Constant(2, 1.0);
  row.coeff_delta = Vector(0);
  row.rhs = 100.0;
  for (int i = 0; i < 25; ++i) qp.rows.push_back(row);
  CHECK_THROWS_AS(solve_qp(qp), std::invalid_argument);
  qp.rows.resize(24);
  CHECK_NOTHROW(solve_qp(qp));
}
