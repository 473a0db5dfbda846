#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "gridscc/model.hpp"
#include "gridscc/qpsolve.hpp"

// Independent reference implementations and deterministic generators shared
// by the test binaries. Everything here deliberately avoids the algorithms
// used by the library so that agreement is evidence, not tautology.
namespace gridscc::testing {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi);

// Solves A' P + P A = -Q through a complex Schur decomposition with
// column-by-column triangular back-substitution.
Matrix lyapunov_schur(const Matrix& a, const Matrix& q);

// Matrix exponential (scaling and squaring), wrapped so callers do not
// depend on the backing implementation.
Matrix expm(const Matrix& a);

// Dual projected-gradient solve of the diagonal-cost inequality QP. Returns
// the primal iterate after `iters` accelerated dual steps; only meaningful
// for feasible problems.
Vector qp_dual_gradient(const QpProblem& qp, int iters);

struct ExhaustiveResult {
  bool feasible = false;
  Vector w;
  double cost = 0.0;
};

// Enumerates every active subset, solves the equality KKT system, and keeps
// the cheapest candidate that is primal feasible with nonnegative
// multipliers.
ExhaustiveResult qp_exhaustive(const QpProblem& qp);

double qp_cost(const QpProblem& qp, const Vector& w);
double qp_max_violation(const QpProblem& qp, const Vector& w);

QpProblem random_qp(Rng& rng, int max_dim, int max_rows);

// Random strictly stable matrix: dense with eigenvalues shifted into the
// open left half plane by a positive margin.
Matrix random_hurwitz(Rng& rng, int n);

Matrix random_spd(Rng& rng, int n);

// Plant parameters of plausible magnitude: n converters, capacitances of a
// few hundred microfarads, line constants near the benchmark grid, box 5..50.
GridParams random_params(Rng& rng, int n);

// Benchmark five-converter grid matching scenarios/microgrid5.json.
GridParams benchmark_params();
GridState benchmark_start();

// State with every converter voltage strictly inside its box and the bus in
// the constant-power branch.
GridState random_admissible_state(Rng& rng, const GridParams& p, double margin);

// Least-squares slope of log|y| against t; ignores non-positive |y|.
double fit_log_slope(const std::vector<double>& t, const std::vector<double>& y);

}  // namespace gridscc::testing
