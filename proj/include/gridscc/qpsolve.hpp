#pragma once

#include <vector>

#include "gridscc/certificates.hpp"

namespace gridscc {

enum class QpStatus {
  ok,
  infeasible,       // no active subset yields a feasible KKT point
  ill_conditioned,  // some candidate subsets had to be skipped
};

/// minimize sum_i hessian_diag[i] (w_i - linear_center[i])^2
/// subject to each row: [coeff_u; coeff_delta] . w <= rhs.
/// Row coefficient lengths must add up to the variable count.
struct QpProblem {
  Vector hessian_diag;   // strictly positive
  Vector linear_center;
  std::vector<ConstraintRow> rows;

  int dim() const { return static_cast<int>(hessian_diag.size()); }
};

struct QpSolution {
  QpStatus status = QpStatus::infeasible;
  Vector w_star;
  std::vector<int> active_set;  // original row indices, ascending
  Vector multipliers;           // one per row, zero when inactive
  double kkt_residual = 0.0;    // scaled stationarity residual
};

/// Deterministic active-set enumeration: candidate subsets are visited in
/// order of increasing cardinality (lexicographic within a cardinality) and
/// the first subset whose equality-constrained KKT point is primal feasible
/// with nonnegative multipliers is returned; for a strictly convex cost that
/// point is the global minimizer. Rows are scaled to unit max-norm before
/// solving. Throws std::invalid_argument on malformed input or more than 24
/// rows (enumeration would be unreasonable).
QpSolution solve_qp(const QpProblem& qp);

}  // namespace gridscc
