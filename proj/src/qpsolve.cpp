#include "gridscc/qpsolve.hpp"

#include <cmath>
#include <stdexcept>

namespace gridscc {

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kMultTol = 1e-10;
constexpr double kResidualTol = 1e-8;
constexpr int kMaxRows = 24;

Vector stacked_row(const ConstraintRow& row, int dim) {
  const int nu = static_cast<int>(row.coeff_u.size());
  const int nd = static_cast<int>(row.coeff_delta.size());
  if (nu + nd != dim) {
    throw std::invalid_argument("solve_qp: row width does not match variables");
  }
  Vector a(dim);
  a.head(nu) = row.coeff_u;
  a.tail(nd) = row.coeff_delta;
  return a;
}

// Advances a k-combination over {0..count-1} in lexicographic order.
bool next_combination(std::vector<int>& idx, int count) {
  const int k = static_cast<int>(idx.size());
  for (int i = k - 1; i >= 0; --i) {
    if (idx[i] < count - (k - i)) {
      ++idx[i];
      for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

QpSolution solve_qp(const QpProblem& qp) {
  const int dim = qp.dim();
  if (dim < 1 || qp.linear_center.size() != dim) {
    throw std::invalid_argument("solve_qp: malformed variable layout");
  }
  if (!(qp.hessian_diag.array() > 0.0).all() || !qp.hessian_diag.allFinite() ||
      !qp.linear_center.allFinite()) {
    throw std::invalid_argument("solve_qp: cost must be finite and strictly convex");
  }
  const int total_rows = static_cast<int>(qp.rows.size());
  if (total_rows > kMaxRows) {
    throw std::invalid_argument("solve_qp: too many rows for enumeration");
  }

  // Change variables to w' = sqrt(h) w, making the cost an unweighted
  // distance. The KKT systems then condition on row geometry alone, not on
  // the spread of the penalty weights.
  const Vector vscale = qp.hessian_diag.cwiseSqrt();
  const Vector center = qp.linear_center.cwiseProduct(vscale);

  // Scale live rows to unit max-norm; classify coefficient-free rows upfront.
  std::vector<int> live;
  std::vector<Vector> rows;
  std::vector<double> rhs, scales;
  for (int i = 0; i < total_rows; ++i) {
    Vector a = stacked_row(qp.rows[i], dim).cwiseQuotient(vscale);
    if (!a.allFinite() || !std::isfinite(qp.rows[i].rhs)) {
      throw std::invalid_argument("solve_qp: non-finite row");
    }
    const double scale = a.lpNorm<Eigen::Infinity>();
    if (scale == 0.0) {
      // 0 <= rhs must hold outright.
      if (qp.rows[i].rhs < -kFeasTol * (1.0 + std::abs(qp.rows[i].rhs))) {
        return QpSolution{};
      }
      continue;
    }
    live.push_back(i);
    rows.push_back(a / scale);
    rhs.push_back(qp.rows[i].rhs / scale);
    scales.push_back(scale);
  }
  const int r = static_cast<int>(live.size());

  // Parallel gradients make the KKT system singular, and a ray of force is
  // expressible through either row alone, so such pairs never need to be
  // active together.
  std::vector<bool> conflict(static_cast<size_t>(r) * r, false);
  for (int i = 0; i < r; ++i) {
    for (int j = i + 1; j < r; ++j) {
      const bool parallel = std::abs(rows[i].dot(rows[j])) >=
                            (1.0 - 1e-10) * rows[i].norm() * rows[j].norm();
      conflict[static_cast<size_t>(i) * r + j] = parallel;
      conflict[static_cast<size_t>(j) * r + i] = parallel;
    }
  }

  const Vector base_rhs = 2.0 * center;

  // Feasibility and multiplier-sign tests are relative: when the solution or
  // the right-hand sides are large, active rows re-evaluate with roundoff
  // proportional to the cancelled magnitudes, not to 1.
  auto primal_feasible = [&](const Vector& w) {
    const Vector wabs = w.cwiseAbs();
    for (int i = 0; i < r; ++i) {
      const double span = 1.0 + std::abs(rhs[i]) + rows[i].cwiseAbs().dot(wabs);
      if (rows[i].dot(w) > rhs[i] + kFeasTol * span) return false;
    }
    return true;
  };

  auto finish = [&](const Vector& w, const std::vector<int>& subset,
                    const Vector& lam_scaled) -> QpSolution {
    QpSolution sol;
    sol.w_star = w.cwiseQuotient(vscale);
    sol.multipliers = Vector::Zero(total_rows);
    Vector grad_rows = Vector::Zero(dim);
    for (size_t s = 0; s < subset.size(); ++s) {
      const int pos = subset[s];
      const double lam = lam_scaled[static_cast<int>(s)] / scales[pos];
      sol.multipliers[live[pos]] = lam;
      sol.active_set.push_back(live[pos]);
      grad_rows += lam * scales[pos] * rows[pos];
    }
    const Vector grad_cost = 2.0 * (w - center);
    const Vector stationarity = grad_cost + grad_rows;
    sol.kkt_residual =
        stationarity.lpNorm<Eigen::Infinity>() /
        (1.0 + grad_cost.lpNorm<Eigen::Infinity>() +
         grad_rows.lpNorm<Eigen::Infinity>());
    sol.status = QpStatus::ok;
    return sol;
  };

  // Unconstrained candidate first: the center itself.
  if (primal_feasible(center)) {
    return finish(center, {}, Vector());
  }

  bool skipped = false;
  const int max_k = std::min(r, dim);
  for (int k = 1; k <= max_k; ++k) {
    std::vector<int> subset(k);
    for (int i = 0; i < k; ++i) subset[i] = i;
    do {
      bool degenerate = false;
      for (int a = 0; a < k && !degenerate; ++a) {
        for (int b = a + 1; b < k; ++b) {
          if (conflict[static_cast<size_t>(subset[a]) * r + subset[b]]) {
            degenerate = true;
            break;
          }
        }
      }
      if (degenerate) continue;

      Matrix kkt = Matrix::Zero(dim + k, dim + k);
      kkt.topLeftCorner(dim, dim) = 2.0 * Matrix::Identity(dim, dim);
      Vector kkt_rhs(dim + k);
      kkt_rhs.head(dim) = base_rhs;
      for (int s = 0; s < k; ++s) {
        kkt.block(dim + s, 0, 1, dim) = rows[subset[s]].transpose();
        kkt.block(0, dim + s, dim, 1) = rows[subset[s]];
        kkt_rhs[dim + s] = rhs[subset[s]];
      }
      Eigen::PartialPivLU<Matrix> lu(kkt);
      // The 1-norm estimate behind rcond() can miss structured singularity,
      // so also gate on the pivot spread and on the solution being finite.
      const auto pivots = lu.matrixLU().diagonal().cwiseAbs();
      if (!(lu.rcond() > 1e-12) ||
          !(pivots.minCoeff() > 1e-14 * pivots.maxCoeff())) {
        skipped = true;
        continue;
      }
      Vector sol = lu.solve(kkt_rhs);
      if (!sol.allFinite()) {
        skipped = true;
        continue;
      }
      // Refinement balances the residual componentwise; without it, large
      // multipliers smear solve error onto the small primal entries and the
      // feasibility re-check rejects true optima.
      for (int pass = 0; pass < 2; ++pass) {
        const Vector resid = kkt_rhs - kkt * sol;
        const Vector corr = lu.solve(resid);
        if (!corr.allFinite()) break;
        sol += corr;
      }
      const Vector w = sol.head(dim);
      const Vector lam = sol.tail(k);
      const double lam_span = 1.0 + lam.cwiseAbs().maxCoeff();
      if ((lam.array() < -kMultTol * lam_span).any()) continue;
      if (!primal_feasible(w)) continue;
      QpSolution out = finish(w, subset, lam);
      if (!(out.kkt_residual <= kResidualTol)) {
        skipped = true;
        continue;
      }
      return out;
    } while (next_combination(subset, r));
  }

  QpSolution sol;
  sol.status = skipped ? QpStatus::ill_conditioned : QpStatus::infeasible;
  return sol;
}

}  // namespace gridscc
