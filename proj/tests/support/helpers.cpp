#include "helpers.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace gridscc::testing {

double uniform(Rng& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

Matrix lyapunov_schur(const Matrix& a, const Matrix& q) {
  using CMatrix = Eigen::MatrixXcd;
  const Eigen::Index n = a.rows();
  Eigen::ComplexSchur<Matrix> schur(a);
  if (schur.info() != Eigen::Success) {
    throw std::runtime_error("lyapunov_schur: schur decomposition failed");
  }
  const CMatrix u = schur.matrixU();
  const CMatrix t = schur.matrixT();
  const CMatrix qt = u.adjoint() * q.cast<std::complex<double>>() * u;

  // T^H Y + Y T = -Q~ column by column; T^H + T_kk I is lower triangular.
  CMatrix y = CMatrix::Zero(n, n);
  const CMatrix th = t.adjoint();
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::VectorXcd rhs = -qt.col(k);
    for (Eigen::Index j = 0; j < k; ++j) rhs -= y.col(j) * t(j, k);
    CMatrix lhs = th;
    lhs.diagonal().array() += t(k, k);
    y.col(k) = lhs.triangularView<Eigen::Lower>().solve(rhs);
  }
  const CMatrix x = u * y * u.adjoint();
  Matrix p = x.real();
  return 0.5 * (p + p.transpose());
}

Matrix expm(const Matrix& a) { return a.exp(); }

namespace {

// Stacks [coeff_u; coeff_delta] rows into one dense constraint matrix.
Matrix row_matrix(const QpProblem& qp) {
  const int dim = qp.dim();
  Matrix r(static_cast<Eigen::Index>(qp.rows.size()), dim);
  for (size_t i = 0; i < qp.rows.size(); ++i) {
    const auto& row = qp.rows[i];
    Vector full(dim);
    full << row.coeff_u, row.coeff_delta;
    r.row(static_cast<Eigen::Index>(i)) = full.transpose();
  }
  return r;
}

Vector rhs_vector(const QpProblem& qp) {
  Vector b(static_cast<Eigen::Index>(qp.rows.size()));
  for (size_t i = 0; i < qp.rows.size(); ++i) b[static_cast<Eigen::Index>(i)] = qp.rows[i].rhs;
  return b;
}

}  // namespace

Vector qp_dual_gradient(const QpProblem& qp, int iters) {
  const Matrix r = row_matrix(qp);
  const Vector b = rhs_vector(qp);
  const Vector d = qp.hessian_diag;
  const Vector c = qp.linear_center;
  if (r.rows() == 0) return c;

  // w(l) = c - D^-1 R' l / 2, dual gradient R w(l) - b, step 1/||R D^-1 R'/2||.
  const Matrix h = r * d.cwiseInverse().asDiagonal() * r.transpose() * 0.5;
  const double lip = std::max(h.operatorNorm(), 1e-12);
  const double step = 1.0 / lip;

  Vector lam = Vector::Zero(r.rows());
  Vector mom = lam;
  double tk = 1.0;
  for (int it = 0; it < iters; ++it) {
    const Vector w = c - 0.5 * d.cwiseInverse().asDiagonal() * (r.transpose() * mom);
    const Vector grad = r * w - b;
    Vector next = (mom + step * grad).cwiseMax(0.0);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    mom = next + ((tk - 1.0) / tn) * (next - lam);
    mom = mom.cwiseMax(0.0);
    lam = std::move(next);
    tk = tn;
  }
  return c - 0.5 * d.cwiseInverse().asDiagonal() * (r.transpose() * lam);
}

ExhaustiveResult qp_exhaustive(const QpProblem& qp) {
  const Matrix r = row_matrix(qp);
  const Vector b = rhs_vector(qp);
  const int dim = qp.dim();
  const int m = static_cast<int>(qp.rows.size());
  const double feas_tol = 1e-9;

  ExhaustiveResult best;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < m; ++i) {
      if (mask & (1u << i)) act.push_back(i);
    }
    if (static_cast<int>(act.size()) > dim) continue;

    const int k = static_cast<int>(act.size());
    Matrix kkt = Matrix::Zero(dim + k, dim + k);
    Vector rhs(dim + k);
    kkt.topLeftCorner(dim, dim) = (2.0 * qp.hessian_diag).asDiagonal();
    rhs.head(dim) = 2.0 * qp.hessian_diag.cwiseProduct(qp.linear_center);
    for (int i = 0; i < k; ++i) {
      kkt.block(dim + i, 0, 1, dim) = r.row(act[static_cast<size_t>(i)]);
      kkt.block(0, dim + i, dim, 1) = r.row(act[static_cast<size_t>(i)]).transpose();
      rhs[dim + i] = b[act[static_cast<size_t>(i)]];
    }
    Eigen::FullPivLU<Matrix> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Vector sol = lu.solve(rhs);
    const Vector w = sol.head(dim);
    const Vector nu = sol.tail(k);
    if ((nu.array() < -1e-9).any()) continue;
    const double scale = 1.0 + b.cwiseAbs().maxCoeff() + (r * w).cwiseAbs().maxCoeff();
    if (((r * w - b).array() > feas_tol * scale).any()) continue;
    const double cost = qp_cost(qp, w);
    if (!best.feasible || cost < best.cost - 1e-14 * (1.0 + std::abs(best.cost))) {
      best.feasible = true;
      best.w = w;
      best.cost = cost;
    }
  }
  return best;
}

double qp_cost(const QpProblem& qp, const Vector& w) {
  const Vector d = w - qp.linear_center;
  return d.cwiseProduct(d).dot(qp.hessian_diag);
}

double qp_max_violation(const QpProblem& qp, const Vector& w) {
  const Matrix r = row_matrix(qp);
  if (r.rows() == 0) return 0.0;
  return ((r * w - rhs_vector(qp)).array().max(0.0)).maxCoeff();
}

QpProblem random_qp(Rng& rng, int max_dim, int max_rows) {
  const int dim = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_dim));
  const int rows = static_cast<int>(rng() % static_cast<unsigned>(max_rows + 1));
  const int nu = 1 + (dim > 1 ? static_cast<int>(rng() % static_cast<unsigned>(dim)) : 0);
  const int nd = dim - nu;

  QpProblem qp;
  qp.hessian_diag = Vector(dim);
  qp.linear_center = Vector(dim);
  for (int i = 0; i < dim; ++i) {
    qp.hessian_diag[i] = uniform(rng, 0.3, 4.0);
    qp.linear_center[i] = uniform(rng, -2.0, 2.0);
  }
  Vector anchor(dim);
  for (int i = 0; i < dim; ++i) anchor[i] = uniform(rng, -1.5, 1.5);
  for (int i = 0; i < rows; ++i) {
    ConstraintRow row;
    row.coeff_u = Vector(nu);
    row.coeff_delta = Vector(nd);
    Vector full(dim);
    for (int k = 0; k < dim; ++k) full[k] = uniform(rng, -1.0, 1.0);
    if (full.cwiseAbs().maxCoeff() < 1e-3) full[0] = 1.0;
    row.coeff_u = full.head(nu);
    row.coeff_delta = full.tail(nd);
    // Mostly feasible around the anchor; occasional cuts through the center.
    const double slack = uniform(rng, -0.2, 1.5);
    row.rhs = full.dot(anchor) + slack;
    row.kind = i == 0 ? RowKind::clf : RowKind::cbf;
    row.cbf_index = row.kind == RowKind::cbf ? i - 1 : -1;
    qp.rows.push_back(std::move(row));
  }
  return qp;
}

Matrix random_hurwitz(Rng& rng, int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = uniform(rng, -1.0, 1.0);
  }
  m *= uniform(rng, 0.5, 3.0);
  const Eigen::EigenSolver<Matrix> eig(m);
  const double shift = eig.eigenvalues().real().maxCoeff();
  m.diagonal().array() -= shift + uniform(rng, 0.3, 2.5);
  return m;
}

Matrix random_spd(Rng& rng, int n) {
  Matrix g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = uniform(rng, -1.0, 1.0);
  }
  Matrix q = g.transpose() * g;
  q.diagonal().array() += uniform(rng, 0.2, 1.5);
  const double scale = std::pow(10.0, uniform(rng, -1.5, 1.5));
  return scale * q;
}

GridParams random_params(Rng& rng, int n) {
  GridParams p;
  p.cap = Vector(n);
  p.res = Vector(n);
  p.ind = Vector(n);
  for (int j = 0; j < n; ++j) {
    p.cap[j] = uniform(rng, 2e-4, 8e-4);
    p.res[j] = uniform(rng, 6e-3, 3e-2);
    p.ind[j] = uniform(rng, 5e-5, 1.5e-4);
  }
  p.cap_load = uniform(rng, 2e-4, 9e-4);
  p.res_load = uniform(rng, 1.0, 4.0);
  p.p_load = uniform(rng, 300.0, 2000.0);
  p.v_cpl_min = 5.0;
  p.v_safe_lo = Vector::Constant(n, 5.0);
  p.v_safe_hi = Vector::Constant(n, 50.0);
  return p;
}

GridParams benchmark_params() {
  GridParams p;
  p.cap = Vector(5);
  p.cap << 0.49e-3, 0.47e-3, 0.49e-3, 0.57e-3, 0.47e-3;
  p.ind = Vector(5);
  p.ind << 0.09e-3, 0.08e-3, 0.09e-3, 0.09e-3, 0.08e-3;
  p.res = Vector(5);
  p.res << 8.78e-3, 17.78e-3, 16.78e-3, 19.78e-3, 27.78e-3;
  p.cap_load = 0.47e-3;
  p.res_load = 1.5;
  p.p_load = 1875.0;
  p.v_cpl_min = 5.0;
  p.v_safe_lo = Vector::Constant(5, 5.0);
  p.v_safe_hi = Vector::Constant(5, 50.0);
  return p;
}

GridState benchmark_start() {
  Vector x(11);
  x << 39.37, 14.61, 46.37, 15.71, 9.37, 16.94, 39.37, 13.61, 46.37, 8.25, 9.0;
  return GridState(x);
}

GridState random_admissible_state(Rng& rng, const GridParams& p, double margin) {
  const int n = p.n();
  GridState s(Vector(2 * n + 1));
  for (int j = 0; j < n; ++j) {
    s.v(j) = uniform(rng, p.v_safe_lo[j] + margin, p.v_safe_hi[j] - margin);
    s.line_current(j) = uniform(rng, -20.0, 40.0);
  }
  s.bus_voltage() = uniform(rng, p.v_cpl_min + 1.0, p.v_safe_hi.maxCoeff() - 2.0);
  return s;
}

double fit_log_slope(const std::vector<double>& t, const std::vector<double>& y) {
  double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
  int m = 0;
  for (size_t i = 0; i < t.size(); ++i) {
    const double a = std::abs(y[i]);
    if (!(a > 0.0) || !std::isfinite(a)) continue;
    const double l = std::log(a);
    st += t[i];
    sl += l;
    stt += t[i] * t[i];
    stl += t[i] * l;
    ++m;
  }
  if (m < 2) throw std::runtime_error("fit_log_slope: not enough usable points");
  const double denom = m * stt - st * st;
  return (m * stl - st * sl) / denom;
}

}  // namespace gridscc::testing
