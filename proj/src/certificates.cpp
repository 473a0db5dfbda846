#include "gridscc/certificates.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "gridscc/errors.hpp"

namespace gridscc {

namespace {

void check_spd(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(std::string(name) + " must be square");
  }
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument(std::string(name) + " must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 0.0)) {
    throw std::invalid_argument(std::string(name) + " must be positive definite");
  }
}

void check_hurwitz(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a, false);
  if (!(es.eigenvalues().real().maxCoeff() < 0.0)) {
    throw std::invalid_argument("solve_lyapunov: matrix is not Hurwitz");
  }
}

// Kronecker-sum coefficient matrix of X -> A'X + XA acting on vec(X)
// (column-major stacking): I (x) A' + A' (x) I.
Matrix kron_sum(const Matrix& a) {
  const int d = static_cast<int>(a.rows());
  Matrix m = Matrix::Zero(d * d, d * d);
  for (int c = 0; c < d; ++c) {
    for (int r = 0; r < d; ++r) {
      const int row = c * d + r;
      for (int k = 0; k < d; ++k) {
        m(row, c * d + k) += a(k, r);
        m(row, k * d + r) += a(k, c);
      }
    }
  }
  return m;
}

}  // namespace

Matrix solve_lyapunov(const Matrix& a_cl, const Matrix& q) {
  const int d = static_cast<int>(a_cl.rows());
  if (a_cl.cols() != d || q.rows() != d || q.cols() != d || d < 1) {
    throw std::invalid_argument("solve_lyapunov: dimension mismatch");
  }
  check_spd(q, "solve_lyapunov: Q");
  check_hurwitz(a_cl);

  // Osborne balancing restricted to radix-2 factors: the similarity scaling
  // D is exact in binary floating point, so it can be undone without error.
  Matrix ab = a_cl;
  Vector dscale = Vector::Ones(d);
  for (int sweep = 0; sweep < 20; ++sweep) {
    bool changed = false;
    for (int i = 0; i < d; ++i) {
      double col = 0.0, row = 0.0;
      for (int k = 0; k < d; ++k) {
        if (k == i) continue;
        col += std::abs(ab(k, i));
        row += std::abs(ab(i, k));
      }
      if (col == 0.0 || row == 0.0) continue;
      const double f = std::exp2(std::round(0.5 * std::log2(row / col)));
      if (f == 1.0 || !std::isfinite(f) || f == 0.0) continue;
      dscale[i] *= f;
      ab.col(i) *= f;
      ab.row(i) /= f;
      changed = true;
    }
    if (!changed) break;
  }

  // Power-of-two time scaling keeps the Kronecker system near unit norm.
  const double norm = ab.cwiseAbs().rowwise().sum().maxCoeff();
  const double time_scale = std::exp2(std::round(std::log2(norm)));
  const Matrix as = ab / time_scale;

  Matrix qs(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      qs(i, j) = dscale[i] * q(i, j) * dscale[j] / time_scale;
    }
  }

  const Matrix m = kron_sum(as);
  Eigen::PartialPivLU<Matrix> lu(m);
  using VecMap = Eigen::Map<const Vector>;
  Vector vec_p = lu.solve(-VecMap(qs.data(), d * d));
  Matrix pb = Eigen::Map<Matrix>(vec_p.data(), d, d);
  pb = 0.5 * (pb + pb.transpose()).eval();

  // Refine in scaled coordinates but judge convergence on the original
  // equation: its residual keeps shrinking after the scaled one saturates,
  // because unscaling reweights the error entries by up to 1/dscale^2.
  const auto unscale = [&](const Matrix& s) {
    Matrix out(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) out(i, j) = s(i, j) / (dscale[i] * dscale[j]);
    }
    return out;
  };
  Matrix best_p = unscale(pb);
  double best = (a_cl.transpose() * best_p + best_p * a_cl + q).norm();
  // Forming A'P + PA alone loses eps * |A| * |P|, so the achievable residual
  // floor scales with the data, not with Q alone.
  const double gate =
      1e-10 * (q.norm() + 2.0 * a_cl.norm() * best_p.norm());
  for (int pass = 0; pass < 8 && best > 0.25 * gate; ++pass) {
    const Matrix residual = -qs - (as.transpose() * pb + pb * as);
    Vector corr = lu.solve(VecMap(residual.data(), d * d));
    pb += Eigen::Map<Matrix>(corr.data(), d, d);
    pb = 0.5 * (pb + pb.transpose()).eval();

    const Matrix p = unscale(pb);
    const double res = (a_cl.transpose() * p + p * a_cl + q).norm();
    if (res < best) {
      best = res;
      best_p = p;
    }
  }

  if (!(best <= gate)) {
    throw NumericalError("solve_lyapunov: residual above tolerance");
  }
  return best_p;
}

ClfCertificate make_clf_certificate(const BrunovskyPair& bp, Matrix q, double alpha) {
  const int dim = static_cast<int>(bp.A_cl.rows());
  if (q.size() == 0) q = Matrix::Identity(dim, dim);
  check_spd(q, "clf certificate: Q");
  Eigen::SelfAdjointEigenSolver<Matrix> es(q, Eigen::EigenvaluesOnly);
  const double lambda_min = es.eigenvalues().minCoeff();
  if (!(alpha > 0.0) || alpha > lambda_min * (1.0 + 1e-12)) {
    throw std::invalid_argument(
        "clf certificate: need 0 < alpha <= lambda_min(Q)");
  }

  ClfCertificate cert{solve_lyapunov(bp.A_cl, q), std::move(q), alpha};
  Eigen::SelfAdjointEigenSolver<Matrix> esp(cert.P, Eigen::EigenvaluesOnly);
  if (!(esp.eigenvalues().minCoeff() > 0.0)) {
    throw NumericalError("clf certificate: P not positive definite");
  }
  return cert;
}

CbfCertificate make_cbf_certificate(const GridParams& p, double beta) {
  p.validate();
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("cbf certificate: beta must be positive");
  }
  return CbfCertificate{beta, p.v_safe_lo, p.v_safe_hi};
}

double clf_value(const Vector& eta, const ClfCertificate& cert) {
  return eta.dot(cert.P * eta);
}

CbfValue cbf_value(const GridState& s, int j, const CbfCertificate& cert) {
  const double v = s.v(j);
  const double b = -(v - cert.lo[j]) * (v - cert.hi[j]);
  const bool inside = b > 0.0;
  const double barrier =
      inside ? 1.0 / b : std::numeric_limits<double>::infinity();
  return CbfValue{b, barrier, inside};
}

ConstraintRow clf_row(const OutputCoords& oc, const OutputDynamics& od,
                      const ClfCertificate& cert) {
  const Vector p_eta = cert.P * oc.eta;
  const double lf_v = 2.0 * p_eta.dot(od.f_eta);
  const Vector lg_v = 2.0 * (od.g_eta.transpose() * p_eta);

  ConstraintRow row;
  row.coeff_u = lg_v;
  row.coeff_delta = lg_v;
  row.rhs = -(lf_v + cert.alpha * oc.eta.squaredNorm());
  row.kind = RowKind::clf;
  return row;
}

ConstraintRow cbf_row(const GridState& s, int j, const CbfCertificate& cert,
                      const GridParams& p) {
  const CbfValue val = cbf_value(s, j, cert);
  if (!val.inside) {
    throw std::domain_error("cbf_row: state outside the safe set interior");
  }
  const double v = s.v(j);
  const double slope = (v - cert.lo[j]) + (v - cert.hi[j]);  // d(-b)/dv
  const double factor = slope / (val.b * val.b);
  const double lf_b = factor * (-s.line_current(j) / p.cap[j]);

  ConstraintRow row;
  row.coeff_u = Vector::Zero(p.n());
  row.coeff_u[j] = factor / p.cap[j];
  row.coeff_delta = Vector::Zero(p.n());
  row.rhs = cert.beta * val.b - lf_b;
  row.kind = RowKind::cbf;
  row.cbf_index = j;
  return row;
}

}  // namespace gridscc
