#pragma once

#include "gridscc/linearization.hpp"
#include "gridscc/model.hpp"

namespace gridscc {

/// Quadratic stability certificate V(eta) = eta' P eta for the closed
/// transverse dynamics, with P the solution of A_cl' P + P A_cl = -Q.
struct ClfCertificate {
  Matrix P;      // symmetric positive definite, (n+2) x (n+2)
  Matrix Q;      // the chosen right-hand side, symmetric positive definite
  double alpha;  // decay coefficient on |eta|^2, 0 < alpha <= lambda_min(Q)
};

/// Reciprocal barriers B_j = 1 / b_j with b_j = -(v_j - lo_j)(v_j - hi_j):
/// positive inside the per-converter voltage box, blowing up at its edges.
struct CbfCertificate {
  double beta = 1.0;  // growth bound weight in B' <= beta / B
  Vector lo;          // per-converter floor [V]
  Vector hi;          // per-converter ceiling [V]
};

enum class RowKind { clf, cbf };

/// One inequality of the per-step program in the canonical form
///   coeff_u . u + coeff_delta . delta <= rhs.
/// Barrier rows carry no slack; the stability row is relaxed through delta
/// and stores its right-hand side before the piecewise scaling is applied.
struct ConstraintRow {
  Vector coeff_u;
  Vector coeff_delta;
  double rhs = 0.0;
  RowKind kind = RowKind::clf;
  int cbf_index = -1;  // converter index for barrier rows
};

/// Solves A' P + P A = -Q for symmetric positive definite Q and Hurwitz A
/// via the dense Kronecker-sum system, with radix-2 balancing and a
/// power-of-two time scaling so the vectorized system stays well
/// conditioned, plus iterative refinement in the scaled coordinates.
/// Throws std::invalid_argument for non-Hurwitz A or non-SPD Q and
/// NumericalError when the residual cannot be driven below 1e-10 |Q|_F.
Matrix solve_lyapunov(const Matrix& a_cl, const Matrix& q);

/// Builds and validates the stability certificate. An empty q selects the
/// identity. Requires 0 < alpha <= lambda_min(q).
ClfCertificate make_clf_certificate(const BrunovskyPair& bp, Matrix q, double alpha);

/// Builds the barrier certificate from the parameter safety box.
CbfCertificate make_cbf_certificate(const GridParams& p, double beta);

double clf_value(const Vector& eta, const ClfCertificate& cert);

struct CbfValue {
  double b;        // box polynomial, positive inside the safe interval
  double barrier;  // 1/b inside, +infinity on or outside the boundary
  bool inside;     // strict interior
};

CbfValue cbf_value(const GridState& s, int j, const CbfCertificate& cert);

/// Stability row: coeff_u = coeff_delta = L_g V = 2 eta' P g_eta and
/// rhs = -(L_f V + alpha |eta|^2). The controller rescales rhs by the
/// piecewise relaxation rule before handing the row to the optimizer.
ConstraintRow clf_row(const OutputCoords& oc, const OutputDynamics& od,
                      const ClfCertificate& cert);

/// Barrier row for converter j: keeps B_j' along the closed loop below
/// beta b_j. Single nonzero input coefficient at column j; the drift part
/// of B_j' is folded into the right-hand side. Throws std::domain_error
/// outside the strict interior of the box.
ConstraintRow cbf_row(const GridState& s, int j, const CbfCertificate& cert,
                      const GridParams& p);

}  // namespace gridscc
