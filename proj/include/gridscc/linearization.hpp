#pragma once

#include <complex>
#include <vector>

#include "gridscc/equilibrium.hpp"
#include "gridscc/model.hpp"

namespace gridscc {

/// State of the plant rewritten in output coordinates. The transverse part
/// eta = (h0, h0', h0'', h_1 .. h_{n-1}) stacks the bus voltage error with
/// its first two time derivatives followed by the adjacent converter voltage
/// differences; the internal part zee holds the resistance-weighted line
/// current differences z_k = R_k i_k - R_{k+1} i_{k+1}. Both vanish at the
/// equilibrium. jac is the Jacobian of (eta; zee) with respect to x and is
/// invertible wherever the load sits in its constant-power branch.
struct OutputCoords {
  Vector eta;  // size n + 2
  Vector zee;  // size n - 1
  Matrix jac;  // (2n+1) x (2n+1)
};

/// Dynamics of the transverse coordinates: eta' = f_eta + g_eta u. The first
/// two rows of g_eta vanish (the bus error must be differentiated three times
/// before the input appears); the reduced blocks keep only the n rows the
/// input reaches, and g_eta_reduced is invertible for positive parameters.
struct OutputDynamics {
  Vector f_eta;          // size n + 2
  Matrix g_eta;          // (n+2) x n
  Vector f_eta_reduced;  // size n
  Matrix g_eta_reduced;  // n x n
};

/// Closed-loop pole choice: three poles for the bus-error chain, one real
/// pole per voltage-difference channel.
struct PoleSpec {
  std::vector<std::complex<double>> chain;  // size 3, closed under conjugation
  std::vector<double> channels;             // size n - 1, negative reals

  static PoleSpec defaults(int n);
};

/// Brunovsky-form pair (F, G) for one chain of length 3 plus n - 1 single
/// integrator channels, with the state feedback K placing the prescribed
/// poles and A_cl = F + G K.
struct BrunovskyPair {
  Matrix F;     // (n+2) x (n+2)
  Matrix G;     // (n+2) x n
  Matrix K;     // n x (n+2)
  Matrix A_cl;  // (n+2) x (n+2)
};

/// Transforms a plant state to output coordinates.
/// Throws std::domain_error when the bus voltage is at or below the load
/// branch point, where the constant-power expressions no longer apply.
OutputCoords outputs(const GridState& s, const Equilibrium& eq, const GridParams& p);

/// Lie-derivative data of the transverse coordinates at a state.
/// Domain guard as in outputs(); throws NumericalError when the reduced
/// input block is numerically singular (condition estimate above 1e12).
OutputDynamics output_dynamics(const GridState& s, const Equilibrium& eq,
                               const GridParams& p);

/// Builds the Brunovsky pair and pole-placing feedback for an n-converter
/// grid. Throws std::invalid_argument for poles that are not strictly in the
/// open left half plane or a chain that is not closed under conjugation.
BrunovskyPair make_brunovsky(int n, const PoleSpec& poles);

/// Exact linearizing input u = g_eta_reduced^{-1} (K eta - f_eta_reduced),
/// which renders the transverse dynamics linear with poles per the pair.
ControlInput feedback_linearizing_control(const GridState& s, const Equilibrium& eq,
                                          const BrunovskyPair& bp,
                                          const GridParams& p);

/// Decay rate -(R_1 + R_2) / (L_1 + L_2) of the internal coordinate
/// z = R_1 i_1 - R_2 i_2 for a two-converter grid built from lines j and
/// j + 1. For more than two converters the internal dynamics couple all
/// lines and no single line pair owns one eigenvalue.
double pair_decay_rate(const GridParams& p, int j);

}  // namespace gridscc
