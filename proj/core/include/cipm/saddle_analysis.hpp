#pragma once

#include <vector>

#include "cipm/admm_directions.hpp"
#include "cipm/dense_qp.hpp"
#include "cipm/kkt.hpp"

namespace cipm::saddle {

// Variables of the splitting form
//
//   minimize F1(dW) + F2(dx)  subject to  A dW + B dx = c,
//   F1(dW) = 0.5 dW' F1 dW + f1' dW,  F2(dx) = f2' dx,
//
// with F1 = blkdiag(H_pd^i), f1 = (r^i), f2 = -sum_i E_i' v_c^i,
// A = [blkdiag(A_eq^i); I], B = [0; -E], c = -[(r_p2^i); (r_c^i)].
// The scaled dual u = (dv, dv_c) / rho. Conversions to the coupled system:
//
//   A_KKT = D K D and b_KKT = D rhs with D = diag(I, I, rho I),
//   dv = rho u_eq, dv_c = rho u_c,
//
// and to the ADMM state: u_eq = dv_bar, u_c = dvc_bar (stacked by agent).
struct SaddleSystem {
  Matrix A_kkt;
  Vector b_kkt;
  Matrix F1;
  Vector f1;
  Vector f2;
  Matrix A;
  Matrix B;
  Vector c;
  double rho = 0.0;
  Index nW = 0;
  Index nx = 0;
  Index nu = 0;
  /// Rows of the equality block inside u.
  Index n_eq = 0;

  Index size() const { return nW + nx + nu; }
};

/// Dense assembly at iterate z. Refuses systems with more than 4000 unknowns.
SaddleSystem assemble(const CoupledProblem& problem, const Iterate& z, double mu, double rho);

/// Solves A_KKT y = b_KKT by partial-pivot LU. Throws SingularSystemError if
/// the reciprocal condition estimate falls below 1e-14 or the residual check
/// fails.
Vector direct_solve(const SaddleSystem& system);

/// Stacked (dW, dx, u) of an ADMM state.
Vector stack_state(const admm::DirectionState& state);

/// Direction from a stacked (dW, dx, u) vector, with ds and dlambda recovered.
Direction to_direction(const CoupledProblem& problem, const Iterate& z, double mu, const SaddleSystem& system,
                       const Vector& stacked);

struct FixedPointForm {
  Matrix G;
  Vector f;
  Matrix M1;
  Matrix M2;
  Vector m1;
  Vector m2;
};

/// G and f from their block formulas, with M1 = (F1 + rho A'A)^{-1} and
/// M2 = (rho B'B)^{-1}, m1 = -f1 + rho A'c, m2 = -f2 + rho B'c.
FixedPointForm fixed_point_form(const SaddleSystem& system);

/// [F1, -rho A'B, rho A'; 0, 0, rho B'; rho A, rho B, -rho I].
Matrix preconditioner1(const SaddleSystem& system);
/// [I, 0, -A'; 0, I, -B'; 0, 0, I].
Matrix preconditioner2(const SaddleSystem& system);

/// Optimality system of the augmented problem:
/// [M1^{-1}, rho A'B, rho A'; rho B'A, M2^{-1}, rho B'; rho A, rho B, 0] y = [m1; m2; rho c].
struct AugmentedSystem {
  Matrix A;
  Vector b;
};
AugmentedSystem augmented_system(const SaddleSystem& system, const FixedPointForm& form);

/// One block Gauss-Seidel sweep on the primal Uzawa system from (W_k, x_k)
/// with dual u_k, using the closed form of the lower-triangular solve.
/// Returns (W_{k+1}, x_{k+1}) stacked.
Vector gauss_seidel_sweep(const SaddleSystem& system, const FixedPointForm& form, const Vector& W_k,
                          const Vector& x_k, const Vector& u_k);

/// Same sweep computed by explicitly solving with the lower block
/// triangle [M1^{-1}, 0; rho B'A, M2^{-1}].
Vector gauss_seidel_sweep_explicit(const SaddleSystem& system, const FixedPointForm& form, const Vector& W_k,
                                   const Vector& x_k, const Vector& u_k);

/// True if, for every consecutive pair of stacked ADMM states in the trace,
/// the Gauss-Seidel sweep reproduces the next primal pair within tol.
bool gauss_seidel_check(const SaddleSystem& system, const std::vector<Vector>& admm_trace, double tol);

/// Largest eigenvalue modulus, from a full eigendecomposition.
double spectral_radius(const Matrix& G);

/// Centralized QP on the global variable, for reference optima.
qp::Problem global_qp(const CoupledProblem& problem);

struct OracleSolution {
  Vector x;
  double objective = 0.0;
  int iterations = 0;
};

/// Solves the global QP with the dense interior-point method; includes the
/// constant terms e_i in the objective. Throws NumericalError on failure.
OracleSolution solve_oracle(const CoupledProblem& problem, double tol = 1e-11);

}  // namespace cipm::saddle
