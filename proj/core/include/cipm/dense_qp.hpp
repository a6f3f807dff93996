#pragma once

#include "cipm/problem.hpp"

namespace cipm::qp {

/// minimize 0.5 x'Qx + c'x  subject to  Gx <= h,  Ax = b.
struct Problem {
  Matrix Q;
  Vector c;
  Matrix G;
  Vector h;
  Matrix A;
  Vector b;
};

struct Settings {
  /// Relative tolerance on residuals and on the complementarity gap.
  double tol = 1e-10;
  int max_iter = 200;
  /// Iterative-refinement passes per Newton solve.
  int refine = 2;
};

struct Solution {
  Vector x;
  /// Slack h - Gx.
  Vector s;
  /// Inequality multipliers.
  Vector z;
  /// Equality multipliers.
  Vector y;
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
};

/// Dense primal-dual interior-point method with Mehrotra's predictor-corrector
/// step. Starts from x = 0, s = max(1, h - Gx), z = 1 and does not need a
/// feasible start. Throws NumericalError if the Newton system breaks down.
Solution solve(const Problem& problem, const Settings& settings = {});

/// Optimality residuals at a solution: max of the scaled dual, primal and
/// complementarity residuals.
double kkt_residual(const Problem& problem, const Solution& sol);

}  // namespace cipm::qp
