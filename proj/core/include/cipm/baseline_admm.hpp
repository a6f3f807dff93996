#pragma once

#include <functional>
#include <vector>

#include "cipm/dense_qp.hpp"
#include "cipm/kkt.hpp"
#include "cipm/netsim.hpp"
#include "cipm/report.hpp"

namespace cipm::baseline {

struct Params {
  double rho = 0.5;
  double eps = 0.0;
  double eps_feas = 0.0;
  int max_iter = 5000;
  qp::Settings local{1e-10, 200};

  void validate() const;
};

/// Solution of one agent's proximal subproblem together with its
/// constraint multipliers.
struct LocalSolution {
  Vector w;
  Vector s;
  Vector lambda;
  Vector v;
  int iterations = 0;
};

/// minimize w'Pw + q'w + e + (rho/2)||w - x_J + vbar_c||^2
/// subject to A_in w + b_in <= 0, A_eq w = b_eq, by the dense interior-point
/// solver. Throws NumericalError naming the agent if it does not converge.
LocalSolution local_qp(const AgentSubproblem& sub, const Vector& x_J, const Vector& vbar_c, double rho,
                       const qp::Settings& settings = {1e-10, 200});

struct State {
  std::vector<Vector> w;
  Vector x;
  /// Scaled consistency duals.
  std::vector<Vector> vbar_c;
  int k = 0;
};

using IterationObserver = std::function<void(const State&, const Iterate&)>;

/// Consensus ADMM on the original problem: local QPs, owner averaging
/// x_j = mean(w + vbar_c), then vbar_c += w - x_J. After each iteration an
/// iterate is synthesized from the local multipliers (v_c = rho vbar_c) and
/// checked with the shared stop test. The inner count of an iteration is the
/// largest local interior-point iteration count over agents.
SolveReport solve(const CoupledProblem& problem, const Iterate& init, const Params& params,
                  Network* network = nullptr, const IterationObserver& observer = {});

}  // namespace cipm::baseline
