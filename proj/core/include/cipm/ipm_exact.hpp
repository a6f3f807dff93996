#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cipm/admm_directions.hpp"
#include "cipm/kkt.hpp"
#include "cipm/netsim.hpp"
#include "cipm/report.hpp"

namespace cipm {

/// Residuals of agent i at (z_i + alpha dz_i, x_J + alpha dx_J).
ResidualBundle trial_residuals(const AgentSubproblem& sub, const AgentPoint& p, const Vector& x_J,
                               const AgentDirection& d, const Vector& dx_J, double alpha);

/// True if s + alpha ds and lambda + alpha dlambda are strictly positive.
bool stays_interior(const AgentPoint& p, const AgentDirection& d, double alpha);

}  // namespace cipm

namespace cipm::exact {

struct Params {
  double sigma = 0.1;
  /// Backtracking factor.
  double beta = 0.5;
  /// Sufficient-decrease constant.
  double gamma_ls = 0.01;
  /// Gap and feasibility tolerances; nonpositive means tolerance_scale(problem).
  double eps = 0.0;
  double eps_feas = 0.0;
  double rho = 0.5;
  double alpha_or = 1.0;
  /// Fixed inner tolerances, the same for every agent.
  double eps_pri = 2.5e-19;
  double eps_dual = 2.5e-19;
  int max_outer = 200;
  int max_inner = 10000;
  bool warm_start = true;

  void validate() const;
};

/// mu = sigma * min_i eta_hat_i / m_total, with the minimum taken by
/// min-consensus when a network is given.
double perturbation(std::span<const double> eta_hat, double sigma, int m_total, Network* network = nullptr);

/// Agent step length: start at 0.99 of the largest step keeping lambda >= 0
/// (capped at 1), shrink by beta until s stays positive, then until
/// ||H^i(alpha)||^2 <= (1 - gamma alpha)^2 ||H^i(0)||^2. Throws NumericalError
/// once alpha drops below 1e-16.
double local_step(const AgentSubproblem& sub, const AgentPoint& p, const Vector& x_J, const AgentDirection& d,
                  const Vector& dx_J, double beta, double gamma_ls);

struct OuterEvent {
  int l = 0;
  const Iterate* z = nullptr;
  const std::vector<ResidualBundle>* bundles = nullptr;
  const Direction* direction = nullptr;
  const admm::Result* admm = nullptr;
  double mu = 0.0;
  double alpha = 0.0;
};

using OuterObserver = std::function<void(const OuterEvent&)>;

/// Distributed exact primal-dual interior-point method. Agents terminate
/// once the shared stop test holds for all of them.
SolveReport solve(const CoupledProblem& problem, const Iterate& init, const Params& params,
                  Network* network = nullptr, const OuterObserver& observer = {},
                  const admm::InnerObserver& inner_observer = {});

}  // namespace cipm::exact
