#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "cipm/problem.hpp"

namespace cipm {

/// Primal-dual variables owned by one agent.
struct AgentPoint {
  Vector w;
  Vector s;
  Vector lambda;
  Vector v;
  /// Consistency dual, unscaled.
  Vector v_c;
};

/// Full primal-dual point z = (W, x, s, lambda, v, v_c).
struct Iterate {
  Vector x;
  std::vector<AgentPoint> agents;
};

struct AgentDirection {
  Vector dw;
  Vector ds;
  Vector dlambda;
  Vector dv;
  Vector dv_c;
};

struct Direction {
  Vector dx;
  std::vector<AgentDirection> agents;
};

/// Per-agent residual blocks of the unperturbed KKT map H.
struct ResidualBundle {
  /// 2Pw + q + A_in'lambda + A_eq'v + v_c.
  Vector r_dual;
  /// A_in w + b_in + s.
  Vector r_primal1;
  /// A_eq w - b_eq.
  Vector r_primal2;
  /// w - x_J.
  Vector r_c;
  /// Lambda s.
  Vector r_cent;
  /// s'lambda.
  double eta_hat = 0.0;
  /// ||H^i||^2 over all five blocks.
  double merit_sq = 0.0;

  double primal_sq() const {
    return r_primal1.squaredNorm() + r_primal2.squaredNorm() + r_c.squaredNorm();
  }
  double dual_sq() const { return r_dual.squaredNorm(); }
  /// ||R^i||^2: the merit without the centrality block.
  double residual_sq() const { return primal_sq() + dual_sq(); }
};

/// Throws DomainError unless every entry of s and lambda is positive.
void check_interior(const AgentPoint& p);

ResidualBundle agent_residuals(const AgentSubproblem& sub, const AgentPoint& p, const Vector& x_J);
std::vector<ResidualBundle> all_residuals(const CoupledProblem& problem, const Iterate& z);

/// 2P + A_in' diag(lambda / s) A_in, symmetrized.
Matrix hpd(const AgentSubproblem& sub, const AgentPoint& p);

/// Right-hand side term r of the condensed system:
/// r_dual + A_in' S^{-1} (Lambda r_primal1 - r_cent + mu e).
Vector r_vec(const AgentSubproblem& sub, const ResidualBundle& bundle, const AgentPoint& p, double mu);

/// Back-substitution of the eliminated rows:
///   ds = -A_in dw - r_primal1,  dlambda = S^{-1}(mu e - r_cent - Lambda ds).
std::pair<Vector, Vector> recover_sl_directions(const AgentSubproblem& sub, const AgentPoint& p,
                                                const ResidualBundle& bundle, const Vector& dw,
                                                double mu);

double merit_norm_sq(std::span<const ResidualBundle> bundles);
double surrogate_gap(std::span<const ResidualBundle> bundles);

/// sum_i E_{J_i}' v_c^i, which must stay zero along the iterates.
Vector consistency_dual_sum(const CoupledProblem& problem, const Iterate& z);

struct DenseKkt {
  /// Unknown ordering: [dW (stacked by agent); dx; dv (stacked); dv_c (stacked)].
  Matrix K;
  Vector rhs;
};

/// Dense assembly of the coupled condensed system. Oracle use only; refuses
/// problems with more than 2000 global variables.
DenseKkt dense_kkt(const CoupledProblem& problem, const Iterate& z, double mu);

/// Splits a solution vector of dense_kkt into a Direction, recovering ds and
/// dlambda agent by agent.
Direction direction_from_stacked(const CoupledProblem& problem, const Iterate& z, double mu,
                                 const Vector& solution);

/// Default starting point: x ~ U(-10, 10), w_i = x_{J_i}, lambda = v = 10,
/// v_c = 0 and s = max(1, -(A_in w + b_in)) elementwise.
Iterate initial_iterate(const CoupledProblem& problem, std::uint64_t seed);

/// z + alpha dz.
Iterate advance(const Iterate& z, const Direction& d, double alpha);
AgentPoint advance(const AgentPoint& p, const AgentDirection& d, double alpha);

/// Objective value at the local copies of z.
double objective(const CoupledProblem& problem, const Iterate& z);

/// Throws StructuralError if z does not match the problem's dimensions.
void check_dimensions(const CoupledProblem& problem, const Iterate& z);

}  // namespace cipm
