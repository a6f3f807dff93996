#pragma once

#include <cstdint>

#include "cipm/kkt.hpp"
#include "cipm/problem.hpp"
#include "cipm/random.hpp"

namespace cipm::testing {

/// Small coupled problem family used across the unit tests.
inline ProblemGenConfig tiny_config(std::uint64_t seed, int agents = 3) {
  ProblemGenConfig c;
  c.num_agents = agents;
  c.local_size = {5, 8};
  c.num_eq = {1, 2};
  c.num_ineq = {2, 4};
  c.index_pool = 12;
  c.seed = seed;
  return c;
}

/// Problem family of the N = 10 end-to-end runs.
inline ProblemGenConfig mid_config(std::uint64_t seed) {
  ProblemGenConfig c;
  c.num_agents = 10;
  c.local_size = {10, 15};
  c.num_eq = {2, 3};
  c.num_ineq = {5, 7};
  c.index_pool = 190;
  c.seed = seed;
  return c;
}

/// Strictly interior random iterate with s, lambda ~ U(0.5, 2), free
/// variables ~ U(-1, 1) and consistency duals projected so that each index's
/// duals sum to zero.
inline Iterate random_interior(const CoupledProblem& problem, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 0x7e57);
  auto draw = [&rng](Index n, double lo, double hi) {
    Vector v(n);
    for (Index t = 0; t < n; ++t) v[t] = rng.uniform(lo, hi);
    return v;
  };
  Iterate z;
  z.x = draw(problem.n(), -1.0, 1.0);
  Vector vc_sum = Vector::Zero(problem.n());
  for (const auto& sub : problem.agents()) {
    AgentPoint p;
    p.w = draw(sub.local_size(), -1.0, 1.0);
    p.s = draw(sub.num_ineq(), 0.5, 2.0);
    p.lambda = draw(sub.num_ineq(), 0.5, 2.0);
    p.v = draw(sub.num_eq(), -1.0, 1.0);
    p.v_c = draw(sub.local_size(), -1.0, 1.0);
    scatter_add(p.v_c, sub.J, vc_sum);
    z.agents.push_back(std::move(p));
  }
  for (int i = 0; i < problem.num_agents(); ++i) {
    const auto& sub = problem.agent(i);
    auto& vc = z.agents[static_cast<std::size_t>(i)].v_c;
    for (Index t = 0; t < vc.size(); ++t) {
      const int j = sub.J[static_cast<std::size_t>(t)];
      vc[t] -= vc_sum[j] / problem.multiplicity(j);
    }
  }
  return z;
}

inline double rel_err(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

}  // namespace cipm::testing
