#include "cipm/kkt.hpp"

#include <cmath>
#include <string>

#include "cipm/errors.hpp"
#include "cipm/random.hpp"

namespace cipm {

namespace {

constexpr double kSlackFloor = 1e-14;
constexpr int kDenseLimit = 2000;

void require_size(const Vector& v, Index n, const char* what, int agent) {
  if (v.size() != n)
    throw StructuralError("agent " + std::to_string(agent) + ": " + what + " has size " +
                          std::to_string(v.size()) + ", expected " + std::to_string(n));
}

void check_agent_point(const AgentSubproblem& sub, const AgentPoint& p) {
  require_size(p.w, sub.local_size(), "w", sub.index);
  require_size(p.s, sub.num_ineq(), "s", sub.index);
  require_size(p.lambda, sub.num_ineq(), "lambda", sub.index);
  require_size(p.v, sub.num_eq(), "v", sub.index);
  require_size(p.v_c, sub.local_size(), "v_c", sub.index);
}

void check_slack_floor(const Vector& s) {
  for (Index t = 0; t < s.size(); ++t)
    if (!(s[t] >= kSlackFloor)) throw DomainError("slack below floor in lambda/s ratio");
}

}  // namespace

void check_interior(const AgentPoint& p) {
  for (Index t = 0; t < p.s.size(); ++t)
    if (!(p.s[t] > 0.0)) throw DomainError("slack not strictly positive");
  for (Index t = 0; t < p.lambda.size(); ++t)
    if (!(p.lambda[t] > 0.0)) throw DomainError("multiplier not strictly positive");
}

void check_dimensions(const CoupledProblem& problem, const Iterate& z) {
  if (z.x.size() != problem.n()) throw StructuralError("iterate: x has wrong size");
  if (static_cast<int>(z.agents.size()) != problem.num_agents())
    throw StructuralError("iterate: wrong number of agents");
  for (int i = 0; i < problem.num_agents(); ++i)
    check_agent_point(problem.agent(i), z.agents[static_cast<std::size_t>(i)]);
}

ResidualBundle agent_residuals(const AgentSubproblem& sub, const AgentPoint& p, const Vector& x_J) {
  check_agent_point(sub, p);
  require_size(x_J, sub.local_size(), "x_J", sub.index);
  ResidualBundle b;
  b.r_dual = sub.gradient(p.w) + sub.A_in.transpose() * p.lambda + sub.A_eq.transpose() * p.v + p.v_c;
  b.r_primal1 = sub.inequality(p.w) + p.s;
  b.r_primal2 = sub.A_eq * p.w - sub.b_eq;
  b.r_c = p.w - x_J;
  b.r_cent = p.lambda.cwiseProduct(p.s);
  b.eta_hat = p.s.dot(p.lambda);
  b.merit_sq = b.residual_sq() + b.r_cent.squaredNorm();
  return b;
}

std::vector<ResidualBundle> all_residuals(const CoupledProblem& problem, const Iterate& z) {
  check_dimensions(problem, z);
  std::vector<ResidualBundle> out;
  out.reserve(z.agents.size());
  for (int i = 0; i < problem.num_agents(); ++i) {
    const auto& sub = problem.agent(i);
    out.push_back(agent_residuals(sub, z.agents[static_cast<std::size_t>(i)], lift(z.x, sub.J)));
  }
  return out;
}

Matrix hpd(const AgentSubproblem& sub, const AgentPoint& p) {
  check_slack_floor(p.s);
  const Vector ratio = p.lambda.cwiseQuotient(p.s);
  Matrix H = sub.hessian() + sub.A_in.transpose() * ratio.asDiagonal() * sub.A_in;
  return 0.5 * (H + H.transpose());
}

Vector r_vec(const AgentSubproblem& sub, const ResidualBundle& bundle, const AgentPoint& p, double mu) {
  check_slack_floor(p.s);
  const Vector inner = p.lambda.cwiseProduct(bundle.r_primal1) - bundle.r_cent +
                       Vector::Constant(p.s.size(), mu);
  return bundle.r_dual + sub.A_in.transpose() * inner.cwiseQuotient(p.s);
}

std::pair<Vector, Vector> recover_sl_directions(const AgentSubproblem& sub, const AgentPoint& p,
                                                const ResidualBundle& bundle, const Vector& dw,
                                                double mu) {
  check_slack_floor(p.s);
  require_size(dw, sub.local_size(), "dw", sub.index);
  Vector ds = -(sub.A_in * dw) - bundle.r_primal1;
  Vector dlambda = (Vector::Constant(p.s.size(), mu) - bundle.r_cent - p.lambda.cwiseProduct(ds))
                       .cwiseQuotient(p.s);
  return {std::move(ds), std::move(dlambda)};
}

double merit_norm_sq(std::span<const ResidualBundle> bundles) {
  double total = 0.0;
  for (const auto& b : bundles) total += b.merit_sq;
  return total;
}

double surrogate_gap(std::span<const ResidualBundle> bundles) {
  double total = 0.0;
  for (const auto& b : bundles) total += b.eta_hat;
  return total;
}

Vector consistency_dual_sum(const CoupledProblem& problem, const Iterate& z) {
  Vector sum = Vector::Zero(problem.n());
  for (int i = 0; i < problem.num_agents(); ++i)
    scatter_add(z.agents[static_cast<std::size_t>(i)].v_c, problem.agent(i).J, sum);
  return sum;
}

DenseKkt dense_kkt(const CoupledProblem& problem, const Iterate& z, double mu) {
  if (problem.n() > kDenseLimit)
    throw StructuralError("dense_kkt: n = " + std::to_string(problem.n()) + " exceeds the oracle limit");
  const auto bundles = all_residuals(problem, z);
  const Index L = problem.total_local();
  const Index n = problem.n();
  const Index P = problem.total_eq();
  const Index dim = 2 * L + n + P;
  const Index x0 = L, v0 = L + n, c0 = L + n + P;

  DenseKkt out{Matrix::Zero(dim, dim), Vector::Zero(dim)};
  const Vector vc_sum = consistency_dual_sum(problem, z);
  out.rhs.segment(x0, n) = vc_sum;

  Index w_off = 0, v_off = 0;
  for (int i = 0; i < problem.num_agents(); ++i) {
    const auto& sub = problem.agent(i);
    const auto& p = z.agents[static_cast<std::size_t>(i)];
    const Index k = sub.local_size();
    const Index pe = sub.num_eq();
    out.K.block(w_off, w_off, k, k) = hpd(sub, p);
    out.K.block(w_off, v0 + v_off, k, pe) = sub.A_eq.transpose();
    out.K.block(v0 + v_off, w_off, pe, k) = sub.A_eq;
    for (Index t = 0; t < k; ++t) {
      const Index col = sub.J[static_cast<std::size_t>(t)];
      out.K(w_off + t, c0 + w_off + t) = 1.0;
      out.K(c0 + w_off + t, w_off + t) = 1.0;
      out.K(x0 + col, c0 + w_off + t) = -1.0;
      out.K(c0 + w_off + t, x0 + col) = -1.0;
    }
    const auto& b = bundles[static_cast<std::size_t>(i)];
    out.rhs.segment(w_off, k) = -r_vec(sub, b, p, mu);
    out.rhs.segment(v0 + v_off, pe) = -b.r_primal2;
    out.rhs.segment(c0 + w_off, k) = -b.r_c;
    w_off += k;
    v_off += pe;
  }
  return out;
}

Direction direction_from_stacked(const CoupledProblem& problem, const Iterate& z, double mu,
                                 const Vector& solution) {
  const Index L = problem.total_local();
  const Index n = problem.n();
  const Index P = problem.total_eq();
  if (solution.size() != 2 * L + n + P) throw StructuralError("direction_from_stacked: size mismatch");
  const Index x0 = L, v0 = L + n, c0 = L + n + P;
  Direction d;
  d.dx = solution.segment(x0, n);
  d.agents.resize(z.agents.size());
  Index w_off = 0, v_off = 0;
  for (int i = 0; i < problem.num_agents(); ++i) {
    const auto& sub = problem.agent(i);
    const auto& p = z.agents[static_cast<std::size_t>(i)];
    auto& a = d.agents[static_cast<std::size_t>(i)];
    const Index k = sub.local_size();
    a.dw = solution.segment(w_off, k);
    a.dv = solution.segment(v0 + v_off, sub.num_eq());
    a.dv_c = solution.segment(c0 + w_off, k);
    const auto bundle = agent_residuals(sub, p, lift(z.x, sub.J));
    std::tie(a.ds, a.dlambda) = recover_sl_directions(sub, p, bundle, a.dw, mu);
    w_off += k;
    v_off += sub.num_eq();
  }
  return d;
}

Iterate initial_iterate(const CoupledProblem& problem, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 0x5eed);
  Iterate z;
  z.x.resize(problem.n());
  for (Index j = 0; j < z.x.size(); ++j) z.x[j] = rng.uniform(-10.0, 10.0);
  z.agents.resize(static_cast<std::size_t>(problem.num_agents()));
  for (int i = 0; i < problem.num_agents(); ++i) {
    const auto& sub = problem.agent(i);
    auto& p = z.agents[static_cast<std::size_t>(i)];
    p.w = lift(z.x, sub.J);
    p.s = (-sub.inequality(p.w)).cwiseMax(1.0);
    p.lambda = Vector::Constant(sub.num_ineq(), 10.0);
    p.v = Vector::Constant(sub.num_eq(), 10.0);
    p.v_c = Vector::Zero(sub.local_size());
  }
  return z;
}

AgentPoint advance(const AgentPoint& p, const AgentDirection& d, double alpha) {
  return AgentPoint{p.w + alpha * d.dw, p.s + alpha * d.ds, p.lambda + alpha * d.dlambda,
                    p.v + alpha * d.dv, p.v_c + alpha * d.dv_c};
}

Iterate advance(const Iterate& z, const Direction& d, double alpha) {
  if (d.agents.size() != z.agents.size() || d.dx.size() != z.x.size())
    throw StructuralError("advance: direction does not match iterate");
  Iterate out;
  out.x = z.x + alpha * d.dx;
  out.agents.reserve(z.agents.size());
  for (std::size_t i = 0; i < z.agents.size(); ++i) out.agents.push_back(advance(z.agents[i], d.agents[i], alpha));
  return out;
}

double objective(const CoupledProblem& problem, const Iterate& z) {
  double total = 0.0;
  for (int i = 0; i < problem.num_agents(); ++i)
    total += problem.agent(i).objective(z.agents[static_cast<std::size_t>(i)].w);
  return total;
}

}  // namespace cipm
