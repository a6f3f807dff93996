#include "cipm/admm_directions.hpp"

#include <algorithm>
#include <atomic>
#include <string>

#include "cipm/errors.hpp"

namespace cipm::admm {

namespace {
std::atomic<std::uint64_t> g_builds{0};
}  // namespace

std::uint64_t AgentFactorization::total_builds() { return g_builds.load(); }

void AgentFactorization::build(const Matrix& hpd, const Matrix& A_eq, double rho, std::uint64_t tag) {
  if (!(rho > 0.0)) throw DomainError("ADMM penalty must be positive");
  const Index k = hpd.rows();
  K_ = hpd + rho * (Matrix::Identity(k, k) + A_eq.transpose() * A_eq);
  rho_ = rho;
  tag_ = tag;
  jittered_ = false;
  ++g_builds;
  llt_.compute(K_);
  if (llt_.info() != Eigen::Success) {
    const double jitter = 1e-12 * K_.trace() / static_cast<double>(std::max<Index>(k, 1));
    K_.diagonal().array() += jitter;
    jittered_ = true;
    llt_.compute(K_);
    if (llt_.info() != Eigen::Success) {
      valid_ = false;
      throw NumericalError("Cholesky factorization of the local ADMM matrix failed");
    }
  }
  valid_ = true;
}

Vector AgentFactorization::solve(const Vector& rhs) const {
  if (!valid_) throw NumericalError("ADMM factorization used before it was built");
  return llt_.solve(rhs);
}

LinearSystem linearize(const CoupledProblem& problem, const Iterate& z, double mu, double rho,
                       std::uint64_t tag, Network* network) {
  check_dimensions(problem, z);
  LinearSystem sys;
  sys.problem = &problem;
  sys.iterate = &z;
  sys.mu = mu;
  sys.rho = rho;
  sys.agents.resize(static_cast<std::size_t>(problem.num_agents()));
  auto build = [&](int i) {
    const auto& sub = problem.agent(i);
    const auto& p = z.agents[static_cast<std::size_t>(i)];
    auto& a = sys.agents[static_cast<std::size_t>(i)];
    a.bundle = agent_residuals(sub, p, lift(z.x, sub.J));
    a.hpd = hpd(sub, p);
    a.r = r_vec(sub, a.bundle, p, mu);
    a.factor.build(a.hpd, sub.A_eq, rho, tag);
  };
  if (network)
    network->for_each_agent(build);
  else
    for (int i = 0; i < problem.num_agents(); ++i) build(i);
  return sys;
}

DirectionState cold_state(const CoupledProblem& problem, double rho, double alpha_or) {
  DirectionState st;
  const auto N = static_cast<std::size_t>(problem.num_agents());
  st.dw.resize(N);
  st.dv_bar.resize(N);
  st.dvc_bar.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto& sub = problem.agent(static_cast<int>(i));
    st.dw[i] = Vector::Zero(sub.local_size());
    st.dv_bar[i] = Vector::Zero(sub.num_eq());
    st.dvc_bar[i] = Vector::Zero(sub.local_size());
  }
  st.dx = Vector::Zero(problem.n());
  st.dx_prev = st.dx;
  st.primal_c_sq.assign(N, 0.0);
  st.primal_eq_sq.assign(N, 0.0);
  st.dual_sq.assign(N, 0.0);
  st.rho = rho;
  st.alpha_or = alpha_or;
  return st;
}

Vector w_step(const AgentFactorization& fact, const Matrix& A_eq, const Vector& r, const Vector& r_c,
              const Vector& r_primal2, const Vector& dvc_bar, const Vector& dv_bar, const Vector& dx_J,
              double rho) {
  if (fact.rho() != rho) throw NumericalError("ADMM factorization built for a different penalty");
  const Vector bracket = r + rho * (r_c + dvc_bar - dx_J) + rho * (A_eq.transpose() * (r_primal2 + dv_bar));
  return -fact.solve(bracket);
}

Vector x_step(const CoupledProblem& problem, std::span<const Vector> hat_c, std::span<const Vector> dvc_bar,
              std::span<const Vector> v_c, std::span<const Vector> r_c, double rho, Network* network) {
  const auto N = static_cast<std::size_t>(problem.num_agents());
  if (hat_c.size() != N || dvc_bar.size() != N || v_c.size() != N || r_c.size() != N)
    throw StructuralError("x_step: one vector per agent expected");
  std::vector<Vector> contrib(N);
  for (std::size_t i = 0; i < N; ++i) contrib[i] = hat_c[i] + dvc_bar[i] + v_c[i] / rho + r_c[i];
  if (network) return network->average_shared(contrib);
  return exchange_shared(problem, AgentGraph(problem), contrib);
}

void dual_step(Vector& dv_bar, Vector& dvc_bar, const Vector& hat_eq, const Vector& hat_c,
               const Vector& dx_J, const Vector& r_primal2, const Vector& r_c) {
  dv_bar += hat_eq + r_primal2;
  dvc_bar += hat_c - dx_J + r_c;
}

Direction extract_direction(const LinearSystem& system, const DirectionState& state) {
  const auto& problem = *system.problem;
  Direction d;
  d.dx = state.dx;
  d.agents.resize(static_cast<std::size_t>(problem.num_agents()));
  for (int i = 0; i < problem.num_agents(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    auto& a = d.agents[ui];
    a.dw = state.dw[ui];
    a.dv = system.rho * state.dv_bar[ui];
    a.dv_c = system.rho * state.dvc_bar[ui];
    std::tie(a.ds, a.dlambda) = recover_sl_directions(problem.agent(i), system.iterate->agents[ui],
                                                      system.agents[ui].bundle, a.dw, system.mu);
  }
  return d;
}

double inner_residual_norm_sq(const LinearSystem& system, const DirectionState& state) {
  const auto& problem = *system.problem;
  const double rho2 = system.rho * system.rho;
  double total = 0.0;
  for (int i = 0; i < problem.num_agents(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const auto& sub = problem.agent(i);
    const auto& b = system.agents[ui].bundle;
    const Vector dxJ = lift(state.dx, sub.J);
    total += rho2 * (lift(state.dx_prev, sub.J) - dxJ).squaredNorm();
    total += (state.dw[ui] - dxJ + b.r_c).squaredNorm();
    total += (sub.A_eq * state.dw[ui] + b.r_primal2).squaredNorm();
  }
  return total;
}

Result run(const CoupledProblem& problem, const Iterate& z, double mu, const Settings& settings,
           std::span<const double> eps_pri, std::span<const double> eps_dual, const DirectionState* warm,
           Network* network, const InnerObserver& observer, std::uint64_t tag) {
  const LinearSystem sys = linearize(problem, z, mu, settings.rho, tag, network);
  return run(sys, settings, eps_pri, eps_dual, warm, network, observer);
}

Result run(const LinearSystem& system, const Settings& settings, std::span<const double> eps_pri,
           std::span<const double> eps_dual, const DirectionState* warm, Network* network,
           const InnerObserver& observer) {
  const auto& problem = *system.problem;
  const auto& z = *system.iterate;
  const int N = problem.num_agents();
  const auto uN = static_cast<std::size_t>(N);
  if (eps_pri.size() != uN || eps_dual.size() != uN)
    throw StructuralError("ADMM: one tolerance per agent expected");
  if (!(settings.alpha_or >= 1.0 && settings.alpha_or < 2.0))
    throw DomainError("over-relaxation parameter must lie in [1, 2)");
  if (settings.rho != system.rho) throw DomainError("ADMM settings and linear system disagree on rho");
  if (settings.max_inner < 1) throw DomainError("max_inner must be positive");

  Result res;
  res.factorizations = N;
  DirectionState st;
  if (warm && !warm->empty()) {
    if (warm->rho != settings.rho) throw DomainError("warm start state built with a different rho");
    st = *warm;
  } else {
    st = cold_state(problem, settings.rho, settings.alpha_or);
  }
  st.rho = settings.rho;
  st.alpha_or = settings.alpha_or;
  st.k = 0;

  const double rho = settings.rho;
  const double a = settings.alpha_or;
  std::vector<Vector> hat_c(uN), hat_eq(uN), dxJ_old(uN), v_c(uN), r_c(uN);
  for (std::size_t i = 0; i < uN; ++i) {
    v_c[i] = z.agents[i].v_c;
    r_c[i] = system.agents[i].bundle.r_c;
  }
  // One byte per agent: std::vector<bool> packs bits and cannot be written concurrently.
  std::vector<char> done(uN, 0);

  auto agent_w = [&](int i) {
    const auto ui = static_cast<std::size_t>(i);
    const auto& sub = problem.agent(i);
    const auto& as = system.agents[ui];
    dxJ_old[ui] = lift(st.dx, sub.J);
    st.dw[ui] = w_step(as.factor, sub.A_eq, as.r, as.bundle.r_c, as.bundle.r_primal2, st.dvc_bar[ui],
                       st.dv_bar[ui], dxJ_old[ui], rho);
    hat_c[ui] = a * st.dw[ui] + (1.0 - a) * (dxJ_old[ui] - as.bundle.r_c);
    hat_eq[ui] = a * (sub.A_eq * st.dw[ui]) - (1.0 - a) * as.bundle.r_primal2;
  };

  auto agent_dual = [&](int i) {
    const auto ui = static_cast<std::size_t>(i);
    const auto& sub = problem.agent(i);
    const auto& b = system.agents[ui].bundle;
    const Vector dxJ = lift(st.dx, sub.J);
    dual_step(st.dv_bar[ui], st.dvc_bar[ui], hat_eq[ui], hat_c[ui], dxJ, b.r_primal2, b.r_c);
    st.primal_c_sq[ui] = (st.dw[ui] - dxJ + b.r_c).squaredNorm();
    st.primal_eq_sq[ui] = (sub.A_eq * st.dw[ui] + b.r_primal2).squaredNorm();
    st.dual_sq[ui] = (dxJ - dxJ_old[ui]).squaredNorm();
    const double pri_tol = eps_pri[ui] / (2.0 * N);
    done[ui] = st.dual_sq[ui] <= eps_dual[ui] / N && st.primal_c_sq[ui] <= pri_tol &&
               st.primal_eq_sq[ui] <= pri_tol;
  };

  auto for_agents = [&](auto&& fn) {
    if (network)
      network->for_each_agent(fn);
    else
      for (int i = 0; i < N; ++i) fn(i);
  };

  bool converged = false;
  while (st.k < settings.max_inner) {
    for_agents(agent_w);
    st.dx_prev = st.dx;
    st.dx = x_step(problem, hat_c, st.dvc_bar, v_c, r_c, rho, network);
    if (!st.dx.allFinite()) throw NumericalError("non-finite value in ADMM x-update");
    for_agents(agent_dual);
    ++st.k;
    if (observer) observer(system, st);
    if (network)
      converged = network->all(std::vector<bool>(done.begin(), done.end()));
    else
      converged = std::all_of(done.begin(), done.end(), [](char b) { return b != 0; });
    if (converged) break;
  }
  res.inner_iters = st.k;
  res.exhausted = !converged;
  res.direction = extract_direction(system, st);
  res.state = std::move(st);
  return res;
}

}  // namespace cipm::admm
