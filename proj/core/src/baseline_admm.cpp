#include "cipm/baseline_admm.hpp"

#include <algorithm>
#include <optional>
#include <string>

#include "cipm/errors.hpp"

namespace cipm::baseline {

void Params::validate() const {
  if (!(rho > 0.0)) throw ConfigError("rho must be positive");
  if (max_iter < 1) throw ConfigError("max_iter must be positive");
  if (!(local.tol > 0.0) || local.max_iter < 1) throw ConfigError("bad local solver settings");
}

LocalSolution local_qp(const AgentSubproblem& sub, const Vector& x_J, const Vector& vbar_c, double rho,
                       const qp::Settings& settings) {
  const Index k = sub.local_size();
  qp::Problem p;
  p.Q = sub.hessian() + rho * Matrix::Identity(k, k);
  p.c = sub.q - rho * (x_J - vbar_c);
  p.G = sub.A_in;
  p.h = -sub.b_in;
  p.A = sub.A_eq;
  p.b = sub.b_eq;
  const auto sol = qp::solve(p, settings);
  if (!sol.converged)
    throw NumericalError("agent " + std::to_string(sub.index) + ": local QP did not converge");
  return {sol.x, sol.s, sol.z, sol.y, sol.iterations};
}

SolveReport solve(const CoupledProblem& problem, const Iterate& init, const Params& params, Network* network,
                  const IterationObserver& observer) {
  params.validate();
  check_dimensions(problem, init);
  std::optional<Network> own;
  if (!network) network = &own.emplace(problem, 1);
  const auto tol = resolve_tolerances(problem, params.eps, params.eps_feas);
  const int N = problem.num_agents();
  const auto uN = static_cast<std::size_t>(N);
  const double rho = params.rho;

  SolveReport report;
  report.method = "baseline-admm";
  Iterate z = init;
  std::vector<ResidualBundle> bundles(uN);
  auto refresh = [&] {
    network->for_each_agent([&](int i) {
      const auto& sub = problem.agent(i);
      bundles[static_cast<std::size_t>(i)] = agent_residuals(sub, z.agents[static_cast<std::size_t>(i)], lift(z.x, sub.J));
    });
  };
  refresh();
  report.trace.push_back(make_trace_row(report.method, 0, problem, z, bundles, 0.0, 0.0, 0));

  State st;
  st.x = init.x;
  st.w.resize(uN);
  st.vbar_c.resize(uN);
  for (std::size_t i = 0; i < uN; ++i) {
    st.w[i] = init.agents[i].w;
    st.vbar_c[i] = init.agents[i].v_c / rho;
  }
  std::vector<LocalSolution> local(uN);
  std::vector<Vector> contrib(uN);

  try {
    for (int k = 0;; ++k) {
      if (k > 0) {
        std::vector<bool> stop(uN);
        for (std::size_t i = 0; i < uN; ++i) stop[i] = shared_stop_test(bundles[i], tol, N);
        if (network->all(stop)) {
          report.reason = Termination::Converged;
          break;
        }
      }
      if (k >= params.max_iter) {
        report.reason = Termination::MaxIterations;
        break;
      }
      network->for_each_agent([&](int i) {
        const auto ui = static_cast<std::size_t>(i);
        const auto& sub = problem.agent(i);
        local[ui] = local_qp(sub, lift(st.x, sub.J), st.vbar_c[ui], rho, params.local);
        st.w[ui] = local[ui].w;
        contrib[ui] = st.w[ui] + st.vbar_c[ui];
      });
      st.x = network->average_shared(contrib);
      int inner = 0;
      for (std::size_t i = 0; i < uN; ++i) {
        const auto& sub = problem.agent(static_cast<int>(i));
        st.vbar_c[i] += st.w[i] - lift(st.x, sub.J);
        inner = std::max(inner, local[i].iterations);
      }
      ++st.k;
      z.x = st.x;
      for (std::size_t i = 0; i < uN; ++i) {
        z.agents[i] = AgentPoint{local[i].w, local[i].s, local[i].lambda, local[i].v, rho * st.vbar_c[i]};
      }
      refresh();
      report.total_inner += inner;
      report.outer_iterations = k + 1;
      report.trace.push_back(make_trace_row(report.method, k + 1, problem, z, bundles, 0.0, 1.0, inner));
      if (observer) observer(st, z);
    }
  } catch (const NumericalError& e) {
    report.reason = Termination::NumericalFailure;
    report.message = e.what();
  }

  report.final_iterate = std::move(z);
  report.objective = objective(problem, report.final_iterate);
  report.message_units = network->log().total_units();
  report.consensus_fallbacks = network->fallbacks();
  return report;
}

}  // namespace cipm::baseline
