#include "cipm/ipm_exact.hpp"

#include <algorithm>
#include <optional>

#include "cipm/errors.hpp"

namespace cipm {

ResidualBundle trial_residuals(const AgentSubproblem& sub, const AgentPoint& p, const Vector& x_J,
                               const AgentDirection& d, const Vector& dx_J, double alpha) {
  return agent_residuals(sub, advance(p, d, alpha), x_J + alpha * dx_J);
}

bool stays_interior(const AgentPoint& p, const AgentDirection& d, double alpha) {
  return (p.s + alpha * d.ds).minCoeff() > 0.0 && (p.lambda + alpha * d.dlambda).minCoeff() > 0.0;
}

}  // namespace cipm

namespace cipm::exact {

namespace {
constexpr double kMinStep = 1e-16;
}  // namespace

void Params::validate() const {
  if (!(sigma > 0.0 && sigma < 1.0)) throw ConfigError("sigma must lie in (0, 1)");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
  if (!(gamma_ls > 0.0 && gamma_ls < 1.0)) throw ConfigError("gamma_ls must lie in (0, 1)");
  if (!(rho > 0.0)) throw ConfigError("rho must be positive");
  if (!(alpha_or >= 1.0 && alpha_or < 2.0)) throw ConfigError("alpha_or must lie in [1, 2)");
  if (!(eps_pri >= 0.0 && eps_dual >= 0.0)) throw ConfigError("inner tolerances must be nonnegative");
  if (max_outer < 1 || max_inner < 1) throw ConfigError("iteration caps must be positive");
}

double perturbation(std::span<const double> eta_hat, double sigma, int m_total, Network* network) {
  if (eta_hat.empty() || m_total <= 0) throw DomainError("perturbation: no inequality constraints");
  const double lo = network ? network->min(eta_hat) : *std::min_element(eta_hat.begin(), eta_hat.end());
  if (!(lo > 0.0)) throw DomainError("perturbation: surrogate gap must be positive");
  return sigma * lo / static_cast<double>(m_total);
}

double local_step(const AgentSubproblem& sub, const AgentPoint& p, const Vector& x_J, const AgentDirection& d,
                  const Vector& dx_J, double beta, double gamma_ls) {
  double alpha_max = 1.0;
  for (Index t = 0; t < d.dlambda.size(); ++t)
    if (d.dlambda[t] < 0.0) alpha_max = std::min(alpha_max, -p.lambda[t] / d.dlambda[t]);
  double alpha = 0.99 * alpha_max;
  while ((p.s + alpha * d.ds).minCoeff() <= 0.0) {
    alpha *= beta;
    if (alpha < kMinStep) throw StallError("agent " + std::to_string(sub.index) + ": step length underflow");
  }
  const double h0 = agent_residuals(sub, p, x_J).merit_sq;
  for (;;) {
    const double h = trial_residuals(sub, p, x_J, d, dx_J, alpha).merit_sq;
    const double bound = (1.0 - gamma_ls * alpha) * (1.0 - gamma_ls * alpha) * h0;
    if (h <= bound && stays_interior(p, d, alpha)) return alpha;
    alpha *= beta;
    if (alpha < kMinStep) throw StallError("agent " + std::to_string(sub.index) + ": step length underflow");
  }
}

SolveReport solve(const CoupledProblem& problem, const Iterate& init, const Params& params, Network* network,
                  const OuterObserver& observer, const admm::InnerObserver& inner_observer) {
  params.validate();
  check_dimensions(problem, init);
  for (const auto& p : init.agents) check_interior(p);
  if (consistency_dual_sum(problem, init).lpNorm<Eigen::Infinity>() > 1e-9)
    throw DomainError("initial consistency duals must sum to zero per index");

  std::optional<Network> own;
  if (!network) network = &own.emplace(problem, 1);
  const auto tol = resolve_tolerances(problem, params.eps, params.eps_feas);
  const int N = problem.num_agents();
  const auto uN = static_cast<std::size_t>(N);
  const int m_total = problem.total_ineq();

  SolveReport report;
  report.method = "exact";
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

  const admm::Settings settings{params.rho, params.alpha_or, params.max_inner};
  const std::vector<double> eps_pri(uN, params.eps_pri), eps_dual(uN, params.eps_dual);
  admm::DirectionState warm;
  std::vector<double> eta(uN), alphas(uN);
  std::vector<char> ok(uN);

  try {
    for (int l = 0;; ++l) {
      std::vector<bool> stop(uN);
      for (std::size_t i = 0; i < uN; ++i) stop[i] = shared_stop_test(bundles[i], tol, N);
      if (network->all(stop)) {
        report.reason = Termination::Converged;
        break;
      }
      if (l >= params.max_outer) {
        report.reason = Termination::MaxIterations;
        break;
      }

      for (std::size_t i = 0; i < uN; ++i) eta[i] = bundles[i].eta_hat;
      const double mu = perturbation(eta, params.sigma, m_total, network);
      const auto sys = admm::linearize(problem, z, mu, params.rho, static_cast<std::uint64_t>(l), network);
      const auto res = admm::run(sys, settings, eps_pri, eps_dual, params.warm_start ? &warm : nullptr, network,
                                 inner_observer);
      if (res.exhausted) ++report.inner_exhaustions;
      report.total_inner += res.inner_iters;
      const Direction& d = res.direction;

      network->for_each_agent([&](int i) {
        const auto ui = static_cast<std::size_t>(i);
        const auto& sub = problem.agent(i);
        alphas[ui] = local_step(sub, z.agents[ui], lift(z.x, sub.J), d.agents[ui], lift(d.dx, sub.J), params.beta,
                                params.gamma_ls);
      });
      double alpha = network->min(alphas);
      // Each agent accepted its own step; confirm the common one for everyone.
      for (;;) {
        network->for_each_agent([&](int i) {
          const auto ui = static_cast<std::size_t>(i);
          const auto& sub = problem.agent(i);
          const auto& p = z.agents[ui];
          const double bound = (1.0 - params.gamma_ls * alpha) * (1.0 - params.gamma_ls * alpha) * bundles[ui].merit_sq;
          ok[ui] = stays_interior(p, d.agents[ui], alpha) &&
                   trial_residuals(sub, p, lift(z.x, sub.J), d.agents[ui], lift(d.dx, sub.J), alpha).merit_sq <= bound;
        });
        if (network->all(std::vector<bool>(ok.begin(), ok.end()))) break;
        alpha *= params.beta;
        if (alpha < kMinStep) throw StallError("common step length underflow");
      }

      if (observer) observer(OuterEvent{l, &z, &bundles, &d, &res, mu, alpha});
      z = advance(z, d, alpha);
      refresh();
      if (params.warm_start) warm = res.state;
      report.outer_iterations = l + 1;
      report.trace.push_back(make_trace_row(report.method, l + 1, problem, z, bundles, mu, alpha, res.inner_iters));
    }
  } catch (const StallError& e) {
    report.reason = Termination::Stalled;
    report.message = e.what();
  } catch (const NumericalError& e) {
    report.reason = Termination::NumericalFailure;
    report.message = e.what();
  } catch (const DomainError& e) {
    report.reason = Termination::NumericalFailure;
    report.message = e.what();
  }

  report.final_iterate = std::move(z);
  report.objective = objective(problem, report.final_iterate);
  report.message_units = network->log().total_units();
  report.consensus_fallbacks = network->fallbacks();
  return report;
}

}  // namespace cipm::exact
