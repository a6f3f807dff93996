#include "cipm/ipm_inexact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "cipm/errors.hpp"
#include "cipm/ipm_exact.hpp"

namespace cipm::inexact {

namespace {
constexpr int kMaxHalvings = 60;
constexpr int kMaxContractions = 200;
constexpr int kGridPoints = 64;
constexpr int kBisections = 40;
}  // namespace

void Params::validate() const {
  if (!(eta_max > 0.0 && eta_max < 1.0)) throw ConfigError("eta_max must lie in (0, 1)");
  if (!(gamma0 >= 0.5 && gamma0 < 1.0)) throw ConfigError("gamma0 must lie in [1/2, 1)");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
  if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("theta must lie in (0, 1)");
  if (!(eps_sigma > 0.0 && eps_sigma < 1.0)) throw ConfigError("eps_sigma must lie in (0, 1)");
  if (!(sigma_margin > 0.0)) throw ConfigError("sigma_margin must be positive");
  if (!(rho > 0.0)) throw ConfigError("rho must be positive");
  if (!(alpha_or >= 1.0 && alpha_or < 2.0)) throw ConfigError("alpha_or must lie in [1, 2)");
  if (max_outer < 1 || max_inner < 1) throw ConfigError("iteration caps must be positive");
}

CentralityConstants CentralityConstants::from(std::span<const ResidualBundle> bundles) {
  CentralityConstants c;
  for (const auto& b : bundles) {
    const auto m = static_cast<double>(b.r_cent.size());
    if (m == 0) throw DomainError("inexact method needs inequality constraints at every agent");
    c.tau1.push_back(b.r_cent.minCoeff() / (b.eta_hat / m));
    const double r = std::sqrt(b.residual_sq());
    c.tau2.push_back(r > 0.0 ? b.eta_hat / r : std::numeric_limits<double>::max());
  }
  return c;
}

Forcing choose_forcing(std::span<const ResidualBundle> bundles, const CentralityConstants& tau,
                       std::span<const double> gamma, const Params& params, int m_total, Network* network) {
  const std::size_t N = bundles.size();
  std::vector<double> gaps(N);
  for (std::size_t i = 0; i < N; ++i) gaps[i] = bundles[i].eta_hat;
  const double min_gap = network ? network->min(gaps) : *std::min_element(gaps.begin(), gaps.end());
  if (!(min_gap > 0.0)) throw DomainError("choose_forcing: surrogate gap must be positive");

  Forcing f;
  f.sigma_i.resize(N);
  f.eta_hat_i.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double floor_coeff = tau.tau2[i] * gamma[i] * gaps[i] / min_gap;
    double eta = std::min(0.5, params.eta_max - params.eps_sigma - 1e-3);
    double sigma = floor_coeff * eta + params.eps_sigma + params.sigma_margin;
    int halvings = 0;
    while (sigma + eta >= params.eta_max) {
      if (++halvings > kMaxHalvings)
        throw NumericalError("choose_forcing: no admissible forcing terms for agent " + std::to_string(i));
      eta *= 0.5;
      sigma = floor_coeff * eta + params.eps_sigma + params.sigma_margin;
    }
    f.sigma_i[i] = sigma;
    f.eta_hat_i[i] = eta;
  }
  f.eta_hat = network ? network->min(f.eta_hat_i) : *std::min_element(f.eta_hat_i.begin(), f.eta_hat_i.end());
  f.sigma = network ? network->max(f.sigma_i) : *std::max_element(f.sigma_i.begin(), f.sigma_i.end());
  f.eta_bar = f.sigma + f.eta_hat;
  f.mu = f.sigma * min_gap / static_cast<double>(m_total);
  return f;
}

void admm_thresholds(double eta_hat, std::span<const ResidualBundle> bundles, double rho, int m_total,
                     std::vector<double>& eps_pri, std::vector<double>& eps_dual) {
  const std::size_t N = bundles.size();
  eps_pri.resize(N);
  eps_dual.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double t = eta_hat * bundles[i].eta_hat / static_cast<double>(m_total);
    eps_pri[i] = 0.5 * static_cast<double>(N) * t * t;
    eps_dual[i] = eps_pri[i] / (rho * rho);
  }
}

double f1(const AgentPoint& p, const AgentDirection& d, double alpha, double tau1, double gamma) {
  const Vector s = p.s + alpha * d.ds;
  const Vector l = p.lambda + alpha * d.dlambda;
  const Vector prod = s.cwiseProduct(l);
  return prod.minCoeff() - tau1 * gamma * prod.sum() / static_cast<double>(prod.size());
}

double f2(const AgentSubproblem& sub, const AgentPoint& p, const Vector& x_J, const AgentDirection& d,
          const Vector& dx_J, double alpha, double tau2, double gamma) {
  const auto b = trial_residuals(sub, p, x_J, d, dx_J, alpha);
  return b.eta_hat - tau2 * gamma * std::sqrt(b.residual_sq());
}

double alpha_bounds(const AgentSubproblem& sub, const AgentPoint& p, const Vector& x_J, const AgentDirection& d,
                    const Vector& dx_J, double tau1, double tau2, double gamma) {
  constexpr double kSlack = 1e-10;
  const double f1_0 = f1(p, d, 0.0, tau1, gamma);
  const double f2_0 = f2(sub, p, x_J, d, dx_J, 0.0, tau2, gamma);
  const double scale = std::max(1.0, p.s.dot(p.lambda));
  if (f1_0 < -kSlack * scale || f2_0 < -kSlack * scale)
    throw NumericalError("agent " + std::to_string(sub.index) + ": iterate left the centrality neighborhood");

  auto admissible = [&](double a) {
    return stays_interior(p, d, a) && f1(p, d, a, tau1, gamma) >= std::min(0.0, f1_0) &&
           f2(sub, p, x_J, d, dx_J, a, tau2, gamma) >= std::min(0.0, f2_0);
  };
  double lo = 0.0;
  for (int t = 1; t <= kGridPoints; ++t) {
    const double a = static_cast<double>(t) / kGridPoints;
    if (!admissible(a)) {
      double hi = a;
      for (int k = 0; k < kBisections; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (admissible(mid))
          lo = mid;
        else
          hi = mid;
      }
      return lo;
    }
    lo = a;
  }
  return 1.0;
}

LineSearchResult line_search(const AgentSubproblem& sub, const AgentPoint& p, const Vector& x_J,
                             const AgentDirection& d, const Vector& dx_J, double alpha_init, double eta_bar,
                             double beta, double theta) {
  LineSearchResult res{alpha_init, 1.0 - alpha_init * (1.0 - eta_bar), 0};
  const double h0 = std::sqrt(agent_residuals(sub, p, x_J).merit_sq);
  for (;;) {
    const double h = std::sqrt(trial_residuals(sub, p, x_J, d, dx_J, res.alpha).merit_sq);
    if (h <= (1.0 - beta * (1.0 - res.eta)) * h0) return res;
    if (++res.contractions > kMaxContractions)
      throw StallError("agent " + std::to_string(sub.index) + ": line search did not terminate");
    res.alpha *= theta;
    res.eta = 1.0 - theta * (1.0 - res.eta);
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
  report.method = "inexact";
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
  admm::DirectionState warm;
  std::vector<double> alphas(uN), eps_pri, eps_dual;
  const std::vector<double> gamma(uN, params.gamma0);
  std::vector<char> ok(uN);

  try {
    const auto tau = CentralityConstants::from(bundles);
    for (int l = 0;; ++l) {
      std::vector<bool> stop(uN);
      for (std::size_t i = 0; i < uN; ++i) {
        stop[i] = params.stop == StopRule::Merit ? bundles[i].merit_sq <= tol.eps * tol.eps / N
                                                 : shared_stop_test(bundles[i], tol, N);
      }
      if (network->all(stop)) {
        report.reason = Termination::Converged;
        break;
      }
      if (l >= params.max_outer) {
        report.reason = Termination::MaxIterations;
        break;
      }

      const auto forcing = choose_forcing(bundles, tau, gamma, params, m_total, network);
      admm_thresholds(forcing.eta_hat, bundles, params.rho, m_total, eps_pri, eps_dual);
      const auto sys = admm::linearize(problem, z, forcing.mu, params.rho, static_cast<std::uint64_t>(l), network);
      const auto res = admm::run(sys, settings, eps_pri, eps_dual, params.warm_start ? &warm : nullptr, network,
                                 inner_observer);
      if (res.exhausted) ++report.inner_exhaustions;
      report.total_inner += res.inner_iters;
      const Direction& d = res.direction;

      network->for_each_agent([&](int i) {
        const auto ui = static_cast<std::size_t>(i);
        const auto& sub = problem.agent(i);
        const Vector xJ = lift(z.x, sub.J), dxJ = lift(d.dx, sub.J);
        const double a0 = alpha_bounds(sub, z.agents[ui], xJ, d.agents[ui], dxJ, tau.tau1[ui], tau.tau2[ui], gamma[ui]);
        alphas[ui] = line_search(sub, z.agents[ui], xJ, d.agents[ui], dxJ, a0, forcing.eta_bar, params.beta,
                                 params.theta).alpha;
      });
      double alpha = network->min(alphas);
      if (alpha < 1e-12) throw StallError("step length collapsed below 1e-12");
      double eta = 1.0 - alpha * (1.0 - forcing.eta_bar);
      int contractions = 0;
      for (;;) {
        network->for_each_agent([&](int i) {
          const auto ui = static_cast<std::size_t>(i);
          const auto& sub = problem.agent(i);
          const double h = std::sqrt(
              trial_residuals(sub, z.agents[ui], lift(z.x, sub.J), d.agents[ui], lift(d.dx, sub.J), alpha).merit_sq);
          ok[ui] = stays_interior(z.agents[ui], d.agents[ui], alpha) &&
                   h <= (1.0 - params.beta * (1.0 - eta)) * std::sqrt(bundles[ui].merit_sq);
        });
        if (network->all(std::vector<bool>(ok.begin(), ok.end()))) break;
        if (++contractions > kMaxContractions) throw StallError("common step length did not satisfy every agent");
        alpha *= params.theta;
        eta = 1.0 - params.theta * (1.0 - eta);
      }

      if (observer) {
        observer(OuterEvent{l, &z, &bundles, &d, &res, &sys, &forcing, &tau, &gamma, &eps_pri, &eps_dual, alpha, eta});
      }
      ForcingRow frow{l + 1,
                      forcing.sigma,
                      forcing.eta_hat,
                      forcing.eta_bar,
                      *std::min_element(eps_pri.begin(), eps_pri.end()),
                      *std::max_element(eps_pri.begin(), eps_pri.end()),
                      *std::min_element(eps_dual.begin(), eps_dual.end()),
                      *std::max_element(eps_dual.begin(), eps_dual.end())};
      report.forcing.push_back(frow);
      z = advance(z, d, alpha);
      refresh();
      if (params.warm_start) warm = res.state;
      report.outer_iterations = l + 1;
      report.trace.push_back(
          make_trace_row(report.method, l + 1, problem, z, bundles, forcing.mu, alpha, res.inner_iters));
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

}  // namespace cipm::inexact
