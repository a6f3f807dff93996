#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cipm/admm_directions.hpp"
#include "cipm/kkt.hpp"
#include "cipm/netsim.hpp"
#include "cipm/report.hpp"

namespace cipm::inexact {

enum class StopRule {
  /// ||H^i||^2 <= eps^2 / N for every agent.
  Merit,
  /// The stop test shared with the exact method and the baseline.
  Shared,
};

struct Params {
  double eta_max = 0.9;
  double gamma0 = 0.9;
  double beta = 0.1;
  double theta = 0.95;
  double eps_sigma = 0.1;
  /// Added on top of the strict lower bound when choosing sigma^i.
  double sigma_margin = 0.01;
  double rho = 0.5;
  double alpha_or = 1.0;
  double eps = 0.0;
  double eps_feas = 0.0;
  int max_outer = 2000;
  int max_inner = 10000;
  bool warm_start = true;
  StopRule stop = StopRule::Merit;

  void validate() const;
};

/// Frozen per-agent centrality constants from the initial point:
/// tau1 = min(lambda s) / (s'lambda / m_i), tau2 = s'lambda / ||R^i||.
struct CentralityConstants {
  std::vector<double> tau1;
  std::vector<double> tau2;

  static CentralityConstants from(std::span<const ResidualBundle> bundles);
};

struct Forcing {
  std::vector<double> sigma_i;
  std::vector<double> eta_hat_i;
  double sigma = 0.0;
  double eta_hat = 0.0;
  double eta_bar = 0.0;
  double mu = 0.0;
};

/// Per agent sigma^i = tau2 gamma eta_hat^i (s'lambda)^i / min_j (s'lambda)^j
/// + eps_sigma + margin, with eta_hat^i starting at
/// min(0.5, eta_max - eps_sigma - 1e-3) and halved (at most 60 times) while
/// sigma^i + eta_hat^i >= eta_max. Then eta_hat = min eta_hat^i,
/// sigma = max sigma^i, eta_bar = sigma + eta_hat and
/// mu = sigma min_i (s'lambda)^i / m_total.
Forcing choose_forcing(std::span<const ResidualBundle> bundles, const CentralityConstants& tau,
                       std::span<const double> gamma, const Params& params, int m_total,
                       Network* network = nullptr);

/// eps_pri^i = (N/2)(eta_hat (s'lambda)^i / m)^2, eps_dual^i = eps_pri^i / rho^2.
void admm_thresholds(double eta_hat, std::span<const ResidualBundle> bundles, double rho, int m_total,
                     std::vector<double>& eps_pri, std::vector<double>& eps_dual);

/// f1(alpha) = min(s(alpha) .* lambda(alpha)) - tau1 gamma s(alpha)'lambda(alpha) / m_i.
double f1(const AgentPoint& p, const AgentDirection& d, double alpha, double tau1, double gamma);
/// f2(alpha) = s(alpha)'lambda(alpha) - tau2 gamma ||R^i(z(alpha))||.
double f2(const AgentSubproblem& sub, const AgentPoint& p, const Vector& x_J, const AgentDirection& d,
          const Vector& dx_J, double alpha, double tau2, double gamma);

/// Largest alpha in [0, 1] such that f1, f2 >= 0 and s, lambda > 0 on the
/// whole of [0, alpha]: scans a 64-point grid for the first violation, then
/// bisects that cell 40 times and returns its feasible end.
double alpha_bounds(const AgentSubproblem& sub, const AgentPoint& p, const Vector& x_J, const AgentDirection& d,
                    const Vector& dx_J, double tau1, double tau2, double gamma);

struct LineSearchResult {
  double alpha = 0.0;
  double eta = 0.0;
  int contractions = 0;
};

/// eta = 1 - alpha(1 - eta_bar); while ||H^i(alpha)|| > (1 - beta(1 - eta))||H^i(0)||
/// set alpha <- theta alpha and eta <- 1 - theta(1 - eta). Throws StallError
/// after 200 contractions.
LineSearchResult line_search(const AgentSubproblem& sub, const AgentPoint& p, const Vector& x_J,
                             const AgentDirection& d, const Vector& dx_J, double alpha_init, double eta_bar,
                             double beta, double theta);

struct OuterEvent {
  int l = 0;
  const Iterate* z = nullptr;
  const std::vector<ResidualBundle>* bundles = nullptr;
  const Direction* direction = nullptr;
  const admm::Result* admm = nullptr;
  const admm::LinearSystem* system = nullptr;
  const Forcing* forcing = nullptr;
  const CentralityConstants* tau = nullptr;
  const std::vector<double>* gamma = nullptr;
  const std::vector<double>* eps_pri = nullptr;
  const std::vector<double>* eps_dual = nullptr;
  double alpha = 0.0;
  /// 1 - alpha (1 - eta_bar) at the common step.
  double eta = 0.0;
};

using OuterObserver = std::function<void(const OuterEvent&)>;

/// Distributed inexact primal-dual interior-point method.
SolveReport solve(const CoupledProblem& problem, const Iterate& init, const Params& params,
                  Network* network = nullptr, const OuterObserver& observer = {},
                  const admm::InnerObserver& inner_observer = {});

}  // namespace cipm::inexact
