#include <gtest/gtest.h>

#include <sstream>

#include "cipm/errors.hpp"
#include "cipm/ipm_exact.hpp"
#include "cipm/ipm_inexact.hpp"
#include "cipm/random.hpp"
#include "cipm/saddle_analysis.hpp"
#include "support.hpp"

namespace cipm {
namespace {

ResidualBundle gap_bundle(double gap) {
  ResidualBundle b;
  b.eta_hat = gap;
  return b;
}

// One shared variable, two inequalities A_in = (1, 1)', b_in = (-1, -1).
CoupledProblem two_ineq_problem() {
  AgentSubproblem a;
  a.J = {0};
  a.P = Matrix::Identity(1, 1);
  a.q = Vector::Zero(1);
  a.A_in = Matrix::Ones(2, 1);
  a.b_in = -Vector::Ones(2);
  a.A_eq = Matrix::Zero(0, 1);
  a.b_eq = Vector::Zero(0);
  return CoupledProblem(1, {a});
}

CoupledProblem one_ineq_problem() {
  AgentSubproblem a;
  a.J = {0};
  a.P = Matrix::Identity(1, 1);
  a.q = Vector::Zero(1);
  a.A_in = Matrix::Identity(1, 1);
  a.b_in = -Vector::Ones(1);
  a.A_eq = Matrix::Zero(0, 1);
  a.b_eq = Vector::Zero(0);
  return CoupledProblem(1, {a});
}

TEST(IpmInexact, ForcingOfHandInstance) {
  const std::vector<ResidualBundle> bundles{gap_bundle(1.0), gap_bundle(2.0)};
  inexact::CentralityConstants tau{{0.5, 0.5}, {0.5, 0.5}};
  const std::vector<double> gamma{0.9, 0.9};
  const auto f = inexact::choose_forcing(bundles, tau, gamma, inexact::Params{}, 4);
  // Agent 0 keeps eta_hat = 0.5; agent 1 needs one halving.
  EXPECT_DOUBLE_EQ(f.eta_hat_i[0], 0.5);
  EXPECT_DOUBLE_EQ(f.sigma_i[0], 0.335);
  EXPECT_DOUBLE_EQ(f.eta_hat_i[1], 0.25);
  EXPECT_DOUBLE_EQ(f.sigma_i[1], 0.335);
  EXPECT_DOUBLE_EQ(f.eta_hat, 0.25);
  EXPECT_DOUBLE_EQ(f.sigma, 0.335);
  EXPECT_DOUBLE_EQ(f.eta_bar, 0.585);
  EXPECT_DOUBLE_EQ(f.mu, 0.08375);
}

TEST(IpmInexact, ForcingStaysBelowEtaMaxOnRandomInputs) {
  Rng rng(5);
  const inexact::Params params;
  for (int trial = 0; trial < 50; ++trial) {
    const int N = rng.uniform_int(1, 6);
    std::vector<ResidualBundle> bundles;
    inexact::CentralityConstants tau;
    std::vector<double> gamma;
    for (int i = 0; i < N; ++i) {
      bundles.push_back(gap_bundle(rng.uniform(1e-3, 10.0)));
      tau.tau1.push_back(rng.uniform(0.1, 1.0));
      tau.tau2.push_back(rng.uniform(0.01, 5.0));
      gamma.push_back(rng.uniform(0.5, 0.99));
    }
    const auto f = inexact::choose_forcing(bundles, tau, gamma, params, 10);
    double min_gap = bundles[0].eta_hat;
    for (const auto& b : bundles) min_gap = std::min(min_gap, b.eta_hat);
    for (int i = 0; i < N; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      EXPECT_LT(f.sigma_i[ui] + f.eta_hat_i[ui], params.eta_max);
      EXPECT_GT(f.sigma_i[ui], tau.tau2[ui] * gamma[ui] * f.eta_hat_i[ui] * bundles[ui].eta_hat / min_gap +
                                   params.eps_sigma);
    }
    EXPECT_LE(f.eta_hat, *std::min_element(f.eta_hat_i.begin(), f.eta_hat_i.end()));
    EXPECT_GE(f.sigma, *std::max_element(f.sigma_i.begin(), f.sigma_i.end()));
    EXPECT_LT(f.eta_bar, params.eta_max);
    EXPECT_DOUBLE_EQ(f.mu, f.sigma * min_gap / 10.0);
  }
}

TEST(IpmInexact, AdmmThresholdsOfHandInstance) {
  const std::vector<ResidualBundle> bundles{gap_bundle(1.0), gap_bundle(3.0)};
  std::vector<double> pri, dual;
  inexact::admm_thresholds(0.2, bundles, 0.5, 5, pri, dual);
  ASSERT_EQ(pri.size(), 2u);
  EXPECT_NEAR(pri[0], 0.0016, 1e-14 * 0.0016);
  EXPECT_NEAR(pri[1], 0.0144, 1e-14 * 0.0144);
  EXPECT_NEAR(dual[0], 0.0064, 1e-14 * 0.0064);
  EXPECT_NEAR(dual[1], 0.0576, 1e-14 * 0.0576);
}

TEST(IpmInexact, CentralityConstantsFromBundles) {
  ResidualBundle b;
  b.r_cent = (Vector(2) << 1.0, 3.0).finished();
  b.eta_hat = 4.0;
  b.r_dual = (Vector(1) << 3.0).finished();
  b.r_primal1 = (Vector(2) << 4.0, 0.0).finished();
  b.r_primal2 = Vector::Zero(0);
  b.r_c = Vector::Zero(1);
  const std::vector<ResidualBundle> bundles{b};
  const auto tau = inexact::CentralityConstants::from(bundles);
  EXPECT_DOUBLE_EQ(tau.tau1[0], 0.5);
  EXPECT_DOUBLE_EQ(tau.tau2[0], 0.8);
}

TEST(IpmInexact, AlphaBoundsFindsTheCentralityRoot) {
  // f1(alpha) = min(1 - alpha, 1 + alpha) - tau1 gamma = 0.5 - alpha.
  const auto pb = two_ineq_problem();
  const AgentPoint p{Vector::Zero(1), Vector::Ones(2), Vector::Ones(2), Vector::Zero(0), Vector::Zero(1)};
  const AgentDirection d{Vector::Zero(1), Vector::Zero(2), (Vector(2) << -1.0, 1.0).finished(), Vector::Zero(0),
                         Vector::Zero(1)};
  EXPECT_NEAR(inexact::f1(p, d, 0.0, 1.0, 0.5), 0.5, 1e-15);
  EXPECT_NEAR(inexact::f1(p, d, 0.5, 1.0, 0.5), 0.0, 1e-15);
  const double a = inexact::alpha_bounds(pb.agent(0), p, Vector::Zero(1), d, Vector::Zero(1), 1.0, 0.0, 0.5);
  EXPECT_LE(a, 0.5);
  EXPECT_NEAR(a, 0.5, 1e-12);

  // Without the centrality cap the step is limited by nothing.
  const double full = inexact::alpha_bounds(pb.agent(0), p, Vector::Zero(1), d, Vector::Zero(1), 0.0, 0.0, 0.5);
  EXPECT_LE(full, 1.0);
  EXPECT_NEAR(full, 1.0, 1e-12);
}

TEST(IpmInexact, AlphaBoundsRejectsAPointOutsideTheNeighborhood) {
  const auto pb = two_ineq_problem();
  const AgentPoint p{Vector::Zero(1), Vector::Ones(2), (Vector(2) << 0.1, 2.0).finished(), Vector::Zero(0),
                     Vector::Zero(1)};
  const AgentDirection d{Vector::Zero(1), Vector::Zero(2), Vector::Zero(2), Vector::Zero(0), Vector::Zero(1)};
  EXPECT_THROW(inexact::alpha_bounds(pb.agent(0), p, Vector::Zero(1), d, Vector::Zero(1), 1.0, 0.0, 0.9),
               NumericalError);
}

TEST(IpmInexact, LineSearchOfHandInstance) {
  // ||H(alpha)|| = sqrt(2) |1 - 2 alpha|: alpha = 1 fails, 0.95 passes.
  const auto pb = one_ineq_problem();
  const AgentPoint p{Vector::Zero(1), Vector::Ones(1), Vector::Ones(1), Vector::Zero(0), Vector::Zero(1)};
  const AgentDirection d{Vector::Zero(1), Vector::Zero(1), (Vector(1) << -2.0).finished(), Vector::Zero(0),
                         Vector::Zero(1)};
  const auto r = inexact::line_search(pb.agent(0), p, Vector::Zero(1), d, Vector::Zero(1), 1.0, 0.5, 0.1, 0.95);
  EXPECT_DOUBLE_EQ(r.alpha, 0.95);
  EXPECT_DOUBLE_EQ(r.eta, 0.525);
  EXPECT_EQ(r.contractions, 1);

  const AgentDirection away{Vector::Zero(1), Vector::Zero(1), (Vector(1) << 1.0).finished(), Vector::Zero(0),
                            Vector::Zero(1)};
  EXPECT_THROW(inexact::line_search(pb.agent(0), p, Vector::Zero(1), away, Vector::Zero(1), 1.0, 0.5, 0.1, 0.95),
               StallError);
}

TEST(IpmInexact, ConvergesWithNeighborhoodAndInnerBounds) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto pb = generate(testing::tiny_config(seed, 3)).problem;
    const auto init = initial_iterate(pb, seed);
    inexact::Params params;
    params.stop = inexact::StopRule::Shared;
    const double m = pb.total_ineq();
    int steps = 0, checked_exits = 0;
    auto observer = [&](const inexact::OuterEvent& ev) {
      const auto& z = *ev.z;
      const auto& d = *ev.direction;
      const auto& f = *ev.forcing;
      EXPECT_LT(f.eta_bar, params.eta_max);
      EXPECT_LE(consistency_dual_sum(pb, z).lpNorm<Eigen::Infinity>(), 1e-9);
      double bound = 0.0;
      for (int i = 0; i < pb.num_agents(); ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const auto& sub = pb.agent(i);
        const auto& p = z.agents[ui];
        const double scale = std::max(1.0, p.s.dot(p.lambda));
        const Vector xJ = lift(z.x, sub.J), dxJ = lift(d.dx, sub.J);
        EXPECT_GE(inexact::f1(p, d.agents[ui], 0.0, ev.tau->tau1[ui], (*ev.gamma)[ui]), -1e-10 * scale);
        EXPECT_GE(inexact::f2(sub, p, xJ, d.agents[ui], dxJ, 0.0, ev.tau->tau2[ui], (*ev.gamma)[ui]), -1e-10 * scale);
        const double t = f.eta_hat * (*ev.bundles)[ui].eta_hat / m;
        bound += t * t;
        const auto next = advance(p, d.agents[ui], ev.alpha);
        EXPECT_GT(next.s.minCoeff(), 0.0);
        EXPECT_GT(next.lambda.minCoeff(), 0.0);
        const double h0 = std::sqrt((*ev.bundles)[ui].merit_sq);
        const double h1 = std::sqrt(trial_residuals(sub, p, xJ, d.agents[ui], dxJ, ev.alpha).merit_sq);
        EXPECT_LE(h1, (1.0 - params.beta * (1.0 - ev.eta)) * h0 * (1.0 + 1e-12));
      }
      if (!ev.admm->exhausted) {
        EXPECT_LE(admm::inner_residual_norm_sq(*ev.system, ev.admm->state), bound * (1.0 + 1e-9));
        ++checked_exits;
      }
      EXPECT_NEAR(ev.eta, 1.0 - ev.alpha * (1.0 - f.eta_bar), 1e-12);
      ++steps;
    };
    const auto report = inexact::solve(pb, init, params, nullptr, observer);
    ASSERT_EQ(report.reason, Termination::Converged) << report.message;
    EXPECT_EQ(steps, report.outer_iterations);
    EXPECT_GT(checked_exits, 0);
    EXPECT_EQ(report.trace.size(), static_cast<std::size_t>(report.outer_iterations) + 1);
    ASSERT_EQ(report.forcing.size(), static_cast<std::size_t>(report.outer_iterations));
    for (std::size_t r = 0; r < report.forcing.size(); ++r) {
      EXPECT_EQ(report.forcing[r].l, static_cast<int>(r) + 1);
      EXPECT_LE(report.forcing[r].eps_pri_min, report.forcing[r].eps_pri_max);
      EXPECT_NEAR(report.forcing[r].eps_dual_max, report.forcing[r].eps_pri_max / (params.rho * params.rho),
                  1e-12 * report.forcing[r].eps_dual_max);
    }
    const auto oracle = saddle::solve_oracle(pb);
    EXPECT_LE(std::abs(report.objective - oracle.objective) / std::max(1.0, std::abs(oracle.objective)), 1e-5);
  }
}

TEST(IpmInexact, MeritRuleStopsOnTheMeritNorm) {
  const auto pb = generate(testing::tiny_config(4, 3)).problem;
  inexact::Params params;
  params.stop = inexact::StopRule::Merit;
  const auto report = inexact::solve(pb, initial_iterate(pb, 4), params);
  ASSERT_EQ(report.reason, Termination::Converged) << report.message;
  const double eps = tolerance_scale(pb);
  for (const auto& b : all_residuals(pb, report.final_iterate))
    EXPECT_LE(b.merit_sq, eps * eps / pb.num_agents());
}

TEST(IpmInexact, TraceIsIndependentOfThreadCount) {
  const auto pb = generate(testing::tiny_config(5, 4)).problem;
  const auto init = initial_iterate(pb, 5);
  inexact::Params params;
  params.max_outer = 20;
  Network one(pb, 1), four(pb, 4);
  const auto a = inexact::solve(pb, init, params, &one);
  const auto b = inexact::solve(pb, init, params, &four);
  std::ostringstream ta, tb, fa, fb;
  write_trace_csv(ta, a.trace);
  write_trace_csv(tb, b.trace);
  write_forcing_csv(fa, a.forcing);
  write_forcing_csv(fb, b.forcing);
  EXPECT_EQ(ta.str(), tb.str());
  EXPECT_EQ(fa.str(), fb.str());
}

TEST(IpmInexact, WarmStartDoesNotCostInnerIterations) {
  const auto pb = generate(testing::tiny_config(1, 3)).problem;
  const auto init = initial_iterate(pb, 1);
  inexact::Params warm, cold;
  warm.stop = cold.stop = inexact::StopRule::Shared;
  cold.warm_start = false;
  const auto rw = inexact::solve(pb, init, warm);
  const auto rc = inexact::solve(pb, init, cold);
  ASSERT_EQ(rw.reason, Termination::Converged) << rw.message;
  ASSERT_EQ(rc.reason, Termination::Converged) << rc.message;
  EXPECT_LE(rw.total_inner, rc.total_inner);
}

TEST(IpmInexact, InvalidParametersAreRejected) {
  const auto pb = generate(testing::tiny_config(6)).problem;
  const auto init = initial_iterate(pb, 6);
  const auto expect_config_error = [&](auto mutate) {
    inexact::Params params;
    mutate(params);
    EXPECT_THROW(inexact::solve(pb, init, params), ConfigError);
  };
  expect_config_error([](inexact::Params& p) { p.eta_max = 1.0; });
  expect_config_error([](inexact::Params& p) { p.gamma0 = 0.4; });
  expect_config_error([](inexact::Params& p) { p.theta = 1.0; });
  expect_config_error([](inexact::Params& p) { p.eps_sigma = 0.0; });
  expect_config_error([](inexact::Params& p) { p.alpha_or = 2.0; });
  auto bad = init;
  bad.agents[1].v_c.setConstant(2.0);
  EXPECT_THROW(inexact::solve(pb, bad, inexact::Params{}), DomainError);
}

}  // namespace
}  // namespace cipm
