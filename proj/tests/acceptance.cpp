#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "cipm/admm_directions.hpp"
#include "cipm/baseline_admm.hpp"
#include "cipm/ipm_exact.hpp"
#include "cipm/ipm_inexact.hpp"
#include "cipm/saddle_analysis.hpp"
#include "cli.hpp"
#include "support.hpp"

namespace {

using namespace cipm;
using Clock = std::chrono::steady_clock;

constexpr double kDirectionTol = 1e-6;
constexpr double kDirectionSeconds = 30.0;
constexpr double kIdentityTol = 1e-8;
constexpr double kSecondBlockTol = 1e-9;
constexpr double kObjectiveTol = 1e-5;
constexpr double kRunSeconds = 60.0;
constexpr double kSavingRatio = 0.8;
constexpr int kBaselineWins = 4;
constexpr double kBalanceTol = 1e-9;
constexpr double kAlphaFloor = 1e-12;
constexpr double kFixedPointTol = 1e-9;
constexpr double kTrajectoryTol = 1e-8;
constexpr double kGaussSeidelTol = 1e-9;
constexpr int kExactBudget = 500;
constexpr int kInexactBudget = 5000;
constexpr int kBaselineBudget = 5000;
constexpr int kSeeds = 5;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool done = false;
  bool pass = false;
  std::string detail;
};

Outcome outcomes[10];

void report(int id, bool pass, const std::string& detail) {
  outcomes[id] = {true, pass, detail};
  std::printf("  criterion %d evaluated\n", id);
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

ProblemGenConfig direction_config(std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 0xacce);
  ProblemGenConfig c;
  c.num_agents = rng.uniform_int(2, 5);
  c.local_size = {5, 10};
  c.num_eq = {1, 2};
  c.num_ineq = {2, 5};
  c.index_pool = std::max(10, static_cast<int>(0.6 * 7.5 * c.num_agents));
  c.seed = seed;
  return c;
}

struct IdentityStats {
  double worst_rel = 0.0;
  long over_tol = 0;
  double worst_second = 0.0;
  bool eliminated_zero = true;
  long iterates = 0;
};

// Coupled-system residual y = [dW; dx; rho dv_bar; rho dvc_bar] against the
// three-term inner residual.
void check_identity(const CoupledProblem& pb, const Iterate& z, double mu, const DenseKkt& dense,
                    const admm::LinearSystem& sys, const admm::DirectionState& st, IdentityStats& stats) {
  const double rho = sys.rho;
  Index nW = 0, ne = 0;
  for (const auto& a : pb.agents()) {
    nW += a.local_size();
    ne += a.num_eq();
  }
  Vector y(nW + pb.n() + ne + nW);
  Index off = 0;
  for (const auto& w : st.dw) {
    y.segment(off, w.size()) = w;
    off += w.size();
  }
  y.segment(off, pb.n()) = st.dx;
  off += pb.n();
  for (const auto& v : st.dv_bar) {
    y.segment(off, v.size()) = rho * v;
    off += v.size();
  }
  for (const auto& v : st.dvc_bar) {
    y.segment(off, v.size()) = rho * v;
    off += v.size();
  }
  const Vector r = dense.K * y - dense.rhs;
  const double direct = r.head(nW).squaredNorm() + r.tail(ne + nW).squaredNorm();
  const double three_term = admm::inner_residual_norm_sq(sys, st);
  const double rel = std::abs(direct - three_term) / std::max(1e-300, std::max(direct, three_term));
  stats.worst_rel = std::max(stats.worst_rel, rel);
  if (rel > kIdentityTol) ++stats.over_tol;
  stats.worst_second = std::max(stats.worst_second, r.segment(nW, pb.n()).norm());

  const Direction d = admm::extract_direction(sys, st);
  for (int i = 0; i < pb.num_agents(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const auto& sub = pb.agent(i);
    const auto& p = z.agents[ui];
    const auto& b = sys.agents[ui].bundle;
    const Vector ds_row = d.agents[ui].ds - (-sub.A_in * d.agents[ui].dw - b.r_primal1);
    const Vector dl_row =
        d.agents[ui].dlambda -
        ((Vector::Constant(p.s.size(), mu) - b.r_cent - p.lambda.cwiseProduct(d.agents[ui].ds)).array() / p.s.array())
            .matrix();
    if (ds_row.lpNorm<Eigen::Infinity>() != 0.0 || dl_row.lpNorm<Eigen::Infinity>() != 0.0) stats.eliminated_zero = false;
  }
  ++stats.iterates;
}

void criteria_1_2() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  IdentityStats ids;
  double identity_seconds = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto pb = generate(direction_config(seed)).problem;
    const auto z = testing::random_interior(pb, seed);
    const double mu = 0.1;
    const std::vector<double> eps(static_cast<std::size_t>(pb.num_agents()), 1e-12);
    const auto sys = saddle::assemble(pb, z, mu, 0.5);
    const auto oracle = saddle::to_direction(pb, z, mu, sys, saddle::direct_solve(sys));
    const DenseKkt dense = dense_kkt(pb, z, mu);

    std::vector<admm::DirectionState> states;
    auto observer = [&](const admm::LinearSystem&, const admm::DirectionState& st) { states.push_back(st); };
    const auto res = admm::run(pb, z, mu, admm::Settings{0.5, 1.0, 100000}, eps, eps, nullptr, nullptr, observer);

    double num = (res.direction.dx - oracle.dx).squaredNorm(), den = oracle.dx.squaredNorm();
    for (std::size_t i = 0; i < oracle.agents.size(); ++i) {
      const auto& a = res.direction.agents[i];
      const auto& o = oracle.agents[i];
      num += (a.dw - o.dw).squaredNorm() + (a.ds - o.ds).squaredNorm() + (a.dlambda - o.dlambda).squaredNorm() +
             (a.dv - o.dv).squaredNorm() + (a.dv_c - o.dv_c).squaredNorm();
      den += o.dw.squaredNorm() + o.ds.squaredNorm() + o.dlambda.squaredNorm() + o.dv.squaredNorm() +
             o.dv_c.squaredNorm();
    }
    worst = std::max(worst, std::sqrt(num / std::max(1.0, den)));

    const auto t1 = Clock::now();
    const auto lin = admm::linearize(pb, z, mu, 0.5, 0);
    for (const auto& st : states) check_identity(pb, z, mu, dense, lin, st, ids);
    identity_seconds += seconds_since(t1);
  }
  const double elapsed = seconds_since(t0) - identity_seconds;
  report(1, worst <= kDirectionTol && elapsed < kDirectionSeconds,
         "max rel err " + fmt(worst) + " (tol " + fmt(kDirectionTol) + "), " + fmt(elapsed) + " s");
  report(2, ids.worst_rel <= kIdentityTol && ids.worst_second <= kSecondBlockTol && ids.eliminated_zero,
         std::to_string(ids.iterates) + " inner iterates, identity rel " + fmt(ids.worst_rel) + " (" +
             std::to_string(ids.over_tol) + " above " + fmt(kIdentityTol) + "), second block " +
             fmt(ids.worst_second) + ", eliminated rows " + (ids.eliminated_zero ? "exactly 0" : "nonzero"));
}

struct InvariantStats {
  bool interior = true;
  double balance = 0.0;
  bool merit = true;
  bool omega = true;
  double min_alpha = 1.0;
  bool inner_bound = true;
  long steps = 0;
};

void interior_check(const Iterate& z, InvariantStats& inv) {
  for (const auto& p : z.agents)
    if (!(p.s.minCoeff() > 0.0 && p.lambda.minCoeff() > 0.0)) inv.interior = false;
}

SolveReport run_exact(const CoupledProblem& pb, const Iterate& init, bool warm, InvariantStats& inv) {
  exact::Params params;
  params.max_outer = kExactBudget;
  params.warm_start = warm;
  double last = std::sqrt(merit_norm_sq(all_residuals(pb, init)));
  auto obs = [&](const exact::OuterEvent& ev) {
    interior_check(*ev.z, inv);
    inv.balance = std::max(inv.balance, consistency_dual_sum(pb, *ev.z).lpNorm<Eigen::Infinity>());
    inv.min_alpha = std::min(inv.min_alpha, ev.alpha);
    const auto next = advance(*ev.z, *ev.direction, ev.alpha);
    interior_check(next, inv);
    inv.balance = std::max(inv.balance, consistency_dual_sum(pb, next).lpNorm<Eigen::Infinity>());
    const double merit = std::sqrt(merit_norm_sq(all_residuals(pb, next)));
    if (merit > (1.0 - params.gamma_ls * ev.alpha) * last * (1.0 + 1e-12)) inv.merit = false;
    last = merit;
    ++inv.steps;
  };
  return exact::solve(pb, init, params, nullptr, obs);
}

SolveReport run_inexact(const CoupledProblem& pb, const Iterate& init, bool warm, InvariantStats& inv) {
  inexact::Params params;
  params.max_outer = kInexactBudget;
  params.warm_start = warm;
  params.stop = inexact::StopRule::Shared;
  const double m = pb.total_ineq();
  auto obs = [&](const inexact::OuterEvent& ev) {
    const auto& z = *ev.z;
    const auto& d = *ev.direction;
    interior_check(z, inv);
    inv.balance = std::max(inv.balance, consistency_dual_sum(pb, z).lpNorm<Eigen::Infinity>());
    inv.min_alpha = std::min(inv.min_alpha, ev.alpha);
    double bound = 0.0;
    for (int i = 0; i < pb.num_agents(); ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const auto& sub = pb.agent(i);
      const auto& p = z.agents[ui];
      const Vector xJ = lift(z.x, sub.J), dxJ = lift(d.dx, sub.J);
      const double scale = std::max(1.0, p.s.dot(p.lambda));
      const double gamma = (*ev.gamma)[ui];
      if (inexact::f1(p, d.agents[ui], 0.0, ev.tau->tau1[ui], gamma) < -1e-10 * scale ||
          inexact::f2(sub, p, xJ, d.agents[ui], dxJ, 0.0, ev.tau->tau2[ui], gamma) < -1e-10 * scale)
        inv.omega = false;
      const double h0 = std::sqrt((*ev.bundles)[ui].merit_sq);
      const double h1 = std::sqrt(trial_residuals(sub, p, xJ, d.agents[ui], dxJ, ev.alpha).merit_sq);
      if (h1 > (1.0 - params.beta * (1.0 - ev.eta)) * h0 * (1.0 + 1e-12)) inv.merit = false;
      const double t = ev.forcing->eta_hat * (*ev.bundles)[ui].eta_hat / m;
      bound += t * t;
    }
    if (!ev.admm->exhausted && admm::inner_residual_norm_sq(*ev.system, ev.admm->state) > bound * (1.0 + 1e-9))
      inv.inner_bound = false;
    const auto next = advance(z, d, ev.alpha);
    interior_check(next, inv);
    inv.balance = std::max(inv.balance, consistency_dual_sum(pb, next).lpNorm<Eigen::Infinity>());
    ++inv.steps;
  };
  return inexact::solve(pb, init, params, nullptr, obs);
}

void criteria_3_to_7() {
  std::vector<std::int64_t> exact_inner, inexact_inner, baseline_inner;
  double worst_err[3] = {0.0, 0.0, 0.0};
  double worst_time = 0.0;
  bool all_converged = true;
  std::string notes;
  InvariantStats inv;
  std::int64_t warm_inner = 0, cold_inner = 0;
  bool warm_ok = false;

  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    const auto pb = generate(testing::mid_config(seed)).problem;
    const auto init = initial_iterate(pb, seed);
    const auto oracle = saddle::solve_oracle(pb);
    const double denom = std::max(1.0, std::abs(oracle.objective));

    auto t0 = Clock::now();
    const auto ex = run_exact(pb, init, true, inv);
    const double tex = seconds_since(t0);
    t0 = Clock::now();
    const auto in = run_inexact(pb, init, true, inv);
    const double tin = seconds_since(t0);
    t0 = Clock::now();
    baseline::Params bp;
    bp.max_iter = kBaselineBudget;
    const auto bl = baseline::solve(pb, init, bp);
    const double tbl = seconds_since(t0);

    const SolveReport* runs[3] = {&ex, &in, &bl};
    const double times[3] = {tex, tin, tbl};
    for (int k = 0; k < 3; ++k) {
      const double err = std::abs(runs[k]->objective - oracle.objective) / denom;
      worst_err[k] = std::max(worst_err[k], err);
      worst_time = std::max(worst_time, times[k]);
      if (runs[k]->reason != Termination::Converged) {
        all_converged = false;
        notes += (notes.empty() ? ", not converged:" : ",") + std::string(" seed ") + std::to_string(seed) + " " +
                 runs[k]->method + " " + to_string(runs[k]->reason);
      }
    }
    exact_inner.push_back(ex.total_inner);
    inexact_inner.push_back(in.total_inner);
    baseline_inner.push_back(bl.total_inner);
    std::printf("  seed %llu: inner exact %lld, inexact %lld, baseline %lld; outer %d/%d/%d; rel err %s/%s/%s\n",
                static_cast<unsigned long long>(seed), static_cast<long long>(ex.total_inner),
                static_cast<long long>(in.total_inner), static_cast<long long>(bl.total_inner), ex.outer_iterations,
                in.outer_iterations, bl.outer_iterations,
                fmt(std::abs(ex.objective - oracle.objective) / denom).c_str(),
                fmt(std::abs(in.objective - oracle.objective) / denom).c_str(),
                fmt(std::abs(bl.objective - oracle.objective) / denom).c_str());
    std::fflush(stdout);

    if (seed == 1) {
      InvariantStats scratch;
      const auto cold = run_inexact(pb, init, false, scratch);
      warm_inner = in.total_inner;
      cold_inner = cold.total_inner;
      warm_ok = in.reason == Termination::Converged && cold.reason == Termination::Converged &&
                warm_inner <= cold_inner;
    }
  }

  const bool errors_ok = worst_err[0] <= kObjectiveTol && worst_err[1] <= kObjectiveTol && worst_err[2] <= kObjectiveTol;
  report(3, all_converged && errors_ok && worst_time < kRunSeconds,
         "worst rel err exact " + fmt(worst_err[0]) + ", inexact " + fmt(worst_err[1]) + ", baseline " +
             fmt(worst_err[2]) + " (tol " + fmt(kObjectiveTol) + "), slowest run " + fmt(worst_time) + " s" + notes);

  std::int64_t sum_exact = 0, sum_inexact = 0;
  int wins = 0;
  for (std::size_t k = 0; k < exact_inner.size(); ++k) {
    sum_exact += exact_inner[k];
    sum_inexact += inexact_inner[k];
    if (inexact_inner[k] < baseline_inner[k]) ++wins;
  }
  report(4, static_cast<double>(sum_inexact) <= kSavingRatio * static_cast<double>(sum_exact),
         "inexact " + std::to_string(sum_inexact) + " vs exact " + std::to_string(sum_exact) + " inner iterations (ratio " +
             fmt(static_cast<double>(sum_inexact) / static_cast<double>(sum_exact)) + ", limit " + fmt(kSavingRatio) + ")");
  report(5, wins >= kBaselineWins,
         "inexact below baseline on " + std::to_string(wins) + " of " + std::to_string(kSeeds) + " seeds (need " +
             std::to_string(kBaselineWins) + ")");
  report(6, warm_ok,
         "seed 1 inexact inner iterations warm " + std::to_string(warm_inner) + ", cold " + std::to_string(cold_inner));
  report(7,
         inv.interior && inv.balance <= kBalanceTol && inv.merit && inv.omega && inv.min_alpha >= kAlphaFloor &&
             inv.inner_bound,
         std::to_string(inv.steps) + " outer steps: interior " + (inv.interior ? "yes" : "no") + ", balance " +
             fmt(inv.balance) + ", merit decrease " + (inv.merit ? "yes" : "no") + ", neighborhood " +
             (inv.omega ? "yes" : "no") + ", min alpha " + fmt(inv.min_alpha) + ", inner exit bound " +
             (inv.inner_bound ? "yes" : "no"));
}

void criterion_8() {
  const auto pb = generate(testing::tiny_config(3, 2)).problem;
  const auto z = testing::random_interior(pb, 3);
  const double mu = 0.2, rho = 0.5;
  const auto sys = saddle::assemble(pb, z, mu, rho);
  const auto fp = saddle::fixed_point_form(sys);
  const Index n = sys.size();
  const Matrix G = Matrix::Identity(n, n) - saddle::preconditioner1(sys).fullPivLu().solve(sys.A_kkt);
  const double g_err = (fp.G - G).cwiseAbs().maxCoeff();

  std::vector<Vector> trace{saddle::stack_state(admm::cold_state(pb, rho, 1.0))};
  const std::vector<double> eps(2, 1e-30);
  admm::run(pb, z, mu, admm::Settings{rho, 1.0, 40}, eps, eps, nullptr, nullptr,
            [&](const admm::LinearSystem&, const admm::DirectionState& st) { trace.push_back(saddle::stack_state(st)); });
  double traj = 0.0;
  for (std::size_t k = 0; k + 1 < trace.size(); ++k)
    traj = std::max(traj, testing::rel_err(fp.G * trace[k] + fp.f, trace[k + 1]));
  const bool gs = saddle::gauss_seidel_check(sys, trace, kGaussSeidelTol);
  report(8, g_err <= kFixedPointTol && traj <= kTrajectoryTol && gs,
         "G entrywise err " + fmt(g_err) + ", trajectory rel err " + fmt(traj) + " over " +
             std::to_string(trace.size() - 1) + " steps, Gauss-Seidel " + (gs ? "matches" : "differs"));
}

void criterion_9() {
  RunConfig config;
  config.seed = 2;
  config.problem = testing::mid_config(2);
  config.exact.max_outer = 25;
  config.inexact.max_outer = 25;
  config.baseline.max_iter = 60;
  const auto pb = generate(config.problem).problem;
  bool same = true;
  std::string detail;
  for (const Method m : {Method::Exact, Method::Inexact, Method::Baseline}) {
    std::string ref;
    for (int threads : {1, 4, 8}) {
      config.threads = threads;
      const auto run = cli::run_method(m, pb, config);
      std::ostringstream out;
      write_trace_csv(out, run.report.trace);
      write_forcing_csv(out, run.report.forcing);
      if (threads == 1)
        ref = out.str();
      else if (out.str() != ref)
        same = false;
    }
    detail += std::string(to_string(m)) + " " + std::to_string(ref.size()) + " bytes; ";
  }
  report(9, same, "1/4/8 threads: " + detail + (same ? "identical" : "differ"));
}

}  // namespace

int main() {
  criteria_1_2();
  criterion_8();
  criterion_9();
  criteria_3_to_7();
  int failures = 0;
  for (int id = 1; id <= 9; ++id) {
    const auto& o = outcomes[id];
    std::printf("criterion %d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.done ? o.detail.c_str() : "not run");
    if (!o.pass) ++failures;
  }
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
