#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cipm/kkt.hpp"

namespace cipm {

enum class Termination { Converged, MaxIterations, NumericalFailure, Stalled };

const char* to_string(Termination t);
/// 0 converged, 2 iteration cap, 3 numerical failure or stall.
int exit_code(Termination t);

/// One row of the outer-iteration trace. Row 0 describes the initial point;
/// row l the iterate after step l together with the mu, step length and
/// inner iteration count of that step.
struct TraceRow {
  std::string method;
  int l = 0;
  double merit = 0.0;
  double r_primal_sq = 0.0;
  double r_dual_sq = 0.0;
  double gap = 0.0;
  double mu = 0.0;
  double alpha = 0.0;
  std::int64_t inner_iters = 0;
  double objective = 0.0;
};

/// Forcing quantities of the inexact method for step l.
struct ForcingRow {
  int l = 0;
  double sigma = 0.0;
  double eta_hat = 0.0;
  double eta_bar = 0.0;
  double eps_pri_min = 0.0;
  double eps_pri_max = 0.0;
  double eps_dual_min = 0.0;
  double eps_dual_max = 0.0;
};

struct SolveReport {
  std::string method;
  Iterate final_iterate;
  int outer_iterations = 0;
  std::int64_t total_inner = 0;
  std::vector<TraceRow> trace;
  std::vector<ForcingRow> forcing;
  Termination reason = Termination::MaxIterations;
  std::string message;
  /// Outer steps whose inner solve hit its iteration cap.
  int inner_exhaustions = 0;
  /// Reductions resolved centrally because the coupling graph is disconnected.
  int consensus_fallbacks = 0;
  std::int64_t message_units = 0;
  double objective = 0.0;
};

inline constexpr const char* kTraceHeader =
    "method,l,merit,r_primal_sq,r_dual_sq,gap,mu,alpha,inner_iters,objective";
inline constexpr const char* kForcingHeader =
    "l,sigma,eta_hat,eta_bar,eps_pri_min,eps_pri_max,eps_dual_min,eps_dual_max";

/// Numbers are written as shortest round-trip decimals.
void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows);
void write_forcing_csv(std::ostream& out, std::span<const ForcingRow> rows);

TraceRow make_trace_row(const std::string& method, int l, const CoupledProblem& problem, const Iterate& z,
                        std::span<const ResidualBundle> bundles, double mu, double alpha,
                        std::int64_t inner_iters);

/// Termination tolerances shared by all three solvers.
struct StopTolerances {
  /// Bound on the surrogate gap.
  double eps = 0.0;
  /// Bound on the primal and dual residual norms.
  double eps_feas = 0.0;
};

/// Resolves nonpositive entries to tolerance_scale(problem).
StopTolerances resolve_tolerances(const CoupledProblem& problem, double eps, double eps_feas);

/// Agent-local test: ||(r_p1, r_p2, r_c)||^2 <= eps_feas^2/N,
/// ||r_dual||^2 <= eps_feas^2/N and s'lambda <= eps/N.
bool shared_stop_test(const ResidualBundle& b, const StopTolerances& tol, int num_agents);

}  // namespace cipm
