#include "cipm/report.hpp"

#include <cmath>

#include "cipm/format.hpp"

namespace cipm {

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxIterations: return "max-iterations";
    case Termination::NumericalFailure: return "numerical-failure";
    case Termination::Stalled: return "stalled";
  }
  return "unknown";
}

int exit_code(Termination t) {
  switch (t) {
    case Termination::Converged: return 0;
    case Termination::MaxIterations: return 2;
    case Termination::NumericalFailure:
    case Termination::Stalled: return 3;
  }
  return 3;
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows) {
  out << kTraceHeader << '\n';
  for (const auto& r : rows) {
    out << r.method << ',' << r.l << ',' << format_double(r.merit) << ',' << format_double(r.r_primal_sq) << ','
        << format_double(r.r_dual_sq) << ',' << format_double(r.gap) << ',' << format_double(r.mu) << ','
        << format_double(r.alpha) << ',' << r.inner_iters << ',' << format_double(r.objective) << '\n';
  }
}

void write_forcing_csv(std::ostream& out, std::span<const ForcingRow> rows) {
  out << kForcingHeader << '\n';
  for (const auto& r : rows) {
    out << r.l << ',' << format_double(r.sigma) << ',' << format_double(r.eta_hat) << ','
        << format_double(r.eta_bar) << ',' << format_double(r.eps_pri_min) << ','
        << format_double(r.eps_pri_max) << ',' << format_double(r.eps_dual_min) << ','
        << format_double(r.eps_dual_max) << '\n';
  }
}

TraceRow make_trace_row(const std::string& method, int l, const CoupledProblem& problem, const Iterate& z,
                        std::span<const ResidualBundle> bundles, double mu, double alpha,
                        std::int64_t inner_iters) {
  TraceRow row;
  row.method = method;
  row.l = l;
  for (const auto& b : bundles) {
    row.r_primal_sq += b.primal_sq();
    row.r_dual_sq += b.dual_sq();
  }
  row.merit = std::sqrt(merit_norm_sq(bundles));
  row.gap = surrogate_gap(bundles);
  row.mu = mu;
  row.alpha = alpha;
  row.inner_iters = inner_iters;
  row.objective = objective(problem, z);
  return row;
}

StopTolerances resolve_tolerances(const CoupledProblem& problem, double eps, double eps_feas) {
  StopTolerances tol{eps, eps_feas};
  if (!(tol.eps > 0.0) || !(tol.eps_feas > 0.0)) {
    const double scale = tolerance_scale(problem);
    if (!(tol.eps > 0.0)) tol.eps = scale;
    if (!(tol.eps_feas > 0.0)) tol.eps_feas = scale;
  }
  return tol;
}

bool shared_stop_test(const ResidualBundle& b, const StopTolerances& tol, int num_agents) {
  const double feas = tol.eps_feas * tol.eps_feas / num_agents;
  return b.primal_sq() <= feas && b.dual_sq() <= feas && b.eta_hat <= tol.eps / num_agents;
}

}  // namespace cipm
