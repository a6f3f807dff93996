#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "cipm/baseline_admm.hpp"
#include "cipm/ipm_exact.hpp"
#include "cipm/ipm_inexact.hpp"
#include "cipm/problem.hpp"

namespace cipm {

enum class Method { Exact, Inexact, Baseline };

const char* to_string(Method m);
Method parse_method(const std::string& text);

enum class TraceLevel { Outer, Inner };

// Plain-text run configuration:
//
//   version = 1
//   [run]       method, seed, threads, trace (outer | inner)
//   [problem]   num_agents, local_size_min/max, num_eq_min/max,
//               num_ineq_min/max, index_pool, x_lo, x_hi, slack_lo,
//               slack_hi, e_lo, e_hi, max_redraws
//   [exact]     sigma, beta, gamma_ls, eps, eps_feas, rho, alpha_or,
//               eps_pri, eps_dual, max_outer, max_inner, warm_start
//   [inexact]   eta_max, gamma0, beta, theta, eps_sigma, sigma_margin, rho,
//               alpha_or, eps, eps_feas, max_outer, max_inner, warm_start,
//               stop (merit | shared)
//   [baseline]  rho, eps, eps_feas, max_iter, local_tol, local_max_iter
//
// '#' starts a comment. Unknown sections or keys, a missing or different
// version, and malformed values raise ConfigError.
inline constexpr int kConfigVersion = 1;

struct RunConfig {
  Method method = Method::Inexact;
  std::uint64_t seed = 1;
  int threads = 1;
  TraceLevel trace = TraceLevel::Outer;
  ProblemGenConfig problem;
  exact::Params exact;
  inexact::Params inexact;
  baseline::Params baseline;

  RunConfig();
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

/// Writes every key with its current value; parse_config reads it back.
void write_config(std::ostream& out, const RunConfig& config);

}  // namespace cipm
