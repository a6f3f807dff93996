#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cipm/config.hpp"
#include "cipm/report.hpp"

namespace cipm::cli {

inline constexpr int kExitConverged = 0;
inline constexpr int kExitMaxIterations = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitConfig = 4;

/// Command-line overrides applied on top of the config file.
struct Options {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<int> threads;
  std::optional<std::filesystem::path> problem;
  std::optional<std::string> method;
  std::optional<std::filesystem::path> messages;
};

/// Config file (or defaults) with the overrides applied and validated.
RunConfig resolve(const Options& options);

/// Writes the generated problem to --out (default problem.txt) and prints
/// "n m p consistency" totals.
int cmd_gen(const Options& options, std::ostream& log);

/// Runs the configured method. Writes the trace to --out (default trace.csv);
/// the inexact method also writes <stem>.forcing.csv, inner tracing writes
/// <stem>.inner.csv and --messages writes the message log.
int cmd_solve(const Options& options, std::ostream& log);

/// Runs all three methods from the same initial point and writes
/// method,outer_iters,total_inner_iters,rel_obj_error,wall_seconds
/// to --out (default compare.csv).
int cmd_compare(const Options& options, std::ostream& log);

/// Sibling path with the extension replaced: trace.csv -> trace.<suffix>.csv.
std::filesystem::path companion(const std::filesystem::path& path, const std::string& suffix);

inline constexpr const char* kInnerHeader = "l,k,agent,primal_c_sq,primal_eq_sq,dual_sq";
inline constexpr const char* kCompareHeader = "method,outer_iters,total_inner_iters,rel_obj_error,wall_seconds";

struct MethodRun {
  SolveReport report;
  double wall_seconds = 0.0;
};

/// Runs one method on a problem from initial_iterate(problem, config.seed).
/// With inner_csv set, appends one row per agent per inner iteration.
MethodRun run_method(Method method, const CoupledProblem& problem, const RunConfig& config,
                     std::ostream* inner_csv = nullptr, std::ostream* message_csv = nullptr);

}  // namespace cipm::cli
