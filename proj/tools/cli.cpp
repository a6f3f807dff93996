#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

#include "cipm/baseline_admm.hpp"
#include "cipm/errors.hpp"
#include "cipm/format.hpp"
#include "cipm/ipm_exact.hpp"
#include "cipm/ipm_inexact.hpp"
#include "cipm/netsim.hpp"
#include "cipm/problem_io.hpp"
#include "cipm/saddle_analysis.hpp"

namespace cipm::cli {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

CoupledProblem obtain_problem(const Options& options, const RunConfig& config) {
  if (options.problem) {
    try {
      return load_problem(*options.problem);
    } catch (const StructuralError& e) {
      throw ConfigError(e.what());
    }
  }
  auto gen = config.problem;
  gen.seed = config.seed;
  return generate(gen).problem;
}

template <typename Body>
int guarded(std::ostream& log, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace

RunConfig resolve(const Options& options) {
  RunConfig config = options.config ? load_config(*options.config) : RunConfig{};
  if (options.seed) config.seed = *options.seed;
  if (options.threads) {
    if (*options.threads < 1) throw ConfigError("--threads must be >= 1");
    config.threads = *options.threads;
  }
  if (options.method) config.method = parse_method(*options.method);
  return config;
}

std::filesystem::path companion(const std::filesystem::path& path, const std::string& suffix) {
  auto out = path;
  out.replace_extension();
  out += "." + suffix + ".csv";
  return out;
}

MethodRun run_method(Method method, const CoupledProblem& problem, const RunConfig& config, std::ostream* inner_csv,
                     std::ostream* message_csv) {
  Network network(problem, config.threads, message_csv != nullptr);
  const Iterate init = initial_iterate(problem, config.seed);

  admm::InnerObserver inner;
  if (inner_csv) {
    inner = [inner_csv](const admm::LinearSystem& sys, const admm::DirectionState& st) {
      const auto l = sys.agents.empty() ? 0 : sys.agents.front().factor.tag() + 1;
      for (std::size_t i = 0; i < st.dw.size(); ++i)
        *inner_csv << l << ',' << st.k << ',' << i << ',' << format_double(st.primal_c_sq[i]) << ','
                   << format_double(st.primal_eq_sq[i]) << ',' << format_double(st.dual_sq[i]) << '\n';
    };
  }

  MethodRun run;
  const auto start = std::chrono::steady_clock::now();
  switch (method) {
    case Method::Exact: run.report = exact::solve(problem, init, config.exact, &network, {}, inner); break;
    case Method::Inexact: run.report = inexact::solve(problem, init, config.inexact, &network, {}, inner); break;
    case Method::Baseline: run.report = baseline::solve(problem, init, config.baseline, &network); break;
  }
  run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (message_csv) network.log().write_csv(*message_csv);
  return run;
}

int cmd_gen(const Options& options, std::ostream& log) {
  return guarded(log, [&] {
    const RunConfig config = resolve(options);
    auto gen = config.problem;
    gen.seed = config.seed;
    const auto generated = generate(gen);
    const auto& problem = generated.problem;
    const auto path = options.out.value_or("problem.txt");
    save_problem(path, problem);
    log << "agents " << problem.num_agents() << '\n'
        << "n " << problem.n() << '\n'
        << "m " << problem.total_ineq() << '\n'
        << "p " << problem.total_eq() << '\n'
        << "consistency " << problem.total_local() << '\n'
        << "wrote " << path.string() << '\n';
    return kExitConverged;
  });
}

int cmd_solve(const Options& options, std::ostream& log) {
  return guarded(log, [&] {
    const RunConfig config = resolve(options);
    const CoupledProblem problem = obtain_problem(options, config);
    const auto path = options.out.value_or("trace.csv");
    auto trace_out = open_out(path);

    std::optional<std::ofstream> inner_out, message_out;
    if (config.trace == TraceLevel::Inner && config.method != Method::Baseline) {
      inner_out = open_out(companion(path, "inner"));
      *inner_out << kInnerHeader << '\n';
    }
    if (options.messages) message_out = open_out(*options.messages);

    const auto run = run_method(config.method, problem, config, inner_out ? &*inner_out : nullptr,
                                message_out ? &*message_out : nullptr);
    const auto& report = run.report;
    write_trace_csv(trace_out, report.trace);
    if (config.method == Method::Inexact) {
      auto forcing_out = open_out(companion(path, "forcing"));
      write_forcing_csv(forcing_out, report.forcing);
    }

    log << "method " << report.method << '\n'
        << "termination " << to_string(report.reason) << '\n'
        << "outer_iters " << report.outer_iterations << '\n'
        << "total_inner_iters " << report.total_inner << '\n'
        << "objective " << format_double(report.objective) << '\n'
        << "message_units " << report.message_units << '\n';
    if (report.consensus_fallbacks > 0)
      log << "warning: " << report.consensus_fallbacks
          << " reductions resolved centrally (disconnected coupling graph)\n";
    if (!report.message.empty()) log << "note: " << report.message << '\n';
    return exit_code(report.reason);
  });
}

int cmd_compare(const Options& options, std::ostream& log) {
  return guarded(log, [&] {
    const RunConfig config = resolve(options);
    const CoupledProblem problem = obtain_problem(options, config);
    auto out = open_out(options.out.value_or("compare.csv"));
    const auto oracle = saddle::solve_oracle(problem);
    const double denom = std::max(1.0, std::abs(oracle.objective));

    out << kCompareHeader << '\n';
    int code = kExitConverged;
    for (const Method m : {Method::Exact, Method::Inexact, Method::Baseline}) {
      const auto run = run_method(m, problem, config);
      const auto& r = run.report;
      const double rel = std::abs(r.objective - oracle.objective) / denom;
      out << to_string(m) << ',' << r.outer_iterations << ',' << r.total_inner << ',' << format_double(rel) << ','
          << format_double(run.wall_seconds) << '\n';
      log << to_string(m) << ": " << to_string(r.reason) << ", outer " << r.outer_iterations << ", inner "
          << r.total_inner << ", rel_obj_error " << format_double(rel) << '\n';
      code = std::max(code, exit_code(r.reason));
    }
    return code;
  });
}

}  // namespace cipm::cli
