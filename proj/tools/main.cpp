#include <iostream>

#include <CLI11.hpp>

#include "cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Distributed interior-point solvers for loosely coupled QPs"};
  app.require_subcommand(1);
  cipm::cli::Options opt;

  auto add_common = [&opt](CLI::App* cmd) {
    cmd->add_option("--config", opt.config, "run configuration file");
    cmd->add_option("--seed", opt.seed, "seed for problem generation and the initial point");
    cmd->add_option("--out", opt.out, "output path");
    cmd->add_option("--threads", opt.threads, "worker threads for the agent phase");
  };

  auto* gen = app.add_subcommand("gen", "generate a random coupled problem");
  add_common(gen);

  auto* solve = app.add_subcommand("solve", "solve with one method and write the trace CSV");
  add_common(solve);
  solve->add_option("--problem", opt.problem, "problem file from gen (otherwise generated)");
  solve->add_option("--method", opt.method, "exact, inexact or baseline");
  solve->add_option("--messages", opt.messages, "message log CSV");

  auto* compare = app.add_subcommand("compare", "run all methods against the dense oracle");
  add_common(compare);
  compare->add_option("--problem", opt.problem, "problem file from gen (otherwise generated)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cipm::cli::kExitConfig;
  }

  if (*gen) return cipm::cli::cmd_gen(opt, std::cout);
  if (*solve) return cipm::cli::cmd_solve(opt, std::cout);
  return cipm::cli::cmd_compare(opt, std::cout);
}
