#pragma once

#include <filesystem>
#include <iosfwd>

#include "cipm/problem.hpp"

namespace cipm {

// Versioned text container for CoupledProblem. Layout (one record per line,
// whitespace separated, matrices row-major, doubles in shortest round-trip
// form):
//
//   cipm-problem 1
//   n <global dimension>
//   agents <N>
//   agent <i> size <|J_i|> ineq <m_i> eq <p_i>
//   J <|J_i| indices>
//   e <scalar>
//   P <|J_i|*|J_i| values>
//   q <|J_i| values>
//   A_in <m_i*|J_i| values>
//   b_in <m_i values>
//   A_eq <p_i*|J_i| values>
//   b_eq <p_i values>
//   ... repeated per agent ...
//   end
inline constexpr int kProblemFormatVersion = 1;

void write_problem(std::ostream& out, const CoupledProblem& problem);
CoupledProblem read_problem(std::istream& in);

void save_problem(const std::filesystem::path& path, const CoupledProblem& problem);
CoupledProblem load_problem(const std::filesystem::path& path);

}  // namespace cipm
