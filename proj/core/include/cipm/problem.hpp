#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace cipm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// One agent's share of a loosely coupled QP, expressed in its local
/// coordinates w = x[J]:
///
///   minimize    w'Pw + q'w + e
///   subject to  A_in w + b_in <= 0,  A_eq w = b_eq.
///
/// The member functions form the narrow (value, gradient, Hessian) oracle the
/// solvers consume; the quadratic/affine case is the only instantiation.
struct AgentSubproblem {
  int index = 0;
  Matrix P;
  Vector q;
  double e = 0.0;
  Matrix A_in;
  Vector b_in;
  Matrix A_eq;
  Vector b_eq;
  std::vector<int> J;

  Index local_size() const { return static_cast<Index>(J.size()); }
  Index num_ineq() const { return A_in.rows(); }
  Index num_eq() const { return A_eq.rows(); }

  double objective(const Vector& w) const { return w.dot(P * w) + q.dot(w) + e; }
  Vector gradient(const Vector& w) const { return 2.0 * (P * w) + q; }
  Matrix hessian() const { return 2.0 * P; }
  /// G(w) = A_in w + b_in, feasible when <= 0.
  Vector inequality(const Vector& w) const { return A_in * w + b_in; }
  const Matrix& inequality_jacobian() const { return A_in; }
};

/// Immutable collection of agent subproblems over a global variable of size n,
/// together with the derived coupling tables (owners per global index and the
/// neighbor sets Ne(i)).
class CoupledProblem {
 public:
  CoupledProblem() = default;

  /// Validates every structural and numerical invariant; throws
  /// StructuralError on violation. P blocks are symmetrized.
  CoupledProblem(int n, std::vector<AgentSubproblem> agents);

  int n() const { return n_; }
  int num_agents() const { return static_cast<int>(agents_.size()); }
  const std::vector<AgentSubproblem>& agents() const { return agents_; }
  const AgentSubproblem& agent(int i) const { return agents_[static_cast<std::size_t>(i)]; }

  /// |I_j|: number of agents whose J contains global index j.
  int multiplicity(int j) const { return static_cast<int>(owners_[static_cast<std::size_t>(j)].size()); }
  /// I_j in ascending agent order.
  const std::vector<int>& owners(int j) const { return owners_[static_cast<std::size_t>(j)]; }
  /// Ne(i) in ascending order; contains i itself.
  const std::vector<int>& neighbors(int i) const { return neighbors_[static_cast<std::size_t>(i)]; }

  int total_ineq() const { return total_ineq_; }
  int total_eq() const { return total_eq_; }
  /// Sum of local sizes, i.e. the number of consistency constraints.
  int total_local() const { return total_local_; }

  /// Sum of agent objectives evaluated at the given local copies.
  double objective(std::span<const Vector> w) const;
  /// Sum of agent objectives evaluated at the restrictions of a global x.
  double objective_global(const Vector& x) const;

 private:
  int n_ = 0;
  std::vector<AgentSubproblem> agents_;
  std::vector<std::vector<int>> owners_;
  std::vector<std::vector<int>> neighbors_;
  int total_ineq_ = 0;
  int total_eq_ = 0;
  int total_local_ = 0;
};

/// x[J] as a |J| vector.
Vector lift(const Vector& x, std::span<const int> J);
/// accumulator[J] += w.
void scatter_add(const Vector& w, std::span<const int> J, Vector& accumulator);

/// Numerical rank with singular values below rel_tol * sigma_max treated as zero.
Index numerical_rank(const Matrix& M, double rel_tol = 1e-10);

struct IntRange {
  int lo = 0;
  int hi = 0;
};

/// Random problem family with a known feasible point. Defaults reproduce the
/// large-scale configuration (N = 50, |J_i| in [55, 65], ...).
struct ProblemGenConfig {
  int num_agents = 50;
  IntRange local_size{55, 65};
  IntRange num_eq{7, 13};
  IntRange num_ineq{27, 33};
  /// J_i entries are drawn from {0, ..., index_pool - 1}; unused indices are
  /// dropped and the rest renumbered compactly.
  int index_pool = 900;
  double x_lo = -10.0, x_hi = 10.0;
  double slack_lo = 1.0, slack_hi = 10.0;
  double e_lo = 0.0, e_hi = 10.0;
  std::uint64_t seed = 1;
  int max_redraws = 20;

  void validate() const;
};

/// Problem plus the point it was built around.
struct GeneratedProblem {
  CoupledProblem problem;
  Vector x_feasible;
  std::vector<Vector> slack_feasible;
};

/// Draws a feasible problem. Matrix entries are U(0,1); P_i = C'C/|J_i| with C
/// entrywise U(0,1); the b vectors are back-solved from a drawn point x and
/// slack s: b_in = -A_in x_J - s, b_eq = A_eq x_J. Every agent uses its own
/// RNG stream (see Rng::stream), so results only depend on the seed.
GeneratedProblem generate(const ProblemGenConfig& config);

/// 1e-6 * max{1, ||blkdiag P||, ||blkdiag A_in||, ||blkdiag A_eq||,
/// ||(b_in)||, ||(b_eq)||, ||(q)||} with spectral matrix norms.
double tolerance_scale(const CoupledProblem& problem);

}  // namespace cipm
