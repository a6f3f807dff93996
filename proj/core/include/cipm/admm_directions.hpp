#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Cholesky>

#include "cipm/kkt.hpp"
#include "cipm/netsim.hpp"

namespace cipm::admm {

/// Cached Cholesky factor of K_i = H_pd^i + rho (I + A_eq' A_eq).
class AgentFactorization {
 public:
  AgentFactorization() = default;

  /// Factors K_i. If the plain factorization fails, retries once with
  /// 1e-12 * trace / dim added to the diagonal, then throws NumericalError.
  void build(const Matrix& hpd, const Matrix& A_eq, double rho, std::uint64_t tag);

  Vector solve(const Vector& rhs) const;
  const Matrix& matrix() const { return K_; }
  double rho() const { return rho_; }
  std::uint64_t tag() const { return tag_; }
  bool jittered() const { return jittered_; }
  bool valid() const { return valid_; }

  /// Process-wide count of factorizations performed, for cache accounting.
  static std::uint64_t total_builds();

 private:
  Matrix K_;
  Eigen::LLT<Matrix> llt_;
  double rho_ = 0.0;
  std::uint64_t tag_ = 0;
  bool jittered_ = false;
  bool valid_ = false;
};

/// Everything agent i needs for the inner iterations of one outer step.
struct AgentSystem {
  ResidualBundle bundle;
  Matrix hpd;
  Vector r;
  AgentFactorization factor;
};

/// The condensed direction system at a fixed outer iterate.
struct LinearSystem {
  const CoupledProblem* problem = nullptr;
  const Iterate* iterate = nullptr;
  double mu = 0.0;
  double rho = 0.0;
  std::vector<AgentSystem> agents;
};

/// Builds per-agent residuals, H_pd, r and the factorization of K_i
/// (one factorization per agent). The tag identifies the outer iteration.
LinearSystem linearize(const CoupledProblem& problem, const Iterate& z, double mu, double rho,
                       std::uint64_t tag, Network* network = nullptr);

/// Inner ADMM state. Duals are stored scaled by 1/rho.
struct DirectionState {
  std::vector<Vector> dw;
  Vector dx;
  /// dx before the most recent x-update.
  Vector dx_prev;
  std::vector<Vector> dv_bar;
  std::vector<Vector> dvc_bar;
  int k = 0;
  /// Per-agent ||w - x_J + r_c||^2, ||A_eq w + r_p2||^2 and ||dx_J^{k+1} - dx_J^k||^2.
  std::vector<double> primal_c_sq;
  std::vector<double> primal_eq_sq;
  std::vector<double> dual_sq;
  double rho = 0.0;
  double alpha_or = 1.0;

  bool empty() const { return dw.empty(); }
};

/// Zero state sized for the problem.
DirectionState cold_state(const CoupledProblem& problem, double rho, double alpha_or);

/// dw = -K^{-1}[r + rho(r_c + dvc_bar - dx_J) + rho A_eq'(r_p2 + dv_bar)].
Vector w_step(const AgentFactorization& fact, const Matrix& A_eq, const Vector& r, const Vector& r_c,
              const Vector& r_primal2, const Vector& dvc_bar, const Vector& dv_bar, const Vector& dx_J,
              double rho);

/// dx_j = mean over owners q of [hat_c^q + dvc_bar^q + v_c^q / rho + r_c^q]_j, where
/// hat_c is the (possibly over-relaxed) consistency-block primal quantity.
Vector x_step(const CoupledProblem& problem, std::span<const Vector> hat_c,
              std::span<const Vector> dvc_bar, std::span<const Vector> v_c,
              std::span<const Vector> r_c, double rho, Network* network = nullptr);

/// dv_bar += hat_eq + r_p2; dvc_bar += hat_c - dx_J + r_c.
void dual_step(Vector& dv_bar, Vector& dvc_bar, const Vector& hat_eq, const Vector& hat_c,
               const Vector& dx_J, const Vector& r_primal2, const Vector& r_c);

struct Settings {
  double rho = 0.5;
  double alpha_or = 1.0;
  int max_inner = 10000;
};

using InnerObserver = std::function<void(const LinearSystem&, const DirectionState&)>;

struct Result {
  Direction direction;
  DirectionState state;
  int inner_iters = 0;
  bool exhausted = false;
  int factorizations = 0;
};

/// Distributed ADMM for the direction system. Agent i stops once
///   ||dx_J^{k+1} - dx_J^k||^2 <= eps_dual[i] / N and both primal blocks
///   <= eps_pri[i] / (2N);
/// the run ends when all agents agree. With a non-empty warm state the
/// iteration resumes from its dx and scaled duals. The observer fires after
/// every inner iteration.
Result run(const CoupledProblem& problem, const Iterate& z, double mu, const Settings& settings,
           std::span<const double> eps_pri, std::span<const double> eps_dual,
           const DirectionState* warm = nullptr, Network* network = nullptr,
           const InnerObserver& observer = {}, std::uint64_t tag = 0);

/// Same as run, on an already linearized system.
Result run(const LinearSystem& system, const Settings& settings, std::span<const double> eps_pri,
           std::span<const double> eps_dual, const DirectionState* warm = nullptr,
           Network* network = nullptr, const InnerObserver& observer = {});

/// The three-term residual norm
///   sum_i rho^2 ||dx_J^k - dx_J^{k+1}||^2 + ||dw - dx_J + r_c||^2 + ||A_eq dw + r_p2||^2
/// evaluated on the state's current and previous dx.
double inner_residual_norm_sq(const LinearSystem& system, const DirectionState& state);

/// Unscaled direction of the current state, with ds and dlambda recovered.
Direction extract_direction(const LinearSystem& system, const DirectionState& state);

}  // namespace cipm::admm
