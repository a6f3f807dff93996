#include "cipm/saddle_analysis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <string>

#include "cipm/errors.hpp"

namespace cipm::saddle {

namespace {
constexpr Index kSizeLimit = 4000;
}  // namespace

SaddleSystem assemble(const CoupledProblem& problem, const Iterate& z, double mu, double rho) {
  if (!(rho > 0.0)) throw DomainError("assemble: rho must be positive");
  check_dimensions(problem, z);
  SaddleSystem s;
  s.rho = rho;
  s.nW = problem.total_local();
  s.nx = problem.n();
  s.n_eq = problem.total_eq();
  s.nu = s.n_eq + s.nW;
  if (s.size() > kSizeLimit) throw StructuralError("assemble: " + std::to_string(s.size()) + " unknowns exceed the oracle limit");

  s.F1 = Matrix::Zero(s.nW, s.nW);
  s.f1 = Vector::Zero(s.nW);
  s.f2 = -consistency_dual_sum(problem, z);
  s.A = Matrix::Zero(s.nu, s.nW);
  s.B = Matrix::Zero(s.nu, s.nx);
  s.c = Vector::Zero(s.nu);

  Index w_off = 0, e_off = 0;
  for (int i = 0; i < problem.num_agents(); ++i) {
    const auto& sub = problem.agent(i);
    const auto& p = z.agents[static_cast<std::size_t>(i)];
    const Index k = sub.local_size(), pe = sub.num_eq();
    const auto b = agent_residuals(sub, p, lift(z.x, sub.J));
    s.F1.block(w_off, w_off, k, k) = hpd(sub, p);
    s.f1.segment(w_off, k) = r_vec(sub, b, p, mu);
    s.A.block(e_off, w_off, pe, k) = sub.A_eq;
    s.c.segment(e_off, pe) = -b.r_primal2;
    for (Index t = 0; t < k; ++t) {
      s.A(s.n_eq + w_off + t, w_off + t) = 1.0;
      s.B(s.n_eq + w_off + t, sub.J[static_cast<std::size_t>(t)]) = -1.0;
    }
    s.c.segment(s.n_eq + w_off, k) = -b.r_c;
    w_off += k;
    e_off += pe;
  }

  const Index n = s.size();
  s.A_kkt = Matrix::Zero(n, n);
  s.A_kkt.block(0, 0, s.nW, s.nW) = s.F1;
  s.A_kkt.block(0, s.nW + s.nx, s.nW, s.nu) = rho * s.A.transpose();
  s.A_kkt.block(s.nW, s.nW + s.nx, s.nx, s.nu) = rho * s.B.transpose();
  s.A_kkt.block(s.nW + s.nx, 0, s.nu, s.nW) = rho * s.A;
  s.A_kkt.block(s.nW + s.nx, s.nW, s.nu, s.nx) = rho * s.B;
  s.b_kkt.resize(n);
  s.b_kkt << -s.f1, -s.f2, rho * s.c;
  return s;
}

Vector direct_solve(const SaddleSystem& system) {
  Eigen::PartialPivLU<Matrix> lu(system.A_kkt);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14))
    throw SingularSystemError("direct_solve: KKT matrix is numerically singular (rcond " + std::to_string(rcond) + ")");
  Vector y = lu.solve(system.b_kkt);
  const double res = (system.A_kkt * y - system.b_kkt).norm();
  if (!y.allFinite() || res > 1e-9 * std::max(1.0, system.b_kkt.norm()))
    throw SingularSystemError("direct_solve: residual check failed");
  return y;
}

Vector stack_state(const admm::DirectionState& state) {
  Index nW = 0, ne = 0;
  for (const auto& w : state.dw) nW += w.size();
  for (const auto& v : state.dv_bar) ne += v.size();
  Vector out(nW + state.dx.size() + ne + nW);
  Index off = 0;
  for (const auto& w : state.dw) {
    out.segment(off, w.size()) = w;
    off += w.size();
  }
  out.segment(off, state.dx.size()) = state.dx;
  off += state.dx.size();
  for (const auto& v : state.dv_bar) {
    out.segment(off, v.size()) = v;
    off += v.size();
  }
  for (const auto& v : state.dvc_bar) {
    out.segment(off, v.size()) = v;
    off += v.size();
  }
  return out;
}

Direction to_direction(const CoupledProblem& problem, const Iterate& z, double mu, const SaddleSystem& system,
                       const Vector& stacked) {
  if (stacked.size() != system.size()) throw StructuralError("to_direction: size mismatch");
  // Undo the rho scaling of the duals and reuse the coupled-system splitter.
  Vector y = stacked;
  y.tail(system.nu) *= system.rho;
  return direction_from_stacked(problem, z, mu, y);
}

FixedPointForm fixed_point_form(const SaddleSystem& s) {
  const double rho = s.rho;
  FixedPointForm fp;
  fp.M1 = (s.F1 + rho * s.A.transpose() * s.A).inverse();
  fp.M2 = (rho * s.B.transpose() * s.B).inverse();
  fp.m1 = -s.f1 + rho * s.A.transpose() * s.c;
  fp.m2 = -s.f2 + rho * s.B.transpose() * s.c;

  const Matrix& M1 = fp.M1;
  const Matrix& M2 = fp.M2;
  const Matrix& A = s.A;
  const Matrix& B = s.B;
  const Matrix I = Matrix::Identity(s.nu, s.nu);
  const Matrix AM1At = A * M1 * A.transpose();
  const Matrix BM2Bt = B * M2 * B.transpose();

  fp.G = Matrix::Zero(s.size(), s.size());
  const Index x0 = s.nW, u0 = s.nW + s.nx;
  fp.G.block(0, x0, s.nW, s.nx) = -rho * M1 * A.transpose() * B;
  fp.G.block(0, u0, s.nW, s.nu) = -rho * M1 * A.transpose();
  fp.G.block(x0, x0, s.nx, s.nx) = rho * rho * M2 * B.transpose() * AM1At * B;
  fp.G.block(x0, u0, s.nx, s.nu) = rho * M2 * B.transpose() * (rho * AM1At - I);
  fp.G.block(u0, x0, s.nu, s.nx) = rho * (rho * BM2Bt - I) * AM1At * B;
  fp.G.block(u0, u0, s.nu, s.nu) = rho * (rho * BM2Bt - I) * AM1At - rho * BM2Bt + I;

  const Vector W = M1 * fp.m1;
  const Vector x = M2 * fp.m2 - rho * M2 * B.transpose() * A * W;
  fp.f.resize(s.size());
  fp.f << W, x, -s.c + A * W + B * x;
  return fp;
}

Matrix preconditioner1(const SaddleSystem& s) {
  const double rho = s.rho;
  Matrix M = Matrix::Zero(s.size(), s.size());
  const Index x0 = s.nW, u0 = s.nW + s.nx;
  M.block(0, 0, s.nW, s.nW) = s.F1;
  M.block(0, x0, s.nW, s.nx) = -rho * s.A.transpose() * s.B;
  M.block(0, u0, s.nW, s.nu) = rho * s.A.transpose();
  M.block(x0, u0, s.nx, s.nu) = rho * s.B.transpose();
  M.block(u0, 0, s.nu, s.nW) = rho * s.A;
  M.block(u0, x0, s.nu, s.nx) = rho * s.B;
  M.block(u0, u0, s.nu, s.nu) = -rho * Matrix::Identity(s.nu, s.nu);
  return M;
}

Matrix preconditioner2(const SaddleSystem& s) {
  Matrix M = Matrix::Identity(s.size(), s.size());
  const Index x0 = s.nW, u0 = s.nW + s.nx;
  M.block(0, u0, s.nW, s.nu) = -s.A.transpose();
  M.block(x0, u0, s.nx, s.nu) = -s.B.transpose();
  return M;
}

AugmentedSystem augmented_system(const SaddleSystem& s, const FixedPointForm& fp) {
  const double rho = s.rho;
  const Index x0 = s.nW, u0 = s.nW + s.nx;
  AugmentedSystem a;
  a.A = Matrix::Zero(s.size(), s.size());
  a.A.block(0, 0, s.nW, s.nW) = s.F1 + rho * s.A.transpose() * s.A;
  a.A.block(0, x0, s.nW, s.nx) = rho * s.A.transpose() * s.B;
  a.A.block(0, u0, s.nW, s.nu) = rho * s.A.transpose();
  a.A.block(x0, 0, s.nx, s.nW) = rho * s.B.transpose() * s.A;
  a.A.block(x0, x0, s.nx, s.nx) = rho * s.B.transpose() * s.B;
  a.A.block(x0, u0, s.nx, s.nu) = rho * s.B.transpose();
  a.A.block(u0, 0, s.nu, s.nW) = rho * s.A;
  a.A.block(u0, x0, s.nu, s.nx) = rho * s.B;
  a.b.resize(s.size());
  a.b << fp.m1, fp.m2, rho * s.c;
  return a;
}

Vector gauss_seidel_sweep(const SaddleSystem& s, const FixedPointForm& fp, const Vector& W_k, const Vector& x_k,
                          const Vector& u_k) {
  (void)W_k;  // W_k enters only through a zero block column.
  const double rho = s.rho;
  const Matrix& M1 = fp.M1;
  const Matrix& M2 = fp.M2;
  const Vector g1 = fp.m1 - rho * s.A.transpose() * u_k;
  const Vector g2 = fp.m2 - rho * s.B.transpose() * u_k;
  const Vector W = -rho * M1 * s.A.transpose() * s.B * x_k + M1 * g1;
  const Vector x = rho * rho * M2 * s.B.transpose() * s.A * M1 * s.A.transpose() * s.B * x_k + M2 * g2 -
                   rho * M2 * s.B.transpose() * s.A * M1 * g1;
  Vector out(s.nW + s.nx);
  out << W, x;
  return out;
}

Vector gauss_seidel_sweep_explicit(const SaddleSystem& s, const FixedPointForm& fp, const Vector& W_k,
                                   const Vector& x_k, const Vector& u_k) {
  const double rho = s.rho;
  const Index n = s.nW + s.nx;
  Matrix L = Matrix::Zero(n, n);
  L.block(0, 0, s.nW, s.nW) = s.F1 + rho * s.A.transpose() * s.A;
  L.block(s.nW, 0, s.nx, s.nW) = rho * s.B.transpose() * s.A;
  L.block(s.nW, s.nW, s.nx, s.nx) = rho * s.B.transpose() * s.B;
  Matrix U = Matrix::Zero(n, n);
  U.block(0, s.nW, s.nW, s.nx) = -rho * s.A.transpose() * s.B;
  Vector prev(n), rhs(n);
  prev << W_k, x_k;
  rhs << fp.m1 - rho * s.A.transpose() * u_k, fp.m2 - rho * s.B.transpose() * u_k;
  return L.partialPivLu().solve(U * prev + rhs);
}

bool gauss_seidel_check(const SaddleSystem& s, const std::vector<Vector>& trace, double tol) {
  const auto fp = fixed_point_form(s);
  for (std::size_t k = 0; k + 1 < trace.size(); ++k) {
    const Vector& cur = trace[k];
    const Vector& next = trace[k + 1];
    const Vector gs = gauss_seidel_sweep(s, fp, cur.head(s.nW), cur.segment(s.nW, s.nx), cur.tail(s.nu));
    const double scale = std::max(1.0, next.head(s.nW + s.nx).norm());
    if ((gs - next.head(s.nW + s.nx)).norm() > tol * scale) return false;
  }
  return true;
}

double spectral_radius(const Matrix& G) {
  if (G.rows() != G.cols()) throw StructuralError("spectral_radius: matrix must be square");
  if (G.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(G, false);
  if (es.info() != Eigen::Success) throw NumericalError("spectral_radius: eigenvalue computation failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

qp::Problem global_qp(const CoupledProblem& problem) {
  const Index n = problem.n();
  qp::Problem p;
  p.Q = Matrix::Zero(n, n);
  p.c = Vector::Zero(n);
  p.G = Matrix::Zero(problem.total_ineq(), n);
  p.h = Vector::Zero(problem.total_ineq());
  p.A = Matrix::Zero(problem.total_eq(), n);
  p.b = Vector::Zero(problem.total_eq());
  Index gi = 0, ai = 0;
  for (const auto& sub : problem.agents()) {
    const auto& J = sub.J;
    const Index k = sub.local_size();
    for (Index r = 0; r < k; ++r) {
      p.c[J[static_cast<std::size_t>(r)]] += sub.q[r];
      for (Index t = 0; t < k; ++t) p.Q(J[static_cast<std::size_t>(r)], J[static_cast<std::size_t>(t)]) += 2.0 * sub.P(r, t);
    }
    for (Index r = 0; r < sub.num_ineq(); ++r, ++gi) {
      for (Index t = 0; t < k; ++t) p.G(gi, J[static_cast<std::size_t>(t)]) = sub.A_in(r, t);
      p.h[gi] = -sub.b_in[r];
    }
    for (Index r = 0; r < sub.num_eq(); ++r, ++ai) {
      for (Index t = 0; t < k; ++t) p.A(ai, J[static_cast<std::size_t>(t)]) = sub.A_eq(r, t);
      p.b[ai] = sub.b_eq[r];
    }
  }
  return p;
}

OracleSolution solve_oracle(const CoupledProblem& problem, double tol) {
  const auto qp_problem = global_qp(problem);
  const auto sol = qp::solve(qp_problem, {tol, 500});
  if (!sol.converged) throw NumericalError("oracle: global QP did not converge");
  OracleSolution out;
  out.x = sol.x;
  out.objective = problem.objective_global(sol.x);
  out.iterations = sol.iterations;
  return out;
}

}  // namespace cipm::saddle
