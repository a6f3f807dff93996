#include "cipm/dense_qp.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "cipm/errors.hpp"

namespace cipm::qp {

namespace {

void check(const Problem& p) {
  const Index n = p.Q.rows();
  if (p.Q.cols() != n || p.c.size() != n) throw StructuralError("qp: Q and c disagree");
  if (p.G.cols() != n || p.h.size() != p.G.rows()) throw StructuralError("qp: G and h disagree");
  if (p.A.cols() != n || p.b.size() != p.A.rows()) throw StructuralError("qp: A and b disagree");
}

double max_step(const Vector& v, const Vector& dv) {
  double a = 1.0;
  for (Index t = 0; t < v.size(); ++t)
    if (dv[t] < 0.0) a = std::min(a, -v[t] / dv[t]);
  return a;
}

struct Residuals {
  Vector rd, rp, rg;
};

Residuals residuals(const Problem& p, const Vector& x, const Vector& s, const Vector& z, const Vector& y) {
  return {p.Q * x + p.c + p.G.transpose() * z + p.A.transpose() * y, p.A * x - p.b, p.G * x + s - p.h};
}

}  // namespace

double kkt_residual(const Problem& p, const Solution& sol) {
  const auto r = residuals(p, sol.x, sol.s, sol.z, sol.y);
  const double scale = 1.0 + std::max({p.c.lpNorm<Eigen::Infinity>(), p.h.size() ? p.h.lpNorm<Eigen::Infinity>() : 0.0,
                                       p.b.size() ? p.b.lpNorm<Eigen::Infinity>() : 0.0});
  double worst = r.rd.size() ? r.rd.lpNorm<Eigen::Infinity>() : 0.0;
  if (r.rp.size()) worst = std::max(worst, r.rp.lpNorm<Eigen::Infinity>());
  if (r.rg.size()) worst = std::max(worst, r.rg.lpNorm<Eigen::Infinity>());
  if (sol.s.size()) worst = std::max(worst, sol.s.cwiseProduct(sol.z).lpNorm<Eigen::Infinity>());
  return worst / scale;
}

Solution solve(const Problem& p, const Settings& settings) {
  check(p);
  const Index n = p.Q.rows(), m = p.G.rows(), me = p.A.rows();
  Solution sol;
  sol.x = Vector::Zero(n);
  sol.s = (p.h - p.G * sol.x).cwiseMax(1.0);
  sol.z = Vector::Ones(m);
  sol.y = Vector::Zero(me);

  const double scale_d = 1.0 + p.c.norm();
  const double scale_p = 1.0 + std::max(p.b.norm(), p.h.norm());
  Matrix K(n + me, n + me);
  Vector rhs(n + me);

  for (sol.iterations = 0; sol.iterations < settings.max_iter; ++sol.iterations) {
    const auto r = residuals(p, sol.x, sol.s, sol.z, sol.y);
    const double gap = m ? sol.s.dot(sol.z) : 0.0;
    const double obj = 0.5 * sol.x.dot(p.Q * sol.x) + p.c.dot(sol.x);
    if (r.rd.norm() <= settings.tol * scale_d && std::max(r.rp.norm(), r.rg.norm()) <= settings.tol * scale_p &&
        gap <= settings.tol * std::max(1.0, std::abs(obj))) {
      sol.converged = true;
      break;
    }
    const double mu = m ? gap / static_cast<double>(m) : 0.0;

    // Condensed Newton system [Q + G'(Z/S)G, A'; A, 0].
    const Vector d = sol.z.cwiseQuotient(sol.s);
    K.setZero();
    K.topLeftCorner(n, n) = p.Q + p.G.transpose() * d.asDiagonal() * p.G;
    K.topRightCorner(n, me) = p.A.transpose();
    K.bottomLeftCorner(me, n) = p.A;
    Eigen::PartialPivLU<Matrix> lu(K);

    // Solves Q dx + G'dz + A'dy = -rd, A dx = -rp, G dx + ds = -rg, Z ds + S dz = -rsz.
    auto condensed = [&](const Vector& rd, const Vector& rp, const Vector& rg, const Vector& rsz, Vector& dx,
                         Vector& ds, Vector& dz, Vector& dy) {
      const Vector t = (-rsz + sol.z.cwiseProduct(rg)).cwiseQuotient(sol.s);
      rhs.head(n) = -rd - p.G.transpose() * t;
      rhs.tail(me) = -rp;
      const Vector sol_vec = lu.solve(rhs);
      if (!sol_vec.allFinite()) throw NumericalError("qp: Newton system is singular");
      dx = sol_vec.head(n);
      dy = sol_vec.tail(me);
      ds = -rg - p.G * dx;
      dz = (-rsz - sol.z.cwiseProduct(ds)).cwiseQuotient(sol.s);
    };
    // Refinement against the unreduced system recovers the accuracy lost when Z/S is large.
    auto newton = [&](const Vector& rsz, Vector& dx, Vector& ds, Vector& dz, Vector& dy) {
      condensed(r.rd, r.rp, r.rg, rsz, dx, ds, dz, dy);
      for (int pass = 0; pass < settings.refine; ++pass) {
        const Vector e1 = r.rd + p.Q * dx + p.G.transpose() * dz + p.A.transpose() * dy;
        const Vector e2 = r.rp + p.A * dx;
        const Vector e3 = r.rg + p.G * dx + ds;
        const Vector e4 = rsz + sol.z.cwiseProduct(ds) + sol.s.cwiseProduct(dz);
        Vector cx, cs, cz, cy;
        condensed(e1, e2, e3, e4, cx, cs, cz, cy);
        dx += cx;
        ds += cs;
        dz += cz;
        dy += cy;
      }
    };

    Vector dx, ds, dz, dy;
    const Vector sz = sol.s.cwiseProduct(sol.z);
    newton(sz, dx, ds, dz, dy);
    double sigma = 0.0;
    if (m > 0) {
      const double a_aff = std::min(max_step(sol.s, ds), max_step(sol.z, dz));
      const double mu_aff = (sol.s + a_aff * ds).dot(sol.z + a_aff * dz) / static_cast<double>(m);
      sigma = std::pow(mu_aff / mu, 3);
      const Vector rsz = sz + ds.cwiseProduct(dz) - Vector::Constant(m, sigma * mu);
      newton(rsz, dx, ds, dz, dy);
    }
    const double a = m ? std::min(1.0, 0.99 * std::min(max_step(sol.s, ds), max_step(sol.z, dz))) : 1.0;
    sol.x += a * dx;
    sol.s += a * ds;
    sol.z += a * dz;
    sol.y += a * dy;
    if (!sol.x.allFinite() || !sol.z.allFinite()) throw NumericalError("qp: non-finite iterate");
  }
  sol.objective = 0.5 * sol.x.dot(p.Q * sol.x) + p.c.dot(sol.x);
  return sol;
}

}  // namespace cipm::qp
