#include "cipm/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <string>

#include "cipm/errors.hpp"
#include "cipm/random.hpp"

namespace cipm {

namespace {

std::string agent_tag(int i) { return "agent " + std::to_string(i) + ": "; }

void check_agent(const AgentSubproblem& a, int n) {
  const Index k = a.local_size();
  const auto tag = agent_tag(a.index);
  if (k == 0) throw StructuralError(tag + "empty index set");
  for (std::size_t t = 0; t < a.J.size(); ++t) {
    if (a.J[t] < 0 || a.J[t] >= n) throw StructuralError(tag + "index out of range");
    if (t > 0 && a.J[t] <= a.J[t - 1]) throw StructuralError(tag + "J must be strictly increasing");
  }
  if (a.P.rows() != k || a.P.cols() != k) throw StructuralError(tag + "P must be |J| x |J|");
  if (a.q.size() != k) throw StructuralError(tag + "q must have |J| entries");
  if (a.A_in.cols() != k || a.b_in.size() != a.A_in.rows())
    throw StructuralError(tag + "inequality block dimensions disagree");
  if (a.A_eq.cols() != k || a.b_eq.size() != a.A_eq.rows())
    throw StructuralError(tag + "equality block dimensions disagree");
  if (a.num_eq() >= k) throw StructuralError(tag + "need fewer equalities than local variables");
  if (a.num_eq() > 0 && numerical_rank(a.A_eq) != a.num_eq())
    throw StructuralError(tag + "A_eq does not have full row rank");
  const double scale = std::max(1.0, a.P.norm());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a.P, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10 * scale)
    throw StructuralError(tag + "P is not positive semidefinite");
}

}  // namespace

Vector lift(const Vector& x, std::span<const int> J) {
  Vector out(static_cast<Index>(J.size()));
  for (std::size_t t = 0; t < J.size(); ++t) {
    if (J[t] < 0 || J[t] >= x.size()) throw StructuralError("lift: index out of range");
    out[static_cast<Index>(t)] = x[J[t]];
  }
  return out;
}

void scatter_add(const Vector& w, std::span<const int> J, Vector& accumulator) {
  if (w.size() != static_cast<Index>(J.size())) throw StructuralError("scatter_add: size mismatch");
  for (std::size_t t = 0; t < J.size(); ++t) {
    if (J[t] < 0 || J[t] >= accumulator.size()) throw StructuralError("scatter_add: index out of range");
    accumulator[J[t]] += w[static_cast<Index>(t)];
  }
}

Index numerical_rank(const Matrix& M, double rel_tol) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& sv = svd.singularValues();
  const double cutoff = rel_tol * sv[0];
  Index r = 0;
  for (Index t = 0; t < sv.size(); ++t)
    if (sv[t] > cutoff) ++r;
  return r;
}

CoupledProblem::CoupledProblem(int n, std::vector<AgentSubproblem> agents)
    : n_(n), agents_(std::move(agents)) {
  if (n_ <= 0) throw StructuralError("global dimension must be positive");
  if (agents_.empty()) throw StructuralError("problem needs at least one agent");
  owners_.assign(static_cast<std::size_t>(n_), {});
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    auto& a = agents_[i];
    a.index = static_cast<int>(i);
    a.P = 0.5 * (a.P + a.P.transpose()).eval();
    check_agent(a, n_);
    for (int j : a.J) owners_[static_cast<std::size_t>(j)].push_back(a.index);
    total_ineq_ += static_cast<int>(a.num_ineq());
    total_eq_ += static_cast<int>(a.num_eq());
    total_local_ += static_cast<int>(a.local_size());
  }
  for (int j = 0; j < n_; ++j)
    if (owners_[static_cast<std::size_t>(j)].empty())
      throw StructuralError("global index " + std::to_string(j) + " belongs to no agent");

  std::vector<std::set<int>> ne(agents_.size());
  for (const auto& own : owners_)
    for (int a : own)
      for (int b : own) ne[static_cast<std::size_t>(a)].insert(b);
  neighbors_.reserve(agents_.size());
  for (const auto& s : ne) neighbors_.emplace_back(s.begin(), s.end());
}

double CoupledProblem::objective(std::span<const Vector> w) const {
  if (w.size() != agents_.size()) throw StructuralError("objective: one vector per agent expected");
  double total = 0.0;
  for (std::size_t i = 0; i < agents_.size(); ++i) total += agents_[i].objective(w[i]);
  return total;
}

double CoupledProblem::objective_global(const Vector& x) const {
  double total = 0.0;
  for (const auto& a : agents_) total += a.objective(lift(x, a.J));
  return total;
}

void ProblemGenConfig::validate() const {
  auto positive = [](IntRange r) { return r.lo >= 0 && r.hi >= r.lo; };
  if (num_agents < 1) throw ConfigError("num_agents must be >= 1");
  if (!positive(local_size) || local_size.lo < 1) throw ConfigError("bad local_size range");
  if (!positive(num_eq)) throw ConfigError("bad num_eq range");
  if (!positive(num_ineq)) throw ConfigError("bad num_ineq range");
  if (num_eq.hi >= local_size.lo) throw ConfigError("equality count must stay below local size");
  if (index_pool < local_size.hi) throw ConfigError("index_pool smaller than the largest local size");
  if (!(x_lo < x_hi) || !(slack_lo > 0.0 && slack_lo < slack_hi) || !(e_lo <= e_hi))
    throw ConfigError("bad sampling bounds");
  if (max_redraws < 1) throw ConfigError("max_redraws must be >= 1");
}

namespace {

Matrix uniform_matrix(Rng& rng, Index rows, Index cols) {
  Matrix M(rows, cols);
  // Row-major draw order so the stream layout matches the file layout.
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) M(r, c) = rng.uniform();
  return M;
}

std::vector<int> sample_indices(Rng& rng, int pool, int count) {
  // Partial Fisher-Yates over the pool.
  std::vector<int> all(static_cast<std::size_t>(pool));
  std::iota(all.begin(), all.end(), 0);
  for (int t = 0; t < count; ++t) {
    const int pick = rng.uniform_int(t, pool - 1);
    std::swap(all[static_cast<std::size_t>(t)], all[static_cast<std::size_t>(pick)]);
  }
  std::vector<int> J(all.begin(), all.begin() + count);
  std::sort(J.begin(), J.end());
  return J;
}

std::optional<GeneratedProblem> try_generate(const ProblemGenConfig& cfg, std::uint64_t attempt) {
  const int N = cfg.num_agents;
  const std::uint64_t base = cfg.seed + 0x100000ULL * attempt;

  std::vector<AgentSubproblem> agents(static_cast<std::size_t>(N));
  std::vector<Rng> streams;
  streams.reserve(static_cast<std::size_t>(N));
  std::vector<char> used(static_cast<std::size_t>(cfg.index_pool), 0);
  for (int i = 0; i < N; ++i) {
    streams.push_back(Rng::stream(base, static_cast<std::uint64_t>(i) + 1));
    Rng& rng = streams.back();
    auto& a = agents[static_cast<std::size_t>(i)];
    const int k = rng.uniform_int(cfg.local_size.lo, cfg.local_size.hi);
    const int p = std::min(rng.uniform_int(cfg.num_eq.lo, cfg.num_eq.hi), k - 1);
    const int m = rng.uniform_int(cfg.num_ineq.lo, cfg.num_ineq.hi);
    a.J = sample_indices(rng, cfg.index_pool, k);
    a.A_in.resize(m, k);
    a.A_eq.resize(p, k);
    for (int j : a.J) used[static_cast<std::size_t>(j)] = 1;
  }

  std::vector<int> remap(static_cast<std::size_t>(cfg.index_pool), -1);
  int n = 0;
  for (int j = 0; j < cfg.index_pool; ++j)
    if (used[static_cast<std::size_t>(j)]) remap[static_cast<std::size_t>(j)] = n++;
  for (auto& a : agents)
    for (int& j : a.J) j = remap[static_cast<std::size_t>(j)];

  Rng global = Rng::stream(base, 0);
  Vector x(n);
  for (int j = 0; j < n; ++j) x[j] = global.uniform(cfg.x_lo, cfg.x_hi);

  std::vector<Vector> slacks;
  for (int i = 0; i < N; ++i) {
    Rng& rng = streams[static_cast<std::size_t>(i)];
    auto& a = agents[static_cast<std::size_t>(i)];
    const Index k = a.local_size();
    const Vector xj = lift(x, a.J);

    a.A_in = uniform_matrix(rng, a.A_in.rows(), k);
    Vector s(a.A_in.rows());
    for (Index t = 0; t < s.size(); ++t) s[t] = rng.uniform(cfg.slack_lo, cfg.slack_hi);
    a.b_in = -(a.A_in * xj) - s;

    const Index p = a.A_eq.rows();
    bool full_rank = false;
    for (int r = 0; r < cfg.max_redraws && !full_rank; ++r) {
      a.A_eq = uniform_matrix(rng, p, k);
      full_rank = p == 0 || numerical_rank(a.A_eq) == p;
    }
    if (!full_rank) return std::nullopt;
    a.b_eq = a.A_eq * xj;

    const Matrix C = uniform_matrix(rng, k, k);
    a.P = (C.transpose() * C) / static_cast<double>(k);
    a.q.resize(k);
    for (Index t = 0; t < k; ++t) a.q[t] = rng.uniform();
    a.e = rng.uniform(cfg.e_lo, cfg.e_hi);
    slacks.push_back(std::move(s));
  }

  // The stacked equality system must have full row rank as well, otherwise
  // the equality duals are not unique and the coupled KKT matrix is singular.
  int total_eq = 0;
  for (const auto& a : agents) total_eq += static_cast<int>(a.num_eq());
  if (total_eq > 0) {
    if (total_eq >= n) return std::nullopt;
    Matrix stacked = Matrix::Zero(total_eq, n);
    int row = 0;
    for (const auto& a : agents) {
      for (Index r = 0; r < a.num_eq(); ++r, ++row)
        for (std::size_t t = 0; t < a.J.size(); ++t) stacked(row, a.J[t]) = a.A_eq(r, static_cast<Index>(t));
    }
    if (numerical_rank(stacked) != total_eq) return std::nullopt;
  }

  GeneratedProblem out{CoupledProblem(n, std::move(agents)), std::move(x), std::move(slacks)};
  return out;
}

}  // namespace

GeneratedProblem generate(const ProblemGenConfig& config) {
  config.validate();
  for (int attempt = 0; attempt < config.max_redraws; ++attempt) {
    if (auto gen = try_generate(config, static_cast<std::uint64_t>(attempt))) return std::move(*gen);
  }
  throw StructuralError("generate: could not draw full-rank equality constraints after " +
                        std::to_string(config.max_redraws) + " attempts (seed " +
                        std::to_string(config.seed) + ")");
}

double tolerance_scale(const CoupledProblem& problem) {
  auto spectral = [](const Matrix& M) {
    if (M.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Matrix>(M).singularValues()[0];
  };
  double p_norm = 0.0, ain_norm = 0.0, aeq_norm = 0.0;
  double bin_sq = 0.0, beq_sq = 0.0, q_sq = 0.0;
  for (const auto& a : problem.agents()) {
    // The spectral norm of a block-diagonal matrix is the largest block norm.
    p_norm = std::max(p_norm, spectral(a.P));
    ain_norm = std::max(ain_norm, spectral(a.A_in));
    aeq_norm = std::max(aeq_norm, spectral(a.A_eq));
    bin_sq += a.b_in.squaredNorm();
    beq_sq += a.b_eq.squaredNorm();
    q_sq += a.q.squaredNorm();
  }
  const double biggest = std::max({1.0, p_norm, ain_norm, aeq_norm, std::sqrt(bin_sq),
                                   std::sqrt(beq_sq), std::sqrt(q_sq)});
  return 1e-6 * biggest;
}

}  // namespace cipm
