#include "cipm/problem_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "cipm/errors.hpp"
#include "cipm/format.hpp"

namespace cipm {

namespace {

void write_values(std::ostream& out, const char* tag, const Matrix& M) {
  out << tag;
  for (Index r = 0; r < M.rows(); ++r)
    for (Index c = 0; c < M.cols(); ++c) out << ' ' << format_double(M(r, c));
  out << '\n';
}

void write_values(std::ostream& out, const char* tag, const Vector& v) {
  out << tag;
  for (Index t = 0; t < v.size(); ++t) out << ' ' << format_double(v[t]);
  out << '\n';
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void expect(const std::string& word) {
    std::string got;
    if (!(in_ >> got) || got != word)
      throw StructuralError("problem file: expected '" + word + "', got '" + got + "'");
  }

  template <typename T>
  T value() {
    T v{};
    if (!(in_ >> v)) throw StructuralError("problem file: truncated or malformed value");
    return v;
  }

  Matrix matrix(const std::string& tag, Index rows, Index cols) {
    expect(tag);
    Matrix M(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) M(r, c) = value<double>();
    return M;
  }

  Vector vector(const std::string& tag, Index size) {
    expect(tag);
    Vector v(size);
    for (Index t = 0; t < size; ++t) v[t] = value<double>();
    return v;
  }

 private:
  std::istream& in_;
};

}  // namespace

void write_problem(std::ostream& out, const CoupledProblem& problem) {
  out << "cipm-problem " << kProblemFormatVersion << '\n';
  out << "n " << problem.n() << '\n';
  out << "agents " << problem.num_agents() << '\n';
  for (const auto& a : problem.agents()) {
    out << "agent " << a.index << " size " << a.local_size() << " ineq " << a.num_ineq() << " eq "
        << a.num_eq() << '\n';
    out << "J";
    for (int j : a.J) out << ' ' << j;
    out << '\n';
    out << "e " << format_double(a.e) << '\n';
    write_values(out, "P", a.P);
    write_values(out, "q", a.q);
    write_values(out, "A_in", a.A_in);
    write_values(out, "b_in", a.b_in);
    write_values(out, "A_eq", a.A_eq);
    write_values(out, "b_eq", a.b_eq);
  }
  out << "end\n";
}

CoupledProblem read_problem(std::istream& in) {
  Reader rd(in);
  rd.expect("cipm-problem");
  const int version = rd.value<int>();
  if (version != kProblemFormatVersion)
    throw StructuralError("problem file: unsupported version " + std::to_string(version));
  rd.expect("n");
  const int n = rd.value<int>();
  rd.expect("agents");
  const int N = rd.value<int>();
  if (n <= 0 || N <= 0) throw StructuralError("problem file: nonpositive dimensions");

  std::vector<AgentSubproblem> agents(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    auto& a = agents[static_cast<std::size_t>(i)];
    rd.expect("agent");
    if (rd.value<int>() != i) throw StructuralError("problem file: agents out of order");
    rd.expect("size");
    const auto k = rd.value<Index>();
    rd.expect("ineq");
    const auto m = rd.value<Index>();
    rd.expect("eq");
    const auto p = rd.value<Index>();
    if (k <= 0 || m < 0 || p < 0) throw StructuralError("problem file: bad agent dimensions");
    rd.expect("J");
    a.J.resize(static_cast<std::size_t>(k));
    for (auto& j : a.J) j = rd.value<int>();
    rd.expect("e");
    a.e = rd.value<double>();
    a.P = rd.matrix("P", k, k);
    a.q = rd.vector("q", k);
    a.A_in = rd.matrix("A_in", m, k);
    a.b_in = rd.vector("b_in", m);
    a.A_eq = rd.matrix("A_eq", p, k);
    a.b_eq = rd.vector("b_eq", p);
  }
  rd.expect("end");
  return CoupledProblem(n, std::move(agents));
}

void save_problem(const std::filesystem::path& path, const CoupledProblem& problem) {
  std::ofstream out(path);
  if (!out) throw StructuralError("cannot open " + path.string() + " for writing");
  write_problem(out, problem);
}

CoupledProblem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot open " + path.string());
  return read_problem(in);
}

}  // namespace cipm
