#include "cipm/netsim.hpp"

#include <algorithm>
#include <queue>
#include <string>

#include "cipm/errors.hpp"

namespace cipm {

AgentGraph::AgentGraph(const CoupledProblem& problem) {
  const int N = problem.num_agents();
  adjacency_.resize(static_cast<std::size_t>(N));
  overlap_.resize(static_cast<std::size_t>(N));
  for (int j = 0; j < problem.n(); ++j) {
    const auto& own = problem.owners(j);
    for (int a : own)
      for (int b : own)
        if (a != b) ++overlap_[static_cast<std::size_t>(a)][b];
  }
  for (int i = 0; i < N; ++i)
    for (const auto& [j, count] : overlap_[static_cast<std::size_t>(i)])
      adjacency_[static_cast<std::size_t>(i)].push_back(j);
  finish();
}

AgentGraph::AgentGraph(std::vector<std::vector<int>> adjacency) : adjacency_(std::move(adjacency)) {
  const int N = size();
  std::vector<std::vector<int>> sym(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    for (int j : adjacency_[static_cast<std::size_t>(i)]) {
      if (j < 0 || j >= N) throw StructuralError("AgentGraph: neighbor out of range");
      if (j == i) continue;
      sym[static_cast<std::size_t>(i)].push_back(j);
      sym[static_cast<std::size_t>(j)].push_back(i);
    }
  }
  for (auto& s : sym) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  }
  adjacency_ = std::move(sym);
  finish();
}

int AgentGraph::overlap(int i, int j) const {
  if (overlap_.empty()) return 1;
  const auto& m = overlap_[static_cast<std::size_t>(i)];
  auto it = m.find(j);
  return it == m.end() ? 0 : it->second;
}

void AgentGraph::finish() {
  const int N = size();
  component_.assign(static_cast<std::size_t>(N), -1);
  num_components_ = 0;
  for (int start = 0; start < N; ++start) {
    if (component_[static_cast<std::size_t>(start)] >= 0) continue;
    std::queue<int> q;
    q.push(start);
    component_[static_cast<std::size_t>(start)] = num_components_;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adjacency_[static_cast<std::size_t>(u)]) {
        if (component_[static_cast<std::size_t>(v)] < 0) {
          component_[static_cast<std::size_t>(v)] = num_components_;
          q.push(v);
        }
      }
    }
    ++num_components_;
  }
}

void MessageLog::begin_round() { per_round_.push_back(0); }

void MessageLog::record(int from, int to, std::int64_t units) {
  if (units < 0) throw StructuralError("MessageLog: negative payload");
  if (per_round_.empty()) begin_round();
  per_round_.back() += units;
  total_ += units;
  if (detailed_) records_.push_back({rounds() - 1, from, to, units});
}

void MessageLog::write_csv(std::ostream& out) const {
  out << "round,from,to,units\n";
  if (detailed_) {
    for (const auto& r : records_) out << r.round << ',' << r.from << ',' << r.to << ',' << r.units << '\n';
  } else {
    for (std::size_t r = 0; r < per_round_.size(); ++r) out << r << ",-1,-1," << per_round_[r] << '\n';
  }
}

namespace {

template <typename Better>
ConsensusResult flood(const AgentGraph& graph, std::span<const double> values, MessageLog* log,
                      Better better) {
  const int N = graph.size();
  if (static_cast<int>(values.size()) != N) throw StructuralError("consensus: one value per node expected");
  ConsensusResult res;
  res.per_node.assign(values.begin(), values.end());
  res.multi_component = !graph.connected();
  std::vector<double> next(res.per_node);
  bool changed = true;
  while (changed) {
    changed = false;
    ++res.rounds;
    if (log) log->begin_round();
    for (int i = 0; i < N; ++i) {
      double best = res.per_node[static_cast<std::size_t>(i)];
      for (int j : graph.neighbors(i)) {
        if (log) log->record(j, i, 1);
        if (better(res.per_node[static_cast<std::size_t>(j)], best)) best = res.per_node[static_cast<std::size_t>(j)];
      }
      if (best != res.per_node[static_cast<std::size_t>(i)]) changed = true;
      next[static_cast<std::size_t>(i)] = best;
    }
    res.per_node.swap(next);
  }
  res.value = res.per_node.empty() ? 0.0 : res.per_node.front();
  for (double v : res.per_node)
    if (better(v, res.value)) res.value = v;
  return res;
}

}  // namespace

ConsensusResult min_consensus(const AgentGraph& graph, std::span<const double> values, MessageLog* log) {
  return flood(graph, values, log, [](double a, double b) { return a < b; });
}

ConsensusResult max_consensus(const AgentGraph& graph, std::span<const double> values, MessageLog* log) {
  return flood(graph, values, log, [](double a, double b) { return a > b; });
}

FlagResult flag_consensus(const AgentGraph& graph, const std::vector<bool>& flags, MessageLog* log) {
  std::vector<double> v(flags.size());
  for (std::size_t i = 0; i < flags.size(); ++i) v[i] = flags[i] ? 1.0 : 0.0;
  const auto r = min_consensus(graph, v, log);
  return {r.value > 0.5, r.rounds, r.multi_component};
}

Vector exchange_shared(const CoupledProblem& problem, const AgentGraph& graph,
                       std::span<const Vector> contributions, MessageLog* log) {
  if (static_cast<int>(contributions.size()) != problem.num_agents())
    throw StructuralError("exchange_shared: one vector per agent expected");
  Vector sum = Vector::Zero(problem.n());
  for (int i = 0; i < problem.num_agents(); ++i)
    scatter_add(contributions[static_cast<std::size_t>(i)], problem.agent(i).J, sum);
  for (int j = 0; j < problem.n(); ++j) sum[j] /= problem.multiplicity(j);
  if (log) {
    log->begin_round();
    for (int a = 0; a < graph.size(); ++a)
      for (int b : graph.neighbors(a)) log->record(a, b, graph.overlap(a, b));
  }
  return sum;
}

ThreadPool::ThreadPool(int threads) {
  const int extra = std::max(threads, 1) - 1;
  workers_.reserve(static_cast<std::size_t>(extra));
  for (int t = 0; t < extra; ++t) workers_.emplace_back([this] { worker_loop(); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  wake_.notify_all();
  for (auto& w : workers_) w.join();
}

void ThreadPool::drain() {
  for (;;) {
    int item;
    const std::function<void(int)>* job;
    {
      std::lock_guard lock(mutex_);
      if (next_ >= count_) return;
      item = next_++;
      job = job_;
    }
    try {
      (*job)(item);
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
  }
}

void ThreadPool::worker_loop() {
  std::uint64_t seen = 0;
  for (;;) {
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      ++active_;
    }
    drain();
    {
      std::lock_guard lock(mutex_);
      --active_;
    }
    done_.notify_all();
  }
}

void ThreadPool::parallel_for(int count, const std::function<void(int)>& fn) {
  if (workers_.empty()) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  {
    std::lock_guard lock(mutex_);
    job_ = &fn;
    count_ = count;
    next_ = 0;
    error_ = nullptr;
    ++generation_;
  }
  wake_.notify_all();
  drain();
  std::exception_ptr err;
  {
    std::unique_lock lock(mutex_);
    done_.wait(lock, [&] { return next_ >= count_ && active_ == 0; });
    job_ = nullptr;
    err = error_;
  }
  if (err) std::rethrow_exception(err);
}

Network::Network(const CoupledProblem& problem, int threads, bool detailed_log)
    : problem_(&problem), graph_(problem), log_(detailed_log), pool_(threads) {}

double Network::min(std::span<const double> values) {
  const auto r = min_consensus(graph_, values, &log_);
  if (r.multi_component) ++fallbacks_;
  return r.value;
}

double Network::max(std::span<const double> values) {
  const auto r = max_consensus(graph_, values, &log_);
  if (r.multi_component) ++fallbacks_;
  return r.value;
}

bool Network::all(const std::vector<bool>& flags) {
  const auto r = flag_consensus(graph_, flags, &log_);
  if (r.multi_component) ++fallbacks_;
  return r.all;
}

Vector Network::average_shared(std::span<const Vector> contributions) {
  return exchange_shared(*problem_, graph_, contributions, &log_);
}

}  // namespace cipm
