#pragma once

#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <ostream>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "cipm/problem.hpp"

namespace cipm {

/// Communication graph over agents. Edges join agents whose index sets
/// overlap; each edge carries the overlap size.
class AgentGraph {
 public:
  explicit AgentGraph(const CoupledProblem& problem);
  /// Plain undirected graph; adjacency lists may omit the node itself.
  explicit AgentGraph(std::vector<std::vector<int>> adjacency);

  int size() const { return static_cast<int>(adjacency_.size()); }
  /// Neighbors excluding the node itself, ascending.
  const std::vector<int>& neighbors(int i) const { return adjacency_[static_cast<std::size_t>(i)]; }
  /// Component label per node, labels numbered by first appearance.
  const std::vector<int>& components() const { return component_; }
  int num_components() const { return num_components_; }
  bool connected() const { return num_components_ == 1; }
  /// |J_i ∩ J_j| for graphs built from a problem, 1 otherwise.
  int overlap(int i, int j) const;

 private:
  void finish();

  std::vector<std::vector<int>> adjacency_;
  std::vector<std::map<int, int>> overlap_;
  std::vector<int> component_;
  int num_components_ = 0;
};

/// Scalar payload accounting for the simulated network. Per-round totals are
/// always kept; per-edge records only when detailed logging is enabled.
class MessageLog {
 public:
  struct Record {
    std::int64_t round;
    int from;
    int to;
    std::int64_t units;
  };

  explicit MessageLog(bool detailed = false) : detailed_(detailed) {}

  void begin_round();
  void record(int from, int to, std::int64_t units);

  std::int64_t rounds() const { return static_cast<std::int64_t>(per_round_.size()); }
  std::int64_t total_units() const { return total_; }
  const std::vector<std::int64_t>& per_round_units() const { return per_round_; }
  const std::vector<Record>& records() const { return records_; }
  bool detailed() const { return detailed_; }

  /// CSV with header round,from,to,units. Without detailed logging one row
  /// per round is written with from = to = -1.
  void write_csv(std::ostream& out) const;

 private:
  bool detailed_;
  std::vector<std::int64_t> per_round_;
  std::vector<Record> records_;
  std::int64_t total_ = 0;
};

struct ConsensusResult {
  /// Global value. On a disconnected graph this is the minimum over all
  /// component results, supplied by the orchestrator.
  double value = 0.0;
  /// Value each node holds after flooding.
  std::vector<double> per_node;
  /// Flooding rounds, including the final round that detects no change.
  int rounds = 0;
  bool multi_component = false;
};

/// Synchronous flooding: every round each node replaces its value with the
/// minimum over itself and its neighbors.
ConsensusResult min_consensus(const AgentGraph& graph, std::span<const double> values,
                              MessageLog* log = nullptr);
ConsensusResult max_consensus(const AgentGraph& graph, std::span<const double> values,
                              MessageLog* log = nullptr);

struct FlagResult {
  bool all = false;
  int rounds = 0;
  bool multi_component = false;
};

/// True iff every agent reports true. Implemented as min-consensus on {0, 1}.
FlagResult flag_consensus(const AgentGraph& graph, const std::vector<bool>& flags,
                          MessageLog* log = nullptr);

/// Exchange of per-index contributions between owners: agent i holds one value
/// per entry of J_i, and every owner of index j receives the contributions of
/// all other owners. Returns the per-index average, summed in ascending agent
/// order. Logs sum_j |I_j|(|I_j|-1) scalar units for the round.
Vector exchange_shared(const CoupledProblem& problem, const AgentGraph& graph,
                       std::span<const Vector> contributions, MessageLog* log = nullptr);

/// Persistent worker pool for the agent phase. Work items are indexed and
/// write only to their own slots, so results do not depend on scheduling.
class ThreadPool {
 public:
  explicit ThreadPool(int threads);
  ~ThreadPool();
  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int threads() const { return static_cast<int>(workers_.size()) + 1; }

  /// Runs fn(0..count-1) and waits. The first exception thrown by any item
  /// is rethrown here.
  void parallel_for(int count, const std::function<void(int)>& fn);

 private:
  void worker_loop();
  void drain();

  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(int)>* job_ = nullptr;
  int count_ = 0;
  int next_ = 0;
  int active_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

/// The simulated network the solvers run on: coupling graph, message log,
/// worker pool and the reductions built from them.
class Network {
 public:
  explicit Network(const CoupledProblem& problem, int threads = 1, bool detailed_log = false);

  const AgentGraph& graph() const { return graph_; }
  MessageLog& log() { return log_; }
  const MessageLog& log() const { return log_; }
  ThreadPool& pool() { return pool_; }

  double min(std::span<const double> values);
  double max(std::span<const double> values);
  bool all(const std::vector<bool>& flags);
  Vector average_shared(std::span<const Vector> contributions);

  template <typename F>
  void for_each_agent(F&& fn) {
    const std::function<void(int)> job = std::forward<F>(fn);
    pool_.parallel_for(problem_->num_agents(), job);
  }

  /// Number of reductions resolved by the orchestrator because the coupling
  /// graph is disconnected.
  int fallbacks() const { return fallbacks_; }

 private:
  const CoupledProblem* problem_;
  AgentGraph graph_;
  MessageLog log_;
  ThreadPool pool_;
  int fallbacks_ = 0;
};

}  // namespace cipm
