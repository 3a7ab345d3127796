#pragma once
// Self-evolution loop: retrieve -> rerank -> hint -> act -> evaluate ->
// finalize -> update the graph (online) or leave it untouched (offline).

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "exg/core.hpp"
#include "exg/embed.hpp"
#include "exg/graph.hpp"
#include "exg/hints.hpp"
#include "exg/rerank.hpp"
#include "exg/retrieve.hpp"

namespace exg {

struct AgentResponse {
  std::string output;
  std::size_t input_tokens = 0;
  std::size_t output_tokens = 0;
  std::chrono::nanoseconds latency{0};  // 0: measured by the loop clock
  bool tokens_estimated = false;
};

// One act() call is one LLM call.
class AgentClient {
 public:
  virtual ~AgentClient() = default;
  virtual AgentResponse act(const std::string& prompt) = 0;
};

struct Evaluation {
  Reward reward = Reward::Fail;
  Signature signature;
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual Evaluation evaluate(const TaskId& task_id, const std::string& input,
                              const std::string& output) = 0;
};

// Called on warning cases only; the text lands in corrective_feedback.
class Reflector {
 public:
  virtual ~Reflector() = default;
  virtual std::string reflect(const Case& warning) = 0;
  virtual bool counts_as_llm_call() const { return true; }
};

// Reflection backed by the agent client itself.
class AgentReflector final : public Reflector {
 public:
  explicit AgentReflector(AgentClient& agent) : agent_(agent) {}
  std::string reflect(const Case& warning) override;

  static std::string reflection_prompt(const Case& warning);

 private:
  AgentClient& agent_;
};

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::chrono::nanoseconds now() = 0;
};

class SteadyClock final : public Clock {
 public:
  std::chrono::nanoseconds now() override {
    return std::chrono::steady_clock::now().time_since_epoch();
  }
};

// Advances by a fixed step on every reading.
class FakeClock final : public Clock {
 public:
  explicit FakeClock(std::chrono::nanoseconds step = std::chrono::milliseconds(1)) : step_(step) {}
  std::chrono::nanoseconds now() override {
    current_ += step_;
    return current_;
  }

 private:
  std::chrono::nanoseconds step_;
  std::chrono::nanoseconds current_{0};
};

enum class Mode : std::uint8_t { Online, Offline };

const char* to_string(Mode mode);

struct LoopConfig {
  int max_attempts = 2;
  Mode mode = Mode::Online;
  RetrievalConfig retrieval;
  RerankConfig rerank;
  std::size_t hint_budget = 5;
  bool include_counterparts = true;
  std::optional<std::size_t> fix_limit;
  bool reflection_enabled = false;
  std::size_t similarity_link_m = 5;
  double similarity_link_threshold = 0.30;

  // Graph-update switches driven by ablations.
  bool store_cases = true;
  bool create_similar_edges = true;
  bool create_fixed_edges = true;

  std::string system_text =
      "You are a problem-solving agent. Use the memory hints from earlier attempts when they apply.";
  std::string instruction_text = "Return only the final answer.";

  void validate() const;
  HintOptions hint_options() const;
};

struct AttemptRecord {
  CaseId case_id;
  Reward reward = Reward::Fail;
  int llm_calls = 0;
  double retrieval_latency_ms = 0.0;
  double inference_latency_ms = 0.0;
  std::size_t input_tokens = 0;
  std::size_t output_tokens = 0;
  bool tokens_estimated = false;
  std::size_t pool_size = 0;
  std::size_t hint_count = 0;
  std::size_t fixed_by_hints = 0;
  bool transport_error = false;

  bool operator==(const AttemptRecord&) const = default;
};

struct RunRecord {
  TaskId task_id;
  std::vector<AttemptRecord> attempts;
  std::optional<int> solved_at;
  GraphStats graph_after;

  int llm_calls() const;
  bool operator==(const RunRecord&) const = default;
};

struct TaskSpec {
  TaskId task_id;
  std::string input;
  std::optional<std::string> context;
};

// Everything one retrieval produced for an attempt.
struct Retrieval {
  CandidatePool pool;
  std::vector<RankedCase> ranked;
  HintSet hints;
};

// Graph, vector index and cached case embeddings. Mutations of the graph and
// the index happen together under an exclusive lock; reads share the lock.
class Engine {
 public:
  explicit Engine(std::shared_ptr<const Embedder> embedder, ExperienceGraph graph = {});

  Retrieval query(const ProvisionalCase& provisional, const LoopConfig& cfg) const;

  // Case-similarity scores against every stored case: the best `m` at or above the
  // threshold, older case first on ties.
  std::vector<SimilarLink> similarity_links(const EmbeddedCase& incoming,
                                            const LoopConfig& cfg) const;

  // Inserts the case (plus its similarity links and index entry). When
  // `link_fix` is set and the case is golden, the most recent warning of the
  // same task gains a fixed_by edge to it. Returns the fixed_by source, if any.
  std::optional<CaseId> commit(Case c, const LoopConfig& cfg, bool link_fix);

  void freeze();
  bool frozen() const;

  GraphStats stats() const;
  std::string snapshot() const;
  // Copy of the graph taken under the read lock.
  ExperienceGraph graph_copy() const;
  std::size_t index_size() const;

  // Unsynchronized access for single-threaded callers.
  const ExperienceGraph& graph() const { return graph_; }
  const VectorIndex& index() const { return index_; }
  const Embedder& embedder() const { return *embedder_; }

 private:
  std::shared_ptr<const Embedder> embedder_;
  ExperienceGraph graph_;
  VectorIndex index_;
  std::vector<EmbeddedCase> embedded_;  // aligned with graph_.cases()
  mutable std::shared_mutex mutex_;
};

struct Backends {
  AgentClient& agent;
  Evaluator& evaluator;
  Clock& clock;
  Reflector* reflector = nullptr;
};

// Called after every attempt with the prompt that was sent; used by tests
// and the CLI debug surfaces.
using AttemptObserver =
    std::function<void(const TaskSpec&, int attempt, const Retrieval&, const std::string& prompt)>;

RunRecord run_task(Engine& engine, const TaskSpec& task, const LoopConfig& cfg, Backends& backends,
                   const AttemptObserver& observer = {});

class StreamError : public std::runtime_error {
 public:
  StreamError(std::size_t task_index, const std::string& what)
      : std::runtime_error("task " + std::to_string(task_index) + ": " + what),
        task_index_(task_index) {}
  std::size_t task_index() const { return task_index_; }

 private:
  std::size_t task_index_;
};

// Tasks strictly in order; online, task i+1 retrieves from the graph left by
// task i. Failures surface as StreamError carrying the task index.
std::vector<RunRecord> run_stream(Engine& engine, std::span<const TaskSpec> tasks,
                                  const LoopConfig& cfg, Backends& backends,
                                  const AttemptObserver& observer = {});

// Seeded Fisher-Yates shuffle followed by a collect/test cut at `ratio`.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_collect_test(std::span<const T> items,
                                                             double ratio, std::uint64_t seed);

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);
std::size_t collect_count(std::size_t n, double ratio);

template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_collect_test(std::span<const T> items,
                                                             double ratio, std::uint64_t seed) {
  const auto order = seeded_permutation(items.size(), seed);
  const std::size_t cut = collect_count(items.size(), ratio);
  std::pair<std::vector<T>, std::vector<T>> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < cut ? out.first : out.second).push_back(items[order[i]]);
  }
  return out;
}

// Whitespace-separated token count, the fallback token estimate.
std::size_t count_whitespace_tokens(std::string_view text);

}  // namespace exg
