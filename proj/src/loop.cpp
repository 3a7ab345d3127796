#include "exg/loop.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <sstream>

#include "exg/http.hpp"

namespace exg {

const char* to_string(Mode mode) { return mode == Mode::Online ? "online" : "offline"; }

void LoopConfig::validate() const {
  if (max_attempts < 1) throw std::invalid_argument("loop.max_attempts must be >= 1");
  if (!(similarity_link_threshold >= 0.0 && similarity_link_threshold <= 1.0)) {
    throw std::invalid_argument("loop.similarity_link_threshold must lie in [0,1]");
  }
  retrieval.validate();
  rerank.validate();
}

HintOptions LoopConfig::hint_options() const {
  return HintOptions{hint_budget, include_counterparts, fix_limit};
}

int RunRecord::llm_calls() const {
  int total = 0;
  for (const auto& a : attempts) total += a.llm_calls;
  return total;
}

std::string AgentReflector::reflection_prompt(const Case& warning) {
  std::ostringstream p;
  p << "An attempt at the following task failed.\n\nTask:\n"
    << warning.input << "\n\nAttempted output:\n"
    << warning.output << "\n\nFailure signals:\n"
    << warning.signature.failure_text()
    << "\n\nIn two or three sentences, explain what went wrong and what to do differently.\n";
  return p.str();
}

std::string AgentReflector::reflect(const Case& warning) {
  return agent_.act(reflection_prompt(warning)).output;
}

std::size_t count_whitespace_tokens(std::string_view text) {
  std::size_t n = 0;
  bool in_token = false;
  for (unsigned char ch : text) {
    const bool space = ch == ' ' || ch == '\n' || ch == '\t' || ch == '\r' || ch == '\f' || ch == '\v';
    if (!space && !in_token) ++n;
    in_token = !space;
  }
  return n;
}

// --- Engine ---

Engine::Engine(std::shared_ptr<const Embedder> embedder, ExperienceGraph graph)
    : embedder_(std::move(embedder)), graph_(std::move(graph)) {
  if (!embedder_) throw std::invalid_argument("Engine requires an embedder");
  embedded_.reserve(graph_.size());
  for (const auto& c : graph_.cases()) {
    embedded_.push_back(embed_case(c, *embedder_));
    index_.add(c.case_id, c.created_seq, embedded_.back().prompt);
  }
}

Retrieval Engine::query(const ProvisionalCase& provisional, const LoopConfig& cfg) const {
  Retrieval r;
  r.hints.budget = cfg.hint_budget;
  if (!cfg.retrieval.enabled) return r;
  const Embedding q = embedder_->embed(provisional.query_text);
  std::shared_lock lock(mutex_);
  r.pool = retrieve(graph_, index_, q, provisional.task_id, cfg.retrieval);
  r.ranked = propagate_and_rank(r.pool, graph_, cfg.rerank);
  r.hints = build_hints(r.ranked, graph_, cfg.hint_options());
  return r;
}

std::vector<SimilarLink> Engine::similarity_links(const EmbeddedCase& incoming,
                                                  const LoopConfig& cfg) const {
  struct Scored {
    double score;
    std::size_t node;
  };
  std::vector<Scored> scored;
  for (std::size_t i = 0; i < embedded_.size(); ++i) {
    const double s = case_similarity(incoming, embedded_[i], cfg.rerank);
    if (s >= cfg.similarity_link_threshold) scored.push_back({s, i});
  }
  // embedded_ follows created_seq order, so a stable sort keeps older first.
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) { return a.score > b.score; });
  if (scored.size() > cfg.similarity_link_m) scored.resize(cfg.similarity_link_m);
  std::vector<SimilarLink> links;
  links.reserve(scored.size());
  for (const auto& s : scored) {
    links.push_back({graph_.cases()[s.node].case_id, std::clamp(s.score, 0.0, 1.0)});
  }
  return links;
}

std::optional<CaseId> Engine::commit(Case c, const LoopConfig& cfg, bool link_fix) {
  EmbeddedCase embedded = embed_case(c, *embedder_);
  std::unique_lock lock(mutex_);
  if (graph_.frozen()) throw FrozenGraphError("commit: graph is frozen");

  std::vector<SimilarLink> links;
  if (cfg.create_similar_edges) links = similarity_links(embedded, cfg);

  std::optional<CaseId> fix_source;
  if (link_fix && is_golden(c)) {
    const Case* latest = nullptr;
    for (const Case* prior : graph_.anchor_cases(c.task_id)) {
      if (is_warning(*prior) && !graph_.fixed_target(prior->case_id) &&
          (!latest || prior->created_seq > latest->created_seq)) {
        latest = prior;
      }
    }
    if (latest) fix_source = latest->case_id;
  }

  const CaseId id = graph_.insert_case(std::move(c), links);
  const Case& stored = graph_.at(id);
  index_.add(id, stored.created_seq, embedded.prompt);
  embedded_.push_back(std::move(embedded));
  if (fix_source) graph_.add_fixed_by(*fix_source, id);
  return fix_source;
}

void Engine::freeze() {
  std::unique_lock lock(mutex_);
  graph_.freeze();
}

bool Engine::frozen() const {
  std::shared_lock lock(mutex_);
  return graph_.frozen();
}

GraphStats Engine::stats() const {
  std::shared_lock lock(mutex_);
  return graph_.stats();
}

std::string Engine::snapshot() const {
  std::shared_lock lock(mutex_);
  return graph_.snapshot_string();
}

ExperienceGraph Engine::graph_copy() const {
  std::shared_lock lock(mutex_);
  return graph_;
}

std::size_t Engine::index_size() const {
  std::shared_lock lock(mutex_);
  return index_.size();
}

// --- loop ---

namespace {

double to_ms(std::chrono::nanoseconds d) {
  return std::chrono::duration<double, std::milli>(d).count();
}

Signature transport_signature(const std::string& what) {
  Signature s;
  s.failure_type = "TransportError";
  s.error_messages.push_back(what);
  return s;
}

}  // namespace

RunRecord run_task(Engine& engine, const TaskSpec& task, const LoopConfig& cfg, Backends& backends,
                   const AttemptObserver& observer) {
  cfg.validate();
  const bool offline = cfg.mode == Mode::Offline;
  if (engine.frozen() != offline) {
    throw std::logic_error(std::string("run_task: ") + to_string(cfg.mode) +
                           " mode requires a " + (offline ? "frozen" : "mutable") + " graph");
  }

  RunRecord record;
  record.task_id = task.task_id;
  bool previous_failed = false;

  for (int k = 1; k <= cfg.max_attempts; ++k) {
    AttemptRecord attempt;
    attempt.case_id = case_id_for(task.task_id, k);

    const ProvisionalCase provisional = make_provisional(task.task_id, task.input, task.context);
    const auto t0 = backends.clock.now();
    const Retrieval retrieval = engine.query(provisional, cfg);
    const auto t1 = backends.clock.now();
    attempt.retrieval_latency_ms = to_ms(t1 - t0);
    attempt.pool_size = retrieval.pool.candidates.size();
    attempt.hint_count = retrieval.hints.size();
    attempt.fixed_by_hints = retrieval.hints.count(HintKind::FixedBy);

    const std::string prompt = assemble_prompt(cfg.system_text, provisional.query_text,
                                               retrieval.hints, cfg.instruction_text);
    if (observer) observer(task, k, retrieval, prompt);

    Evaluation eval;
    std::string output;
    attempt.llm_calls = 1;
    try {
      const auto a0 = backends.clock.now();
      AgentResponse response = backends.agent.act(prompt);
      const auto a1 = backends.clock.now();
      attempt.inference_latency_ms =
          to_ms(response.latency.count() > 0 ? response.latency : a1 - a0);
      attempt.input_tokens = response.input_tokens;
      attempt.output_tokens = response.output_tokens;
      attempt.tokens_estimated = response.tokens_estimated;
      output = std::move(response.output);
      try {
        eval = backends.evaluator.evaluate(task.task_id, task.input, output);
      } catch (const TransportError& e) {
        eval = {Reward::Fail, transport_signature(e.what())};
        attempt.transport_error = true;
      }
    } catch (const TransportError& e) {
      eval = {Reward::Fail, transport_signature(e.what())};
      attempt.transport_error = true;
    }

    Trajectory trajectory;
    trajectory.task_id = task.task_id;
    trajectory.attempt_index = k;
    trajectory.terminal = true;
    trajectory.steps.push_back({prompt, output, eval.signature.failure_text(), 1});

    if (cfg.reflection_enabled && backends.reflector && eval.reward == Reward::Fail &&
        k < cfg.max_attempts) {
      const Case draft = abstract_case(trajectory, task.input, output, eval.reward, eval.signature);
      try {
        eval.signature.corrective_feedback = backends.reflector->reflect(draft);
      } catch (const TransportError&) {
        attempt.transport_error = true;
      }
      if (backends.reflector->counts_as_llm_call()) ++attempt.llm_calls;
    }

    Case c = abstract_case(trajectory, task.input, std::move(output), eval.reward,
                           std::move(eval.signature));
    attempt.reward = c.reward;

    if (!offline && cfg.store_cases) {
      const bool link_fix = cfg.create_fixed_edges && k > 1 && previous_failed;
      engine.commit(std::move(c), cfg, link_fix);
    }

    record.attempts.push_back(attempt);
    if (attempt.reward == Reward::Pass) {
      record.solved_at = k;
      break;
    }
    previous_failed = true;
  }
  record.graph_after = engine.stats();
  return record;
}

std::vector<RunRecord> run_stream(Engine& engine, std::span<const TaskSpec> tasks,
                                  const LoopConfig& cfg, Backends& backends,
                                  const AttemptObserver& observer) {
  std::vector<RunRecord> records;
  records.reserve(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    try {
      records.push_back(run_task(engine, tasks[i], cfg, backends, observer));
    } catch (const StreamError&) {
      throw;
    } catch (const std::exception& e) {
      throw StreamError(i, e.what());
    }
  }
  return records;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::size_t collect_count(std::size_t n, double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw std::invalid_argument("split ratio must lie in [0,1]");
  const auto cut = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratio));
  return std::min(cut, n);
}

}  // namespace exg
