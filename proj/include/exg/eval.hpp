#pragma once
// Metrics, ablation switches, synthetic task suites with scripted backends,
// and report export.
//
// pass@k here is attempt-based: pass@1 counts tasks solved by the first
// attempt, pass@2 tasks solved within two attempts under the retry protocol.
// It is not the sampling-based pass@k estimator.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "exg/graph.hpp"
#include "exg/hints.hpp"
#include "exg/loop.hpp"

namespace exg {

// --- metrics ---

struct CurvePoint {
  std::size_t task_index = 0;  // 1-based
  double cumulative_pass_at_1 = 0.0;
  double cumulative_pass_at_2 = 0.0;

  bool operator==(const CurvePoint&) const = default;
};

struct MetricsReport {
  static constexpr int kSchemaVersion = 1;

  std::size_t task_count = 0;  // 0 flags an empty run
  double pass_at_1 = 0.0;
  double pass_at_2 = 0.0;
  double avg_llm_calls = 0.0;
  double avg_retrieval_latency_ms = 0.0;  // per task
  double avg_inference_latency_ms = 0.0;  // per task
  std::size_t total_input_tokens = 0;
  std::size_t total_output_tokens = 0;
  bool tokens_estimated = false;
  std::vector<CurvePoint> learning_curve;
  std::vector<GraphStats> graph_stats_timeline;

  bool operator==(const MetricsReport&) const = default;
};

MetricsReport compute_metrics(std::span<const RunRecord> records);

enum class ReportFormat : std::uint8_t { Csv, JsonLines };

void export_report(const MetricsReport& report, std::ostream& sink, ReportFormat format);
std::string export_report_string(const MetricsReport& report, ReportFormat format);
// Throws std::runtime_error on malformed input or schema mismatch.
MetricsReport parse_report(std::istream& source, ReportFormat format);
MetricsReport parse_report_string(const std::string& text, ReportFormat format);

nlohmann::json to_json(const RunRecord& record);
RunRecord run_record_from_json(const nlohmann::json& j);

// --- ablations ---

struct AblationConfig {
  bool no_memory = false;
  bool without_similar = false;
  bool without_fix = false;
  bool without_anchor = false;

  // Comma-separated flag names; "full" or "" for none. Throws
  // std::invalid_argument on unknown names.
  static AblationConfig parse(const std::string& spec);
  std::string to_string() const;
};

LoopConfig apply_ablation(LoopConfig cfg, const AblationConfig& ab);

// --- synthetic suites ---

enum class TaskRule : std::uint8_t {
  AlwaysFail,
  AlwaysSucceed,
  // Warning or FixedBy hint carrying the family failure type, any task.
  NeedsFamilyHint,
  // Same, but the hint must come from a different task.
  NeedsCrossTaskHint,
  // FixedBy hint of the family from a different task.
  NeedsFixHint,
  // Warning hint about this very task (retry learns from its own failure).
  SelfRepair,
};

const char* to_string(TaskRule rule);
TaskRule task_rule_from_string(const std::string& name);

struct SyntheticTask {
  TaskId task_id;
  std::string input;
  std::string family_id;
  std::string failure_type;
  std::string error_message;
  TaskRule rule = TaskRule::NeedsFamilyHint;

  TaskSpec spec() const { return {task_id, input, std::nullopt}; }
  bool operator==(const SyntheticTask&) const = default;
};

struct SyntheticSuite {
  std::vector<SyntheticTask> tasks;

  std::vector<TaskSpec> specs() const;
};

// The first member of each family fails regardless of hints; later members
// succeed iff the prompt holds a Warning or FixedBy hint of their family.
// Families are interleaved by `seed`, members keep their order. All suite
// tokens land in distinct buckets of a `dimension`-wide hashing embedder
// while buckets last.
SyntheticSuite build_synthetic_suite(std::size_t n_families, std::size_t tasks_per_family,
                                     std::uint64_t seed,
                                     int dimension = HashingEmbedder::kDefaultDimension);

// Fourteen tasks laid out so each graph structure has a task that depends on
// it: a fix-dependent family, a task reachable only through a one-hop
// similarity bridge, and always-succeeding fillers.
SyntheticSuite build_ablation_suite(int dimension = HashingEmbedder::kDefaultDimension);

struct ParsedHint {
  HintKind kind = HintKind::Golden;
  std::string task;
  std::string failure_type;
};

// Hints found in the memory section of an assembled prompt.
std::vector<ParsedHint> parse_prompt_hints(const std::string& prompt);
// Contents of the User block of an assembled prompt.
std::string prompt_user_block(const std::string& prompt);

// Acts purely from (task, prompt): the task is recognised from the User
// block, success follows the task's rule. Outputs are "PASS <id>" or
// "FAIL <id>"; token counts are whitespace estimates.
class ScriptedAgent final : public AgentClient {
 public:
  explicit ScriptedAgent(std::vector<SyntheticTask> tasks);

  AgentResponse act(const std::string& prompt) override;

  bool would_succeed(const SyntheticTask& task, const std::string& prompt) const;
  std::size_t calls() const { return calls_; }

 private:
  std::unordered_map<std::string, SyntheticTask> by_input_;
  std::size_t calls_ = 0;
};

class ScriptedEvaluator final : public Evaluator {
 public:
  explicit ScriptedEvaluator(std::vector<SyntheticTask> tasks);

  Evaluation evaluate(const TaskId& task_id, const std::string& input,
                      const std::string& output) override;

 private:
  std::unordered_map<TaskId, SyntheticTask> by_id_;
};

// Reward 1 iff the trimmed output equals the expected answer of the task.
class ExactMatchEvaluator final : public Evaluator {
 public:
  explicit ExactMatchEvaluator(std::unordered_map<TaskId, std::string> expected);

  Evaluation evaluate(const TaskId& task_id, const std::string& input,
                      const std::string& output) override;

 private:
  std::unordered_map<TaskId, std::string> expected_;
};

class ScriptedReflector final : public Reflector {
 public:
  std::string reflect(const Case& warning) override;
};

nlohmann::json to_json(const SyntheticTask& task);
SyntheticTask synthetic_task_from_json(const nlohmann::json& j);

}  // namespace exg
