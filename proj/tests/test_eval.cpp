#include <gtest/gtest.h>

#include <set>

#include "exg/eval.hpp"

using namespace exg;

namespace {

RunRecord record(const std::string& id, std::vector<int> rewards, std::vector<int> calls,
                 std::size_t cases_after) {
  RunRecord r;
  r.task_id = id;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    AttemptRecord a;
    a.case_id = case_id_for(id, static_cast<int>(i) + 1);
    a.reward = rewards[i] ? Reward::Pass : Reward::Fail;
    a.llm_calls = calls[i];
    a.retrieval_latency_ms = 2.0;
    a.inference_latency_ms = 10.0;
    a.input_tokens = 100;
    a.output_tokens = 5;
    r.attempts.push_back(a);
    if (rewards[i]) r.solved_at = static_cast<int>(i) + 1;
  }
  r.graph_after.case_count = cases_after;
  return r;
}

struct SuiteRun {
  std::vector<RunRecord> records;
  std::vector<std::string> prompts;
};

SuiteRun run_suite(const SyntheticSuite& suite, const AblationConfig& ab) {
  ScriptedAgent agent(suite.tasks);
  ScriptedEvaluator evaluator(suite.tasks);
  FakeClock clock;
  Backends b{agent, evaluator, clock, nullptr};
  Engine engine(std::make_shared<HashingEmbedder>());
  const LoopConfig cfg = apply_ablation(LoopConfig{}, ab);
  SuiteRun out;
  out.records = run_stream(engine, suite.specs(), cfg, b,
                           [&](const TaskSpec&, int, const Retrieval&, const std::string& p) {
                             out.prompts.push_back(p);
                           });
  return out;
}

}  // namespace

TEST(Metrics, HandComputedValues) {
  // Solved at 1, solved at 2, unsolved (two attempts, one with reflection).
  const std::vector<RunRecord> rs = {record("a", {1}, {1}, 1), record("b", {0, 1}, {1, 1}, 3),
                                     record("c", {0, 0}, {2, 1}, 5)};
  const auto m = compute_metrics(rs);
  EXPECT_EQ(m.task_count, 3u);
  EXPECT_DOUBLE_EQ(m.pass_at_1, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.pass_at_2, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.avg_llm_calls, 6.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.avg_retrieval_latency_ms, 10.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.avg_inference_latency_ms, 50.0 / 3.0);
  EXPECT_EQ(m.total_input_tokens, 500u);
  EXPECT_EQ(m.total_output_tokens, 25u);
  ASSERT_EQ(m.learning_curve.size(), 3u);
  EXPECT_DOUBLE_EQ(m.learning_curve[0].cumulative_pass_at_1, 1.0);
  EXPECT_DOUBLE_EQ(m.learning_curve[1].cumulative_pass_at_1, 0.5);
  EXPECT_DOUBLE_EQ(m.learning_curve[1].cumulative_pass_at_2, 1.0);
  EXPECT_DOUBLE_EQ(m.learning_curve[2].cumulative_pass_at_2, 2.0 / 3.0);
  EXPECT_EQ(m.graph_stats_timeline[2].case_count, 5u);
}

TEST(Metrics, EmptyRun) {
  const auto m = compute_metrics({});
  EXPECT_EQ(m.task_count, 0u);
  EXPECT_EQ(m.pass_at_1, 0.0);
  EXPECT_TRUE(m.learning_curve.empty());
  const std::string csv = export_report_string(m, ReportFormat::Csv);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_EQ(parse_report_string(csv, ReportFormat::Csv), m);
}

TEST(Metrics, ReportsRoundTrip) {
  const std::vector<RunRecord> rs = {record("a", {1}, {1}, 1), record("b", {0, 1}, {1, 1}, 3),
                                     record("c", {0, 0}, {2, 1}, 5)};
  auto m = compute_metrics(rs);
  m.avg_inference_latency_ms = 0.1 + 0.2;
  m.tokens_estimated = true;
  for (auto fmt : {ReportFormat::Csv, ReportFormat::JsonLines}) {
    const std::string text = export_report_string(m, fmt);
    EXPECT_EQ(parse_report_string(text, fmt), m);
  }
  EXPECT_THROW(parse_report_string("garbage\n", ReportFormat::Csv), std::runtime_error);
  EXPECT_THROW(parse_report_string("{\"kind\":\"curve\"}\n", ReportFormat::JsonLines),
               std::runtime_error);
  EXPECT_THROW(parse_report_string(
                   "{\"kind\":\"summary\",\"schema_version\":2}\n", ReportFormat::JsonLines),
               std::runtime_error);
}

TEST(Metrics, RunRecordJsonRoundTrip) {
  RunRecord r = record("b", {0, 1}, {2, 1}, 3);
  r.attempts[0].transport_error = true;
  r.attempts[1].tokens_estimated = true;
  EXPECT_EQ(run_record_from_json(to_json(r)), r);
  const RunRecord unsolved = record("c", {0}, {1}, 1);
  EXPECT_EQ(run_record_from_json(to_json(unsolved)), unsolved);
}

TEST(Ablation, ParseAndApply) {
  EXPECT_EQ(AblationConfig::parse("").to_string(), "full");
  EXPECT_EQ(AblationConfig::parse("without_fix,without_anchor").to_string(),
            "without_fix,without_anchor");
  EXPECT_THROW(AblationConfig::parse("without_magic"), std::invalid_argument);

  const LoopConfig base;
  const auto nm = apply_ablation(base, AblationConfig::parse("no_memory"));
  EXPECT_FALSE(nm.retrieval.enabled);
  EXPECT_FALSE(nm.store_cases);
  const auto ns = apply_ablation(base, AblationConfig::parse("without_similar"));
  EXPECT_FALSE(ns.create_similar_edges);
  EXPECT_FALSE(ns.retrieval.use_similarity);
  EXPECT_FALSE(ns.rerank.propagate);
  EXPECT_TRUE(ns.create_fixed_edges);
  const auto nf = apply_ablation(base, AblationConfig::parse("without_fix"));
  EXPECT_FALSE(nf.create_fixed_edges);
  EXPECT_FALSE(nf.retrieval.use_fix);
  EXPECT_EQ(nf.fix_limit, std::size_t{0});
  const auto na = apply_ablation(base, AblationConfig::parse("without_anchor"));
  EXPECT_FALSE(na.retrieval.use_anchor);
  EXPECT_TRUE(na.retrieval.use_similarity);
}

TEST(Suite, DeterministicAndCollisionFree) {
  const auto a = build_synthetic_suite(4, 3, 11);
  const auto b = build_synthetic_suite(4, 3, 11);
  ASSERT_EQ(a.tasks.size(), 12u);
  EXPECT_EQ(a.tasks, b.tasks);

  // Within-family order holds under interleaving.
  std::map<std::string, int> last;
  for (const auto& t : a.tasks) {
    const int idx = std::stoi(t.task_id.substr(t.task_id.size() - 2));
    EXPECT_GT(idx, last[t.family_id]);
    last[t.family_id] = idx;
    EXPECT_EQ(t.rule, idx == 1 ? TaskRule::AlwaysFail : TaskRule::NeedsFamilyHint);
  }

  const HashingEmbedder e;
  for (const auto* suite : {&a}) {
    std::set<std::string> tokens;
    for (const auto& t : suite->tasks) {
      for (const auto& tok : HashingEmbedder::tokenize(t.input)) tokens.insert(tok);
    }
    std::set<std::size_t> buckets;
    for (const auto& tok : tokens) buckets.insert(e.bucket_of(tok));
    EXPECT_EQ(buckets.size(), tokens.size());
  }
  const auto abl = build_ablation_suite();
  std::set<std::string> tokens;
  for (const auto& t : abl.tasks) {
    for (const auto& tok : HashingEmbedder::tokenize(t.input)) tokens.insert(tok);
  }
  std::set<std::size_t> buckets;
  for (const auto& tok : tokens) buckets.insert(e.bucket_of(tok));
  EXPECT_EQ(buckets.size(), tokens.size());
  EXPECT_EQ(abl.tasks.size(), 14u);
}

TEST(Suite, TaskJsonRoundTrip) {
  for (const auto& t : build_ablation_suite().tasks) EXPECT_EQ(synthetic_task_from_json(to_json(t)), t);
  EXPECT_THROW(task_rule_from_string("sometimes"), std::invalid_argument);
}

TEST(Scripted, PromptParsing) {
  const std::string prompt =
      "System:\nS\n\nUser:\nmy task\n\n=== MEMORY HINTS (via EXG) ===\n"
      "[FIXED_BY]\nTask: other\nFailure: KError: boom\nFix: f\n\n"
      "[GOLDEN]\nTask: g\nSolution: s\n\nAnswer.\n";
  EXPECT_EQ(prompt_user_block(prompt), "my task");
  const auto hints = parse_prompt_hints(prompt);
  ASSERT_EQ(hints.size(), 2u);
  EXPECT_EQ(hints[0].kind, HintKind::FixedBy);
  EXPECT_EQ(hints[0].task, "other");
  EXPECT_EQ(hints[0].failure_type, "KError");
  EXPECT_EQ(hints[1].kind, HintKind::Golden);
  EXPECT_TRUE(parse_prompt_hints("System:\nS\n\nUser:\nx\n\nAnswer.\n").empty());
}

TEST(Scripted, Rules) {
  SyntheticTask t{"t", "my task", "f", "KError", "boom", TaskRule::NeedsFamilyHint};
  ScriptedAgent agent({t});
  auto prompt = [](const std::string& header, const std::string& task, const std::string& type) {
    return "System:\nS\n\nUser:\nmy task\n\n=== MEMORY HINTS (via EXG) ===\n" + header +
           "\nTask: " + task + "\nFailure: " + type + ": boom\n\nAnswer.\n";
  };
  const auto own_warning = prompt("[WARNING]", "my task", "KError");
  const auto other_warning = prompt("[WARNING]", "other", "KError");
  const auto other_fix = prompt("[FIXED_BY]", "other", "KError");
  const auto wrong_family = prompt("[WARNING]", "other", "ZError");

  EXPECT_TRUE(agent.would_succeed(t, own_warning));
  EXPECT_FALSE(agent.would_succeed(t, wrong_family));
  t.rule = TaskRule::NeedsCrossTaskHint;
  EXPECT_FALSE(agent.would_succeed(t, own_warning));
  EXPECT_TRUE(agent.would_succeed(t, other_warning));
  t.rule = TaskRule::NeedsFixHint;
  EXPECT_FALSE(agent.would_succeed(t, other_warning));
  EXPECT_TRUE(agent.would_succeed(t, other_fix));
  t.rule = TaskRule::SelfRepair;
  EXPECT_TRUE(agent.would_succeed(t, own_warning));
  EXPECT_FALSE(agent.would_succeed(t, other_warning));
  t.rule = TaskRule::AlwaysFail;
  EXPECT_FALSE(agent.would_succeed(t, other_fix));

  t.rule = TaskRule::NeedsFamilyHint;
  ScriptedAgent a2({t});
  EXPECT_EQ(a2.act(own_warning).output, "PASS t");
  EXPECT_EQ(a2.act(wrong_family).output, "FAIL t");
  EXPECT_THROW(a2.act("System:\nS\n\nUser:\nunknown\n\nAnswer.\n"), std::runtime_error);

  ScriptedEvaluator ev({t});
  EXPECT_EQ(ev.evaluate("t", "my task", "PASS t").reward, Reward::Pass);
  const auto fail = ev.evaluate("t", "my task", "FAIL t");
  EXPECT_EQ(fail.reward, Reward::Fail);
  EXPECT_EQ(fail.signature.failure_type, "KError");
  EXPECT_THROW(ev.evaluate("zz", "", ""), std::runtime_error);
}

TEST(Scripted, ExactMatchEvaluator) {
  ExactMatchEvaluator ev(std::unordered_map<TaskId, std::string>{{"t", "42"}});
  EXPECT_EQ(ev.evaluate("t", "", " 42\n").reward, Reward::Pass);
  const auto e = ev.evaluate("t", "", "41");
  EXPECT_EQ(e.reward, Reward::Fail);
  EXPECT_EQ(e.signature.failure_type, "WrongAnswer");
  EXPECT_THROW(ev.evaluate("u", "", "x"), std::runtime_error);
}

TEST(Suite, SingleFamilyLearnsFromItsFirstFailure) {
  const auto suite = build_synthetic_suite(1, 5, 0);
  const auto full = compute_metrics(run_suite(suite, {}).records);
  EXPECT_DOUBLE_EQ(full.pass_at_1, 0.8);
  EXPECT_DOUBLE_EQ(full.avg_llm_calls, 1.2);
  AblationConfig nm;
  nm.no_memory = true;
  const auto none = compute_metrics(run_suite(suite, nm).records);
  EXPECT_DOUBLE_EQ(none.pass_at_1, 0.0);
  EXPECT_DOUBLE_EQ(none.avg_llm_calls, 2.0);
}

TEST(Suite, AblationSuiteSeparatesComponents) {
  const auto suite = build_ablation_suite();
  auto pass1 = [&](const std::string& spec) {
    return compute_metrics(run_suite(suite, AblationConfig::parse(spec)).records).pass_at_1;
  };
  EXPECT_DOUBLE_EQ(pass1("full"), 12.0 / 14.0);
  EXPECT_DOUBLE_EQ(pass1("without_fix"), 11.0 / 14.0);
  EXPECT_DOUBLE_EQ(pass1("without_similar"), 11.0 / 14.0);
  EXPECT_DOUBLE_EQ(pass1("without_anchor"), 12.0 / 14.0);
  EXPECT_DOUBLE_EQ(pass1("no_memory"), 10.0 / 14.0);

  const auto nf = run_suite(suite, AblationConfig::parse("without_fix"));
  for (const auto& p : nf.prompts) EXPECT_EQ(p.find("[FIXED_BY]"), std::string::npos);
  for (const auto& r : nf.records) EXPECT_EQ(r.graph_after.fixed_by_count, 0u);
  const auto ns = run_suite(suite, AblationConfig::parse("without_similar"));
  for (const auto& r : ns.records) EXPECT_EQ(r.graph_after.similar_to_count, 0u);
}
