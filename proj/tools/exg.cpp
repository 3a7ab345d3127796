// exg: run task streams against an experience graph, inspect snapshots and
// export reports.
//
// Exit codes: 0 success, 1 the run finished but something went wrong during
// it (backend transport failures, offline graph mutation), 2 bad usage,
// configuration or input.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "exg/chat_client.hpp"
#include "exg/config.hpp"
#include "exg/eval.hpp"
#include "exg/loop.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TaskLine {
  exg::TaskSpec spec;
  std::optional<exg::SyntheticTask> script;
  std::optional<std::string> expected;
  json raw;
};

std::vector<TaskLine> read_tasks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open task file '" + path + "'");
  std::vector<TaskLine> tasks;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      TaskLine t;
      t.raw = json::parse(line);
      t.spec.task_id = t.raw.at("task_id").get<std::string>();
      t.spec.input = t.raw.at("input").get<std::string>();
      if (t.raw.contains("context") && !t.raw["context"].is_null()) {
        t.spec.context = t.raw["context"].get<std::string>();
      }
      if (t.raw.contains("script")) t.script = exg::synthetic_task_from_json(t.raw);
      if (t.raw.contains("expected")) t.expected = t.raw["expected"].get<std::string>();
      if (!ids.insert(t.spec.task_id).second) {
        throw UsageError("duplicate task_id '" + t.spec.task_id + "'");
      }
      tasks.push_back(std::move(t));
    } catch (const UsageError& e) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const std::exception& e) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": bad task line: " + e.what());
    }
  }
  return tasks;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
}

exg::ExperienceGraph load_graph(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("snapshot '" + path + "' does not exist");
  try {
    return exg::ExperienceGraph::load_snapshot_string(read_file(path));
  } catch (const exg::SnapshotError& e) {
    throw UsageError(e.what());
  }
}

struct CommonOptions {
  std::string tasks;
  std::string snapshot;
  std::string config;
  std::string out = "out";
  std::string ablation = "full";
  std::string agent;
  std::optional<int> max_attempts;
  std::optional<std::size_t> hint_budget;
  std::vector<std::string> overrides;
  bool quiet = false;
};

exg::RunConfig build_config(const CommonOptions& o, exg::Mode mode) {
  exg::RunConfig cfg = o.config.empty() ? exg::RunConfig{} : exg::load_run_config(o.config);
  for (const auto& s : o.overrides) exg::apply_override(cfg, s);
  if (!o.agent.empty()) exg::apply_override(cfg, "agent.kind=\"" + o.agent + "\"");
  if (o.max_attempts) exg::apply_override(cfg, "loop.max_attempts=" + std::to_string(*o.max_attempts));
  if (o.hint_budget) exg::apply_override(cfg, "loop.hint_budget=" + std::to_string(*o.hint_budget));
  cfg.loop = exg::apply_ablation(cfg.loop, exg::AblationConfig::parse(o.ablation));
  cfg.loop.mode = mode;
  cfg.loop.validate();
  return cfg;
}

// Agent and evaluator for a task list under the configured agent kind.
struct BackendSet {
  std::unique_ptr<exg::AgentClient> agent;
  std::unique_ptr<exg::Evaluator> evaluator;
  std::unique_ptr<exg::Clock> clock;
  std::unique_ptr<exg::Reflector> reflector;
};

BackendSet make_backends(const exg::RunConfig& cfg, const std::vector<TaskLine>& tasks) {
  BackendSet b;
  if (cfg.agent.kind == "mock") {
    std::vector<exg::SyntheticTask> scripts;
    for (const auto& t : tasks) {
      if (!t.script) throw UsageError("mock agent needs a 'script' object on task '" + t.spec.task_id + "'");
      scripts.push_back(*t.script);
    }
    b.agent = std::make_unique<exg::ScriptedAgent>(scripts);
    b.evaluator = std::make_unique<exg::ScriptedEvaluator>(scripts);
    b.clock = std::make_unique<exg::FakeClock>();
    b.reflector = std::make_unique<exg::ScriptedReflector>();
  } else {
    std::unordered_map<exg::TaskId, std::string> expected;
    for (const auto& t : tasks) {
      if (!t.expected) throw UsageError("http agent needs an 'expected' answer on task '" + t.spec.task_id + "'");
      expected.emplace(t.spec.task_id, *t.expected);
    }
    b.agent = std::make_unique<exg::ChatCompletionClient>(cfg.agent.chat);
    b.evaluator = std::make_unique<exg::ExactMatchEvaluator>(std::move(expected));
    b.clock = std::make_unique<exg::SteadyClock>();
    b.reflector = std::make_unique<exg::AgentReflector>(*b.agent);
  }
  return b;
}

bool any_transport_error(const std::vector<exg::RunRecord>& records) {
  for (const auto& r : records) {
    for (const auto& a : r.attempts) {
      if (a.transport_error) return true;
    }
  }
  return false;
}

void write_run_outputs(const fs::path& dir, const std::vector<exg::RunRecord>& records) {
  std::ostringstream log;
  for (const auto& r : records) log << exg::to_json(r).dump() << '\n';
  write_file(dir / "records.jsonl", log.str());
  const auto report = exg::compute_metrics(records);
  write_file(dir / "report.csv", exg::export_report_string(report, exg::ReportFormat::Csv));
  write_file(dir / "report.jsonl", exg::export_report_string(report, exg::ReportFormat::JsonLines));
}

void print_summary(const std::vector<exg::RunRecord>& records, const exg::GraphStats& s, bool quiet) {
  if (!quiet) {
    for (const auto& r : records) {
      std::cout << r.task_id << " solved_at="
                << (r.solved_at ? std::to_string(*r.solved_at) : std::string("-"))
                << " llm_calls=" << r.llm_calls() << '\n';
    }
  }
  const auto m = exg::compute_metrics(records);
  std::cout << "tasks=" << m.task_count << " pass@1=" << m.pass_at_1 << " pass@2=" << m.pass_at_2
            << " avg_llm_calls=" << m.avg_llm_calls << '\n';
  std::cout << "graph cases=" << s.case_count << " golden=" << s.golden_count
            << " warning=" << s.warning_count << " anchors=" << s.anchor_count
            << " similar_to=" << s.similar_to_count << " fixed_by=" << s.fixed_by_count << '\n';
}

int run_stream_command(const CommonOptions& o, exg::Mode mode) {
  const auto tasks = read_tasks(o.tasks);
  const exg::RunConfig cfg = build_config(o, mode);
  exg::ExperienceGraph graph;
  if (mode == exg::Mode::Offline || !o.snapshot.empty()) graph = load_graph(o.snapshot);
  BackendSet b = make_backends(cfg, tasks);

  exg::Engine engine(exg::make_embedder(cfg.embedder), std::move(graph));
  if (mode == exg::Mode::Offline) engine.freeze();
  const std::string before = engine.snapshot();

  std::vector<exg::TaskSpec> specs;
  for (const auto& t : tasks) specs.push_back(t.spec);
  exg::Backends backends{*b.agent, *b.evaluator, *b.clock, b.reflector.get()};
  const auto records = exg::run_stream(engine, specs, cfg.loop, backends);

  const fs::path dir(o.out);
  fs::create_directories(dir);
  write_run_outputs(dir, records);
  int status = 0;
  if (mode == exg::Mode::Online) {
    write_file(dir / "snapshot.jsonl", engine.snapshot());
  } else if (engine.snapshot() != before) {
    std::cerr << "error: offline run changed the graph\n";
    status = 1;
  }
  print_summary(records, engine.stats(), o.quiet);
  if (any_transport_error(records)) {
    std::cerr << "error: backend transport failures occurred; see records.jsonl\n";
    status = 1;
  }
  return status;
}

int query_command(const std::string& snapshot, const std::string& task_id, const std::string& input,
                  const std::string& context, const CommonOptions& o) {
  exg::RunConfig cfg = build_config(o, exg::Mode::Offline);
  exg::Engine engine(exg::make_embedder(cfg.embedder), load_graph(snapshot));
  const auto provisional = exg::make_provisional(
      task_id, input, context.empty() ? std::nullopt : std::optional<std::string>(context));
  const auto r = engine.query(provisional, cfg.loop);

  std::cout << "pool " << r.pool.candidates.size() << '\n';
  for (const auto& e : r.pool.candidates) {
    std::cout << "  " << e.case_id << " [" << exg::sources_to_string(e.sources) << "]\n";
  }
  std::cout << "ranked " << r.ranked.size() << '\n';
  for (const auto& c : r.ranked) {
    std::cout << "  " << c.rank << ' ' << c.case_id << " rho=" << c.relevance
              << " rho0=" << c.initial_relevance << '\n';
  }
  std::cout << "hints " << r.hints.size() << '\n';
  for (const auto& h : r.hints.hints) {
    std::cout << "  " << exg::to_string(h.kind) << ' ' << h.source_case_id << '\n';
  }
  std::cout << "prompt\n"
            << exg::assemble_prompt(cfg.loop.system_text, provisional.query_text, r.hints,
                                    cfg.loop.instruction_text);
  return 0;
}

int stats_command(const std::string& snapshot) {
  const auto g = load_graph(snapshot);
  const auto s = g.stats();
  std::cout << json{{"case_count", s.case_count},        {"golden_count", s.golden_count},
                    {"warning_count", s.warning_count},  {"anchor_count", s.anchor_count},
                    {"similar_to_count", s.similar_to_count}, {"fixed_by_count", s.fixed_by_count}}
                   .dump()
            << '\n';
  return 0;
}

int split_command(const std::string& tasks_path, double ratio, std::uint64_t seed,
                  const std::string& out) {
  const auto tasks = read_tasks(tasks_path);
  std::vector<json> lines;
  for (const auto& t : tasks) lines.push_back(t.raw);
  const auto [collect, test] = exg::split_collect_test<json>(lines, ratio, seed);
  const fs::path dir(out);
  fs::create_directories(dir);
  auto dump = [](const std::vector<json>& v) {
    std::string s;
    for (const auto& j : v) s += j.dump() + "\n";
    return s;
  };
  write_file(dir / "collect.jsonl", dump(collect));
  write_file(dir / "test.jsonl", dump(test));
  std::cout << "collect=" << collect.size() << " test=" << test.size() << '\n';
  return 0;
}

int report_command(const std::string& records_path, const std::string& out, const std::string& format) {
  std::istringstream in(read_file(records_path));
  std::vector<exg::RunRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      records.push_back(exg::run_record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw UsageError("bad record line: " + std::string(e.what()));
    }
  }
  const auto fmt = format == "jsonl" ? exg::ReportFormat::JsonLines : exg::ReportFormat::Csv;
  const std::string text = exg::export_report_string(exg::compute_metrics(records), fmt);
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  return 0;
}

int make_suite_command(std::size_t families, std::size_t per_family, std::uint64_t seed,
                       bool ablation_suite, const std::string& out) {
  const auto suite = ablation_suite ? exg::build_ablation_suite()
                                    : exg::build_synthetic_suite(families, per_family, seed);
  std::string text;
  for (const auto& t : suite.tasks) text += exg::to_json(t).dump() + "\n";
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  return 0;
}

void add_run_options(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--tasks", o.tasks, "Task file, one JSON object per line")->required();
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--ablation", o.ablation,
                  "full, or a comma list of no_memory,without_similar,without_fix,without_anchor");
  cmd->add_option("--agent", o.agent, "mock or http");
  cmd->add_option("--max-attempts", o.max_attempts, "Attempts per task");
  cmd->add_option("--hint-budget", o.hint_budget, "Hints per prompt");
  cmd->add_option("--set", o.overrides, "Config override section.key=value")->take_all();
  cmd->add_flag("--quiet", o.quiet, "Only print the summary");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experience-graph memory for task-solving agents"};
  app.require_subcommand(1);

  CommonOptions online;
  auto* run_online = app.add_subcommand("run-online", "Solve tasks while growing the graph");
  add_run_options(run_online, online);
  run_online->add_option("--snapshot", online.snapshot, "Starting snapshot");

  CommonOptions offline;
  auto* run_offline = app.add_subcommand("run-offline", "Solve tasks against a frozen snapshot");
  add_run_options(run_offline, offline);
  run_offline->add_option("--snapshot", offline.snapshot, "Snapshot to load")->required();

  CommonOptions query_opts;
  std::string q_snapshot, q_task, q_input, q_context;
  auto* query = app.add_subcommand("query", "Show the pool, ranking, hints and prompt for a task");
  query->add_option("--snapshot", q_snapshot)->required();
  query->add_option("--task-id", q_task)->required();
  query->add_option("--input", q_input)->required();
  query->add_option("--context", q_context);
  query->add_option("--config", query_opts.config);
  query->add_option("--ablation", query_opts.ablation);
  query->add_option("--hint-budget", query_opts.hint_budget);
  query->add_option("--set", query_opts.overrides)->take_all();

  std::string s_snapshot;
  auto* stats = app.add_subcommand("stats", "Print graph statistics of a snapshot");
  stats->add_option("--snapshot", s_snapshot)->required();

  std::string sp_tasks, sp_out = "split";
  double sp_ratio = 0.7;
  std::uint64_t sp_seed = 0;
  auto* split = app.add_subcommand("split", "Seeded collect/test split of a task file");
  split->add_option("--tasks", sp_tasks)->required();
  split->add_option("--ratio", sp_ratio, "Collect fraction")->check(CLI::Range(0.0, 1.0));
  split->add_option("--seed", sp_seed);
  split->add_option("--out", sp_out);

  std::string r_records, r_out, r_format = "csv";
  auto* report = app.add_subcommand("report", "Metrics report from a records log");
  report->add_option("--records", r_records)->required();
  report->add_option("--out", r_out, "Output file, stdout when omitted");
  report->add_option("--format", r_format)->check(CLI::IsMember({"csv", "jsonl"}));

  std::size_t m_families = 1, m_per_family = 5;
  std::uint64_t m_seed = 0;
  bool m_ablation = false;
  std::string m_out;
  auto* make_suite = app.add_subcommand("make-suite", "Write a synthetic task file for the mock agent");
  make_suite->add_option("--families", m_families);
  make_suite->add_option("--per-family", m_per_family);
  make_suite->add_option("--seed", m_seed);
  make_suite->add_flag("--ablation-suite", m_ablation);
  make_suite->add_option("--out", m_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run_online) return run_stream_command(online, exg::Mode::Online);
    if (*run_offline) return run_stream_command(offline, exg::Mode::Offline);
    if (*query) return query_command(q_snapshot, q_task, q_input, q_context, query_opts);
    if (*stats) return stats_command(s_snapshot);
    if (*split) return split_command(sp_tasks, sp_ratio, sp_seed, sp_out);
    if (*report) return report_command(r_records, r_out, r_format);
    if (*make_suite) return make_suite_command(m_families, m_per_family, m_seed, m_ablation, m_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
