#include "exg/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace exg {

using nlohmann::json;

// --- metrics ---

MetricsReport compute_metrics(std::span<const RunRecord> records) {
  MetricsReport m;
  m.task_count = records.size();
  if (records.empty()) return m;

  std::size_t solved1 = 0;
  std::size_t solved2 = 0;
  double calls = 0.0;
  double retrieval_ms = 0.0;
  double inference_ms = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RunRecord& r = records[i];
    if (r.solved_at && *r.solved_at == 1) ++solved1;
    if (r.solved_at && *r.solved_at <= 2) ++solved2;
    calls += r.llm_calls();
    for (const auto& a : r.attempts) {
      retrieval_ms += a.retrieval_latency_ms;
      inference_ms += a.inference_latency_ms;
      m.total_input_tokens += a.input_tokens;
      m.total_output_tokens += a.output_tokens;
      m.tokens_estimated = m.tokens_estimated || a.tokens_estimated;
    }
    const auto seen = static_cast<double>(i + 1);
    m.learning_curve.push_back({i + 1, static_cast<double>(solved1) / seen,
                                static_cast<double>(solved2) / seen});
    m.graph_stats_timeline.push_back(r.graph_after);
  }
  const auto n = static_cast<double>(records.size());
  m.pass_at_1 = static_cast<double>(solved1) / n;
  m.pass_at_2 = static_cast<double>(solved2) / n;
  m.avg_llm_calls = calls / n;
  m.avg_retrieval_latency_ms = retrieval_ms / n;
  m.avg_inference_latency_ms = inference_ms / n;
  return m;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("report: bad number '" + s + "'");
  }
  return v;
}

std::size_t parse_size(const std::string& s) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("report: bad count '" + s + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

constexpr const char* kCsvMarker = "# exg-report";
constexpr const char* kCsvColumns =
    "task_index,cumulative_pass_at_1,cumulative_pass_at_2,case_count,golden_count,"
    "warning_count,anchor_count,similar_to_count,fixed_by_count";

void check_aligned(const MetricsReport& r) {
  if (r.learning_curve.size() != r.graph_stats_timeline.size()) {
    throw std::invalid_argument("report: learning curve and graph timeline differ in length");
  }
}

json stats_json(const GraphStats& s) {
  return json{{"case_count", s.case_count},           {"golden_count", s.golden_count},
              {"warning_count", s.warning_count},     {"anchor_count", s.anchor_count},
              {"similar_to_count", s.similar_to_count}, {"fixed_by_count", s.fixed_by_count}};
}

GraphStats stats_from_json(const json& j) {
  GraphStats s;
  s.case_count = j.at("case_count").get<std::size_t>();
  s.golden_count = j.at("golden_count").get<std::size_t>();
  s.warning_count = j.at("warning_count").get<std::size_t>();
  s.anchor_count = j.at("anchor_count").get<std::size_t>();
  s.similar_to_count = j.at("similar_to_count").get<std::size_t>();
  s.fixed_by_count = j.at("fixed_by_count").get<std::size_t>();
  return s;
}

void export_csv(const MetricsReport& r, std::ostream& out) {
  out << kCsvMarker << ",schema_version=" << MetricsReport::kSchemaVersion
      << ",task_count=" << r.task_count << ",pass_at_1=" << format_double(r.pass_at_1)
      << ",pass_at_2=" << format_double(r.pass_at_2)
      << ",avg_llm_calls=" << format_double(r.avg_llm_calls)
      << ",avg_retrieval_latency_ms=" << format_double(r.avg_retrieval_latency_ms)
      << ",avg_inference_latency_ms=" << format_double(r.avg_inference_latency_ms)
      << ",total_input_tokens=" << r.total_input_tokens
      << ",total_output_tokens=" << r.total_output_tokens
      << ",tokens_estimated=" << (r.tokens_estimated ? 1 : 0) << '\n';
  out << kCsvColumns << '\n';
  for (std::size_t i = 0; i < r.learning_curve.size(); ++i) {
    const auto& p = r.learning_curve[i];
    const auto& s = r.graph_stats_timeline[i];
    out << p.task_index << ',' << format_double(p.cumulative_pass_at_1) << ','
        << format_double(p.cumulative_pass_at_2) << ',' << s.case_count << ',' << s.golden_count
        << ',' << s.warning_count << ',' << s.anchor_count << ',' << s.similar_to_count << ','
        << s.fixed_by_count << '\n';
  }
}

MetricsReport parse_csv(std::istream& in) {
  std::string meta;
  std::string columns;
  if (!std::getline(in, meta) || !std::getline(in, columns)) {
    throw std::runtime_error("report: missing csv header lines");
  }
  const auto fields = split(meta, ',');
  if (fields.empty() || fields[0] != kCsvMarker) throw std::runtime_error("report: not an exg report");
  if (columns != kCsvColumns) throw std::runtime_error("report: unexpected csv columns");

  std::map<std::string, std::string> kv;
  for (std::size_t i = 1; i < fields.size(); ++i) {
    const auto eq = fields[i].find('=');
    if (eq == std::string::npos) throw std::runtime_error("report: bad metadata '" + fields[i] + "'");
    kv[fields[i].substr(0, eq)] = fields[i].substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error(std::string("report: missing metadata ") + key);
    return it->second;
  };
  if (parse_size(get("schema_version")) != static_cast<std::size_t>(MetricsReport::kSchemaVersion)) {
    throw std::runtime_error("report: unsupported schema version");
  }

  MetricsReport r;
  r.task_count = parse_size(get("task_count"));
  r.pass_at_1 = parse_double(get("pass_at_1"));
  r.pass_at_2 = parse_double(get("pass_at_2"));
  r.avg_llm_calls = parse_double(get("avg_llm_calls"));
  r.avg_retrieval_latency_ms = parse_double(get("avg_retrieval_latency_ms"));
  r.avg_inference_latency_ms = parse_double(get("avg_inference_latency_ms"));
  r.total_input_tokens = parse_size(get("total_input_tokens"));
  r.total_output_tokens = parse_size(get("total_output_tokens"));
  r.tokens_estimated = parse_size(get("tokens_estimated")) != 0;

  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 9) throw std::runtime_error("report: bad csv row '" + line + "'");
    r.learning_curve.push_back(
        {parse_size(cells[0]), parse_double(cells[1]), parse_double(cells[2])});
    r.graph_stats_timeline.push_back({parse_size(cells[3]), parse_size(cells[4]),
                                      parse_size(cells[5]), parse_size(cells[6]),
                                      parse_size(cells[7]), parse_size(cells[8])});
  }
  return r;
}

void export_jsonl(const MetricsReport& r, std::ostream& out) {
  json summary{{"kind", "summary"},
               {"schema_version", MetricsReport::kSchemaVersion},
               {"task_count", r.task_count},
               {"pass_at_1", r.pass_at_1},
               {"pass_at_2", r.pass_at_2},
               {"avg_llm_calls", r.avg_llm_calls},
               {"avg_retrieval_latency_ms", r.avg_retrieval_latency_ms},
               {"avg_inference_latency_ms", r.avg_inference_latency_ms},
               {"total_input_tokens", r.total_input_tokens},
               {"total_output_tokens", r.total_output_tokens},
               {"tokens_estimated", r.tokens_estimated}};
  out << summary.dump() << '\n';
  for (std::size_t i = 0; i < r.learning_curve.size(); ++i) {
    const auto& p = r.learning_curve[i];
    json row{{"kind", "curve"},
             {"task_index", p.task_index},
             {"cumulative_pass_at_1", p.cumulative_pass_at_1},
             {"cumulative_pass_at_2", p.cumulative_pass_at_2},
             {"graph", stats_json(r.graph_stats_timeline[i])}};
    out << row.dump() << '\n';
  }
}

MetricsReport parse_jsonl(std::istream& in) {
  MetricsReport r;
  bool have_summary = false;
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "summary") {
        if (have_summary) throw std::runtime_error("report: duplicate summary");
        if (j.at("schema_version").get<int>() != MetricsReport::kSchemaVersion) {
          throw std::runtime_error("report: unsupported schema version");
        }
        r.task_count = j.at("task_count").get<std::size_t>();
        r.pass_at_1 = j.at("pass_at_1").get<double>();
        r.pass_at_2 = j.at("pass_at_2").get<double>();
        r.avg_llm_calls = j.at("avg_llm_calls").get<double>();
        r.avg_retrieval_latency_ms = j.at("avg_retrieval_latency_ms").get<double>();
        r.avg_inference_latency_ms = j.at("avg_inference_latency_ms").get<double>();
        r.total_input_tokens = j.at("total_input_tokens").get<std::size_t>();
        r.total_output_tokens = j.at("total_output_tokens").get<std::size_t>();
        r.tokens_estimated = j.at("tokens_estimated").get<bool>();
        have_summary = true;
      } else if (kind == "curve") {
        if (!have_summary) throw std::runtime_error("report: curve row before summary");
        r.learning_curve.push_back({j.at("task_index").get<std::size_t>(),
                                    j.at("cumulative_pass_at_1").get<double>(),
                                    j.at("cumulative_pass_at_2").get<double>()});
        r.graph_stats_timeline.push_back(stats_from_json(j.at("graph")));
      } else {
        throw std::runtime_error("report: unknown record kind '" + kind + "'");
      }
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("report: ") + e.what());
  }
  if (!have_summary) throw std::runtime_error("report: missing summary record");
  return r;
}

}  // namespace

void export_report(const MetricsReport& report, std::ostream& sink, ReportFormat format) {
  check_aligned(report);
  if (format == ReportFormat::Csv) {
    export_csv(report, sink);
  } else {
    export_jsonl(report, sink);
  }
}

std::string export_report_string(const MetricsReport& report, ReportFormat format) {
  std::ostringstream out;
  export_report(report, out, format);
  return out.str();
}

MetricsReport parse_report(std::istream& source, ReportFormat format) {
  return format == ReportFormat::Csv ? parse_csv(source) : parse_jsonl(source);
}

MetricsReport parse_report_string(const std::string& text, ReportFormat format) {
  std::istringstream in(text);
  return parse_report(in, format);
}

json to_json(const RunRecord& record) {
  json attempts = json::array();
  for (const auto& a : record.attempts) {
    attempts.push_back(json{{"case_id", a.case_id},
                            {"reward", to_int(a.reward)},
                            {"llm_calls", a.llm_calls},
                            {"retrieval_latency_ms", a.retrieval_latency_ms},
                            {"inference_latency_ms", a.inference_latency_ms},
                            {"input_tokens", a.input_tokens},
                            {"output_tokens", a.output_tokens},
                            {"tokens_estimated", a.tokens_estimated},
                            {"pool_size", a.pool_size},
                            {"hint_count", a.hint_count},
                            {"fixed_by_hints", a.fixed_by_hints},
                            {"transport_error", a.transport_error}});
  }
  return json{{"task_id", record.task_id},
              {"solved_at", record.solved_at ? json(*record.solved_at) : json(nullptr)},
              {"attempts", std::move(attempts)},
              {"graph_after", stats_json(record.graph_after)}};
}

RunRecord run_record_from_json(const json& j) {
  RunRecord r;
  r.task_id = j.at("task_id").get<std::string>();
  if (!j.at("solved_at").is_null()) r.solved_at = j.at("solved_at").get<int>();
  for (const auto& a : j.at("attempts")) {
    AttemptRecord rec;
    rec.case_id = a.at("case_id").get<std::string>();
    const int reward = a.at("reward").get<int>();
    if (reward != 0 && reward != 1) throw std::invalid_argument("run record: reward must be 0 or 1");
    rec.reward = reward == 1 ? Reward::Pass : Reward::Fail;
    rec.llm_calls = a.at("llm_calls").get<int>();
    rec.retrieval_latency_ms = a.at("retrieval_latency_ms").get<double>();
    rec.inference_latency_ms = a.at("inference_latency_ms").get<double>();
    rec.input_tokens = a.at("input_tokens").get<std::size_t>();
    rec.output_tokens = a.at("output_tokens").get<std::size_t>();
    rec.tokens_estimated = a.at("tokens_estimated").get<bool>();
    rec.pool_size = a.at("pool_size").get<std::size_t>();
    rec.hint_count = a.at("hint_count").get<std::size_t>();
    rec.fixed_by_hints = a.at("fixed_by_hints").get<std::size_t>();
    rec.transport_error = a.at("transport_error").get<bool>();
    r.attempts.push_back(std::move(rec));
  }
  r.graph_after = stats_from_json(j.at("graph_after"));
  return r;
}

// --- ablations ---

AblationConfig AblationConfig::parse(const std::string& spec) {
  AblationConfig ab;
  if (spec.empty() || spec == "full") return ab;
  for (const auto& name : split(spec, ',')) {
    if (name == "no_memory") {
      ab.no_memory = true;
    } else if (name == "without_similar") {
      ab.without_similar = true;
    } else if (name == "without_fix") {
      ab.without_fix = true;
    } else if (name == "without_anchor") {
      ab.without_anchor = true;
    } else if (name != "full") {
      throw std::invalid_argument("unknown ablation '" + name + "'");
    }
  }
  return ab;
}

std::string AblationConfig::to_string() const {
  std::vector<std::string> names;
  if (no_memory) names.emplace_back("no_memory");
  if (without_similar) names.emplace_back("without_similar");
  if (without_fix) names.emplace_back("without_fix");
  if (without_anchor) names.emplace_back("without_anchor");
  if (names.empty()) return "full";
  std::string out = names.front();
  for (std::size_t i = 1; i < names.size(); ++i) out += "," + names[i];
  return out;
}

LoopConfig apply_ablation(LoopConfig cfg, const AblationConfig& ab) {
  if (ab.no_memory) {
    cfg.retrieval.enabled = false;
    cfg.store_cases = false;
    return cfg;
  }
  if (ab.without_similar) {
    cfg.create_similar_edges = false;
    cfg.retrieval.use_similarity = false;
    cfg.rerank.propagate = false;
  }
  if (ab.without_fix) {
    cfg.create_fixed_edges = false;
    cfg.retrieval.use_fix = false;
    cfg.fix_limit = 0;
  }
  if (ab.without_anchor) cfg.retrieval.use_anchor = false;
  return cfg;
}

// --- synthetic suites ---

const char* to_string(TaskRule rule) {
  switch (rule) {
    case TaskRule::AlwaysFail:
      return "always_fail";
    case TaskRule::AlwaysSucceed:
      return "always_succeed";
    case TaskRule::NeedsFamilyHint:
      return "needs_family_hint";
    case TaskRule::NeedsCrossTaskHint:
      return "needs_cross_task_hint";
    case TaskRule::NeedsFixHint:
      return "needs_fix_hint";
    case TaskRule::SelfRepair:
      return "self_repair";
  }
  return "unknown";
}

TaskRule task_rule_from_string(const std::string& name) {
  for (auto rule : {TaskRule::AlwaysFail, TaskRule::AlwaysSucceed, TaskRule::NeedsFamilyHint,
                    TaskRule::NeedsCrossTaskHint, TaskRule::NeedsFixHint, TaskRule::SelfRepair}) {
    if (name == to_string(rule)) return rule;
  }
  throw std::invalid_argument("unknown task rule '" + name + "'");
}

std::vector<TaskSpec> SyntheticSuite::specs() const {
  std::vector<TaskSpec> out;
  out.reserve(tasks.size());
  for (const auto& t : tasks) out.push_back(t.spec());
  return out;
}

namespace {

// Pseudo-words whose hash buckets do not collide, so cosines between suite
// inputs are exact token-overlap ratios.
class Vocabulary {
 public:
  explicit Vocabulary(int dimension) : embedder_(dimension) {}

  std::string next() {
    static constexpr std::string_view kConsonants = "bdfgklmnprstvz";
    static constexpr std::string_view kVowels = "aeiou";
    const std::size_t syllables = kConsonants.size() * kVowels.size();
    for (;;) {
      std::size_t i = counter_++;
      std::string word;
      for (int s = 0; s < 3; ++s) {
        const std::size_t syl = i % syllables;
        i /= syllables;
        word += kConsonants[syl / kVowels.size()];
        word += kVowels[syl % kVowels.size()];
      }
      if (words_.contains(word)) continue;
      const std::size_t bucket = embedder_.bucket_of(word);
      const bool buckets_left = buckets_.size() < static_cast<std::size_t>(embedder_.dimension());
      if (buckets_left && buckets_.contains(bucket)) continue;
      buckets_.insert(bucket);
      words_.insert(word);
      return word;
    }
  }

  std::vector<std::string> take(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(next());
    return out;
  }

 private:
  HashingEmbedder embedder_;
  std::unordered_set<std::size_t> buckets_;
  std::unordered_set<std::string> words_;
  std::size_t counter_ = 0;
};

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string capitalized(std::string word) {
  if (!word.empty() && word[0] >= 'a' && word[0] <= 'z') word[0] = static_cast<char>(word[0] - 32);
  return word;
}

struct Family {
  std::string id;
  std::vector<std::string> core;
  std::string failure_type;
  std::string error_message;
};

Family make_family(std::string id, Vocabulary& vocab, std::size_t core_words) {
  Family f;
  f.id = std::move(id);
  f.core = vocab.take(core_words);
  f.failure_type = capitalized(f.core.front()) + "Error";
  f.error_message = f.core.back() + " check failed";
  return f;
}

SyntheticTask make_task(const Family& f, TaskId id, std::vector<std::string> words, TaskRule rule) {
  return {std::move(id), join_words(words), f.id, f.failure_type, f.error_message, rule};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

SyntheticSuite build_synthetic_suite(std::size_t n_families, std::size_t tasks_per_family,
                                     std::uint64_t seed, int dimension) {
  Vocabulary vocab(dimension);
  std::vector<std::vector<SyntheticTask>> families;
  for (std::size_t fi = 0; fi < n_families; ++fi) {
    char fid[32];
    std::snprintf(fid, sizeof fid, "fam%02zu", fi + 1);
    const Family f = make_family(fid, vocab, 4);
    std::vector<SyntheticTask> members;
    for (std::size_t j = 0; j < tasks_per_family; ++j) {
      char tid[48];
      std::snprintf(tid, sizeof tid, "%s-t%02zu", fid, j + 1);
      members.push_back(make_task(f, tid, concat(f.core, {vocab.next()}),
                                  j == 0 ? TaskRule::AlwaysFail : TaskRule::NeedsFamilyHint));
    }
    families.push_back(std::move(members));
  }

  SyntheticSuite suite;
  std::vector<std::size_t> cursor(n_families, 0);
  std::vector<std::size_t> open;
  for (std::size_t fi = 0; fi < n_families; ++fi) {
    if (tasks_per_family > 0) open.push_back(fi);
  }
  std::mt19937_64 rng(seed);
  while (!open.empty()) {
    const std::size_t pick = static_cast<std::size_t>(rng() % open.size());
    const std::size_t fi = open[pick];
    suite.tasks.push_back(families[fi][cursor[fi]++]);
    if (cursor[fi] == tasks_per_family) open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return suite;
}

SyntheticSuite build_ablation_suite(int dimension) {
  Vocabulary vocab(dimension);
  const Family fix = make_family("fix", vocab, 4);
  const Family bridge = make_family("bridge", vocab, 4);
  const Family filler = make_family("filler", vocab, 1);
  const auto target_words = vocab.take(9);

  SyntheticSuite s;
  s.tasks.push_back(make_task(fix, "fix-1", concat(fix.core, {vocab.next()}), TaskRule::SelfRepair));
  s.tasks.push_back(make_task(fix, "fix-2", concat(fix.core, {vocab.next()}), TaskRule::NeedsFixHint));
  s.tasks.push_back(
      make_task(bridge, "bridge-source", concat(bridge.core, {vocab.next()}), TaskRule::AlwaysFail));
  s.tasks.push_back(
      make_task(bridge, "bridge-link", concat(bridge.core, target_words), TaskRule::AlwaysSucceed));
  for (std::size_t i = 0; i < target_words.size(); ++i) {
    s.tasks.push_back(make_task(filler, "filler-" + std::to_string(i + 1),
                                concat({target_words[i]}, vocab.take(2)), TaskRule::AlwaysSucceed));
  }
  s.tasks.push_back(
      make_task(bridge, "bridge-target", target_words, TaskRule::NeedsCrossTaskHint));
  return s;
}

std::string prompt_user_block(const std::string& prompt) {
  static constexpr std::string_view kUser = "\n\nUser:\n";
  const auto start = prompt.find(kUser);
  if (start == std::string::npos) return {};
  const auto begin = start + kUser.size();
  const auto end = prompt.find("\n\n", begin);
  return prompt.substr(begin, end == std::string::npos ? std::string::npos : end - begin);
}

std::vector<ParsedHint> parse_prompt_hints(const std::string& prompt) {
  std::vector<ParsedHint> out;
  const std::string delimiter = std::string(kMemoryHintsDelimiter) + "\n";
  const auto start = prompt.find(delimiter);
  if (start == std::string::npos) return out;

  std::istringstream in(prompt.substr(start + delimiter.size()));
  std::string line;
  std::optional<ParsedHint> current;
  while (std::getline(in, line)) {
    std::optional<HintKind> kind;
    for (auto k : {HintKind::FixedBy, HintKind::Warning, HintKind::Golden}) {
      if (line == header_of(k)) kind = k;
    }
    if (kind) {
      if (current) out.push_back(std::move(*current));
      current = ParsedHint{*kind, {}, {}};
    } else if (current && line.rfind("Task: ", 0) == 0) {
      current->task = line.substr(6);
    } else if (current && line.rfind("Failure: ", 0) == 0) {
      const std::string rest = line.substr(9);
      current->failure_type = rest.substr(0, rest.find(": "));
    }
  }
  if (current) out.push_back(std::move(*current));
  return out;
}

ScriptedAgent::ScriptedAgent(std::vector<SyntheticTask> tasks) {
  for (auto& t : tasks) {
    const std::string key = t.input;
    if (!by_input_.emplace(key, std::move(t)).second) {
      throw std::invalid_argument("scripted agent: duplicate task input");
    }
  }
}

bool ScriptedAgent::would_succeed(const SyntheticTask& task, const std::string& prompt) const {
  if (task.rule == TaskRule::AlwaysSucceed) return true;
  if (task.rule == TaskRule::AlwaysFail) return false;
  for (const auto& h : parse_prompt_hints(prompt)) {
    if (h.kind == HintKind::Golden || h.failure_type != task.failure_type) continue;
    const bool own = h.task == task.input;
    switch (task.rule) {
      case TaskRule::NeedsFamilyHint:
        return true;
      case TaskRule::NeedsCrossTaskHint:
        if (!own) return true;
        break;
      case TaskRule::NeedsFixHint:
        if (!own && h.kind == HintKind::FixedBy) return true;
        break;
      case TaskRule::SelfRepair:
        if (own) return true;
        break;
      default:
        break;
    }
  }
  return false;
}

AgentResponse ScriptedAgent::act(const std::string& prompt) {
  ++calls_;
  const auto it = by_input_.find(prompt_user_block(prompt));
  if (it == by_input_.end()) throw std::runtime_error("scripted agent: prompt names no known task");
  const SyntheticTask& task = it->second;
  AgentResponse r;
  r.output = (would_succeed(task, prompt) ? "PASS " : "FAIL ") + task.task_id;
  r.input_tokens = count_whitespace_tokens(prompt);
  r.output_tokens = count_whitespace_tokens(r.output);
  r.tokens_estimated = true;
  return r;
}

ScriptedEvaluator::ScriptedEvaluator(std::vector<SyntheticTask> tasks) {
  for (auto& t : tasks) {
    const TaskId key = t.task_id;
    if (!by_id_.emplace(key, std::move(t)).second) {
      throw std::invalid_argument("scripted evaluator: duplicate task id '" + key + "'");
    }
  }
}

Evaluation ScriptedEvaluator::evaluate(const TaskId& task_id, const std::string&,
                                       const std::string& output) {
  const auto it = by_id_.find(task_id);
  if (it == by_id_.end()) throw std::runtime_error("scripted evaluator: unknown task '" + task_id + "'");
  if (output == "PASS " + task_id) return {Reward::Pass, {}};
  Evaluation e;
  e.reward = Reward::Fail;
  e.signature.failure_type = it->second.failure_type;
  e.signature.error_messages.push_back(it->second.error_message);
  return e;
}

ExactMatchEvaluator::ExactMatchEvaluator(std::unordered_map<TaskId, std::string> expected)
    : expected_(std::move(expected)) {}

namespace {

std::string trimmed(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

Evaluation ExactMatchEvaluator::evaluate(const TaskId& task_id, const std::string&,
                                         const std::string& output) {
  const auto it = expected_.find(task_id);
  if (it == expected_.end()) throw std::runtime_error("no expected answer for task '" + task_id + "'");
  const std::string got = trimmed(output);
  if (got == trimmed(it->second)) return {Reward::Pass, {}};
  Evaluation e;
  e.signature.failure_type = "WrongAnswer";
  e.signature.error_messages.push_back("expected '" + trimmed(it->second) + "', got '" +
                                       utf8_prefix(got, 200) + "'");
  return e;
}

std::string ScriptedReflector::reflect(const Case& warning) {
  return "Guard against " + warning.signature.failure_type.value_or("the failure") +
         " before answering.";
}

json to_json(const SyntheticTask& task) {
  return json{{"task_id", task.task_id},
              {"input", task.input},
              {"script",
               {{"family", task.family_id},
                {"rule", to_string(task.rule)},
                {"failure_type", task.failure_type},
                {"error_message", task.error_message}}}};
}

SyntheticTask synthetic_task_from_json(const json& j) {
  SyntheticTask t;
  t.task_id = j.at("task_id").get<std::string>();
  t.input = j.at("input").get<std::string>();
  const json& s = j.at("script");
  t.family_id = s.at("family").get<std::string>();
  t.rule = task_rule_from_string(s.at("rule").get<std::string>());
  t.failure_type = s.at("failure_type").get<std::string>();
  t.error_message = s.at("error_message").get<std::string>();
  return t;
}

}  // namespace exg
