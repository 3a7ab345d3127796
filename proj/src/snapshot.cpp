// Line-delimited snapshot persistence for ExperienceGraph.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>

#include <json.hpp>

#include "exg/graph.hpp"

namespace exg {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

int significant_digits(std::string_view repr) {
  int digits = 0;
  bool leading = true;
  for (char ch : repr) {
    if (ch == 'e' || ch == 'E') break;
    if (ch < '0' || ch > '9') continue;
    if (leading && ch == '0') continue;
    leading = false;
    ++digits;
  }
  return digits;
}

json signature_to_json(const Signature& s) {
  json j;
  j["error_messages"] = s.error_messages;
  j["failure_type"] = s.failure_type ? json(*s.failure_type) : json(nullptr);
  j["corrective_feedback"] = s.corrective_feedback ? json(*s.corrective_feedback) : json(nullptr);
  j["raw_excerpt"] = s.raw_excerpt ? json(*s.raw_excerpt) : json(nullptr);
  return j;
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<std::string>();
}

Signature signature_from_json(const json& j) {
  Signature s;
  s.error_messages = j.at("error_messages").get<std::vector<std::string>>();
  s.failure_type = optional_string(j, "failure_type");
  s.corrective_feedback = optional_string(j, "corrective_feedback");
  s.raw_excerpt = optional_string(j, "raw_excerpt");
  return s;
}

json case_to_json(const Case& c) {
  return json{{"kind", "case"},
              {"case_id", c.case_id},
              {"task_id", c.task_id},
              {"input", c.input},
              {"output", c.output},
              {"reward", to_int(c.reward)},
              {"attempt_index", c.attempt_index},
              {"created_seq", c.created_seq},
              {"signature", signature_to_json(c.signature)}};
}

Case case_from_json(const json& j) {
  Case c;
  c.case_id = j.at("case_id").get<std::string>();
  c.task_id = j.at("task_id").get<std::string>();
  c.input = j.at("input").get<std::string>();
  c.output = j.at("output").get<std::string>();
  const int reward = j.at("reward").get<int>();
  if (reward != 0 && reward != 1) throw SnapshotError("case '" + c.case_id + "': reward not in {0,1}");
  c.reward = reward == 1 ? Reward::Pass : Reward::Fail;
  c.attempt_index = j.at("attempt_index").get<int>();
  c.created_seq = j.at("created_seq").get<std::uint64_t>();
  c.signature = signature_from_json(j.at("signature"));
  return c;
}

}  // namespace

std::string format_weight(double w) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, w);
  std::string shortest(buf, res.ptr);
  if (significant_digits(shortest) >= 6) return shortest;
  res = std::to_chars(buf, buf + sizeof buf, w, std::chars_format::scientific, 5);
  return std::string(buf, res.ptr);
}

void ExperienceGraph::save_snapshot(std::ostream& out) const {
  out << json{{"kind", "meta"},
              {"format_version", kFormatVersion},
              {"seq_counter", seq_counter_},
              {"frozen", frozen_}}
             .dump()
      << '\n';
  for (const auto& c : cases_) out << case_to_json(c).dump() << '\n';
  for (const auto& [task, slot] : anchors_) {
    out << json{{"kind", "anchor"}, {"anchor_id", slot.anchor_id}, {"task_id", task}}.dump()
        << '\n';
  }
  for (const auto& c : cases_) {
    out << json{{"kind", "contain"},
                {"anchor_id", anchors_.at(c.task_id).anchor_id},
                {"case_id", c.case_id}}
               .dump()
        << '\n';
  }
  for (const auto& e : similar_edges()) {
    // Written by hand so the weight keeps its fixed significant-digit layout.
    out << R"({"a":)" << json(e.a).dump() << R"(,"b":)" << json(e.b).dump()
        << R"(,"kind":"similar","weight":)" << format_weight(e.weight) << "}\n";
  }
  for (const auto& e : fixed_edges()) {
    out << json{{"kind", "fixed"}, {"source", e.source}, {"target", e.target}}.dump() << '\n';
  }
}

ExperienceGraph ExperienceGraph::load_snapshot(std::istream& in) {
  std::vector<json> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw SnapshotError("line " + std::to_string(line_no) + ": malformed record: " + e.what());
    }
  }
  if (records.empty()) throw SnapshotError("snapshot is empty (missing meta record)");

  try {
    const json& meta = records.front();
    if (!meta.is_object() || meta.value("kind", "") != "meta") {
      throw SnapshotError("first record must be meta");
    }
    const int version = meta.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw SnapshotError("format_version mismatch: expected " + std::to_string(kFormatVersion) +
                          ", got " + std::to_string(version));
    }

    std::vector<Case> cases;
    std::map<TaskId, std::string> anchor_records;
    std::set<std::string> anchor_ids;
    std::vector<std::pair<std::string, CaseId>> contains;
    std::vector<SimilarEdge> similars;
    std::vector<FixedEdge> fixeds;

    for (std::size_t i = 1; i < records.size(); ++i) {
      const json& r = records[i];
      const std::string kind = r.at("kind").get<std::string>();
      if (kind == "case") {
        cases.push_back(case_from_json(r));
      } else if (kind == "anchor") {
        auto task = r.at("task_id").get<std::string>();
        auto id = r.at("anchor_id").get<std::string>();
        if (!anchor_records.emplace(task, id).second) {
          throw SnapshotError("task '" + task + "' has more than one anchor");
        }
        if (!anchor_ids.insert(id).second) throw SnapshotError("duplicate anchor id '" + id + "'");
      } else if (kind == "contain") {
        contains.emplace_back(r.at("anchor_id").get<std::string>(), r.at("case_id").get<std::string>());
      } else if (kind == "similar") {
        similars.push_back(
            {r.at("a").get<std::string>(), r.at("b").get<std::string>(), r.at("weight").get<double>()});
      } else if (kind == "fixed") {
        fixeds.push_back({r.at("source").get<std::string>(), r.at("target").get<std::string>()});
      } else if (kind == "meta") {
        throw SnapshotError("meta record repeated");
      } else {
        throw SnapshotError("unknown record kind '" + kind + "'");
      }
    }

    ExperienceGraph g;
    g.seq_counter_ = meta.at("seq_counter").get<std::uint64_t>();

    std::sort(cases.begin(), cases.end(),
              [](const Case& a, const Case& b) { return a.created_seq < b.created_seq; });
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const Case& c = cases[i];
      if (c.created_seq == 0 || c.created_seq > g.seq_counter_) {
        throw SnapshotError("case '" + c.case_id + "' has created_seq outside [1, seq_counter]");
      }
      if (i > 0 && cases[i - 1].created_seq == c.created_seq) {
        throw SnapshotError("created_seq " + std::to_string(c.created_seq) + " is not unique");
      }
      auto anchor = anchor_records.find(c.task_id);
      if (anchor == anchor_records.end()) {
        throw SnapshotError("task '" + c.task_id + "' has no anchor record");
      }
      g.anchors_[c.task_id].anchor_id = anchor->second;
    }
    for (auto& c : cases) {
      try {
        g.validate_case(c);
      } catch (const SnapshotError&) {
        throw;
      } catch (const GraphError& e) {
        throw SnapshotError(e.what());
      }
      g.store_case(std::move(c));
    }
    if (g.anchors_.size() != anchor_records.size()) {
      throw SnapshotError("anchor record without any contained case");
    }

    std::set<CaseId> contained;
    for (const auto& [anchor_id, case_id] : contains) {
      const Case* c = g.find(case_id);
      if (!c) throw SnapshotError("contain edge to unknown case '" + case_id + "'");
      if (g.anchors_.at(c->task_id).anchor_id != anchor_id) {
        throw SnapshotError("case '" + case_id + "' contained by foreign anchor '" + anchor_id + "'");
      }
      if (!contained.insert(case_id).second) {
        throw SnapshotError("case '" + case_id + "' has more than one contain edge");
      }
    }
    if (contained.size() != g.cases_.size()) {
      throw SnapshotError("some case has no incoming contain edge");
    }

    std::set<std::pair<CaseId, CaseId>> seen;
    for (const auto& e : similars) {
      if (!(e.a < e.b)) {
        throw SnapshotError("similar edge '" + e.a + "' - '" + e.b +
                            "' is a self-loop or not in canonical order");
      }
      if (!std::isfinite(e.weight) || e.weight < 0.0 || e.weight > 1.0) {
        throw SnapshotError("similar edge '" + e.a + "' - '" + e.b + "' has weight outside [0,1]");
      }
      if (!g.contains(e.a) || !g.contains(e.b)) {
        throw SnapshotError("similar edge references unknown case");
      }
      if (!seen.emplace(e.a, e.b).second) {
        throw SnapshotError("similar edge '" + e.a + "' - '" + e.b + "' stored twice");
      }
      g.link(g.node_of(e.a), g.node_of(e.b), e.weight);
    }

    for (const auto& e : fixeds) {
      try {
        g.add_fixed_by(e.source, e.target);
      } catch (const GraphError& err) {
        throw SnapshotError(std::string("invalid fixed edge: ") + err.what());
      }
    }

    g.frozen_ = meta.at("frozen").get<bool>();
    return g;
  } catch (const json::exception& e) {
    throw SnapshotError(std::string("malformed record: ") + e.what());
  }
}

}  // namespace exg
