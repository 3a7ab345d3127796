#include "exg/hints.hpp"

#include <algorithm>
#include <unordered_set>

namespace exg {

const char* to_string(HintKind kind) {
  switch (kind) {
    case HintKind::FixedBy:
      return "fixed_by";
    case HintKind::Warning:
      return "warning";
    case HintKind::Golden:
      return "golden";
  }
  return "unknown";
}

const char* header_of(HintKind kind) {
  switch (kind) {
    case HintKind::FixedBy:
      return "[FIXED_BY]";
    case HintKind::Warning:
      return "[WARNING]";
    case HintKind::Golden:
      return "[GOLDEN]";
  }
  return "[UNKNOWN]";
}

std::size_t HintSet::count(HintKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(hints.begin(), hints.end(), [kind](const Hint& h) { return h.kind == kind; }));
}

std::string utf8_prefix(std::string_view text, std::size_t max_chars) {
  std::size_t i = 0;
  std::size_t chars = 0;
  while (i < text.size() && chars < max_chars) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) {
      len = 4;
    } else if (lead >= 0xE0) {
      len = 3;
    } else if (lead >= 0xC0) {
      len = 2;
    }
    i = std::min(text.size(), i + len);
    ++chars;
  }
  return std::string(text.substr(0, i));
}

namespace {

std::string failure_line(const Signature& s) {
  std::string line;
  if (s.failure_type) line = *s.failure_type;
  if (!s.error_messages.empty()) {
    if (!line.empty()) line += ": ";
    line += s.error_messages.front();
  }
  return line;
}

}  // namespace

std::string render_hint(const Hint& hint, const ExperienceGraph& graph) {
  const Case& c = graph.at(hint.source_case_id);
  std::string out = header_of(hint.kind);
  out += "\nTask: ";
  out += utf8_prefix(c.input, kTaskExcerptChars);

  if (hint.kind == HintKind::Golden) {
    out += "\nSolution: ";
    out += utf8_prefix(c.output, kOutputExcerptChars);
    return out;
  }

  const std::string failure = failure_line(c.signature);
  if (!failure.empty()) {
    out += "\nFailure: ";
    out += failure;
  }
  if (c.signature.corrective_feedback && !c.signature.corrective_feedback->empty()) {
    out += "\nReflection: ";
    out += *c.signature.corrective_feedback;
  }
  if (hint.kind == HintKind::FixedBy) {
    const Case* fix = hint.paired_case_id ? graph.find(*hint.paired_case_id)
                                          : graph.fixed_target(c.case_id);
    if (fix) {
      out += "\nFix: ";
      out += utf8_prefix(fix->output, kOutputExcerptChars);
    }
  }
  return out;
}

HintSet build_hints(std::span<const RankedCase> ranked, const ExperienceGraph& graph,
                    const HintOptions& options) {
  HintSet set;
  set.budget = options.budget;
  if (options.budget == 0) return set;
  const std::size_t fix_limit = options.fix_limit.value_or(options.budget);

  std::vector<const Case*> fix_warnings;
  if (fix_limit > 0) {
    for (const auto& r : ranked) {
      const Case& c = graph.at(r.case_id);
      if (is_warning(c) && graph.fixed_target(c.case_id)) {
        fix_warnings.push_back(&c);
        if (fix_warnings.size() >= fix_limit) break;
      }
    }
  }

  std::unordered_set<CaseId> selected;
  auto add = [&](const Case& c, HintKind kind, std::optional<CaseId> paired) {
    if (!selected.insert(c.case_id).second) return;
    set.hints.push_back({kind, c.case_id, {}, std::move(paired)});
  };
  auto full = [&] { return set.hints.size() >= options.budget; };

  auto finish = [&]() -> HintSet {
    for (auto& h : set.hints) h.text = render_hint(h, graph);
    return std::move(set);
  };

  for (const Case* w : fix_warnings) {
    add(*w, HintKind::FixedBy, graph.fixed_target(w->case_id)->case_id);
    if (full()) return finish();
  }
  if (options.include_counterparts) {
    for (const Case* w : fix_warnings) {
      if (const Case* g = graph.fixed_target(w->case_id)) add(*g, HintKind::Golden, w->case_id);
      if (full()) return finish();
    }
  }
  for (const auto& r : ranked) {
    const Case& c = graph.at(r.case_id);
    add(c, is_golden(c) ? HintKind::Golden : HintKind::Warning, std::nullopt);
    if (full()) break;
  }
  return finish();
}

std::string assemble_prompt(std::string_view system_text, std::string_view user_task_text,
                            const HintSet& hints, std::string_view instruction_text) {
  std::string out;
  out += "System:\n";
  out += system_text;
  out += "\n\nUser:\n";
  out += user_task_text;
  out += "\n\n";
  if (!hints.empty()) {
    out += kMemoryHintsDelimiter;
    out += '\n';
    for (const auto& h : hints.hints) {
      out += h.text;
      out += "\n\n";
    }
  }
  out += instruction_text;
  out += '\n';
  return out;
}

}  // namespace exg
