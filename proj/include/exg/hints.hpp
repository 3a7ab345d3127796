#pragma once
// Budgeted hint selection from ranked cases and the structured prompt layout.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exg/graph.hpp"
#include "exg/rerank.hpp"

namespace exg {

inline constexpr std::string_view kMemoryHintsDelimiter = "=== MEMORY HINTS (via EXG) ===";

inline constexpr std::size_t kTaskExcerptChars = 400;
inline constexpr std::size_t kOutputExcerptChars = 600;

enum class HintKind : std::uint8_t { FixedBy, Warning, Golden };

const char* to_string(HintKind kind);
// "[FIXED_BY]", "[WARNING]" or "[GOLDEN]".
const char* header_of(HintKind kind);

struct Hint {
  HintKind kind = HintKind::Golden;
  CaseId source_case_id;
  std::string text;
  // FixedBy: the golden case that repaired the source. Counterpart golden
  // hints point back at the warning they repaired.
  std::optional<CaseId> paired_case_id;

  bool operator==(const Hint&) const = default;
};

struct HintSet {
  std::vector<Hint> hints;
  std::size_t budget = 5;

  std::size_t size() const { return hints.size(); }
  bool empty() const { return hints.empty(); }
  std::size_t count(HintKind kind) const;
};

struct HintOptions {
  std::size_t budget = 5;
  bool include_counterparts = true;
  std::optional<std::size_t> fix_limit;  // defaults to budget
};

// Fix-bearing warnings first (up to fix_limit), then their golden
// counterparts, then the ranked order with deduplication, stopping at the
// budget.
HintSet build_hints(std::span<const RankedCase> ranked, const ExperienceGraph& graph,
                    const HintOptions& options = {});

std::string render_hint(const Hint& hint, const ExperienceGraph& graph);

// System block, user block, the memory-hints section (omitted when there are
// no hints) and the closing instruction.
std::string assemble_prompt(std::string_view system_text, std::string_view user_task_text,
                            const HintSet& hints, std::string_view instruction_text);

// First `max_chars` UTF-8 code points of `text`.
std::string utf8_prefix(std::string_view text, std::size_t max_chars);

}  // namespace exg
