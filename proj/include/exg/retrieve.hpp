#pragma once
// Candidate-pool construction: task-anchor cases, query and bridge seeds,
// one-hop similarity expansion, corrective traces, dedup and cap.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "exg/core.hpp"
#include "exg/embed.hpp"
#include "exg/graph.hpp"

namespace exg {

struct RetrievalConfig {
  std::size_t k_seeds = 10;
  std::size_t fanout_sim = 5;
  std::size_t fanout_bridge = 5;
  std::size_t max_anchor_selected = 1;
  std::size_t pool_cap = 30;

  // Ablation switches.
  bool enabled = true;         // false: always an empty pool
  bool use_anchor = true;      // task-local cases and bridge seeding
  bool use_similarity = true;  // bridge seeds and one-hop expansion
  bool use_fix = true;         // fixed_by destinations

  // Throws std::invalid_argument when pool_cap is 0.
  void validate() const;
};

enum class SeedOrigin : std::uint8_t { QuerySeed, BridgeSeed };

const char* to_string(SeedOrigin origin);

struct SeededCase {
  CaseId case_id;
  double initial_relevance = 0.0;  // in [0,1]
  SeedOrigin origin = SeedOrigin::QuerySeed;

  bool operator==(const SeededCase&) const = default;
};

enum Source : std::uint8_t { kSourceTask = 1, kSourceSim = 2, kSourceFix = 4 };

struct PoolEntry {
  CaseId case_id;
  std::uint8_t sources = 0;

  bool has(Source s) const { return (sources & s) != 0; }
  bool operator==(const PoolEntry&) const = default;
};

std::string sources_to_string(std::uint8_t sources);

struct CandidatePool {
  std::vector<PoolEntry> candidates;  // deduplicated, capped, source order
  std::vector<SeededCase> seeds;      // by initial relevance, descending

  bool contains(const CaseId& id) const;
  const SeededCase* seed(const CaseId& id) const;
  std::vector<CaseId> ids() const;
};

// Warning cases before golden ones, most recent first within a class.
std::vector<const Case*> select_anchor_seeds(std::span<const Case* const> anchor_cases,
                                             std::size_t max_n);

CandidatePool retrieve(const ExperienceGraph& graph, const VectorIndex& index,
                       const Embedding& query, const TaskId& task_id,
                       const RetrievalConfig& cfg);

CandidatePool retrieve(const ExperienceGraph& graph, const VectorIndex& index,
                       const Embedder& embedder, const ProvisionalCase& provisional,
                       const RetrievalConfig& cfg);

}  // namespace exg
