#pragma once
// Failure-aware case similarity and one-hop relevance propagation. Nothing in
// here mutates the graph.

#include <cstddef>
#include <vector>

#include "exg/embed.hpp"
#include "exg/graph.hpp"
#include "exg/retrieve.hpp"

namespace exg {

struct RerankConfig {
  double alpha = 0.8;     // weight of prompt similarity vs failure similarity
  bool propagate = true;  // off when similarity edges are ablated

  // Throws std::invalid_argument unless 0 <= alpha <= 1.
  void validate() const;
};

struct RankedCase {
  CaseId case_id;
  double relevance = 0.0;          // rho, may exceed 1
  double initial_relevance = 0.0;  // rho0, 0 for non-seeds
  std::size_t rank = 0;            // 1-based

  bool operator==(const RankedCase&) const = default;
};

// s = alpha * cos(prompt) + (1 - alpha) * h(a) h(b) cos(failure)
double case_similarity(const EmbeddedCase& a, const EmbeddedCase& b, const RerankConfig& cfg);

// rho(c) = max(rho0(c), max over adjacent seeds u of rho0(u) + w(u, c)),
// sorted by rho, then rho0, then older first.
std::vector<RankedCase> propagate_and_rank(const CandidatePool& pool, const ExperienceGraph& graph,
                                           const RerankConfig& cfg = {});

}  // namespace exg
