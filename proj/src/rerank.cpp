#include "exg/rerank.hpp"

#include <algorithm>
#include <stdexcept>

namespace exg {

void RerankConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("rerank.alpha must lie in [0,1]");
}

double case_similarity(const EmbeddedCase& a, const EmbeddedCase& b, const RerankConfig& cfg) {
  const double prompt = cosine(a.prompt, b.prompt);
  double failure = 0.0;
  if (a.has_failure() && b.has_failure()) failure = cosine(*a.failure, *b.failure);
  return cfg.alpha * prompt + (1.0 - cfg.alpha) * failure;
}

std::vector<RankedCase> propagate_and_rank(const CandidatePool& pool, const ExperienceGraph& graph,
                                           const RerankConfig& cfg) {
  cfg.validate();
  struct Scored {
    RankedCase ranked;
    std::uint64_t seq;
  };
  std::vector<Scored> scored;
  scored.reserve(pool.candidates.size());

  for (const auto& entry : pool.candidates) {
    const Case* c = graph.find(entry.case_id);
    if (!c) throw GraphError("propagate_and_rank: candidate '" + entry.case_id + "' not in graph");
    const SeededCase* own = pool.seed(entry.case_id);
    const double rho0 = own ? own->initial_relevance : 0.0;
    double rho = rho0;
    if (cfg.propagate) {
      for (const auto& seed : pool.seeds) {
        if (seed.case_id == entry.case_id) continue;
        if (auto w = graph.similarity(seed.case_id, entry.case_id)) {
          rho = std::max(rho, seed.initial_relevance + *w);
        }
      }
    }
    scored.push_back({{entry.case_id, rho, rho0, 0}, c->created_seq});
  }

  std::sort(scored.begin(), scored.end(), [](const Scored& x, const Scored& y) {
    if (x.ranked.relevance != y.ranked.relevance) return x.ranked.relevance > y.ranked.relevance;
    if (x.ranked.initial_relevance != y.ranked.initial_relevance) {
      return x.ranked.initial_relevance > y.ranked.initial_relevance;
    }
    return x.seq < y.seq;
  });

  std::vector<RankedCase> out;
  out.reserve(scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i) {
    out.push_back(scored[i].ranked);
    out.back().rank = i + 1;
  }
  return out;
}

}  // namespace exg
