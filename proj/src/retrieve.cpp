#include "exg/retrieve.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace exg {

void RetrievalConfig::validate() const {
  if (pool_cap < 1) throw std::invalid_argument("retrieval.pool_cap must be >= 1");
}

const char* to_string(SeedOrigin origin) {
  return origin == SeedOrigin::QuerySeed ? "query" : "bridge";
}

std::string sources_to_string(std::uint8_t sources) {
  std::string out;
  auto add = [&](Source s, const char* name) {
    if (!(sources & s)) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(kSourceTask, "task");
  add(kSourceSim, "sim");
  add(kSourceFix, "fix");
  return out;
}

bool CandidatePool::contains(const CaseId& id) const {
  return std::any_of(candidates.begin(), candidates.end(),
                     [&](const PoolEntry& e) { return e.case_id == id; });
}

const SeededCase* CandidatePool::seed(const CaseId& id) const {
  for (const auto& s : seeds) {
    if (s.case_id == id) return &s;
  }
  return nullptr;
}

std::vector<CaseId> CandidatePool::ids() const {
  std::vector<CaseId> out;
  out.reserve(candidates.size());
  for (const auto& e : candidates) out.push_back(e.case_id);
  return out;
}

std::vector<const Case*> select_anchor_seeds(std::span<const Case* const> anchor_cases,
                                             std::size_t max_n) {
  std::vector<const Case*> ordered(anchor_cases.begin(), anchor_cases.end());
  std::sort(ordered.begin(), ordered.end(), [](const Case* a, const Case* b) {
    if (is_warning(*a) != is_warning(*b)) return is_warning(*a);
    return a->created_seq > b->created_seq;
  });
  if (ordered.size() > max_n) ordered.resize(max_n);
  return ordered;
}

namespace {

// Insertion-ordered dedup of candidates with merged source tags.
class PoolBuilder {
 public:
  void add(const CaseId& id, Source s) {
    auto [it, inserted] = slot_.try_emplace(id, entries_.size());
    if (inserted) {
      entries_.push_back({id, static_cast<std::uint8_t>(s)});
    } else {
      entries_[it->second].sources |= s;
    }
  }

  std::vector<PoolEntry> take(std::size_t cap) {
    if (entries_.size() > cap) entries_.resize(cap);
    return std::move(entries_);
  }

 private:
  std::vector<PoolEntry> entries_;
  std::unordered_map<CaseId, std::size_t> slot_;
};

}  // namespace

CandidatePool retrieve(const ExperienceGraph& graph, const VectorIndex& index,
                       const Embedding& query, const TaskId& task_id,
                       const RetrievalConfig& cfg) {
  cfg.validate();
  if (index.size() != graph.size()) {
    throw GraphError("retrieve: vector index (" + std::to_string(index.size()) +
                     " entries) does not mirror the graph (" + std::to_string(graph.size()) +
                     " cases)");
  }
  CandidatePool pool;
  if (!cfg.enabled) return pool;

  std::vector<const Case*> task_cases;
  std::vector<const Case*> anchor_seeds;
  if (cfg.use_anchor) {
    task_cases = graph.anchor_cases(task_id);
    anchor_seeds = select_anchor_seeds(task_cases, cfg.max_anchor_selected);
  }

  // Seeds keyed by id; duplicates keep the larger initial relevance.
  std::unordered_map<CaseId, std::size_t> seed_slot;
  auto offer_seed = [&](const CaseId& id, double rho0, SeedOrigin origin) {
    rho0 = std::clamp(rho0, 0.0, 1.0);
    auto [it, inserted] = seed_slot.try_emplace(id, pool.seeds.size());
    if (inserted) {
      pool.seeds.push_back({id, rho0, origin});
    } else if (rho0 > pool.seeds[it->second].initial_relevance) {
      pool.seeds[it->second].initial_relevance = rho0;
      pool.seeds[it->second].origin = origin;
    }
  };

  for (const auto& hit : index.top_k(query, cfg.k_seeds)) {
    if (!graph.contains(hit.case_id)) {
      throw GraphError("retrieve: index entry '" + hit.case_id + "' missing from graph");
    }
    offer_seed(hit.case_id, hit.score, SeedOrigin::QuerySeed);
  }
  if (cfg.use_similarity) {
    for (const Case* a : anchor_seeds) {
      for (const auto& n : graph.similar_neighbors(a->case_id, cfg.fanout_bridge)) {
        offer_seed(n.node->case_id, n.weight, SeedOrigin::BridgeSeed);
      }
    }
  }

  std::sort(pool.seeds.begin(), pool.seeds.end(), [&](const SeededCase& x, const SeededCase& y) {
    if (x.initial_relevance != y.initial_relevance) {
      return x.initial_relevance > y.initial_relevance;
    }
    return graph.at(x.case_id).created_seq < graph.at(y.case_id).created_seq;
  });

  PoolBuilder builder;
  for (const Case* c : task_cases) builder.add(c->case_id, kSourceTask);

  std::vector<CaseId> sim_cases;
  for (const auto& s : pool.seeds) {
    sim_cases.push_back(s.case_id);
    if (!cfg.use_similarity) continue;
    for (const auto& n : graph.similar_neighbors(s.case_id, cfg.fanout_sim)) {
      sim_cases.push_back(n.node->case_id);
    }
  }
  for (const auto& id : sim_cases) builder.add(id, kSourceSim);

  if (cfg.use_fix) {
    for (const auto& id : sim_cases) {
      if (const Case* target = graph.fixed_target(id)) builder.add(target->case_id, kSourceFix);
    }
  }

  pool.candidates = builder.take(cfg.pool_cap);
  return pool;
}

CandidatePool retrieve(const ExperienceGraph& graph, const VectorIndex& index,
                       const Embedder& embedder, const ProvisionalCase& provisional,
                       const RetrievalConfig& cfg) {
  if (!cfg.enabled) {
    cfg.validate();
    return {};
  }
  return retrieve(graph, index, embedder.embed(provisional.query_text), provisional.task_id, cfg);
}

}  // namespace exg
