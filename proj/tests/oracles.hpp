#pragma once
// Brute-force reference implementations used as test oracles. They walk the
// graph only through its flat edge lists and recompute every ordering with a
// full sort, sharing no code with the library's retrieval, ranking and hint
// paths. Cosine itself is taken from exg::cosine so that exact ties between
// identical texts stay exact on both sides.

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "exg/embed.hpp"
#include "exg/graph.hpp"
#include "exg/hints.hpp"
#include "exg/rerank.hpp"
#include "exg/retrieve.hpp"

namespace oracle {

using exg::Case;
using exg::CaseId;
using exg::ExperienceGraph;

inline double edge_weight(const ExperienceGraph& g, const CaseId& a, const CaseId& b) {
  for (const auto& e : g.similar_edges()) {
    if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) return e.weight;
  }
  return -1.0;
}

inline std::optional<CaseId> fixed_of(const ExperienceGraph& g, const CaseId& id) {
  for (const auto& e : g.fixed_edges()) {
    if (e.source == id) return e.target;
  }
  return std::nullopt;
}

inline std::uint64_t seq_of(const ExperienceGraph& g, const CaseId& id) {
  for (const auto& c : g.cases()) {
    if (c.case_id == id) return c.created_seq;
  }
  return 0;
}

// Heaviest first, older first on equal weight.
inline std::vector<std::pair<CaseId, double>> neighbors(const ExperienceGraph& g, const CaseId& id,
                                                        std::size_t limit) {
  std::vector<std::pair<CaseId, double>> out;
  for (const auto& e : g.similar_edges()) {
    if (e.a == id) out.emplace_back(e.b, e.weight);
    if (e.b == id) out.emplace_back(e.a, e.weight);
  }
  std::sort(out.begin(), out.end(), [&](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return seq_of(g, x.first) < seq_of(g, y.first);
  });
  if (out.size() > limit) out.resize(limit);
  return out;
}

struct Seed {
  CaseId id;
  double rho0;
  exg::SeedOrigin origin;
};

struct Pool {
  std::vector<std::pair<CaseId, std::uint8_t>> candidates;
  std::vector<Seed> seeds;
};

inline Pool retrieve(const ExperienceGraph& g,
                     const std::unordered_map<CaseId, exg::Embedding>& embeddings,
                     const exg::Embedding& query, const std::string& task_id,
                     const exg::RetrievalConfig& cfg) {
  Pool pool;
  if (!cfg.enabled) return pool;

  std::vector<const Case*> task_cases;
  if (cfg.use_anchor) {
    for (const auto& c : g.cases()) {
      if (c.task_id == task_id) task_cases.push_back(&c);
    }
  }
  std::vector<const Case*> selected = task_cases;
  std::sort(selected.begin(), selected.end(), [](const Case* a, const Case* b) {
    const int ka = a->reward == exg::Reward::Fail ? 0 : 1;
    const int kb = b->reward == exg::Reward::Fail ? 0 : 1;
    if (ka != kb) return ka < kb;
    return a->created_seq > b->created_seq;
  });
  if (selected.size() > cfg.max_anchor_selected) selected.resize(cfg.max_anchor_selected);

  struct Scored {
    double score;
    std::uint64_t seq;
    CaseId id;
  };
  std::vector<Scored> all;
  for (const auto& c : g.cases()) {
    all.push_back({exg::cosine(query, embeddings.at(c.case_id)), c.created_seq, c.case_id});
  }
  std::sort(all.begin(), all.end(), [](const Scored& x, const Scored& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.seq < y.seq;
  });

  auto offer = [&](const CaseId& id, double rho0, exg::SeedOrigin origin) {
    rho0 = std::min(1.0, std::max(0.0, rho0));
    for (auto& s : pool.seeds) {
      if (s.id == id) {
        if (rho0 > s.rho0) {
          s.rho0 = rho0;
          s.origin = origin;
        }
        return;
      }
    }
    pool.seeds.push_back({id, rho0, origin});
  };
  for (std::size_t i = 0; i < all.size() && i < cfg.k_seeds; ++i) {
    offer(all[i].id, all[i].score, exg::SeedOrigin::QuerySeed);
  }
  if (cfg.use_similarity) {
    for (const Case* a : selected) {
      for (const auto& [id, w] : neighbors(g, a->case_id, cfg.fanout_bridge)) {
        offer(id, w, exg::SeedOrigin::BridgeSeed);
      }
    }
  }
  std::stable_sort(pool.seeds.begin(), pool.seeds.end(), [&](const Seed& x, const Seed& y) {
    if (x.rho0 != y.rho0) return x.rho0 > y.rho0;
    return seq_of(g, x.id) < seq_of(g, y.id);
  });

  std::vector<std::pair<CaseId, std::uint8_t>> ordered;
  for (const Case* c : task_cases) ordered.emplace_back(c->case_id, exg::kSourceTask);
  std::vector<CaseId> sim;
  for (const auto& s : pool.seeds) {
    sim.push_back(s.id);
    if (cfg.use_similarity) {
      for (const auto& [id, w] : neighbors(g, s.id, cfg.fanout_sim)) sim.push_back(id);
    }
  }
  for (const auto& id : sim) ordered.emplace_back(id, exg::kSourceSim);
  if (cfg.use_fix) {
    for (const auto& id : sim) {
      if (auto t = fixed_of(g, id)) ordered.emplace_back(*t, exg::kSourceFix);
    }
  }

  for (const auto& [id, src] : ordered) {
    bool merged = false;
    for (auto& c : pool.candidates) {
      if (c.first == id) {
        c.second |= src;
        merged = true;
      }
    }
    if (!merged) pool.candidates.emplace_back(id, src);
  }
  if (pool.candidates.size() > cfg.pool_cap) pool.candidates.resize(cfg.pool_cap);
  return pool;
}

struct Ranked {
  CaseId id;
  double rho;
  double rho0;
};

inline std::vector<Ranked> rerank(const exg::CandidatePool& pool, const ExperienceGraph& g,
                                  bool propagate) {
  std::vector<Ranked> out;
  for (const auto& entry : pool.candidates) {
    double rho0 = 0.0;
    for (const auto& s : pool.seeds) {
      if (s.case_id == entry.case_id) rho0 = s.initial_relevance;
    }
    double rho = rho0;
    if (propagate) {
      for (const auto& s : pool.seeds) {
        if (s.case_id == entry.case_id) continue;
        const double w = edge_weight(g, s.case_id, entry.case_id);
        if (w >= 0.0 && s.initial_relevance + w > rho) rho = s.initial_relevance + w;
      }
    }
    out.push_back({entry.case_id, rho, rho0});
  }
  std::sort(out.begin(), out.end(), [&](const Ranked& x, const Ranked& y) {
    if (x.rho != y.rho) return x.rho > y.rho;
    if (x.rho0 != y.rho0) return x.rho0 > y.rho0;
    return seq_of(g, x.id) < seq_of(g, y.id);
  });
  return out;
}

struct HintRef {
  exg::HintKind kind;
  CaseId source;
  std::optional<CaseId> paired;

  bool operator==(const HintRef&) const = default;
};

// Hint construction written out step by step.
inline std::vector<HintRef> hints(const std::vector<CaseId>& ranked, const ExperienceGraph& g,
                                  std::size_t budget, std::optional<std::size_t> fix_limit,
                                  bool counterparts) {
  std::vector<HintRef> selected;
  if (budget == 0) return selected;
  const std::size_t limit = fix_limit ? *fix_limit : budget;

  // Step 1: warnings carrying a fix, in ranked order.
  std::vector<CaseId> fix_warnings;
  for (const auto& id : ranked) {
    if (fix_warnings.size() >= limit) break;
    if (g.at(id).reward == exg::Reward::Fail && fixed_of(g, id)) fix_warnings.push_back(id);
  }

  auto in_selected = [&](const CaseId& id) {
    for (const auto& h : selected) {
      if (h.source == id) return true;
    }
    return false;
  };

  // Step 2: fixed-by hints.
  for (const auto& w : fix_warnings) {
    if (selected.size() == budget) return selected;
    if (!in_selected(w)) selected.push_back({exg::HintKind::FixedBy, w, fixed_of(g, w)});
  }
  // Step 3: golden counterparts.
  if (counterparts) {
    for (const auto& w : fix_warnings) {
      if (selected.size() == budget) return selected;
      const CaseId target = *fixed_of(g, w);
      if (!in_selected(target)) selected.push_back({exg::HintKind::Golden, target, w});
    }
  }
  // Step 4: ranked fill.
  for (const auto& id : ranked) {
    if (selected.size() == budget) return selected;
    if (in_selected(id)) continue;
    const bool golden = g.at(id).reward == exg::Reward::Pass;
    selected.push_back({golden ? exg::HintKind::Golden : exg::HintKind::Warning, id, std::nullopt});
  }
  return selected;
}

// Random graph over a small vocabulary, so texts repeat and scores tie.
struct World {
  ExperienceGraph graph;
  exg::HashingEmbedder embedder{64};
  exg::VectorIndex index;
  std::unordered_map<CaseId, exg::Embedding> embeddings;
  std::vector<std::string> tasks;
};

inline std::string random_text(std::mt19937_64& rng) {
  static const char* kWords[] = {"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"};
  const std::size_t n = 1 + rng() % 4;
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (!s.empty()) s += ' ';
    s += kWords[rng() % 8];
  }
  return s;
}

inline World random_world(std::uint64_t seed, std::size_t n_cases, std::size_t n_tasks) {
  World w;
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < n_tasks; ++t) w.tasks.push_back("t" + std::to_string(t));
  std::map<std::string, int> attempts;
  std::map<std::string, std::vector<CaseId>> open_warnings;

  for (std::size_t i = 0; i < n_cases; ++i) {
    const std::string task = w.tasks[rng() % n_tasks];
    const int k = ++attempts[task];
    Case c;
    c.case_id = exg::case_id_for(task, k);
    c.task_id = task;
    c.attempt_index = k;
    c.input = random_text(rng);
    c.output = "out " + std::to_string(i);
    c.reward = rng() % 2 ? exg::Reward::Pass : exg::Reward::Fail;
    if (c.reward == exg::Reward::Fail) {
      c.signature.failure_type = "E" + std::to_string(rng() % 3);
      c.signature.error_messages.push_back(random_text(rng));
    }

    std::vector<exg::SimilarLink> links;
    const std::size_t n_links = w.graph.size() == 0 ? 0 : rng() % 4;
    for (std::size_t l = 0; l < n_links; ++l) {
      const CaseId& target = w.graph.cases()[rng() % w.graph.size()].case_id;
      const bool dup = std::any_of(links.begin(), links.end(),
                                   [&](const exg::SimilarLink& x) { return x.target == target; });
      if (!dup) links.push_back({target, static_cast<double>(1 + rng() % 10) / 10.0});
    }
    const bool golden = c.reward == exg::Reward::Pass;
    const CaseId id = w.graph.insert_case(c, links);
    w.embeddings.emplace(id, w.embedder.embed(c.input));
    w.index.add(id, w.graph.at(id).created_seq, w.embeddings.at(id));

    auto& open = open_warnings[task];
    if (golden) {
      if (!open.empty() && rng() % 3 != 0) {
        w.graph.add_fixed_by(open.back(), id);
        open.pop_back();
      }
    } else {
      open.push_back(id);
    }
  }
  return w;
}

}  // namespace oracle
