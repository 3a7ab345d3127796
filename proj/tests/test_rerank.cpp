#include <gtest/gtest.h>

#include "exg/rerank.hpp"
#include "oracles.hpp"

using namespace exg;

namespace {

EmbeddedCase embedded(Eigen::VectorXd prompt, std::optional<Eigen::VectorXd> failure = std::nullopt) {
  EmbeddedCase e;
  e.prompt = Embedding(std::move(prompt));
  if (failure) e.failure = Embedding(std::move(*failure));
  return e;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Case plain(const TaskId& task, Reward r = Reward::Pass) {
  Case c;
  c.case_id = case_id_for(task, 1);
  c.task_id = task;
  c.reward = r;
  return c;
}

}  // namespace

TEST(Rerank, CaseSimilarityValues) {
  const RerankConfig cfg;
  // Identical prompts and identical failures.
  auto a = embedded(vec({1, 0}), vec({0, 1}));
  EXPECT_NEAR(case_similarity(a, a, cfg), 1.0, 1e-12);
  // Prompt cosine 0.5, only one side has a failure: 0.8 * 0.5.
  auto b = embedded(vec({1, 0}));
  auto c = embedded(vec({0.5, std::sqrt(0.75)}), vec({1, 0}));
  EXPECT_NEAR(case_similarity(b, c, cfg), 0.40, 1e-12);
  // Prompt cosine 0.7 and failure cosine 0.5: 0.8 * 0.7 + 0.2 * 0.5.
  auto d = embedded(vec({1, 0}), vec({1, 0}));
  auto e = embedded(vec({0.7, std::sqrt(1 - 0.49)}), vec({0.5, std::sqrt(0.75)}));
  EXPECT_NEAR(case_similarity(d, e, cfg), 0.66, 1e-12);
}

TEST(Rerank, AlphaBounds) {
  RerankConfig cfg;
  cfg.alpha = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.alpha = -0.1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Rerank, PropagationLiftsNeighbors) {
  ExperienceGraph g;
  g.insert_case(plain("a"));
  g.insert_case(plain("b"));
  const SimilarLink links[] = {{"a#1", 0.5}};
  g.insert_case(plain("c"), links);

  CandidatePool pool;
  pool.seeds = {{"a#1", 0.6, SeedOrigin::QuerySeed}, {"b#1", 0.9, SeedOrigin::QuerySeed}};
  pool.candidates = {{"a#1", kSourceSim}, {"b#1", kSourceSim}, {"c#1", kSourceSim}};

  const auto ranked = propagate_and_rank(pool, g);
  ASSERT_EQ(ranked.size(), 3u);
  EXPECT_EQ(ranked[0].case_id, "c#1");
  EXPECT_DOUBLE_EQ(ranked[0].relevance, 1.1);
  EXPECT_EQ(ranked[0].initial_relevance, 0.0);
  EXPECT_EQ(ranked[1].case_id, "b#1");
  EXPECT_EQ(ranked[2].case_id, "a#1");
  // a#1 is adjacent only to c#1, which is not a seed.
  EXPECT_DOUBLE_EQ(ranked[2].relevance, 0.6);
  EXPECT_EQ(ranked[0].rank, 1u);
  EXPECT_EQ(ranked[2].rank, 3u);

  RerankConfig off;
  off.propagate = false;
  const auto flat = propagate_and_rank(pool, g, off);
  EXPECT_EQ(flat[0].case_id, "b#1");
  EXPECT_EQ(flat[2].case_id, "c#1");
  EXPECT_EQ(flat[2].relevance, 0.0);
}

TEST(Rerank, TiesGoToInitialRelevanceThenAge) {
  ExperienceGraph g;
  g.insert_case(plain("old"));
  g.insert_case(plain("new"));
  const SimilarLink links[] = {{"old#1", 0.4}};
  g.insert_case(plain("s"), links);

  CandidatePool pool;
  // new#1 is a seed at 0.5; old#1 reaches 0.5 through s#1 (0.1 + 0.4).
  pool.seeds = {{"new#1", 0.5, SeedOrigin::QuerySeed}, {"s#1", 0.1, SeedOrigin::QuerySeed}};
  pool.candidates = {{"old#1", kSourceSim}, {"new#1", kSourceSim}, {"s#1", kSourceSim}};
  const auto r = propagate_and_rank(pool, g);
  EXPECT_EQ(r[0].case_id, "new#1");
  EXPECT_EQ(r[1].case_id, "old#1");

  CandidatePool flat;
  flat.candidates = {{"new#1", kSourceSim}, {"old#1", kSourceSim}};
  const auto r2 = propagate_and_rank(flat, g);
  EXPECT_EQ(r2[0].case_id, "old#1");
}

TEST(Rerank, DanglingCandidateThrows) {
  ExperienceGraph g;
  CandidatePool pool;
  pool.candidates = {{"ghost", kSourceSim}};
  EXPECT_THROW(propagate_and_rank(pool, g), GraphError);
}

TEST(Rerank, MatchesBruteForceOracle) {
  std::mt19937_64 rng(7);
  for (std::uint64_t seed = 1; seed <= 150; ++seed) {
    const auto w = oracle::random_world(seed, 5 + rng() % 60, 1 + rng() % 15);
    RetrievalConfig cfg;
    cfg.k_seeds = 1 + rng() % 12;
    const std::string task = w.tasks[rng() % w.tasks.size()];
    const auto pool = retrieve(w.graph, w.index, w.embedder.embed(oracle::random_text(rng)), task, cfg);
    for (bool propagate : {true, false}) {
      RerankConfig rc;
      rc.propagate = propagate;
      const auto got = propagate_and_rank(pool, w.graph, rc);
      const auto want = oracle::rerank(pool, w.graph, propagate);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < want.size(); ++i) {
        EXPECT_EQ(got[i].case_id, want[i].id) << "seed " << seed << " i " << i;
        EXPECT_NEAR(got[i].relevance, want[i].rho, 1e-12);
        EXPECT_NEAR(got[i].initial_relevance, want[i].rho0, 1e-12);
      }
    }
  }
}
