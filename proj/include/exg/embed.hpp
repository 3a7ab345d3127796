#pragma once
// Embedding providers and the exact cosine top-k index used for query seeding.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "exg/core.hpp"

namespace exg {

// L2-normalized vector, or the zero vector.
class Embedding {
 public:
  Embedding() = default;
  // Normalizes `raw` unless it is all zeros.
  explicit Embedding(Eigen::VectorXd raw);

  static Embedding zeros(Eigen::Index dimension) {
    return Embedding(Eigen::VectorXd::Zero(dimension));
  }

  const Eigen::VectorXd& values() const { return values_; }
  Eigen::Index dimension() const { return values_.size(); }
  double norm() const { return norm_; }
  bool is_zero() const { return norm_ == 0.0; }

  bool operator==(const Embedding& other) const { return values_ == other.values_; }

 private:
  Eigen::VectorXd values_;
  double norm_ = 0.0;
};

// Inner product of normalized vectors, 0 when either side is zero. Throws
// std::invalid_argument on a dimension mismatch.
double cosine(const Embedding& a, const Embedding& b);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Embedding embed(std::string_view text) const = 0;
  virtual std::vector<Embedding> embed_batch(std::span<const std::string> texts) const;
};

// Bag-of-tokens embedder: lowercase, split on non-alphanumerics, FNV-1a 64
// hash each token into one of `dimension` buckets, L2-normalize the counts.
class HashingEmbedder final : public Embedder {
 public:
  static constexpr int kDefaultDimension = 256;

  explicit HashingEmbedder(int dimension = kDefaultDimension);

  Embedding embed(std::string_view text) const override;
  int dimension() const { return dimension_; }

  std::size_t bucket_of(std::string_view token) const;

  static std::vector<std::string> tokenize(std::string_view text);
  static std::uint64_t fnv1a64(std::string_view bytes);

 private:
  int dimension_;
};

struct RemoteEmbedderConfig {
  std::string url;  // full endpoint, e.g. http://localhost:8000/embed
  std::chrono::milliseconds timeout{10000};
};

// POSTs {"texts": [...]} and expects {"vectors": [[...], ...]}. The
// dimension is fixed by the first response and enforced afterwards.
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig config);

  Embedding embed(std::string_view text) const override;
  std::vector<Embedding> embed_batch(std::span<const std::string> texts) const override;

  std::optional<Eigen::Index> dimension() const;

 private:
  RemoteEmbedderConfig config_;
  mutable std::mutex mutex_;
  mutable std::optional<Eigen::Index> dimension_;
};

// Prompt embedding from the case input, failure embedding from signature
// text when the signature carries any.
struct EmbeddedCase {
  CaseId case_id;
  Embedding prompt;
  std::optional<Embedding> failure;

  bool has_failure() const { return failure.has_value(); }
};

EmbeddedCase embed_case(const Case& c, const Embedder& embedder);

struct ScoredId {
  CaseId case_id;
  double score = 0.0;

  bool operator==(const ScoredId&) const = default;
};

// Exact cosine search over prompt embeddings.
class VectorIndex {
 public:
  void add(const CaseId& id, std::uint64_t created_seq, Embedding embedding);

  bool contains(const CaseId& id) const { return slots_.contains(id); }
  std::size_t size() const { return entries_.size(); }
  const Embedding* find(const CaseId& id) const;

  // k best by cosine, ties broken by smaller created_seq.
  std::vector<ScoredId> top_k(const Embedding& query, std::size_t k) const;

 private:
  struct Entry {
    CaseId id;
    std::uint64_t seq;
    Embedding embedding;
  };
  std::vector<Entry> entries_;
  std::unordered_map<CaseId, std::size_t> slots_;
};

}  // namespace exg
