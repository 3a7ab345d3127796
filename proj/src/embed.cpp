#include "exg/embed.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "exg/http.hpp"

namespace exg {

Embedding::Embedding(Eigen::VectorXd raw) : values_(std::move(raw)) {
  const double n = values_.norm();
  if (n > 0.0) {
    values_ /= n;
    norm_ = values_.norm();
  }
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.dimension() != b.dimension()) {
    throw std::invalid_argument("cosine: dimension mismatch (" + std::to_string(a.dimension()) +
                                " vs " + std::to_string(b.dimension()) + ")");
  }
  if (a.is_zero() || b.is_zero()) return 0.0;
  return std::clamp(a.values().dot(b.values()), -1.0, 1.0);
}

std::vector<Embedding> Embedder::embed_batch(std::span<const std::string> texts) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

HashingEmbedder::HashingEmbedder(int dimension) : dimension_(dimension) {
  if (dimension < 1) throw std::invalid_argument("HashingEmbedder: dimension must be >= 1");
}

std::uint64_t HashingEmbedder::fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> HashingEmbedder::tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char ch : text) {
    // Bytes >= 0x80 stay inside tokens so UTF-8 words are not shredded.
    if (std::isalnum(ch) || ch >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(ch)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::size_t HashingEmbedder::bucket_of(std::string_view token) const {
  return static_cast<std::size_t>(fnv1a64(token) % static_cast<std::uint64_t>(dimension_));
}

Embedding HashingEmbedder::embed(std::string_view text) const {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(dimension_);
  for (const auto& tok : tokenize(text)) counts[static_cast<Eigen::Index>(bucket_of(tok))] += 1.0;
  return Embedding(std::move(counts));
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config) : config_(std::move(config)) {
  parse_url(config_.url);
}

std::optional<Eigen::Index> RemoteEmbedder::dimension() const {
  std::lock_guard lock(mutex_);
  return dimension_;
}

Embedding RemoteEmbedder::embed(std::string_view text) const {
  std::string owned(text);
  return embed_batch(std::span<const std::string>(&owned, 1)).front();
}

std::vector<Embedding> RemoteEmbedder::embed_batch(std::span<const std::string> texts) const {
  nlohmann::json body;
  body["texts"] = std::vector<std::string>(texts.begin(), texts.end());
  const auto reply = post_json(config_.url, body, {}, config_.timeout);

  const auto it = reply.find("vectors");
  if (it == reply.end() || !it->is_array() || it->size() != texts.size()) {
    throw TransportError("embedder reply must carry one vector per text");
  }
  std::vector<Embedding> out;
  out.reserve(texts.size());
  std::lock_guard lock(mutex_);
  for (const auto& row : *it) {
    if (!row.is_array() || row.empty()) throw TransportError("embedder returned an empty vector");
    const auto dim = static_cast<Eigen::Index>(row.size());
    if (!dimension_) dimension_ = dim;
    if (*dimension_ != dim) {
      throw TransportError("embedder dimension changed from " + std::to_string(*dimension_) +
                           " to " + std::to_string(dim));
    }
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = row[static_cast<std::size_t>(i)].get<double>();
    out.emplace_back(std::move(v));
  }
  return out;
}

EmbeddedCase embed_case(const Case& c, const Embedder& embedder) {
  EmbeddedCase e;
  e.case_id = c.case_id;
  e.prompt = embedder.embed(c.input);
  if (c.signature.has_failure_text()) e.failure = embedder.embed(c.signature.failure_text());
  return e;
}

void VectorIndex::add(const CaseId& id, std::uint64_t created_seq, Embedding embedding) {
  if (slots_.contains(id)) throw std::invalid_argument("VectorIndex: duplicate id '" + id + "'");
  if (!entries_.empty() && entries_.front().embedding.dimension() != embedding.dimension()) {
    throw std::invalid_argument("VectorIndex: dimension mismatch for '" + id + "'");
  }
  slots_.emplace(id, entries_.size());
  entries_.push_back({id, created_seq, std::move(embedding)});
}

const Embedding* VectorIndex::find(const CaseId& id) const {
  auto it = slots_.find(id);
  return it == slots_.end() ? nullptr : &entries_[it->second].embedding;
}

std::vector<ScoredId> VectorIndex::top_k(const Embedding& query, std::size_t k) const {
  k = std::min(k, entries_.size());
  if (k == 0) return {};
  struct Hit {
    double score;
    std::uint64_t seq;
    std::size_t slot;
  };
  std::vector<Hit> hits;
  hits.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    hits.push_back({cosine(query, entries_[i].embedding), entries_[i].seq, i});
  }
  auto better = [](const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.seq < b.seq;
  };
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), better);
  std::vector<ScoredId> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back({entries_[hits[i].slot].id, hits[i].score});
  return out;
}

}  // namespace exg
