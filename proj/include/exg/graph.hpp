#pragma once
// The experience graph: case nodes grouped under task anchors, undirected
// weighted similar_to edges and directed fixed_by (warning -> golden) edges.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "exg/core.hpp"

namespace exg {

class SnapshotError : public GraphError {
 public:
  using GraphError::GraphError;
};

struct GraphStats {
  std::size_t case_count = 0;
  std::size_t golden_count = 0;
  std::size_t warning_count = 0;
  std::size_t anchor_count = 0;
  std::size_t similar_to_count = 0;  // undirected, counted once
  std::size_t fixed_by_count = 0;

  bool operator==(const GraphStats&) const = default;
};

// A similarity link requested at insert time.
struct SimilarLink {
  CaseId target;
  double weight = 0.0;
};

// Canonical undirected edge, a < b lexicographically.
struct SimilarEdge {
  CaseId a;
  CaseId b;
  double weight = 0.0;

  bool operator==(const SimilarEdge&) const = default;
};

struct FixedEdge {
  CaseId source;  // warning
  CaseId target;  // golden

  bool operator==(const FixedEdge&) const = default;
};

struct Neighbor {
  const Case* node = nullptr;
  double weight = 0.0;
};

// Single-writer store. Pointers and references handed out by read operations
// stay valid until the next mutation.
class ExperienceGraph {
 public:
  ExperienceGraph() = default;

  // Stores the case with created_seq = ++seq_counter, creating the task anchor
  // on first sight and one symmetric similar_to edge per link.
  CaseId insert_case(Case c, std::span<const SimilarLink> links = {});

  void add_fixed_by(const CaseId& warning_id, const CaseId& golden_id);

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  GraphStats stats() const;

  // Contain-children of the task's anchor in insertion order; empty for an
  // unseen task.
  std::vector<const Case*> anchor_cases(const TaskId& task_id) const;

  // Up to `limit` neighbors, heaviest first, ties by smaller created_seq.
  std::vector<Neighbor> similar_neighbors(const CaseId& id, std::size_t limit) const;

  // Golden destination of the outgoing fixed_by edge, if any.
  const Case* fixed_target(const CaseId& id) const;

  std::optional<double> similarity(const CaseId& a, const CaseId& b) const;

  bool contains(const CaseId& id) const { return index_.contains(id); }
  const Case* find(const CaseId& id) const;
  const Case& at(const CaseId& id) const;

  std::size_t size() const { return cases_.size(); }
  bool empty() const { return cases_.empty(); }
  std::uint64_t seq_counter() const { return seq_counter_; }

  // Cases in created_seq order.
  const std::vector<Case>& cases() const { return cases_; }
  std::vector<TaskAnchor> anchors() const;
  std::vector<SimilarEdge> similar_edges() const;
  std::vector<FixedEdge> fixed_edges() const;

  // Line-delimited snapshot, deterministic byte layout.
  void save_snapshot(std::ostream& out) const;
  std::string snapshot_string() const;
  static ExperienceGraph load_snapshot(std::istream& in);
  static ExperienceGraph load_snapshot_string(const std::string& text);

  friend bool operator==(const ExperienceGraph& lhs, const ExperienceGraph& rhs);

 private:
  struct AnchorSlot {
    std::string anchor_id;
    std::vector<std::size_t> members;
  };

  std::size_t node_of(const CaseId& id) const;
  void check_mutable(const char* op) const;
  void validate_case(const Case& c) const;
  void store_case(Case c);
  void link(std::size_t a, std::size_t b, double weight);

  std::vector<Case> cases_;
  std::unordered_map<CaseId, std::size_t> index_;
  std::set<std::pair<TaskId, int>> attempts_;
  std::map<TaskId, AnchorSlot> anchors_;
  std::vector<std::vector<std::pair<std::size_t, double>>> adjacency_;
  std::vector<std::optional<std::size_t>> fixed_out_;
  std::size_t similar_count_ = 0;
  std::size_t fixed_count_ = 0;
  std::uint64_t seq_counter_ = 0;
  bool frozen_ = false;
};

// Format weights so they round-trip exactly with at least six significant
// digits.
std::string format_weight(double w);

}  // namespace exg
