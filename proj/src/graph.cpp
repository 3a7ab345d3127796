#include "exg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

namespace exg {

namespace {

bool weight_in_range(double w) { return std::isfinite(w) && w >= 0.0 && w <= 1.0; }

}  // namespace

std::size_t ExperienceGraph::node_of(const CaseId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw GraphError("unknown case '" + id + "'");
  return it->second;
}

void ExperienceGraph::check_mutable(const char* op) const {
  if (frozen_) throw FrozenGraphError(std::string(op) + ": graph is frozen");
}

void ExperienceGraph::validate_case(const Case& c) const {
  if (c.case_id.empty()) throw GraphError("case id must not be empty");
  if (index_.contains(c.case_id)) throw GraphError("duplicate case id '" + c.case_id + "'");
  if (c.attempt_index < 1) {
    throw GraphError("case '" + c.case_id + "' has attempt index < 1");
  }
  if (attempts_.contains({c.task_id, c.attempt_index})) {
    throw GraphError("task '" + c.task_id + "' already has attempt " +
                     std::to_string(c.attempt_index));
  }
  if (is_golden(c) && (!c.signature.error_messages.empty() || c.signature.failure_type)) {
    throw GraphError("golden case '" + c.case_id + "' carries failure signals");
  }
}

void ExperienceGraph::store_case(Case c) {
  const std::size_t node = cases_.size();
  index_.emplace(c.case_id, node);
  attempts_.emplace(c.task_id, c.attempt_index);
  auto [slot, inserted] = anchors_.try_emplace(c.task_id);
  if (inserted) slot->second.anchor_id = anchor_id_for(c.task_id);
  slot->second.members.push_back(node);
  adjacency_.emplace_back();
  fixed_out_.emplace_back();
  cases_.push_back(std::move(c));
}

void ExperienceGraph::link(std::size_t a, std::size_t b, double weight) {
  adjacency_[a].emplace_back(b, weight);
  adjacency_[b].emplace_back(a, weight);
  ++similar_count_;
}

CaseId ExperienceGraph::insert_case(Case c, std::span<const SimilarLink> links) {
  check_mutable("insert_case");
  validate_case(c);
  std::vector<std::pair<std::size_t, double>> resolved;
  resolved.reserve(links.size());
  for (const auto& l : links) {
    if (!weight_in_range(l.weight)) {
      throw GraphError("similarity weight out of [0,1] for link to '" + l.target + "'");
    }
    auto it = index_.find(l.target);
    if (it == index_.end()) throw GraphError("dangling similarity link to '" + l.target + "'");
    for (const auto& r : resolved) {
      if (r.first == it->second) throw GraphError("duplicate similarity link to '" + l.target + "'");
    }
    resolved.emplace_back(it->second, l.weight);
  }

  c.created_seq = ++seq_counter_;
  CaseId id = c.case_id;
  store_case(std::move(c));
  const std::size_t node = cases_.size() - 1;
  for (const auto& [target, w] : resolved) link(node, target, w);
  return id;
}

void ExperienceGraph::add_fixed_by(const CaseId& warning_id, const CaseId& golden_id) {
  check_mutable("add_fixed_by");
  const std::size_t src = node_of(warning_id);
  const std::size_t dst = node_of(golden_id);
  const Case& w = cases_[src];
  const Case& g = cases_[dst];
  if (!is_warning(w)) throw GraphError("fixed_by source '" + warning_id + "' is not a warning case");
  if (!is_golden(g)) throw GraphError("fixed_by target '" + golden_id + "' is not a golden case");
  if (w.task_id != g.task_id) {
    throw GraphError("fixed_by edge '" + warning_id + "' -> '" + golden_id + "' crosses tasks");
  }
  if (fixed_out_[src]) throw GraphError("case '" + warning_id + "' already has a fixed_by edge");
  fixed_out_[src] = dst;
  ++fixed_count_;
}

GraphStats ExperienceGraph::stats() const {
  GraphStats s;
  s.case_count = cases_.size();
  s.golden_count = static_cast<std::size_t>(
      std::count_if(cases_.begin(), cases_.end(), [](const Case& c) { return is_golden(c); }));
  s.warning_count = s.case_count - s.golden_count;
  s.anchor_count = anchors_.size();
  s.similar_to_count = similar_count_;
  s.fixed_by_count = fixed_count_;
  return s;
}

std::vector<const Case*> ExperienceGraph::anchor_cases(const TaskId& task_id) const {
  std::vector<const Case*> out;
  auto it = anchors_.find(task_id);
  if (it == anchors_.end()) return out;
  out.reserve(it->second.members.size());
  for (std::size_t n : it->second.members) out.push_back(&cases_[n]);
  return out;
}

std::vector<Neighbor> ExperienceGraph::similar_neighbors(const CaseId& id,
                                                         std::size_t limit) const {
  const auto& adj = adjacency_[node_of(id)];
  std::vector<Neighbor> out;
  out.reserve(adj.size());
  for (const auto& [n, w] : adj) out.push_back({&cases_[n], w});
  auto heavier = [](const Neighbor& x, const Neighbor& y) {
    if (x.weight != y.weight) return x.weight > y.weight;
    return x.node->created_seq < y.node->created_seq;
  };
  if (limit < out.size()) {
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(limit), out.end(),
                      heavier);
    out.resize(limit);
  } else {
    std::sort(out.begin(), out.end(), heavier);
  }
  return out;
}

const Case* ExperienceGraph::fixed_target(const CaseId& id) const {
  const auto& dst = fixed_out_[node_of(id)];
  return dst ? &cases_[*dst] : nullptr;
}

std::optional<double> ExperienceGraph::similarity(const CaseId& a, const CaseId& b) const {
  const std::size_t na = node_of(a);
  const std::size_t nb = node_of(b);
  for (const auto& [n, w] : adjacency_[na]) {
    if (n == nb) return w;
  }
  return std::nullopt;
}

const Case* ExperienceGraph::find(const CaseId& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &cases_[it->second];
}

const Case& ExperienceGraph::at(const CaseId& id) const { return cases_[node_of(id)]; }

std::vector<TaskAnchor> ExperienceGraph::anchors() const {
  std::vector<TaskAnchor> out;
  out.reserve(anchors_.size());
  for (const auto& [task, slot] : anchors_) out.push_back({slot.anchor_id, task});
  return out;
}

std::vector<SimilarEdge> ExperienceGraph::similar_edges() const {
  std::vector<SimilarEdge> out;
  out.reserve(similar_count_);
  for (std::size_t n = 0; n < adjacency_.size(); ++n) {
    for (const auto& [m, w] : adjacency_[n]) {
      const auto& a = cases_[n].case_id;
      const auto& b = cases_[m].case_id;
      if (a < b) out.push_back({a, b, w});
    }
  }
  std::sort(out.begin(), out.end(), [](const SimilarEdge& x, const SimilarEdge& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  return out;
}

std::vector<FixedEdge> ExperienceGraph::fixed_edges() const {
  std::vector<FixedEdge> out;
  out.reserve(fixed_count_);
  for (std::size_t n = 0; n < fixed_out_.size(); ++n) {
    if (fixed_out_[n]) out.push_back({cases_[n].case_id, cases_[*fixed_out_[n]].case_id});
  }
  std::sort(out.begin(), out.end(),
            [](const FixedEdge& x, const FixedEdge& y) { return x.source < y.source; });
  return out;
}

bool operator==(const ExperienceGraph& lhs, const ExperienceGraph& rhs) {
  return lhs.seq_counter_ == rhs.seq_counter_ && lhs.frozen_ == rhs.frozen_ &&
         lhs.cases_ == rhs.cases_ && lhs.anchors() == rhs.anchors() &&
         lhs.similar_edges() == rhs.similar_edges() && lhs.fixed_edges() == rhs.fixed_edges();
}

std::string ExperienceGraph::snapshot_string() const {
  std::ostringstream out;
  save_snapshot(out);
  return out.str();
}

ExperienceGraph ExperienceGraph::load_snapshot_string(const std::string& text) {
  std::istringstream in(text);
  return load_snapshot(in);
}

}  // namespace exg
