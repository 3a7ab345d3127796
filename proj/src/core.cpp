#include "exg/core.hpp"

#include <stdexcept>

namespace exg {

bool Trajectory::well_formed() const {
  if (attempt_index < 1) return false;
  if (terminal && steps.empty()) return false;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].step_index != static_cast<int>(i) + 1) return false;
  }
  return true;
}

bool Signature::has_failure_text() const {
  for (const auto& m : error_messages) {
    if (!m.empty()) return true;
  }
  return (failure_type && !failure_type->empty()) ||
         (corrective_feedback && !corrective_feedback->empty());
}

std::string Signature::failure_text() const {
  std::string text;
  auto append = [&text](const std::string& part) {
    if (part.empty()) return;
    if (!text.empty()) text += '\n';
    text += part;
  };
  for (const auto& m : error_messages) append(m);
  if (failure_type) append(*failure_type);
  if (corrective_feedback) append(*corrective_feedback);
  return text;
}

ProvisionalCase make_provisional(TaskId task_id, std::string input,
                                 std::optional<std::string> context) {
  ProvisionalCase p;
  p.task_id = std::move(task_id);
  p.query_text = input;
  if (context) {
    p.query_text += '\n';
    p.query_text += *context;
  }
  p.input = std::move(input);
  p.context = std::move(context);
  return p;
}

std::string anchor_id_for(const TaskId& task_id) { return "anchor:" + task_id; }

const char* to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Contain:
      return "contain";
    case EdgeKind::SimilarTo:
      return "similar_to";
    case EdgeKind::FixedBy:
      return "fixed_by";
  }
  return "unknown";
}

CaseId case_id_for(const TaskId& task_id, int attempt_index) {
  return task_id + "#" + std::to_string(attempt_index);
}

Case abstract_case(const Trajectory& trajectory, std::string input,
                   std::string output, Reward reward, Signature signature) {
  if (!trajectory.terminal) {
    throw std::invalid_argument("abstract_case: trajectory for task '" +
                                trajectory.task_id + "' is not terminal");
  }
  if (!trajectory.well_formed()) {
    throw std::invalid_argument("abstract_case: malformed trajectory for task '" +
                                trajectory.task_id + "'");
  }
  Case c;
  c.case_id = case_id_for(trajectory.task_id, trajectory.attempt_index);
  c.task_id = trajectory.task_id;
  c.input = std::move(input);
  c.output = std::move(output);
  c.reward = reward;
  c.signature = std::move(signature);
  c.attempt_index = trajectory.attempt_index;
  c.created_seq = 0;
  return c;
}

}  // namespace exg
