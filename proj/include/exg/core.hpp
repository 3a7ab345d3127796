#pragma once
// Trajectories, cases and the small vocabulary shared by every other module.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace exg {

using CaseId = std::string;
using TaskId = std::string;

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FrozenGraphError : public GraphError {
 public:
  using GraphError::GraphError;
};

enum class Reward : std::uint8_t { Fail = 0, Pass = 1 };

inline int to_int(Reward r) { return static_cast<int>(r); }

// One (state, action, observation) step of an attempt.
struct TrajectoryStep {
  std::string state_context;
  std::string action;
  std::string observation;
  int step_index = 1;
};

struct Trajectory {
  TaskId task_id;
  int attempt_index = 1;
  std::vector<TrajectoryStep> steps;
  bool terminal = false;

  // Non-empty steps when terminal, step indices contiguous from 1.
  bool well_formed() const;
};

// Salient execution signals of an attempt. Golden cases carry no errors.
struct Signature {
  std::vector<std::string> error_messages;
  std::optional<std::string> failure_type;
  std::optional<std::string> corrective_feedback;
  std::optional<std::string> raw_excerpt;

  // True when any failure-related text is present.
  bool has_failure_text() const;
  // Text the failure embedding is computed from.
  std::string failure_text() const;

  bool operator==(const Signature&) const = default;
};

struct Case {
  CaseId case_id;
  TaskId task_id;
  std::string input;
  std::string output;
  Reward reward = Reward::Fail;
  Signature signature;
  int attempt_index = 1;
  std::uint64_t created_seq = 0;  // assigned by the graph on insert

  bool operator==(const Case&) const = default;
};

inline bool is_golden(const Case& c) { return c.reward == Reward::Pass; }
inline bool is_warning(const Case& c) { return c.reward == Reward::Fail; }

// Query-side partial case: no output and no reward yet.
struct ProvisionalCase {
  TaskId task_id;
  std::string input;
  std::optional<std::string> context;
  std::string query_text;
};

ProvisionalCase make_provisional(TaskId task_id, std::string input,
                                 std::optional<std::string> context = std::nullopt);

struct TaskAnchor {
  std::string anchor_id;
  TaskId task_id;

  bool operator==(const TaskAnchor&) const = default;
};

std::string anchor_id_for(const TaskId& task_id);

enum class EdgeKind : std::uint8_t { Contain, SimilarTo, FixedBy };

const char* to_string(EdgeKind kind);

// Deterministic case id for the k-th attempt on a task.
CaseId case_id_for(const TaskId& task_id, int attempt_index);

// Abstracts a finished attempt into a case. Throws std::invalid_argument on a
// non-terminal or malformed trajectory.
Case abstract_case(const Trajectory& trajectory, std::string input,
                   std::string output, Reward reward, Signature signature);

}  // namespace exg
