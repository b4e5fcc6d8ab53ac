#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "jitscope/ingest.hpp"
#include "jitscope/ir_model.hpp"

namespace jitscope {

// Status of a node within the end-of-phase snapshot of phase p.
//   kAlive                       created before p, not removed in p
//   kRemovedThisPhase            created before p, removed in p
//   kGeneratedThisPhase          created and removed in p
//   kAliveAndGeneratedThisPhase  created in p and still alive at its end
enum class NodeStatus { kAlive, kRemovedThisPhase, kGeneratedThisPhase, kAliveAndGeneratedThisPhase };

std::string_view to_string(NodeStatus status);
bool generated_in_phase(NodeStatus status);

struct SnapshotNode {
  NodeId node_id = 0;
  std::string address;
  std::string effective_opcode;
  std::string mnemonic;
  std::optional<std::string> current_value;
  NodeStatus status = NodeStatus::kAlive;

  bool operator==(const SnapshotNode&) const = default;
};

struct EdgeKey {
  NodeId src = 0;
  NodeId dst = 0;

  auto operator<=>(const EdgeKey&) const = default;
};

// Edge multiset: (src, dst) -> multiplicity, zero counts never stored.
using EdgeMultiset = std::map<EdgeKey, std::size_t>;

struct Anomaly {
  std::string code;  // A_REMOVE_MISSING_EDGE or A_DANGLING_EDGE
  NodeId node = 0;
  InstrId instr_id = -1;
  std::string detail;

  bool operator==(const Anomaly&) const = default;
};

struct GraphSnapshot {
  PhaseId phase;
  std::vector<SnapshotNode> nodes;  // ascending node_id
  EdgeMultiset edges;
  std::vector<Anomaly> anomalies;
};

struct PhaseSummary {
  PhaseId phase;
  std::size_t generated = 0;
  std::size_t removed = 0;
  std::size_t opcode_updates = 0;
  std::size_t value_updates = 0;
  std::size_t edge_adds = 0;
  std::size_t edge_removes = 0;
  std::size_t edge_replaces = 0;

  bool operator==(const PhaseSummary&) const = default;
};

struct OpcodeChange {
  NodeId node = 0;
  std::string old_opcode;
  std::string new_opcode;

  bool operator==(const OpcodeChange&) const = default;
};

struct ValueAppend {
  NodeId node = 0;
  std::string value;

  bool operator==(const ValueAppend&) const = default;
};

// Changes between the end of `from` and the end of `to`.
//   nodes_added    nodes created in a phase within (from, to]
//   nodes_removed  nodes removed in a phase within (from, to]
//   opcode_changed nodes whose effective opcode differs between the two ends
//   edges_*        positive and negative parts of edges(to) - edges(from)
//   values_appended value updates within (from, to], by phase then instruction
struct PhaseDiff {
  PhaseId from;
  PhaseId to;
  std::set<NodeId> nodes_added;
  std::set<NodeId> nodes_removed;
  std::vector<OpcodeChange> opcode_changed;  // ascending node
  EdgeMultiset edges_added;
  EdgeMultiset edges_removed;
  std::vector<ValueAppend> values_appended;

  bool empty() const;
  bool operator==(const PhaseDiff&) const = default;
};

// Chains two consecutive diffs (a, b) and (b, c) into (a, c).
PhaseDiff compose(const PhaseDiff& first, const PhaseDiff& second);

struct ValueChange {
  PhaseId phase;
  InstrId instr_id = 0;
  std::string value;

  bool operator==(const ValueChange&) const = default;
};

// Events that touched one node inside one phase.
struct NodePhaseActivity {
  std::vector<OpcodeUpdate> opcode_updates;
  std::vector<ValueUpdate> value_updates;
  std::vector<EdgeEvent> edge_events;
};

// Effective state of one node at the end of a phase.
struct NodeState {
  bool present = false;
  std::optional<NodeStatus> status;
  std::string effective_opcode;
  std::optional<std::string> current_value;
};

// Replays the event-sourced node histories of a ResolvedDataset. The dataset
// must outlive the engine.
class PhaseEngine {
 public:
  explicit PhaseEngine(const ResolvedDataset& dataset);

  const ResolvedDataset& dataset() const { return dataset_; }

  // Unassigned pseudo-phase first, then the real phases in ordinal order.
  std::vector<PhaseId> phase_order() const;

  GraphSnapshot snapshot_at(PhaseId phase) const;
  PhaseSummary summarize_phase(PhaseId phase) const;
  std::vector<PhaseSummary> summarize_all() const;
  PhaseDiff diff(PhaseId from, PhaseId to) const;
  std::vector<ValueChange> value_change_phases(NodeId node) const;
  std::vector<NodeId> search(std::string_view query, PhaseId phase) const;

  NodeState node_state(NodeId node, PhaseId phase) const;
  NodePhaseActivity node_activity(NodeId node, PhaseId phase) const;

 private:
  enum class EventKind { kOpcode, kValue, kEdge };

  struct TimelineEvent {
    InstrId instr = 0;
    NodeId node = 0;
    EventKind kind = EventKind::kOpcode;
    std::size_t index = 0;  // position in the node's list for this kind
    PhaseId phase;
  };

  struct Replay {
    std::vector<const std::string*> opcode;
    std::vector<const std::string*> value;
    EdgeMultiset raw_edges;
    std::vector<Anomaly> anomalies;
  };

  void require_phase(PhaseId phase) const;
  void require_node(NodeId node) const;
  Replay replay(PhaseId phase) const;
  bool present_at(NodeId node, PhaseId phase) const;
  bool created_by(NodeId node, PhaseId phase) const;
  bool removed_by(NodeId node, PhaseId phase) const;
  NodeStatus status_at(NodeId node, PhaseId phase) const;
  EdgeMultiset visible_edges(const Replay& state, PhaseId phase,
                             std::vector<Anomaly>* anomalies) const;

  const ResolvedDataset& dataset_;
  std::vector<TimelineEvent> timeline_;
  std::vector<std::vector<NodeId>> edge_targets_;      // per node, per edge event
  std::vector<std::vector<NodeId>> edge_old_targets_;  // per node, per edge event
};

}  // namespace jitscope
