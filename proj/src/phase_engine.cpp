#include "jitscope/phase_engine.hpp"

#include <algorithm>
#include <cctype>
#include <tuple>

#include "jitscope/error.hpp"

namespace jitscope {

std::string_view to_string(NodeStatus status) {
  switch (status) {
    case NodeStatus::kAlive:
      return "alive";
    case NodeStatus::kRemovedThisPhase:
      return "removed_this_phase";
    case NodeStatus::kGeneratedThisPhase:
      return "generated_this_phase";
    case NodeStatus::kAliveAndGeneratedThisPhase:
      return "alive_and_generated_this_phase";
  }
  return "alive";
}

bool generated_in_phase(NodeStatus status) {
  return status == NodeStatus::kGeneratedThisPhase ||
         status == NodeStatus::kAliveAndGeneratedThisPhase;
}

bool PhaseDiff::empty() const {
  return nodes_added.empty() && nodes_removed.empty() && opcode_changed.empty() &&
         edges_added.empty() && edges_removed.empty() && values_appended.empty();
}

namespace {

using SignedEdges = std::map<EdgeKey, long long>;

void accumulate(SignedEdges& net, const EdgeMultiset& edges, long long sign) {
  for (const auto& [key, count] : edges) net[key] += sign * static_cast<long long>(count);
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return true;
  auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(),
                        [](unsigned char a, unsigned char b) {
                          return std::tolower(a) == std::tolower(b);
                        });
  return it != haystack.end();
}

}  // namespace

PhaseDiff compose(const PhaseDiff& first, const PhaseDiff& second) {
  PhaseDiff out;
  out.from = first.from;
  out.to = second.to;
  out.nodes_added = first.nodes_added;
  out.nodes_added.insert(second.nodes_added.begin(), second.nodes_added.end());
  out.nodes_removed = first.nodes_removed;
  out.nodes_removed.insert(second.nodes_removed.begin(), second.nodes_removed.end());

  std::map<NodeId, std::pair<std::string, std::string>> opcodes;
  for (const OpcodeChange& c : first.opcode_changed) opcodes[c.node] = {c.old_opcode, c.new_opcode};
  for (const OpcodeChange& c : second.opcode_changed) {
    auto [it, inserted] = opcodes.try_emplace(c.node, c.old_opcode, c.new_opcode);
    if (!inserted) it->second.second = c.new_opcode;
  }
  for (auto& [node, change] : opcodes) {
    if (change.first != change.second) out.opcode_changed.push_back({node, change.first, change.second});
  }

  SignedEdges net;
  accumulate(net, first.edges_added, 1);
  accumulate(net, first.edges_removed, -1);
  accumulate(net, second.edges_added, 1);
  accumulate(net, second.edges_removed, -1);
  for (const auto& [key, count] : net) {
    if (count > 0) out.edges_added[key] = static_cast<std::size_t>(count);
    if (count < 0) out.edges_removed[key] = static_cast<std::size_t>(-count);
  }

  out.values_appended = first.values_appended;
  out.values_appended.insert(out.values_appended.end(), second.values_appended.begin(),
                             second.values_appended.end());
  return out;
}

PhaseEngine::PhaseEngine(const ResolvedDataset& dataset) : dataset_(dataset) {
  const auto& nodes = dataset_.nodes;
  edge_targets_.resize(nodes.size());
  edge_old_targets_.resize(nodes.size());
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const IRNode& node = nodes[n];
    const auto id = static_cast<NodeId>(n);
    for (std::size_t i = 0; i < node.opcode_updates.size(); ++i) {
      const InstrId instr = node.opcode_updates[i].instr_id;
      timeline_.push_back({instr, id, EventKind::kOpcode, i, dataset_.phase_of(instr)});
    }
    for (std::size_t i = 0; i < node.value_updates.size(); ++i) {
      const InstrId instr = node.value_updates[i].instr_id;
      timeline_.push_back({instr, id, EventKind::kValue, i, dataset_.phase_of(instr)});
    }
    for (std::size_t i = 0; i < node.edge_events.size(); ++i) {
      const EdgeEvent& edge = node.edge_events[i];
      timeline_.push_back({edge.instr_id, id, EventKind::kEdge, i, dataset_.phase_of(edge.instr_id)});
      edge_targets_[n].push_back(dataset_.node_id(edge.dst_address));
      edge_old_targets_[n].push_back(edge.old_dst_address ? dataset_.node_id(*edge.old_dst_address)
                                                          : id);
    }
  }
  // Ties on one instruction: node order, then opcode < value < edge, then list order.
  std::sort(timeline_.begin(), timeline_.end(), [](const TimelineEvent& a, const TimelineEvent& b) {
    return std::tie(a.instr, a.node, a.kind, a.index) < std::tie(b.instr, b.node, b.kind, b.index);
  });
}

std::vector<PhaseId> PhaseEngine::phase_order() const {
  std::vector<PhaseId> order{PhaseId::unassigned()};
  for (std::size_t p = 0; p < dataset_.phases.size(); ++p) order.emplace_back(static_cast<int>(p));
  return order;
}

void PhaseEngine::require_phase(PhaseId phase) const {
  if (!dataset_.has_phase(phase)) {
    throw Error("E_NO_SUCH_PHASE", "no phase with ordinal " + std::to_string(phase.ordinal()));
  }
}

void PhaseEngine::require_node(NodeId node) const {
  if (node >= dataset_.nodes.size()) {
    throw Error("E_NO_SUCH_NODE", "no node with id " + std::to_string(node));
  }
}

bool PhaseEngine::created_by(NodeId node, PhaseId phase) const {
  return dataset_.created_phase[node] <= phase;
}

bool PhaseEngine::removed_by(NodeId node, PhaseId phase) const {
  const auto& removed = dataset_.removed_phase[node];
  return removed && *removed <= phase;
}

bool PhaseEngine::present_at(NodeId node, PhaseId phase) const {
  const auto& removed = dataset_.removed_phase[node];
  return created_by(node, phase) && !(removed && *removed < phase);
}

NodeStatus PhaseEngine::status_at(NodeId node, PhaseId phase) const {
  const bool generated = dataset_.created_phase[node] == phase;
  const auto& removed_phase = dataset_.removed_phase[node];
  const bool removed = removed_phase && *removed_phase == phase;
  if (generated && removed) return NodeStatus::kGeneratedThisPhase;
  if (generated) return NodeStatus::kAliveAndGeneratedThisPhase;
  if (removed) return NodeStatus::kRemovedThisPhase;
  return NodeStatus::kAlive;
}

PhaseEngine::Replay PhaseEngine::replay(PhaseId phase) const {
  const auto& nodes = dataset_.nodes;
  Replay state;
  state.opcode.resize(nodes.size());
  state.value.assign(nodes.size(), nullptr);
  for (std::size_t n = 0; n < nodes.size(); ++n) state.opcode[n] = &nodes[n].opcode;

  auto remove_one = [&](NodeId src, NodeId dst, InstrId instr) {
    auto it = state.raw_edges.find({src, dst});
    if (it == state.raw_edges.end()) {
      state.anomalies.push_back({"A_REMOVE_MISSING_EDGE", src, instr,
                                 "edge to " + nodes[dst].address + " is not present"});
      return;
    }
    if (--it->second == 0) state.raw_edges.erase(it);
  };

  for (const TimelineEvent& ev : timeline_) {
    if (ev.phase > phase) continue;
    const IRNode& node = nodes[ev.node];
    switch (ev.kind) {
      case EventKind::kOpcode:
        state.opcode[ev.node] = &node.opcode_updates[ev.index].new_opcode;
        break;
      case EventKind::kValue:
        state.value[ev.node] = &node.value_updates[ev.index].value;
        break;
      case EventKind::kEdge: {
        const NodeId dst = edge_targets_[ev.node][ev.index];
        switch (node.edge_events[ev.index].action) {
          case EdgeAction::kAdd:
            ++state.raw_edges[{ev.node, dst}];
            break;
          case EdgeAction::kRemove:
            remove_one(ev.node, dst, ev.instr);
            break;
          case EdgeAction::kReplace:
            remove_one(ev.node, edge_old_targets_[ev.node][ev.index], ev.instr);
            ++state.raw_edges[{ev.node, dst}];
            break;
        }
        break;
      }
    }
  }
  return state;
}

EdgeMultiset PhaseEngine::visible_edges(const Replay& state, PhaseId phase,
                                        std::vector<Anomaly>* anomalies) const {
  EdgeMultiset edges;
  for (const auto& [key, count] : state.raw_edges) {
    if (present_at(key.src, phase) && present_at(key.dst, phase)) {
      edges.emplace(key, count);
    } else if (anomalies) {
      anomalies->push_back({"A_DANGLING_EDGE", key.src, -1,
                            "edge to " + dataset_.nodes[key.dst].address +
                                " has an endpoint outside the snapshot"});
    }
  }
  return edges;
}

GraphSnapshot PhaseEngine::snapshot_at(PhaseId phase) const {
  require_phase(phase);
  Replay state = replay(phase);

  GraphSnapshot snapshot;
  snapshot.phase = phase;
  for (std::size_t n = 0; n < dataset_.nodes.size(); ++n) {
    const auto id = static_cast<NodeId>(n);
    if (!present_at(id, phase)) continue;
    const IRNode& node = dataset_.nodes[n];
    SnapshotNode out{id, node.address, *state.opcode[n], node.mnemonic, std::nullopt,
                     status_at(id, phase)};
    if (state.value[n]) out.current_value = *state.value[n];
    snapshot.nodes.push_back(std::move(out));
  }
  snapshot.anomalies = std::move(state.anomalies);
  snapshot.edges = visible_edges(state, phase, &snapshot.anomalies);
  return snapshot;
}

PhaseSummary PhaseEngine::summarize_phase(PhaseId phase) const {
  require_phase(phase);
  PhaseSummary summary;
  summary.phase = phase;
  for (std::size_t n = 0; n < dataset_.nodes.size(); ++n) {
    if (dataset_.created_phase[n] == phase) ++summary.generated;
    if (dataset_.removed_phase[n] == phase) ++summary.removed;
  }
  for (const TimelineEvent& ev : timeline_) {
    if (ev.phase != phase) continue;
    switch (ev.kind) {
      case EventKind::kOpcode:
        ++summary.opcode_updates;
        break;
      case EventKind::kValue:
        ++summary.value_updates;
        break;
      case EventKind::kEdge:
        switch (dataset_.nodes[ev.node].edge_events[ev.index].action) {
          case EdgeAction::kAdd:
            ++summary.edge_adds;
            break;
          case EdgeAction::kRemove:
            ++summary.edge_removes;
            break;
          case EdgeAction::kReplace:
            ++summary.edge_replaces;
            break;
        }
        break;
    }
  }
  return summary;
}

std::vector<PhaseSummary> PhaseEngine::summarize_all() const {
  std::vector<PhaseSummary> out;
  for (PhaseId phase : phase_order()) out.push_back(summarize_phase(phase));
  return out;
}

PhaseDiff PhaseEngine::diff(PhaseId from, PhaseId to) const {
  require_phase(from);
  require_phase(to);
  if (to < from) {
    throw Error("E_BAD_RANGE", "diff range runs backwards: " + std::to_string(from.ordinal()) +
                                   " > " + std::to_string(to.ordinal()));
  }
  PhaseDiff out;
  out.from = from;
  out.to = to;
  if (from == to) return out;

  for (std::size_t n = 0; n < dataset_.nodes.size(); ++n) {
    const auto id = static_cast<NodeId>(n);
    if (created_by(id, to) && !created_by(id, from)) out.nodes_added.insert(id);
    if (removed_by(id, to) && !removed_by(id, from)) out.nodes_removed.insert(id);
  }

  const Replay before = replay(from);
  const Replay after = replay(to);
  for (std::size_t n = 0; n < dataset_.nodes.size(); ++n) {
    if (*before.opcode[n] != *after.opcode[n]) {
      out.opcode_changed.push_back({static_cast<NodeId>(n), *before.opcode[n], *after.opcode[n]});
    }
  }

  SignedEdges net;
  accumulate(net, visible_edges(after, to, nullptr), 1);
  accumulate(net, visible_edges(before, from, nullptr), -1);
  for (const auto& [key, count] : net) {
    if (count > 0) out.edges_added[key] = static_cast<std::size_t>(count);
    if (count < 0) out.edges_removed[key] = static_cast<std::size_t>(-count);
  }

  std::vector<const TimelineEvent*> values;
  for (const TimelineEvent& ev : timeline_) {
    if (ev.kind == EventKind::kValue && from < ev.phase && ev.phase <= to) values.push_back(&ev);
  }
  std::stable_sort(values.begin(), values.end(),
                   [](const TimelineEvent* a, const TimelineEvent* b) { return a->phase < b->phase; });
  for (const TimelineEvent* ev : values) {
    out.values_appended.push_back(
        {ev->node, dataset_.nodes[ev->node].value_updates[ev->index].value});
  }
  return out;
}

std::vector<ValueChange> PhaseEngine::value_change_phases(NodeId node) const {
  require_node(node);
  std::vector<ValueChange> out;
  for (const ValueUpdate& update : dataset_.nodes[node].value_updates) {
    out.push_back({dataset_.phase_of(update.instr_id), update.instr_id, update.value});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ValueChange& a, const ValueChange& b) { return a.phase < b.phase; });
  return out;
}

std::vector<NodeId> PhaseEngine::search(std::string_view query, PhaseId phase) const {
  const GraphSnapshot snapshot = snapshot_at(phase);
  const std::string address = canonical_address(query);
  std::vector<NodeId> out;
  for (const SnapshotNode& node : snapshot.nodes) {
    if (query == std::to_string(node.node_id) || address == node.address ||
        contains_ci(node.effective_opcode, query) || contains_ci(node.mnemonic, query)) {
      out.push_back(node.node_id);
    }
  }
  return out;
}

NodeState PhaseEngine::node_state(NodeId node, PhaseId phase) const {
  require_node(node);
  require_phase(phase);
  const IRNode& ir = dataset_.nodes[node];
  NodeState state;
  state.present = present_at(node, phase);
  if (state.present) state.status = status_at(node, phase);
  state.effective_opcode = ir.opcode;
  for (const OpcodeUpdate& update : ir.opcode_updates) {
    if (dataset_.phase_of(update.instr_id) <= phase) state.effective_opcode = update.new_opcode;
  }
  for (const ValueUpdate& update : ir.value_updates) {
    if (dataset_.phase_of(update.instr_id) <= phase) state.current_value = update.value;
  }
  return state;
}

NodePhaseActivity PhaseEngine::node_activity(NodeId node, PhaseId phase) const {
  require_node(node);
  require_phase(phase);
  const IRNode& ir = dataset_.nodes[node];
  NodePhaseActivity activity;
  for (const auto& u : ir.opcode_updates) {
    if (dataset_.phase_of(u.instr_id) == phase) activity.opcode_updates.push_back(u);
  }
  for (const auto& v : ir.value_updates) {
    if (dataset_.phase_of(v.instr_id) == phase) activity.value_updates.push_back(v);
  }
  for (const auto& e : ir.edge_events) {
    if (dataset_.phase_of(e.instr_id) == phase) activity.edge_events.push_back(e);
  }
  return activity;
}

}  // namespace jitscope
