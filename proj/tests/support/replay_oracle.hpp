#pragma once

// Brute-force reference model. It works straight from the IRDocument with
// addresses as keys, rebuilds the whole global event list for every query and
// shares no code with the engine beyond the document types.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "jitscope/ir_model.hpp"

namespace oracle {

using jitscope::IRDocument;
using jitscope::IRNode;

inline constexpr int kUnassigned = -1;

struct Node {
  std::string opcode;
  std::optional<std::string> value;
  std::string status;
  bool operator==(const Node&) const = default;
};

using Edges = std::map<std::pair<std::string, std::string>, long>;

struct Snapshot {
  std::map<std::string, Node> nodes;  // by address
  Edges edges;
  int missing_removes = 0;
};

struct Counts {
  long generated = 0, removed = 0, opcode_updates = 0, value_updates = 0;
  long edge_adds = 0, edge_removes = 0, edge_replaces = 0;
  bool operator==(const Counts&) const = default;
};

class Model {
 public:
  explicit Model(const IRDocument& doc) : doc_(doc) {
    for (const IRNode& n : doc.nodes) {
      for (const auto& a : n.accesses) func_of_instr_[a.instr_id] = a.func_id;
    }
    for (const IRNode& n : doc.nodes) {
      InstrId first = n.accesses.front().instr_id, last = first;
      for (const auto& a : n.accesses) {
        first = std::min(first, a.instr_id);
        last = std::max(last, a.instr_id);
      }
      const int born = phase_of_instr(first);
      created_[n.address] = born;
      if (!n.alive) removed_[n.address] = std::max(born, phase_of_instr(last));
    }
  }

  int phase_count() const { return static_cast<int>(doc_.phases.size()); }

  int phase_of_instr(jitscope::InstrId instr) const {
    const auto func = func_of_instr_.at(instr);
    for (std::size_t p = 0; p < doc_.phases.size(); ++p) {
      if (doc_.phases[p].func_id_start <= func && func <= doc_.phases[p].func_id_end) return static_cast<int>(p);
    }
    return kUnassigned;
  }

  int created(const std::string& address) const { return created_.at(address); }
  std::optional<int> removed(const std::string& address) const {
    auto it = removed_.find(address);
    if (it == removed_.end()) return std::nullopt;
    return it->second;
  }

  bool present(const std::string& address, int phase) const {
    if (created(address) > phase) return false;
    auto gone = removed(address);
    return !gone || *gone >= phase;
  }

  Snapshot snapshot(int phase) const {
    // kind order at equal instruction and node: opcode, value, edge
    struct Event {
      jitscope::InstrId instr;
      std::size_t node;
      int kind;
      std::size_t index;
      bool operator<(const Event& o) const {
        return std::tie(instr, node, kind, index) < std::tie(o.instr, o.node, o.kind, o.index);
      }
    };
    std::vector<Event> events;
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < doc_.nodes.size(); ++i) {
      const IRNode& n = doc_.nodes[i];
      position[n.address] = i;
      for (std::size_t k = 0; k < n.opcode_updates.size(); ++k) events.push_back({n.opcode_updates[k].instr_id, i, 0, k});
      for (std::size_t k = 0; k < n.value_updates.size(); ++k) events.push_back({n.value_updates[k].instr_id, i, 1, k});
      for (std::size_t k = 0; k < n.edge_events.size(); ++k) events.push_back({n.edge_events[k].instr_id, i, 2, k});
    }
    std::sort(events.begin(), events.end());

    std::map<std::string, std::string> opcode;
    std::map<std::string, std::string> value;
    Edges raw;
    Snapshot out;
    for (const IRNode& n : doc_.nodes) opcode[n.address] = n.opcode;
    for (const Event& e : events) {
      if (phase_of_instr(e.instr) > phase) continue;
      const IRNode& n = doc_.nodes[e.node];
      if (e.kind == 0) {
        opcode[n.address] = n.opcode_updates[e.index].new_opcode;
      } else if (e.kind == 1) {
        value[n.address] = n.value_updates[e.index].value;
      } else {
        const auto& edge = n.edge_events[e.index];
        auto take = [&](const std::string& dst) {
          auto it = raw.find({n.address, dst});
          if (it == raw.end()) {
            ++out.missing_removes;
            return;
          }
          if (--it->second == 0) raw.erase(it);
        };
        switch (edge.action) {
          case jitscope::EdgeAction::kAdd: ++raw[{n.address, edge.dst_address}]; break;
          case jitscope::EdgeAction::kRemove: take(edge.dst_address); break;
          case jitscope::EdgeAction::kReplace:
            take(*edge.old_dst_address);
            ++raw[{n.address, edge.dst_address}];
            break;
        }
      }
    }
    for (const IRNode& n : doc_.nodes) {
      if (!present(n.address, phase)) continue;
      Node node;
      node.opcode = opcode[n.address];
      if (auto it = value.find(n.address); it != value.end()) node.value = it->second;
      const bool born_here = created(n.address) == phase;
      const bool dies_here = removed(n.address) == std::optional<int>(phase);
      if (born_here) node.status = dies_here ? "generated_this_phase" : "alive_and_generated_this_phase";
      else node.status = dies_here ? "removed_this_phase" : "alive";
      out.nodes[n.address] = node;
    }
    for (const auto& [key, count] : raw) {
      if (out.nodes.contains(key.first) && out.nodes.contains(key.second)) out.edges[key] = count;
    }
    return out;
  }

  Counts counts(int phase) const {
    Counts c;
    for (const IRNode& n : doc_.nodes) {
      if (created(n.address) == phase) ++c.generated;
      if (removed(n.address) == std::optional<int>(phase)) ++c.removed;
      for (const auto& u : n.opcode_updates) c.opcode_updates += phase_of_instr(u.instr_id) == phase;
      for (const auto& u : n.value_updates) c.value_updates += phase_of_instr(u.instr_id) == phase;
      for (const auto& e : n.edge_events) {
        if (phase_of_instr(e.instr_id) != phase) continue;
        if (e.action == jitscope::EdgeAction::kAdd) ++c.edge_adds;
        else if (e.action == jitscope::EdgeAction::kRemove) ++c.edge_removes;
        else ++c.edge_replaces;
      }
    }
    return c;
  }

 private:
  using InstrId = jitscope::InstrId;
  const IRDocument& doc_;
  std::map<InstrId, jitscope::FunctionId> func_of_instr_;
  std::map<std::string, int> created_;
  std::map<std::string, int> removed_;
};

}  // namespace oracle
