#include "jitscope/json_views.hpp"

namespace jitscope::views {

namespace {

Json edge_list(const EdgeMultiset& edges) {
  Json out = Json::array();
  for (const auto& [key, count] : edges) {
    out.push_back({{"src", key.src}, {"dst", key.dst}, {"multiplicity", count}});
  }
  return out;
}

}  // namespace

Json phase_ref(const ResolvedDataset& dataset, PhaseId phase) {
  return {{"phase_id", phase.ordinal()}, {"name", dataset.phase_name(phase)}};
}

Json issue(const ValidationIssue& issue) {
  return {{"severity", to_string(issue.severity)},
          {"code", issue.code},
          {"locator", issue.locator},
          {"message", issue.message}};
}

Json issues(std::span<const ValidationIssue> list) {
  Json out = Json::array();
  for (const ValidationIssue& i : list) out.push_back(issue(i));
  return out;
}

Json summary(const PhaseSummary& s, std::string_view phase_name) {
  return {{"phase_id", s.phase.ordinal()},      {"name", phase_name},
          {"generated", s.generated},           {"removed", s.removed},
          {"opcode_updates", s.opcode_updates}, {"value_updates", s.value_updates},
          {"edge_adds", s.edge_adds},           {"edge_removes", s.edge_removes},
          {"edge_replaces", s.edge_replaces}};
}

Json summaries(const ResolvedDataset& dataset, std::span<const PhaseSummary> list) {
  Json out = Json::array();
  for (const PhaseSummary& s : list) out.push_back(summary(s, dataset.phase_name(s.phase)));
  return out;
}

Json phases(const ResolvedDataset& dataset) {
  Json out = Json::array();
  out.push_back({{"phase_id", -1},
                 {"name", kUnassignedPhaseName},
                 {"ordinal", -1},
                 {"func_id_start", nullptr},
                 {"func_id_end", nullptr}});
  for (std::size_t p = 0; p < dataset.phases.size(); ++p) {
    const PhaseSpec& spec = dataset.phases[p];
    out.push_back({{"phase_id", p},
                   {"name", spec.name},
                   {"ordinal", p},
                   {"func_id_start", spec.func_id_start},
                   {"func_id_end", spec.func_id_end}});
  }
  return out;
}

Json snapshot(const ResolvedDataset& dataset, const GraphSnapshot& snapshot) {
  Json nodes = Json::array();
  for (const SnapshotNode& n : snapshot.nodes) {
    nodes.push_back({{"node_id", n.node_id},
                     {"address", n.address},
                     {"effective_opcode", n.effective_opcode},
                     {"mnemonic", n.mnemonic},
                     {"current_value", n.current_value ? Json(*n.current_value) : Json(nullptr)},
                     {"status", to_string(n.status)}});
  }
  Json anomalies = Json::array();
  for (const Anomaly& a : snapshot.anomalies) {
    anomalies.push_back(
        {{"code", a.code}, {"node_id", a.node}, {"instr_id", a.instr_id}, {"detail", a.detail}});
  }
  Json out = phase_ref(dataset, snapshot.phase);
  out["nodes"] = std::move(nodes);
  out["edges"] = edge_list(snapshot.edges);
  out["anomalies"] = std::move(anomalies);
  return out;
}

Json diff(const ResolvedDataset& dataset, const PhaseDiff& d) {
  Json opcode_changed = Json::array();
  for (const OpcodeChange& c : d.opcode_changed) {
    opcode_changed.push_back({{"node_id", c.node}, {"old", c.old_opcode}, {"new", c.new_opcode}});
  }
  Json values = Json::array();
  for (const ValueAppend& v : d.values_appended) {
    values.push_back({{"node_id", v.node}, {"value", v.value}});
  }
  return {{"from", phase_ref(dataset, d.from)},
          {"to", phase_ref(dataset, d.to)},
          {"nodes_added", d.nodes_added},
          {"nodes_removed", d.nodes_removed},
          {"opcode_changed", std::move(opcode_changed)},
          {"edges_added", edge_list(d.edges_added)},
          {"edges_removed", edge_list(d.edges_removed)},
          {"values_appended", std::move(values)}};
}

Json edge_event(const EdgeEvent& edge) {
  Json out = {{"instr_id", edge.instr_id}, {"action", to_string(edge.action)}, {"to", edge.dst_address}};
  out["old_to"] = edge.old_dst_address ? Json(*edge.old_dst_address) : Json(nullptr);
  return out;
}

Json last_access(const ResolvedDataset& dataset, const LastAccess& access) {
  return {{"instr_id", access.instr_id},
          {"func_id", access.func_id},
          {"symbol", access.symbol},
          {"phase", phase_ref(dataset, access.phase)}};
}

Json load_report(const LoadReport& report) {
  Json out = Json::object();
  for (const std::string& table : table_names()) out[table] = report.count(table);
  return out;
}

Json error(std::string_view code, std::string_view message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

}  // namespace jitscope::views
