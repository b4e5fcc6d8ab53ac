#include "jitscope/ir_model.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace jitscope {

std::string_view to_string(EdgeAction action) {
  switch (action) {
    case EdgeAction::kAdd:
      return "add";
    case EdgeAction::kRemove:
      return "remove";
    case EdgeAction::kReplace:
      return "replace";
  }
  return "add";
}

std::optional<EdgeAction> parse_edge_action(std::string_view text) {
  if (text == "add") return EdgeAction::kAdd;
  if (text == "remove") return EdgeAction::kRemove;
  if (text == "replace") return EdgeAction::kReplace;
  return std::nullopt;
}

std::string_view to_string(Severity severity) {
  return severity == Severity::kError ? "ERROR" : "WARNING";
}

bool has_errors(std::span<const ValidationIssue> issues) {
  return std::any_of(issues.begin(), issues.end(),
                     [](const ValidationIssue& i) { return i.severity == Severity::kError; });
}

std::string canonical_address(std::string_view address) {
  std::string_view digits = address;
  if (digits.size() >= 2 && digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X')) {
    digits.remove_prefix(2);
  } else {
    return std::string(address);
  }
  if (digits.empty() ||
      !std::all_of(digits.begin(), digits.end(),
                   [](unsigned char c) { return std::isxdigit(c) != 0; })) {
    return std::string(address);
  }
  while (digits.size() > 1 && digits.front() == '0') digits.remove_prefix(1);
  std::string out = "0x";
  for (unsigned char c : digits) out.push_back(static_cast<char>(std::tolower(c)));
  return out;
}

bool is_canonical_address(std::string_view address) {
  return address.size() > 2 && canonical_address(address) == address;
}

namespace {

class IssueSink {
 public:
  void error(std::string code, std::string locator, std::string message) {
    issues_.push_back({Severity::kError, std::move(code), std::move(locator), std::move(message)});
  }
  void warning(std::string code, std::string locator, std::string message) {
    issues_.push_back(
        {Severity::kWarning, std::move(code), std::move(locator), std::move(message)});
  }
  std::vector<ValidationIssue> take() { return std::move(issues_); }

 private:
  std::vector<ValidationIssue> issues_;
};

template <typename Events>
bool sorted_by_instr(const Events& events) {
  return std::is_sorted(events.begin(), events.end(),
                        [](const auto& a, const auto& b) { return a.instr_id < b.instr_id; });
}

std::string range_text(const PhaseSpec& p) {
  return "[" + std::to_string(p.func_id_start) + "," + std::to_string(p.func_id_end) + "]";
}

void validate_phases(const IRDocument& doc, IssueSink& sink) {
  std::set<std::string> names;
  for (std::size_t i = 0; i < doc.phases.size(); ++i) {
    const PhaseSpec& phase = doc.phases[i];
    const std::string locator =
        phase.name.empty() ? "/phases/" + std::to_string(i) : phase.name;
    if (phase.name.empty()) {
      sink.error("E_EMPTY_PHASE_NAME", locator, "phase name is empty");
    } else if (!names.insert(phase.name).second) {
      sink.error("E_DUPLICATE_PHASE_NAME", locator, "phase name appears more than once");
    }
    if (phase.func_id_start < 0 || phase.func_id_end < 0) {
      sink.error("E_NEGATIVE_ID", locator, "function-id range " + range_text(phase) +
                                               " contains negative ids");
    }
    if (phase.func_id_start > phase.func_id_end) {
      sink.error("E_PHASE_RANGE", locator,
                 "function-id range " + range_text(phase) + " has start > end");
      continue;
    }
    for (std::size_t j = 0; j < i; ++j) {
      const PhaseSpec& other = doc.phases[j];
      if (other.func_id_start > other.func_id_end) continue;
      if (phase.func_id_start <= other.func_id_end && other.func_id_start <= phase.func_id_end) {
        sink.error("E_PHASE_OVERLAP", locator,
                   "range " + range_text(phase) + " overlaps phase '" + other.name + "' " +
                       range_text(other));
      }
    }
  }
}

void validate_node(const IRDocument& doc, const IRNode& node, std::size_t index,
                   const std::unordered_set<std::string>& addresses,
                   std::unordered_map<InstrId, FunctionId>& instr_funcs, IssueSink& sink) {
  const std::string locator =
      node.address.empty() ? "/nodes/" + std::to_string(index) : node.address;

  if (node.accesses.empty()) {
    sink.error("E_NO_ACCESSES", locator, "node has an empty access log");
  }
  if (!sorted_by_instr(node.accesses)) {
    sink.error("E_UNSORTED_EVENTS", locator, "accesses are not sorted by instrId");
  }
  if (!sorted_by_instr(node.opcode_updates)) {
    sink.error("E_UNSORTED_EVENTS", locator, "opcodeUpdates are not sorted by instrId");
  }
  if (!sorted_by_instr(node.value_updates)) {
    sink.error("E_UNSORTED_EVENTS", locator, "values are not sorted by instrId");
  }
  if (!sorted_by_instr(node.edge_events)) {
    sink.error("E_UNSORTED_EVENTS", locator, "edges are not sorted by instrId");
  }

  std::unordered_map<InstrId, FunctionId> own;
  for (const AccessRecord& access : node.accesses) {
    if (access.instr_id < 0 || access.func_id < 0) {
      sink.error("E_NEGATIVE_ID", locator,
                 "access (" + std::to_string(access.instr_id) + ", " +
                     std::to_string(access.func_id) + ") has a negative id");
    }
    if (!doc.functions.contains(access.func_id)) {
      sink.error("E_UNKNOWN_FUNCTION", locator,
                 "funcId " + std::to_string(access.func_id) + " is missing from functions");
    }
    auto [it, inserted] = own.emplace(access.instr_id, access.func_id);
    if (!inserted) {
      if (it->second == access.func_id) {
        sink.warning("W_DUPLICATE_ACCESS", locator,
                     "instrId " + std::to_string(access.instr_id) + " is logged twice");
      }
    }
    auto [git, ginserted] = instr_funcs.emplace(access.instr_id, access.func_id);
    if (!ginserted && git->second != access.func_id) {
      sink.error("E_CONFLICTING_FUNC_ID", locator,
                 "instrId " + std::to_string(access.instr_id) + " is attributed to funcIds " +
                     std::to_string(git->second) + " and " + std::to_string(access.func_id));
    }
  }

  auto check_access = [&](InstrId instr, std::string_view what) {
    if (!own.contains(instr)) {
      sink.error("E_UPDATE_WITHOUT_ACCESS", locator,
                 std::string(what) + " at instrId " + std::to_string(instr) +
                     " has no matching access record");
    }
  };

  for (const OpcodeUpdate& update : node.opcode_updates) {
    if (update.new_opcode.empty()) {
      sink.error("E_EMPTY_OPCODE", locator,
                 "opcode update at instrId " + std::to_string(update.instr_id) + " is empty");
    }
    check_access(update.instr_id, "opcode update");
  }
  for (const ValueUpdate& update : node.value_updates) {
    check_access(update.instr_id, "value update");
  }

  // Per-source replay of the outgoing edge multiset surfaces removal anomalies.
  std::map<std::string, long> out_edges;
  auto remove_one = [&](const std::string& dst, InstrId instr) {
    auto it = out_edges.find(dst);
    if (it == out_edges.end() || it->second == 0) {
      sink.warning("A_REMOVE_MISSING_EDGE", locator,
                   "edge to " + dst + " removed at instrId " + std::to_string(instr) +
                       " is not present");
      return;
    }
    --it->second;
  };

  for (const EdgeEvent& edge : node.edge_events) {
    check_access(edge.instr_id, "edge " + std::string(to_string(edge.action)));
    if (!addresses.contains(edge.dst_address)) {
      sink.error("E_UNKNOWN_EDGE_TARGET", locator,
                 "edge target " + edge.dst_address + " is not a node in the document");
    }
    if (edge.action == EdgeAction::kReplace) {
      if (!edge.old_dst_address) {
        sink.error("E_REPLACE_MISSING_OLD", locator,
                   "replace at instrId " + std::to_string(edge.instr_id) + " lacks oldTo");
      } else {
        if (!addresses.contains(*edge.old_dst_address)) {
          sink.error("E_UNKNOWN_EDGE_TARGET", locator,
                     "edge target " + *edge.old_dst_address + " is not a node in the document");
        }
        if (*edge.old_dst_address == edge.dst_address) {
          sink.error("E_REPLACE_SAME_TARGET", locator,
                     "replace at instrId " + std::to_string(edge.instr_id) +
                         " has oldTo equal to to");
        }
      }
    } else if (edge.old_dst_address) {
      sink.error("E_UNEXPECTED_OLD_TARGET", locator,
                 std::string(to_string(edge.action)) + " at instrId " +
                     std::to_string(edge.instr_id) + " carries oldTo");
    }

    switch (edge.action) {
      case EdgeAction::kAdd:
        ++out_edges[edge.dst_address];
        break;
      case EdgeAction::kRemove:
        remove_one(edge.dst_address, edge.instr_id);
        break;
      case EdgeAction::kReplace:
        if (edge.old_dst_address) remove_one(*edge.old_dst_address, edge.instr_id);
        ++out_edges[edge.dst_address];
        break;
    }
  }
}

}  // namespace

std::vector<ValidationIssue> validate_document(const IRDocument& doc) {
  IssueSink sink;
  if (doc.format_version != kFormatVersion) {
    sink.error("E_UNSUPPORTED_VERSION", "/format_version",
               "format_version " + std::to_string(doc.format_version) + " is not supported");
  }
  for (const auto& [func_id, symbol] : doc.functions) {
    if (func_id < 0) {
      sink.error("E_NEGATIVE_ID", "/functions/" + std::to_string(func_id),
                 "function id is negative");
    }
  }
  validate_phases(doc, sink);

  std::unordered_set<std::string> addresses;
  for (std::size_t i = 0; i < doc.nodes.size(); ++i) {
    const IRNode& node = doc.nodes[i];
    const std::string locator = node.address.empty() ? "/nodes/" + std::to_string(i) : node.address;
    if (node.address.empty()) {
      sink.error("E_MISSING_ADDRESS", locator, "node address is empty");
    } else if (!addresses.insert(node.address).second) {
      sink.error("E_DUPLICATE_ADDRESS", locator, "address is used by more than one node");
    } else if (!is_canonical_address(node.address)) {
      sink.warning("W_NONCANONICAL_ADDRESS", locator,
                   "address is not lowercase 0x-prefixed hexadecimal");
    }
  }

  std::unordered_map<InstrId, FunctionId> instr_funcs;
  for (std::size_t i = 0; i < doc.nodes.size(); ++i) {
    validate_node(doc, doc.nodes[i], i, addresses, instr_funcs, sink);
  }
  return sink.take();
}

}  // namespace jitscope
