#include "jitscope/ingest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <initializer_list>
#include <nlohmann/json.hpp>

#include "jitscope/error.hpp"

namespace jitscope {

namespace {

using nlohmann::json;

class DocumentReader {
 public:
  explicit DocumentReader(std::vector<ValidationIssue>& warnings) : warnings_(warnings) {}

  IRDocument read(const json& root) {
    if (!root.is_object()) fail_type("", "an object");
    check_fields(root, "", {"format_version", "functions", "phases", "nodes"});

    IRDocument doc;
    const json& version = require(root, "", "format_version");
    if (!version.is_number_integer()) fail_type("/format_version", "an integer");
    doc.format_version = version.get<int>();
    if (doc.format_version != kFormatVersion) {
      throw Error("E_UNSUPPORTED_VERSION",
                  "format_version " + std::to_string(doc.format_version) + " is not supported");
    }

    const json& functions = require(root, "", "functions");
    if (!functions.is_object()) fail_type("/functions", "an object");
    for (const auto& [key, symbol] : functions.items()) {
      const std::string path = "/functions/" + key;
      FunctionId func_id = 0;
      auto [end, ec] = std::from_chars(key.data(), key.data() + key.size(), func_id);
      if (ec != std::errc{} || end != key.data() + key.size()) {
        throw Error("E_MALFORMED_JSON", path + ": function key is not a decimal integer");
      }
      if (!symbol.is_string()) fail_type(path, "a string");
      doc.functions[func_id] = symbol.get<std::string>();
    }

    if (auto it = root.find("phases"); it != root.end()) {
      if (!it->is_array()) fail_type("/phases", "an array");
      for (std::size_t i = 0; i < it->size(); ++i) {
        doc.phases.push_back(read_phase((*it)[i], "/phases/" + std::to_string(i)));
      }
    }

    const json& nodes = require(root, "", "nodes");
    if (!nodes.is_array()) fail_type("/nodes", "an array");
    doc.nodes.reserve(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      doc.nodes.push_back(read_node(nodes[i], "/nodes/" + std::to_string(i)));
    }
    return doc;
  }

 private:
  [[noreturn]] static void fail_type(const std::string& path, std::string_view expected) {
    throw Error("E_MALFORMED_JSON",
                (path.empty() ? std::string("/") : path) + ": expected " + std::string(expected));
  }

  static const json& require(const json& object, const std::string& path, const char* key) {
    auto it = object.find(key);
    if (it == object.end()) {
      throw Error("E_MISSING_FIELD", path + "/" + key);
    }
    return *it;
  }

  void check_fields(const json& object, const std::string& path,
                    std::initializer_list<std::string_view> known) {
    for (const auto& [key, value] : object.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        warnings_.push_back({Severity::kWarning, "W_UNKNOWN_FIELD", path + "/" + key,
                             "unknown field ignored"});
      }
    }
  }

  static std::string read_string(const json& object, const std::string& path, const char* key) {
    const json& value = require(object, path, key);
    if (!value.is_string()) fail_type(path + "/" + key, "a string");
    return value.get<std::string>();
  }

  static std::int64_t read_int(const json& object, const std::string& path, const char* key) {
    const json& value = require(object, path, key);
    if (!value.is_number_integer()) fail_type(path + "/" + key, "an integer");
    return value.get<std::int64_t>();
  }

  const json* optional_array(const json& object, const std::string& path, const char* key) {
    auto it = object.find(key);
    if (it == object.end() || it->is_null()) return nullptr;
    if (!it->is_array()) fail_type(path + "/" + key, "an array");
    return &*it;
  }

  PhaseSpec read_phase(const json& object, const std::string& path) {
    if (!object.is_object()) fail_type(path, "an object");
    check_fields(object, path, {"name", "funcIdStart", "funcIdEnd"});
    return {read_string(object, path, "name"), read_int(object, path, "funcIdStart"),
            read_int(object, path, "funcIdEnd")};
  }

  template <typename Events>
  void sort_events(Events& events, const std::string& path) {
    auto by_instr = [](const auto& a, const auto& b) { return a.instr_id < b.instr_id; };
    if (!std::is_sorted(events.begin(), events.end(), by_instr)) {
      std::stable_sort(events.begin(), events.end(), by_instr);
      warnings_.push_back({Severity::kWarning, "W_UNSORTED_EVENTS", path,
                           "events were re-sorted by instrId"});
    }
  }

  IRNode read_node(const json& object, const std::string& path) {
    if (!object.is_object()) fail_type(path, "an object");
    check_fields(object, path,
                 {"address", "opcode", "mnemonic", "alive", "opcodeUpdates", "values", "edges",
                  "accesses"});
    IRNode node;
    node.address = canonical_address(read_string(object, path, "address"));
    node.opcode = read_string(object, path, "opcode");
    if (auto it = object.find("mnemonic"); it != object.end() && !it->is_null()) {
      if (!it->is_string()) fail_type(path + "/mnemonic", "a string");
      node.mnemonic = it->get<std::string>();
    }
    const json& alive = require(object, path, "alive");
    if (!alive.is_boolean()) fail_type(path + "/alive", "a boolean");
    node.alive = alive.get<bool>();

    if (const json* updates = optional_array(object, path, "opcodeUpdates")) {
      for (std::size_t i = 0; i < updates->size(); ++i) {
        const std::string item = path + "/opcodeUpdates/" + std::to_string(i);
        const json& u = (*updates)[i];
        if (!u.is_object()) fail_type(item, "an object");
        check_fields(u, item, {"opcode", "instrId"});
        node.opcode_updates.push_back({read_string(u, item, "opcode"), read_int(u, item, "instrId")});
      }
      sort_events(node.opcode_updates, path + "/opcodeUpdates");
    }
    if (const json* values = optional_array(object, path, "values")) {
      for (std::size_t i = 0; i < values->size(); ++i) {
        const std::string item = path + "/values/" + std::to_string(i);
        const json& v = (*values)[i];
        if (!v.is_object()) fail_type(item, "an object");
        check_fields(v, item, {"value", "instrId"});
        node.value_updates.push_back({read_string(v, item, "value"), read_int(v, item, "instrId")});
      }
      sort_events(node.value_updates, path + "/values");
    }
    if (const json* edges = optional_array(object, path, "edges")) {
      for (std::size_t i = 0; i < edges->size(); ++i) {
        const std::string item = path + "/edges/" + std::to_string(i);
        const json& e = (*edges)[i];
        if (!e.is_object()) fail_type(item, "an object");
        check_fields(e, item, {"action", "to", "oldTo", "instrId"});
        EdgeEvent edge;
        const std::string action = read_string(e, item, "action");
        auto parsed = parse_edge_action(action);
        if (!parsed) {
          throw Error("E_MALFORMED_JSON", item + "/action: unknown edge action '" + action + "'");
        }
        edge.action = *parsed;
        edge.dst_address = canonical_address(read_string(e, item, "to"));
        if (auto it = e.find("oldTo"); it != e.end() && !it->is_null()) {
          if (!it->is_string()) fail_type(item + "/oldTo", "a string");
          edge.old_dst_address = canonical_address(it->get<std::string>());
        }
        edge.instr_id = read_int(e, item, "instrId");
        node.edge_events.push_back(std::move(edge));
      }
      sort_events(node.edge_events, path + "/edges");
    }

    const json& accesses = require(object, path, "accesses");
    if (!accesses.is_array()) fail_type(path + "/accesses", "an array");
    for (std::size_t i = 0; i < accesses.size(); ++i) {
      const std::string item = path + "/accesses/" + std::to_string(i);
      const json& a = accesses[i];
      if (!a.is_object()) fail_type(item, "an object");
      check_fields(a, item, {"instrId", "funcId"});
      node.accesses.push_back({read_int(a, item, "instrId"), read_int(a, item, "funcId")});
    }
    sort_events(node.accesses, path + "/accesses");
    return node;
  }

  std::vector<ValidationIssue>& warnings_;
};

}  // namespace

ParseResult parse_document(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw Error("E_MALFORMED_JSON", "byte " + std::to_string(e.byte) + ": " + e.what());
  }
  ParseResult result;
  result.document = DocumentReader(result.warnings).read(root);
  return result;
}

std::string write_document(const IRDocument& doc) {
  nlohmann::ordered_json root;
  root["format_version"] = doc.format_version;
  nlohmann::ordered_json functions = nlohmann::ordered_json::object();
  for (const auto& [func_id, symbol] : doc.functions) functions[std::to_string(func_id)] = symbol;
  root["functions"] = std::move(functions);

  nlohmann::ordered_json phases = nlohmann::ordered_json::array();
  for (const PhaseSpec& p : doc.phases) {
    phases.push_back({{"name", p.name}, {"funcIdStart", p.func_id_start}, {"funcIdEnd", p.func_id_end}});
  }
  root["phases"] = std::move(phases);

  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (const IRNode& n : doc.nodes) {
    nlohmann::ordered_json node;
    node["address"] = n.address;
    node["opcode"] = n.opcode;
    node["mnemonic"] = n.mnemonic;
    node["alive"] = n.alive;
    auto& updates = node["opcodeUpdates"] = nlohmann::ordered_json::array();
    for (const auto& u : n.opcode_updates) updates.push_back({{"opcode", u.new_opcode}, {"instrId", u.instr_id}});
    auto& values = node["values"] = nlohmann::ordered_json::array();
    for (const auto& v : n.value_updates) values.push_back({{"value", v.value}, {"instrId", v.instr_id}});
    auto& edges = node["edges"] = nlohmann::ordered_json::array();
    for (const auto& e : n.edge_events) {
      nlohmann::ordered_json edge;
      edge["action"] = to_string(e.action);
      edge["to"] = e.dst_address;
      if (e.old_dst_address) edge["oldTo"] = *e.old_dst_address;
      edge["instrId"] = e.instr_id;
      edges.push_back(std::move(edge));
    }
    auto& accesses = node["accesses"] = nlohmann::ordered_json::array();
    for (const auto& a : n.accesses) accesses.push_back({{"instrId", a.instr_id}, {"funcId", a.func_id}});
    nodes.push_back(std::move(node));
  }
  root["nodes"] = std::move(nodes);
  return root.dump(2) + "\n";
}

PhaseId ResolvedDataset::phase_of(InstrId instr) const {
  const InstructionRow* row = find_instruction(instr);
  return row ? row->phase : PhaseId::unassigned();
}

const InstructionRow* ResolvedDataset::find_instruction(InstrId instr) const {
  auto it = std::lower_bound(instructions.begin(), instructions.end(), instr,
                             [](const InstructionRow& row, InstrId id) { return row.instr_id < id; });
  if (it == instructions.end() || it->instr_id != instr) return nullptr;
  return &*it;
}

std::optional<NodeId> ResolvedDataset::find_node(std::string_view address) const {
  auto it = address_index.find(canonical_address(address));
  if (it == address_index.end()) return std::nullopt;
  return it->second;
}

NodeId ResolvedDataset::node_id(std::string_view address) const {
  if (auto id = find_node(address)) return *id;
  throw Error("E_NO_SUCH_NODE", "no node with address " + std::string(address));
}

std::string_view ResolvedDataset::phase_name(PhaseId phase) const {
  if (phase.is_unassigned() || !has_phase(phase)) return kUnassignedPhaseName;
  return phases[static_cast<std::size_t>(phase.ordinal())].name;
}

bool ResolvedDataset::has_phase(PhaseId phase) const {
  return phase.is_unassigned() || static_cast<std::size_t>(phase.ordinal()) < phases.size();
}

PhaseId ResolvedDataset::final_phase() const {
  return phases.empty() ? PhaseId::unassigned() : PhaseId(static_cast<int>(phases.size()) - 1);
}

ResolvedDataset assign_phases(const IRDocument& doc, std::vector<ValidationIssue>& warnings) {
  ResolvedDataset out;
  out.format_version = doc.format_version;
  out.functions = doc.functions;
  out.phases = doc.phases;
  out.nodes = doc.nodes;

  // Sorted starts make the range lookup logarithmic; ranges are disjoint.
  std::vector<std::pair<PhaseSpec, int>> by_start;
  for (std::size_t i = 0; i < doc.phases.size(); ++i) {
    by_start.emplace_back(doc.phases[i], static_cast<int>(i));
  }
  std::sort(by_start.begin(), by_start.end(), [](const auto& a, const auto& b) {
    return a.first.func_id_start < b.first.func_id_start;
  });
  auto phase_for = [&](FunctionId func_id) {
    auto it = std::upper_bound(by_start.begin(), by_start.end(), func_id,
                               [](FunctionId f, const auto& p) { return f < p.first.func_id_start; });
    if (it == by_start.begin()) return PhaseId::unassigned();
    --it;
    return it->first.contains(func_id) ? PhaseId(it->second) : PhaseId::unassigned();
  };

  std::map<InstrId, FunctionId> instr_funcs;
  for (std::size_t n = 0; n < out.nodes.size(); ++n) {
    IRNode& node = out.nodes[n];
    out.address_index.emplace(node.address, static_cast<NodeId>(n));
    auto last = std::unique(node.accesses.begin(), node.accesses.end());
    node.accesses.erase(last, node.accesses.end());
    for (const AccessRecord& access : node.accesses) {
      auto [it, inserted] = instr_funcs.emplace(access.instr_id, access.func_id);
      if (!inserted && it->second != access.func_id) {
        throw Error("E_CONFLICTING_FUNC_ID",
                    "instrId " + std::to_string(access.instr_id) + " is attributed to funcIds " +
                        std::to_string(it->second) + " and " + std::to_string(access.func_id));
      }
    }
  }

  out.instructions.reserve(instr_funcs.size());
  for (const auto& [instr, func] : instr_funcs) {
    out.instructions.push_back({instr, func, phase_for(func)});
  }

  std::vector<InstrId> first_instr(out.phases.size(), -1);
  for (const InstructionRow& row : out.instructions) {
    if (row.phase.is_unassigned()) continue;
    InstrId& first = first_instr[static_cast<std::size_t>(row.phase.ordinal())];
    if (first < 0) first = row.instr_id;
  }
  InstrId previous = -1;
  for (std::size_t p = 0; p < first_instr.size(); ++p) {
    if (first_instr[p] < 0) continue;
    if (first_instr[p] < previous) {
      warnings.push_back({Severity::kWarning, "W_PHASE_ORDER", out.phases[p].name,
                          "phase starts at instrId " + std::to_string(first_instr[p]) +
                              ", before an earlier phase"});
    }
    previous = std::max(previous, first_instr[p]);
  }

  out.created_phase.resize(out.nodes.size());
  out.removed_phase.resize(out.nodes.size());
  for (std::size_t n = 0; n < out.nodes.size(); ++n) {
    const IRNode& node = out.nodes[n];
    if (node.accesses.empty()) continue;
    const PhaseId created = out.phase_of(node.accesses.front().instr_id);
    out.created_phase[n] = created;
    if (!node.alive) {
      PhaseId removed = out.phase_of(node.accesses.back().instr_id);
      if (removed < created) {
        warnings.push_back({Severity::kWarning, "W_REMOVAL_BEFORE_CREATION", node.address,
                            "last access falls in an earlier phase than the first; removal "
                            "attributed to the creation phase"});
        removed = created;
      }
      out.removed_phase[n] = removed;
    }
  }
  return out;
}

ResolvedDataset assign_phases(const IRDocument& doc) {
  std::vector<ValidationIssue> ignored;
  return assign_phases(doc, ignored);
}

ResolvedDataset load_document(std::string_view json_text, std::vector<ValidationIssue>& issues) {
  ParseResult parsed;
  try {
    parsed = parse_document(json_text);
  } catch (const Error& e) {
    issues.push_back({Severity::kError, e.code(), "/", e.what()});
    throw;
  }
  issues.insert(issues.end(), parsed.warnings.begin(), parsed.warnings.end());
  auto validation = validate_document(parsed.document);
  issues.insert(issues.end(), validation.begin(), validation.end());
  if (has_errors(validation)) {
    throw Error("E_VALIDATION", "document failed validation");
  }
  return assign_phases(parsed.document, issues);
}

std::string content_hash(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr);
  std::string hex;
  hex.reserve(length * 2);
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace jitscope

namespace jitscope {

std::string ingest_timestamp() {
  std::time_t seconds = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    long long parsed = 0;
    const char* end = epoch + std::char_traits<char>::length(epoch);
    if (auto [ptr, ec] = std::from_chars(epoch, end, parsed); ec == std::errc() && ptr == end) {
      seconds = static_cast<std::time_t>(parsed);
    }
  }
  std::tm utc{};
  gmtime_r(&seconds, &utc);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buffer;
}

}  // namespace jitscope
