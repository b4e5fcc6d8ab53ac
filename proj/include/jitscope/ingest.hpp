#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "jitscope/ir_model.hpp"

namespace jitscope {

// Result of reading a JIR v1 file. Warnings cover recoverable input quirks
// (unknown fields, event lists that had to be re-sorted).
struct ParseResult {
  IRDocument document;
  std::vector<ValidationIssue> warnings;
};

// Throws Error with E_MALFORMED_JSON, E_UNSUPPORTED_VERSION or E_MISSING_FIELD.
ParseResult parse_document(std::string_view json_text);

// Serializes a document as JIR v1 JSON (two-space indent, trailing newline).
std::string write_document(const IRDocument& doc);

struct InstructionRow {
  InstrId instr_id = 0;
  FunctionId func_id = 0;
  PhaseId phase;

  bool operator==(const InstructionRow&) const = default;
};

// A validated document with dense node ids and every instruction bound to a
// phase. Node ids are positions in `nodes`; phase ids are positions in `phases`.
struct ResolvedDataset {
  int format_version = kFormatVersion;
  std::map<FunctionId, std::string> functions;
  std::vector<PhaseSpec> phases;
  std::vector<IRNode> nodes;
  std::unordered_map<std::string, NodeId> address_index;
  std::vector<InstructionRow> instructions;  // ascending instr_id
  std::vector<PhaseId> created_phase;
  std::vector<std::optional<PhaseId>> removed_phase;

  PhaseId phase_of(InstrId instr) const;
  const InstructionRow* find_instruction(InstrId instr) const;
  std::optional<NodeId> find_node(std::string_view address) const;
  NodeId node_id(std::string_view address) const;  // throws E_NO_SUCH_NODE
  std::string_view phase_name(PhaseId phase) const;
  bool has_phase(PhaseId phase) const;
  PhaseId final_phase() const;

  bool operator==(const ResolvedDataset&) const = default;
};

// Binds instructions to phases and derives node creation and removal phases.
// Throws E_CONFLICTING_FUNC_ID when one instr_id carries two func_ids.
// Warnings (W_PHASE_ORDER, W_REMOVAL_BEFORE_CREATION) are appended to `warnings`.
ResolvedDataset assign_phases(const IRDocument& doc, std::vector<ValidationIssue>& warnings);
ResolvedDataset assign_phases(const IRDocument& doc);

// Full front half of the pipeline: parse, validate, resolve. Throws Error with
// code E_VALIDATION when validation reports errors; `issues` receives
// everything reported along the way.
ResolvedDataset load_document(std::string_view json_text, std::vector<ValidationIssue>& issues);

// Lowercase hex SHA-256 of the given bytes.
std::string content_hash(std::string_view bytes);

// UTC ISO 8601 time for ingest_meta. SOURCE_DATE_EPOCH, when set to an
// integer, replaces the wall clock so repeated runs produce identical files.
std::string ingest_timestamp();

}  // namespace jitscope
