#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace jitscope {

using InstrId = std::int64_t;
using FunctionId = std::int64_t;
using NodeId = std::uint32_t;

inline constexpr int kFormatVersion = 1;

// Position of an optimization phase in the pipeline. The default-constructed
// value is the unassigned pseudo-phase, which orders before phase 0.
class PhaseId {
 public:
  constexpr PhaseId() = default;
  constexpr explicit PhaseId(int ordinal) : ordinal_(ordinal < 0 ? -1 : ordinal) {}

  static constexpr PhaseId unassigned() { return PhaseId{}; }

  constexpr int ordinal() const { return ordinal_; }
  constexpr bool is_unassigned() const { return ordinal_ < 0; }

  constexpr auto operator<=>(const PhaseId&) const = default;

 private:
  int ordinal_ = -1;
};

inline constexpr std::string_view kUnassignedPhaseName = "(unassigned)";

struct AccessRecord {
  InstrId instr_id = 0;
  FunctionId func_id = 0;

  bool operator==(const AccessRecord&) const = default;
};

struct OpcodeUpdate {
  std::string new_opcode;
  InstrId instr_id = 0;

  bool operator==(const OpcodeUpdate&) const = default;
};

struct ValueUpdate {
  std::string value;
  InstrId instr_id = 0;

  bool operator==(const ValueUpdate&) const = default;
};

enum class EdgeAction { kAdd, kRemove, kReplace };

std::string_view to_string(EdgeAction action);
std::optional<EdgeAction> parse_edge_action(std::string_view text);

struct EdgeEvent {
  EdgeAction action = EdgeAction::kAdd;
  std::string dst_address;
  std::optional<std::string> old_dst_address;  // present iff action is replace
  InstrId instr_id = 0;

  bool operator==(const EdgeEvent&) const = default;
};

struct IRNode {
  std::string address;
  std::string opcode;  // pre-optimization opcode; updates are strictly later
  std::string mnemonic;
  std::vector<OpcodeUpdate> opcode_updates;
  std::vector<EdgeEvent> edge_events;
  std::vector<ValueUpdate> value_updates;
  bool alive = true;
  std::vector<AccessRecord> accesses;

  bool operator==(const IRNode&) const = default;
};

// A named phase owning the inclusive function-id range [func_id_start, func_id_end].
struct PhaseSpec {
  std::string name;
  FunctionId func_id_start = 0;
  FunctionId func_id_end = 0;

  bool contains(FunctionId func_id) const {
    return func_id_start <= func_id && func_id <= func_id_end;
  }

  bool operator==(const PhaseSpec&) const = default;
};

struct IRDocument {
  int format_version = kFormatVersion;
  std::map<FunctionId, std::string> functions;
  std::vector<PhaseSpec> phases;
  std::vector<IRNode> nodes;

  bool operator==(const IRDocument&) const = default;
};

enum class Severity { kError, kWarning };

std::string_view to_string(Severity severity);

struct ValidationIssue {
  Severity severity = Severity::kError;
  std::string code;
  std::string locator;  // node address, phase name or JSON field path
  std::string message;

  bool operator==(const ValidationIssue&) const = default;
};

// Checks every document invariant. Warnings never block ingestion; errors do.
std::vector<ValidationIssue> validate_document(const IRDocument& doc);

bool has_errors(std::span<const ValidationIssue> issues);

// "0X001A" -> "0x1a". Strings that are not hexadecimal are returned unchanged.
std::string canonical_address(std::string_view address);
bool is_canonical_address(std::string_view address);

}  // namespace jitscope
