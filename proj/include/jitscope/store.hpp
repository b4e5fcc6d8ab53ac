#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jitscope/ingest.hpp"
#include "jitscope/phase_engine.hpp"

struct sqlite3;

namespace jitscope {

// Table names in schema order.
const std::vector<std::string>& table_names();

// Row counts per table, keyed by table name.
struct LoadReport {
  std::map<std::string, std::size_t> rows;

  std::size_t count(const std::string& table) const;
  bool operator==(const LoadReport&) const = default;
};

struct IngestMeta {
  int format_version = kFormatVersion;
  std::string source_name;
  std::string content_hash;
  std::string ingested_at;  // ISO 8601, UTC

  bool operator==(const IngestMeta&) const = default;
};

struct LoadOptions {
  bool replace = false;
  std::optional<IngestMeta> meta;  // ingest_meta stays empty without it
};

struct NodeFilter {
  // Reference phase; defaults to the final phase. Without other criteria the
  // result is every node created at or before it.
  std::optional<PhaseId> phase;
  std::optional<std::string> opcode;  // exact match on the effective opcode
  std::optional<bool> alive_at_phase;
};

struct NodeRow {
  NodeId node_id = 0;
  std::string address;
  std::string initial_opcode;
  std::string mnemonic;
  bool alive = true;
  PhaseId created_phase;
  std::optional<PhaseId> removed_phase;

  bool operator==(const NodeRow&) const = default;
};

struct NodeEvents {
  std::vector<AccessRecord> accesses;
  std::vector<OpcodeUpdate> opcode_updates;
  std::vector<ValueUpdate> value_updates;
  std::vector<EdgeEvent> edge_events;

  bool operator==(const NodeEvents&) const = default;
};

struct LastAccess {
  InstrId instr_id = 0;
  FunctionId func_id = 0;
  std::string symbol;
  PhaseId phase;

  bool operator==(const LastAccess&) const = default;
};

// Raw table contents: cells are nullopt for SQL NULL.
struct TableData {
  std::vector<std::string> columns;
  std::vector<std::vector<std::optional<std::string>>> rows;
};

struct ColumnInfo {
  std::string name;
  std::string type;  // declared SQL type, upper case
  bool nullable = true;
};

// One SQLite database file holding a single dataset.
class Store {
 public:
  // Opens or creates the database and applies the schema migration if needed.
  // ":memory:" gives a private in-memory database. Throws E_IO.
  static Store open(const std::filesystem::path& path);

  Store(Store&&) noexcept;
  Store& operator=(Store&&) noexcept;
  ~Store();

  bool empty() const;

  // Writes the dataset and its phase summaries in one transaction.
  // Throws E_DB_NOT_EMPTY unless the store is empty or options.replace is set.
  LoadReport load(const ResolvedDataset& dataset, std::span<const PhaseSummary> summaries,
                  const LoadOptions& options);

  // Writes raw rows for every table in one transaction (used by CSV import).
  LoadReport load_tables(const std::map<std::string, TableData>& tables, bool replace);

  LoadReport row_counts() const;
  std::optional<IngestMeta> meta() const;
  ResolvedDataset read_dataset() const;
  std::vector<PhaseSummary> read_phase_summaries() const;

  std::vector<NodeRow> query_nodes(const NodeFilter& filter) const;
  NodeEvents query_node_events(NodeId node) const;
  LastAccess query_last_access(NodeId node) const;

  std::vector<ColumnInfo> columns(const std::string& table) const;
  // Visits rows in primary-key order. Throws E_NO_SUCH_TABLE.
  void for_each_row(const std::string& table,
                    const std::function<void(std::span<const std::optional<std::string>>)>& visit) const;

 private:
  explicit Store(sqlite3* db);

  void exec(const char* sql) const;
  void clear_tables();
  bool has_node(NodeId node) const;

  sqlite3* db_ = nullptr;
};

}  // namespace jitscope
