#include "jitscope/store.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <utility>

#include "jitscope/error.hpp"
#include "jitscope/schema.hpp"

namespace jitscope {

namespace {

struct TableSpec {
  const char* name;
  const char* order_by;
};

// Foreign-key-safe insertion order.
constexpr TableSpec kTables[] = {
    {"phases", "phase_id"},
    {"functions", "func_id"},
    {"nodes", "node_id"},
    {"instructions", "instr_id"},
    {"node_accesses", "node_id, instr_id"},
    {"edge_events", "event_id"},
    {"opcode_updates", "update_id"},
    {"value_updates", "update_id"},
    {"phase_summaries", "phase_id"},
    {"ingest_meta", "key"},
};

const TableSpec* find_table(const std::string& name) {
  for (const TableSpec& t : kTables) {
    if (name == t.name) return &t;
  }
  return nullptr;
}

class Statement {
 public:
  Statement(sqlite3* db, const std::string& sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt_, nullptr) != SQLITE_OK) {
      throw Error("E_IO", std::string("prepare failed: ") + sqlite3_errmsg(db) + " in: " + sql);
    }
  }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;
  ~Statement() { sqlite3_finalize(stmt_); }

  Statement& bind(int index, std::int64_t value) {
    check(sqlite3_bind_int64(stmt_, index, value));
    return *this;
  }
  Statement& bind(int index, const std::string& value) {
    check(sqlite3_bind_text(stmt_, index, value.data(), static_cast<int>(value.size()),
                            SQLITE_TRANSIENT));
    return *this;
  }
  Statement& bind_null(int index) {
    check(sqlite3_bind_null(stmt_, index));
    return *this;
  }
  Statement& bind(int index, const std::optional<std::int64_t>& value) {
    return value ? bind(index, *value) : bind_null(index);
  }

  // True while rows remain.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw Error("E_IO", std::string("sqlite: ") + sqlite3_errmsg(db_));
  }

  void run() {
    step();
    sqlite3_reset(stmt_);
    sqlite3_clear_bindings(stmt_);
  }

  int columns() const { return sqlite3_column_count(stmt_); }
  bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
  std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }
  std::string text(int col) const {
    const auto* data = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
    return data ? std::string(data, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
                : std::string();
  }
  std::optional<std::string> cell(int col) const {
    switch (sqlite3_column_type(stmt_, col)) {
      case SQLITE_NULL:
        return std::nullopt;
      case SQLITE_INTEGER:
        return std::to_string(integer(col));
      case SQLITE_FLOAT: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", sqlite3_column_double(stmt_, col));
        return std::string(buf);
      }
      default:
        return text(col);
    }
  }
  PhaseId phase(int col) const {
    return is_null(col) ? PhaseId::unassigned() : PhaseId(static_cast<int>(integer(col)));
  }

 private:
  void check(int rc) const {
    if (rc != SQLITE_OK) throw Error("E_IO", std::string("bind failed: ") + sqlite3_errmsg(db_));
  }

  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

std::optional<std::int64_t> phase_column(PhaseId phase) {
  if (phase.is_unassigned()) return std::nullopt;
  return phase.ordinal();
}

}  // namespace

const std::vector<std::string>& table_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const TableSpec& t : kTables) out.emplace_back(t.name);
    return out;
  }();
  return names;
}

std::size_t LoadReport::count(const std::string& table) const {
  auto it = rows.find(table);
  return it == rows.end() ? 0 : it->second;
}

Store Store::open(const std::filesystem::path& path) {
  sqlite3* db = nullptr;
  const int rc = sqlite3_open_v2(path.string().c_str(), &db,
                                 SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, nullptr);
  if (rc != SQLITE_OK) {
    std::string message = db ? sqlite3_errmsg(db) : "out of memory";
    sqlite3_close(db);
    throw Error("E_IO", "cannot open database " + path.string() + ": " + message);
  }
  Store store(db);
  sqlite3_busy_timeout(db, 5000);
  store.exec("PRAGMA foreign_keys = ON");

  int version = 0;
  {
    Statement stmt(db, "PRAGMA user_version");
    if (stmt.step()) version = static_cast<int>(stmt.integer(0));
  }
  if (version == 0) {
    store.exec("BEGIN");
    try {
      store.exec(schema::kMigrationV1);
      store.exec("COMMIT");
    } catch (...) {
      sqlite3_exec(db, "ROLLBACK", nullptr, nullptr, nullptr);
      throw;
    }
  } else if (version != schema::kVersion) {
    throw Error("E_IO", "database " + path.string() + " has unsupported schema version " +
                            std::to_string(version));
  }
  return store;
}

Store::Store(sqlite3* db) : db_(db) {}

Store::Store(Store&& other) noexcept : db_(std::exchange(other.db_, nullptr)) {}

Store& Store::operator=(Store&& other) noexcept {
  if (this != &other) {
    sqlite3_close(db_);
    db_ = std::exchange(other.db_, nullptr);
  }
  return *this;
}

Store::~Store() { sqlite3_close(db_); }

void Store::exec(const char* sql) const {
  char* message = nullptr;
  if (sqlite3_exec(db_, sql, nullptr, nullptr, &message) != SQLITE_OK) {
    std::string text = message ? message : "unknown error";
    sqlite3_free(message);
    throw Error("E_IO", "sqlite: " + text);
  }
}

bool Store::empty() const {
  for (const TableSpec& t : kTables) {
    Statement stmt(db_, std::string("SELECT EXISTS (SELECT 1 FROM ") + t.name + ")");
    if (stmt.step() && stmt.integer(0) != 0) return false;
  }
  return true;
}

void Store::clear_tables() {
  for (auto it = std::rbegin(kTables); it != std::rend(kTables); ++it) {
    exec((std::string("DELETE FROM ") + it->name).c_str());
  }
}

LoadReport Store::load(const ResolvedDataset& dataset, std::span<const PhaseSummary> summaries,
                       const LoadOptions& options) {
  exec("BEGIN IMMEDIATE");
  try {
    if (!empty()) {
      if (!options.replace) throw Error("E_DB_NOT_EMPTY", "database already holds a dataset");
      clear_tables();
    }

    Statement phase(db_,
                    "INSERT INTO phases (phase_id, name, func_id_start, func_id_end, ordinal) "
                    "VALUES (?, ?, ?, ?, ?)");
    for (std::size_t p = 0; p < dataset.phases.size(); ++p) {
      const PhaseSpec& spec = dataset.phases[p];
      const auto ordinal = static_cast<std::int64_t>(p);
      phase.bind(1, ordinal).bind(2, spec.name).bind(3, spec.func_id_start)
          .bind(4, spec.func_id_end).bind(5, ordinal).run();
    }

    Statement function(db_, "INSERT INTO functions (func_id, symbol) VALUES (?, ?)");
    for (const auto& [func_id, symbol] : dataset.functions) {
      function.bind(1, func_id).bind(2, symbol).run();
    }

    Statement node(db_,
                   "INSERT INTO nodes (node_id, address, initial_opcode, mnemonic, alive, "
                   "created_phase, removed_phase) VALUES (?, ?, ?, ?, ?, ?, ?)");
    for (std::size_t n = 0; n < dataset.nodes.size(); ++n) {
      const IRNode& ir = dataset.nodes[n];
      const auto& removed = dataset.removed_phase[n];
      node.bind(1, static_cast<std::int64_t>(n)).bind(2, ir.address).bind(3, ir.opcode)
          .bind(4, ir.mnemonic).bind(5, std::int64_t{ir.alive ? 1 : 0})
          .bind(6, phase_column(dataset.created_phase[n]))
          .bind(7, removed ? phase_column(*removed) : std::nullopt)
          .run();
    }

    Statement instruction(db_,
                          "INSERT INTO instructions (instr_id, func_id, phase_id) VALUES (?, ?, ?)");
    for (const InstructionRow& row : dataset.instructions) {
      instruction.bind(1, row.instr_id).bind(2, row.func_id).bind(3, phase_column(row.phase)).run();
    }

    Statement access(db_, "INSERT INTO node_accesses (node_id, instr_id) VALUES (?, ?)");
    Statement edge(db_,
                   "INSERT INTO edge_events (event_id, src_node_id, dst_node_id, old_dst_node_id, "
                   "action, instr_id) VALUES (?, ?, ?, ?, ?, ?)");
    Statement opcode(db_,
                     "INSERT INTO opcode_updates (update_id, node_id, new_opcode, instr_id) "
                     "VALUES (?, ?, ?, ?)");
    Statement value(db_,
                    "INSERT INTO value_updates (update_id, node_id, value, instr_id) "
                    "VALUES (?, ?, ?, ?)");
    std::int64_t edge_id = 0;
    std::int64_t opcode_id = 0;
    std::int64_t value_id = 0;
    for (std::size_t n = 0; n < dataset.nodes.size(); ++n) {
      const IRNode& ir = dataset.nodes[n];
      const auto id = static_cast<std::int64_t>(n);
      for (const AccessRecord& a : ir.accesses) access.bind(1, id).bind(2, a.instr_id).run();
      for (const EdgeEvent& e : ir.edge_events) {
        std::optional<std::int64_t> old_dst;
        if (e.old_dst_address) old_dst = dataset.node_id(*e.old_dst_address);
        edge.bind(1, edge_id++).bind(2, id)
            .bind(3, static_cast<std::int64_t>(dataset.node_id(e.dst_address)))
            .bind(4, old_dst).bind(5, std::string(to_string(e.action))).bind(6, e.instr_id).run();
      }
      for (const OpcodeUpdate& u : ir.opcode_updates) {
        opcode.bind(1, opcode_id++).bind(2, id).bind(3, u.new_opcode).bind(4, u.instr_id).run();
      }
      for (const ValueUpdate& v : ir.value_updates) {
        value.bind(1, value_id++).bind(2, id).bind(3, v.value).bind(4, v.instr_id).run();
      }
    }

    Statement summary(db_,
                      "INSERT INTO phase_summaries (phase_id, generated, removed, opcode_updates, "
                      "value_updates, edge_adds, edge_removes, edge_replaces) "
                      "VALUES (?, ?, ?, ?, ?, ?, ?, ?)");
    for (const PhaseSummary& s : summaries) {
      summary.bind(1, std::int64_t{s.phase.ordinal()})
          .bind(2, static_cast<std::int64_t>(s.generated))
          .bind(3, static_cast<std::int64_t>(s.removed))
          .bind(4, static_cast<std::int64_t>(s.opcode_updates))
          .bind(5, static_cast<std::int64_t>(s.value_updates))
          .bind(6, static_cast<std::int64_t>(s.edge_adds))
          .bind(7, static_cast<std::int64_t>(s.edge_removes))
          .bind(8, static_cast<std::int64_t>(s.edge_replaces))
          .run();
    }

    if (const auto& m = options.meta) {
      Statement meta(db_, "INSERT INTO ingest_meta (key, value) VALUES (?, ?)");
      meta.bind(1, std::string("content_hash")).bind(2, m->content_hash).run();
      meta.bind(1, std::string("format_version")).bind(2, std::to_string(m->format_version)).run();
      meta.bind(1, std::string("ingested_at")).bind(2, m->ingested_at).run();
      meta.bind(1, std::string("source_name")).bind(2, m->source_name).run();
    }

    exec("COMMIT");
  } catch (...) {
    sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
    throw;
  }
  return row_counts();
}

LoadReport Store::load_tables(const std::map<std::string, TableData>& tables, bool replace) {
  for (const auto& [name, data] : tables) {
    if (!find_table(name)) throw Error("E_NO_SUCH_TABLE", "unknown table " + name);
  }
  exec("BEGIN IMMEDIATE");
  try {
    if (!empty()) {
      if (!replace) throw Error("E_DB_NOT_EMPTY", "database already holds a dataset");
      clear_tables();
    }
    for (const TableSpec& t : kTables) {
      auto it = tables.find(t.name);
      if (it == tables.end() || it->second.rows.empty()) continue;
      const TableData& data = it->second;
      const auto known = columns(t.name);
      std::string sql = std::string("INSERT INTO ") + t.name + " (";
      std::string params;
      for (std::size_t c = 0; c < data.columns.size(); ++c) {
        const bool ok = std::any_of(known.begin(), known.end(),
                                    [&](const ColumnInfo& k) { return k.name == data.columns[c]; });
        if (!ok) throw Error("E_IO", "table " + std::string(t.name) + " has no column " + data.columns[c]);
        sql += (c ? ", " : "") + data.columns[c];
        params += c ? ", ?" : "?";
      }
      sql += ") VALUES (" + params + ")";
      Statement insert(db_, sql);
      for (const auto& row : data.rows) {
        if (row.size() != data.columns.size()) {
          throw Error("E_IO", "row width mismatch in table " + std::string(t.name));
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
          const int index = static_cast<int>(c) + 1;
          if (row[c]) insert.bind(index, *row[c]);
          else insert.bind_null(index);
        }
        insert.run();
      }
    }
    exec("COMMIT");
  } catch (...) {
    sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
    throw;
  }
  return row_counts();
}

LoadReport Store::row_counts() const {
  LoadReport report;
  for (const TableSpec& t : kTables) {
    Statement stmt(db_, std::string("SELECT count(*) FROM ") + t.name);
    stmt.step();
    report.rows[t.name] = static_cast<std::size_t>(stmt.integer(0));
  }
  return report;
}

std::optional<IngestMeta> Store::meta() const {
  Statement stmt(db_, "SELECT key, value FROM ingest_meta");
  IngestMeta meta;
  bool any = false;
  while (stmt.step()) {
    any = true;
    const std::string key = stmt.text(0);
    const std::string value = stmt.text(1);
    if (key == "format_version") meta.format_version = std::stoi(value);
    else if (key == "source_name") meta.source_name = value;
    else if (key == "content_hash") meta.content_hash = value;
    else if (key == "ingested_at") meta.ingested_at = value;
  }
  if (!any) return std::nullopt;
  return meta;
}

ResolvedDataset Store::read_dataset() const {
  ResolvedDataset out;
  if (auto m = meta()) out.format_version = m->format_version;

  {
    Statement stmt(db_, "SELECT func_id, symbol FROM functions ORDER BY func_id");
    while (stmt.step()) out.functions[stmt.integer(0)] = stmt.text(1);
  }
  {
    Statement stmt(db_,
                   "SELECT name, func_id_start, func_id_end, ordinal FROM phases ORDER BY ordinal");
    while (stmt.step()) {
      if (stmt.integer(3) != static_cast<std::int64_t>(out.phases.size())) {
        throw Error("E_CORRUPT", "phase ordinals are not dense");
      }
      out.phases.push_back({stmt.text(0), stmt.integer(1), stmt.integer(2)});
    }
  }
  {
    Statement stmt(db_,
                   "SELECT node_id, address, initial_opcode, mnemonic, alive, created_phase, "
                   "removed_phase FROM nodes ORDER BY node_id");
    while (stmt.step()) {
      if (stmt.integer(0) != static_cast<std::int64_t>(out.nodes.size())) {
        throw Error("E_CORRUPT", "node ids are not dense");
      }
      IRNode node;
      node.address = stmt.text(1);
      node.opcode = stmt.text(2);
      node.mnemonic = stmt.text(3);
      node.alive = stmt.integer(4) != 0;
      out.address_index.emplace(node.address, static_cast<NodeId>(out.nodes.size()));
      out.created_phase.push_back(stmt.phase(5));
      out.removed_phase.push_back(node.alive ? std::nullopt : std::optional(stmt.phase(6)));
      out.nodes.push_back(std::move(node));
    }
  }
  {
    Statement stmt(db_, "SELECT instr_id, func_id, phase_id FROM instructions ORDER BY instr_id");
    while (stmt.step()) out.instructions.push_back({stmt.integer(0), stmt.integer(1), stmt.phase(2)});
  }
  {
    Statement stmt(db_,
                   "SELECT a.node_id, a.instr_id, i.func_id FROM node_accesses a "
                   "JOIN instructions i ON i.instr_id = a.instr_id ORDER BY a.node_id, a.instr_id");
    while (stmt.step()) {
      out.nodes.at(static_cast<std::size_t>(stmt.integer(0)))
          .accesses.push_back({stmt.integer(1), stmt.integer(2)});
    }
  }
  {
    Statement stmt(db_, "SELECT node_id, new_opcode, instr_id FROM opcode_updates ORDER BY update_id");
    while (stmt.step()) {
      out.nodes.at(static_cast<std::size_t>(stmt.integer(0)))
          .opcode_updates.push_back({stmt.text(1), stmt.integer(2)});
    }
  }
  {
    Statement stmt(db_, "SELECT node_id, value, instr_id FROM value_updates ORDER BY update_id");
    while (stmt.step()) {
      out.nodes.at(static_cast<std::size_t>(stmt.integer(0)))
          .value_updates.push_back({stmt.text(1), stmt.integer(2)});
    }
  }
  {
    Statement stmt(db_,
                   "SELECT e.src_node_id, e.action, d.address, o.address, e.instr_id "
                   "FROM edge_events e JOIN nodes d ON d.node_id = e.dst_node_id "
                   "LEFT JOIN nodes o ON o.node_id = e.old_dst_node_id ORDER BY e.event_id");
    while (stmt.step()) {
      EdgeEvent edge;
      auto action = parse_edge_action(stmt.text(1));
      if (!action) throw Error("E_CORRUPT", "unknown edge action " + stmt.text(1));
      edge.action = *action;
      edge.dst_address = stmt.text(2);
      if (!stmt.is_null(3)) edge.old_dst_address = stmt.text(3);
      edge.instr_id = stmt.integer(4);
      out.nodes.at(static_cast<std::size_t>(stmt.integer(0))).edge_events.push_back(std::move(edge));
    }
  }
  return out;
}

std::vector<PhaseSummary> Store::read_phase_summaries() const {
  Statement stmt(db_,
                 "SELECT phase_id, generated, removed, opcode_updates, value_updates, edge_adds, "
                 "edge_removes, edge_replaces FROM phase_summaries ORDER BY phase_id");
  std::vector<PhaseSummary> out;
  while (stmt.step()) {
    PhaseSummary s;
    s.phase = PhaseId(static_cast<int>(stmt.integer(0)));
    s.generated = static_cast<std::size_t>(stmt.integer(1));
    s.removed = static_cast<std::size_t>(stmt.integer(2));
    s.opcode_updates = static_cast<std::size_t>(stmt.integer(3));
    s.value_updates = static_cast<std::size_t>(stmt.integer(4));
    s.edge_adds = static_cast<std::size_t>(stmt.integer(5));
    s.edge_removes = static_cast<std::size_t>(stmt.integer(6));
    s.edge_replaces = static_cast<std::size_t>(stmt.integer(7));
    out.push_back(s);
  }
  return out;
}

std::vector<NodeRow> Store::query_nodes(const NodeFilter& filter) const {
  std::int64_t reference = -1;
  if (filter.phase) {
    reference = filter.phase->ordinal();
  } else {
    Statement stmt(db_, "SELECT COALESCE(MAX(ordinal), -1) FROM phases");
    stmt.step();
    reference = stmt.integer(0);
  }

  std::string sql =
      "SELECT n.node_id, n.address, n.initial_opcode, n.mnemonic, n.alive, n.created_phase, "
      "n.removed_phase FROM nodes n WHERE COALESCE(n.created_phase, -1) <= ?1";
  const char* live = "NOT (n.alive = 0 AND COALESCE(n.removed_phase, -1) <= ?1)";
  if (filter.alive_at_phase) {
    sql += *filter.alive_at_phase ? std::string(" AND ") + live
                                  : std::string(" AND NOT (") + live + ")";
  }
  if (filter.opcode) {
    sql +=
        " AND COALESCE((SELECT u.new_opcode FROM opcode_updates u "
        "JOIN instructions i ON i.instr_id = u.instr_id "
        "WHERE u.node_id = n.node_id AND COALESCE(i.phase_id, -1) <= ?1 "
        "ORDER BY u.instr_id DESC, u.update_id DESC LIMIT 1), n.initial_opcode) = ?2";
  }
  sql += " ORDER BY n.node_id";

  Statement stmt(db_, sql);
  stmt.bind(1, reference);
  if (filter.opcode) stmt.bind(2, *filter.opcode);
  std::vector<NodeRow> out;
  while (stmt.step()) {
    NodeRow row;
    row.node_id = static_cast<NodeId>(stmt.integer(0));
    row.address = stmt.text(1);
    row.initial_opcode = stmt.text(2);
    row.mnemonic = stmt.text(3);
    row.alive = stmt.integer(4) != 0;
    row.created_phase = stmt.phase(5);
    if (!row.alive) row.removed_phase = stmt.phase(6);
    out.push_back(std::move(row));
  }
  return out;
}

bool Store::has_node(NodeId node) const {
  Statement stmt(db_, "SELECT 1 FROM nodes WHERE node_id = ?");
  stmt.bind(1, static_cast<std::int64_t>(node));
  return stmt.step();
}

NodeEvents Store::query_node_events(NodeId node) const {
  if (!has_node(node)) throw Error("E_NO_SUCH_NODE", "no node with id " + std::to_string(node));
  const auto id = static_cast<std::int64_t>(node);
  NodeEvents events;
  {
    Statement stmt(db_,
                   "SELECT a.instr_id, i.func_id FROM node_accesses a "
                   "JOIN instructions i ON i.instr_id = a.instr_id "
                   "WHERE a.node_id = ? ORDER BY a.instr_id");
    stmt.bind(1, id);
    while (stmt.step()) events.accesses.push_back({stmt.integer(0), stmt.integer(1)});
  }
  {
    Statement stmt(db_,
                   "SELECT new_opcode, instr_id FROM opcode_updates WHERE node_id = ? "
                   "ORDER BY instr_id, update_id");
    stmt.bind(1, id);
    while (stmt.step()) events.opcode_updates.push_back({stmt.text(0), stmt.integer(1)});
  }
  {
    Statement stmt(db_,
                   "SELECT value, instr_id FROM value_updates WHERE node_id = ? "
                   "ORDER BY instr_id, update_id");
    stmt.bind(1, id);
    while (stmt.step()) events.value_updates.push_back({stmt.text(0), stmt.integer(1)});
  }
  {
    Statement stmt(db_,
                   "SELECT e.action, d.address, o.address, e.instr_id FROM edge_events e "
                   "JOIN nodes d ON d.node_id = e.dst_node_id "
                   "LEFT JOIN nodes o ON o.node_id = e.old_dst_node_id "
                   "WHERE e.src_node_id = ? ORDER BY e.instr_id, e.event_id");
    stmt.bind(1, id);
    while (stmt.step()) {
      EdgeEvent edge;
      edge.action = parse_edge_action(stmt.text(0)).value_or(EdgeAction::kAdd);
      edge.dst_address = stmt.text(1);
      if (!stmt.is_null(2)) edge.old_dst_address = stmt.text(2);
      edge.instr_id = stmt.integer(3);
      events.edge_events.push_back(std::move(edge));
    }
  }
  return events;
}

LastAccess Store::query_last_access(NodeId node) const {
  Statement stmt(db_,
                 "SELECT a.instr_id, i.func_id, f.symbol, i.phase_id FROM node_accesses a "
                 "JOIN instructions i ON i.instr_id = a.instr_id "
                 "JOIN functions f ON f.func_id = i.func_id "
                 "WHERE a.node_id = ? ORDER BY a.instr_id DESC LIMIT 1");
  stmt.bind(1, static_cast<std::int64_t>(node));
  if (!stmt.step()) {
    throw Error("E_NO_SUCH_NODE", "no node with id " + std::to_string(node));
  }
  return {stmt.integer(0), stmt.integer(1), stmt.text(2), stmt.phase(3)};
}

std::vector<ColumnInfo> Store::columns(const std::string& table) const {
  if (!find_table(table)) throw Error("E_NO_SUCH_TABLE", "unknown table " + table);
  Statement stmt(db_, "PRAGMA table_info(" + table + ")");
  std::vector<ColumnInfo> out;
  while (stmt.step()) {
    ColumnInfo info;
    info.name = stmt.text(1);
    info.type = stmt.text(2);
    std::transform(info.type.begin(), info.type.end(), info.type.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    info.nullable = stmt.integer(3) == 0 && stmt.integer(5) == 0;
    out.push_back(std::move(info));
  }
  return out;
}

void Store::for_each_row(
    const std::string& table,
    const std::function<void(std::span<const std::optional<std::string>>)>& visit) const {
  const TableSpec* spec = find_table(table);
  if (!spec) throw Error("E_NO_SUCH_TABLE", "unknown table " + table);
  Statement stmt(db_, std::string("SELECT * FROM ") + spec->name + " ORDER BY " + spec->order_by);
  std::vector<std::optional<std::string>> cells(static_cast<std::size_t>(stmt.columns()));
  while (stmt.step()) {
    for (int c = 0; c < stmt.columns(); ++c) cells[static_cast<std::size_t>(c)] = stmt.cell(c);
    visit(cells);
  }
}

}  // namespace jitscope
