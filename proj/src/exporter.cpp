#include "jitscope/exporter.hpp"

#include <fstream>
#include <sstream>

#include "jitscope/csv.hpp"
#include "jitscope/error.hpp"

namespace jitscope {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("E_IO", "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error("E_IO", "write failed for " + path.string());
}

}  // namespace

std::size_t write_table_csv(const Store& store, const std::string& table, std::ostream& out) {
  std::vector<std::string> header;
  for (const ColumnInfo& column : store.columns(table)) header.push_back(column.name);
  csv::write_row(out, header);

  std::size_t rows = 0;
  std::vector<std::string> fields;
  store.for_each_row(table, [&](std::span<const std::optional<std::string>> cells) {
    fields.clear();
    for (const auto& cell : cells) fields.push_back(cell.value_or(""));
    csv::write_row(out, fields);
    ++rows;
  });
  return rows;
}

std::size_t export_table(const Store& store, const std::string& table,
                         const fs::path& destination_dir) {
  store.columns(table);  // rejects unknown tables before touching the filesystem
  const fs::path path = destination_dir / (table + ".csv");
  std::ofstream out = open_output(path);
  const std::size_t rows = write_table_csv(store, table, out);
  finish(out, path);
  return rows;
}

void write_snapshot_nodes_csv(const GraphSnapshot& snapshot, std::ostream& out) {
  const std::vector<std::string> header{"node_id",  "address",       "effective_opcode",
                                        "mnemonic", "current_value", "status"};
  csv::write_row(out, header);
  for (const SnapshotNode& node : snapshot.nodes) {
    const std::vector<std::string> row{std::to_string(node.node_id), node.address,
                                       node.effective_opcode,        node.mnemonic,
                                       node.current_value.value_or(""),
                                       std::string(to_string(node.status))};
    csv::write_row(out, row);
  }
}

void write_snapshot_edges_csv(const GraphSnapshot& snapshot, std::ostream& out) {
  const std::vector<std::string> header{"src_node_id", "dst_node_id", "multiplicity"};
  csv::write_row(out, header);
  for (const auto& [key, count] : snapshot.edges) {
    const std::vector<std::string> row{std::to_string(key.src), std::to_string(key.dst),
                                       std::to_string(count)};
    csv::write_row(out, row);
  }
}

std::string snapshot_file_tag(PhaseId phase) {
  return phase.is_unassigned() ? "unassigned" : std::to_string(phase.ordinal());
}

SnapshotFiles export_snapshot(const PhaseEngine& engine, PhaseId phase,
                              const fs::path& destination_dir) {
  const GraphSnapshot snapshot = engine.snapshot_at(phase);
  SnapshotFiles files{destination_dir / ("snapshot_nodes_" + snapshot_file_tag(phase) + ".csv"),
                      destination_dir / ("snapshot_edges_" + snapshot_file_tag(phase) + ".csv")};
  {
    std::ofstream out = open_output(files.nodes_csv);
    write_snapshot_nodes_csv(snapshot, out);
    finish(out, files.nodes_csv);
  }
  {
    std::ofstream out = open_output(files.edges_csv);
    write_snapshot_edges_csv(snapshot, out);
    finish(out, files.edges_csv);
  }
  return files;
}

void write_summary_csv(const ResolvedDataset& dataset, std::span<const PhaseSummary> summaries,
                       std::ostream& out) {
  const std::vector<std::string> header{"phase_id",       "name",          "generated",
                                        "removed",        "opcode_updates", "value_updates",
                                        "edge_adds",      "edge_removes",  "edge_replaces"};
  csv::write_row(out, header);
  for (const PhaseSummary& s : summaries) {
    const std::vector<std::string> row{std::to_string(s.phase.ordinal()),
                                       std::string(dataset.phase_name(s.phase)),
                                       std::to_string(s.generated),
                                       std::to_string(s.removed),
                                       std::to_string(s.opcode_updates),
                                       std::to_string(s.value_updates),
                                       std::to_string(s.edge_adds),
                                       std::to_string(s.edge_removes),
                                       std::to_string(s.edge_replaces)};
    csv::write_row(out, row);
  }
}

fs::path export_summary(const PhaseEngine& engine, const fs::path& destination_dir) {
  const fs::path path = destination_dir / "phase_summary.csv";
  std::ofstream out = open_output(path);
  const auto summaries = engine.summarize_all();
  write_summary_csv(engine.dataset(), summaries, out);
  finish(out, path);
  return path;
}

std::vector<fs::path> export_all(const Store& store, const PhaseEngine& engine,
                                 const fs::path& destination_dir) {
  std::vector<fs::path> written;
  for (const std::string& table : table_names()) {
    export_table(store, table, destination_dir);
    written.push_back(destination_dir / (table + ".csv"));
  }
  for (PhaseId phase : engine.phase_order()) {
    SnapshotFiles files = export_snapshot(engine, phase, destination_dir);
    written.push_back(files.nodes_csv);
    written.push_back(files.edges_csv);
  }
  written.push_back(export_summary(engine, destination_dir));
  return written;
}

LoadReport import_tables(Store& store, const fs::path& source_dir, bool replace) {
  std::map<std::string, TableData> tables;
  for (const std::string& table : table_names()) {
    const fs::path path = source_dir / (table + ".csv");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("E_IO", "cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    auto rows = csv::parse(buffer.str());
    if (rows.empty()) throw Error("E_IO", path.string() + " has no header row");

    const auto columns = store.columns(table);
    TableData data;
    data.columns = rows.front();
    std::vector<bool> null_when_empty;
    for (const std::string& name : data.columns) {
      bool nullable_integer = false;
      for (const ColumnInfo& info : columns) {
        if (info.name == name) nullable_integer = info.nullable && info.type == "INTEGER";
      }
      null_when_empty.push_back(nullable_integer);
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
      std::vector<std::optional<std::string>> cells;
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        if (c < null_when_empty.size() && null_when_empty[c] && rows[r][c].empty()) {
          cells.emplace_back(std::nullopt);
        } else {
          cells.emplace_back(std::move(rows[r][c]));
        }
      }
      data.rows.push_back(std::move(cells));
    }
    tables.emplace(table, std::move(data));
  }
  return store.load_tables(tables, replace);
}

}  // namespace jitscope
