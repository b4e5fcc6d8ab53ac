#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "jitscope/phase_engine.hpp"
#include "jitscope/store.hpp"

namespace jitscope {

// Writes one schema table as CSV, rows in primary-key order, NULL as the
// empty string. Returns the data-row count. Throws E_NO_SUCH_TABLE, E_IO.
std::size_t write_table_csv(const Store& store, const std::string& table, std::ostream& out);
std::size_t export_table(const Store& store, const std::string& table,
                         const std::filesystem::path& destination_dir);

void write_snapshot_nodes_csv(const GraphSnapshot& snapshot, std::ostream& out);
void write_snapshot_edges_csv(const GraphSnapshot& snapshot, std::ostream& out);

struct SnapshotFiles {
  std::filesystem::path nodes_csv;
  std::filesystem::path edges_csv;
};

// "unassigned" for the pseudo-phase, the decimal ordinal otherwise.
std::string snapshot_file_tag(PhaseId phase);

SnapshotFiles export_snapshot(const PhaseEngine& engine, PhaseId phase,
                              const std::filesystem::path& destination_dir);

void write_summary_csv(const ResolvedDataset& dataset, std::span<const PhaseSummary> summaries,
                       std::ostream& out);
std::filesystem::path export_summary(const PhaseEngine& engine,
                                     const std::filesystem::path& destination_dir);

// Every table, every phase snapshot and the phase summary. Returns written paths.
std::vector<std::filesystem::path> export_all(const Store& store, const PhaseEngine& engine,
                                              const std::filesystem::path& destination_dir);

// Reads <table>.csv files written by export_table back into a store.
LoadReport import_tables(Store& store, const std::filesystem::path& source_dir, bool replace);

}  // namespace jitscope
