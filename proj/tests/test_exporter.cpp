#include <gtest/gtest.h>

#include <sstream>

#include "jitscope/csv.hpp"
#include "jitscope/error.hpp"
#include "jitscope/exporter.hpp"
#include "support/test_support.hpp"

using namespace jitscope;
using testing_support::curated;
using testing_support::read_file;

namespace {

Store load(const ResolvedDataset& ds) {
  Store store = Store::open(":memory:");
  LoadOptions options;
  options.meta = IngestMeta{1, "x.json", "hash", "1970-01-01T00:00:00Z"};
  store.load(ds, PhaseEngine(ds).summarize_all(), options);
  return store;
}

}  // namespace

TEST(Csv, EscapeAndParse) {
  EXPECT_EQ(csv::escape("plain"), "plain");
  EXPECT_EQ(csv::escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv::escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv::escape("line\nbreak"), "\"line\nbreak\"");
  auto rows = csv::parse("a,\"b,c\",\"d\"\"e\"\n,\"x\ny\"\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"a", "b,c", "d\"e"}));
  EXPECT_EQ(rows[1], (std::vector<std::string>{"", "x\ny"}));
}

TEST(ExportTable, Functions) {
  IRDocument doc;
  doc.functions = {{5, "DCE"}, {2, "Fold"}};
  auto ds = assign_phases(doc);
  Store store = load(ds);
  std::ostringstream out;
  EXPECT_EQ(write_table_csv(store, "functions", out), 2u);
  EXPECT_EQ(out.str(), "func_id,symbol\n2,Fold\n5,DCE\n");
}

TEST(ExportTable, EmptyPhasesIsHeaderOnly) {
  Store store = load(ResolvedDataset{});
  testing_support::TempDir dir("export");
  EXPECT_EQ(export_table(store, "phases", dir.path()), 0u);
  EXPECT_EQ(read_file(dir / "phases.csv"), "phase_id,name,func_id_start,func_id_end,ordinal\n");
}

TEST(ExportTable, UnknownTable) {
  Store store = load(ResolvedDataset{});
  std::ostringstream out;
  try {
    write_table_csv(store, "bogus", out);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "E_NO_SUCH_TABLE");
  }
}

TEST(ExportSnapshot, EmptyPhaseIsHeaderOnly) {
  IRDocument doc;
  doc.phases = {{"A", 0, 9}};
  auto ds = assign_phases(doc);
  PhaseEngine engine(ds);
  testing_support::TempDir dir("snap");
  auto files = export_snapshot(engine, PhaseId(0), dir.path());
  EXPECT_EQ(files.nodes_csv.filename(), "snapshot_nodes_0.csv");
  EXPECT_EQ(read_file(files.nodes_csv), "node_id,address,effective_opcode,mnemonic,current_value,status\n");
  EXPECT_EQ(read_file(files.edges_csv), "src_node_id,dst_node_id,multiplicity\n");
}

TEST(ExportSnapshot, CuratedInliningMultiplicity) {
  auto ds = curated();
  PhaseEngine engine(ds);
  std::ostringstream edges;
  write_snapshot_edges_csv(engine.snapshot_at(PhaseId(1)), edges);
  EXPECT_EQ(edges.str(),
            "src_node_id,dst_node_id,multiplicity\n1,0,1\n3,1,1\n3,2,1\n5,1,2\n6,3,1\n10,1,1\n10,2,1\n");
  std::ostringstream nodes;
  write_snapshot_nodes_csv(engine.snapshot_at(PhaseId::unassigned()), nodes);
  EXPECT_EQ(nodes.str(),
            "node_id,address,effective_opcode,mnemonic,current_value,status\n"
            "0,0x1000,Start,start,,alive_and_generated_this_phase\n"
            "1,0x1008,Parameter,p0,,alive_and_generated_this_phase\n"
            "9,0x1048,Merge,merge,,generated_this_phase\n");
  EXPECT_EQ(snapshot_file_tag(PhaseId::unassigned()), "unassigned");
}

TEST(ExportSummary, MatchesEngineAndConserves) {
  auto ds = curated();
  PhaseEngine engine(ds);
  std::ostringstream out;
  auto all = engine.summarize_all();
  write_summary_csv(ds, all, out);
  auto rows = csv::parse(out.str());
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0][0], "phase_id");
  EXPECT_EQ(rows[1], (std::vector<std::string>{"-1", "(unassigned)", "3", "1", "0", "0", "0", "0", "0"}));
  long generated = 0;
  for (std::size_t r = 1; r < rows.size(); ++r) generated += std::stol(rows[r][2]);
  EXPECT_EQ(generated, 12);
}

TEST(ExportAll, ImportReproducesTables) {
  auto ds = curated();
  Store store = load(ds);
  PhaseEngine engine(ds);
  testing_support::TempDir dir("all");
  auto written = export_all(store, engine, dir.path());
  EXPECT_EQ(written.size(), 10u + 2u * 5u + 1u);

  Store copy = Store::open(":memory:");
  import_tables(copy, dir.path(), false);
  EXPECT_EQ(copy.read_dataset(), ds);
  EXPECT_EQ(copy.row_counts(), store.row_counts());
  for (const auto& table : table_names()) {
    std::ostringstream a, b;
    write_table_csv(store, table, a);
    write_table_csv(copy, table, b);
    EXPECT_EQ(a.str(), b.str()) << table;
  }
}
