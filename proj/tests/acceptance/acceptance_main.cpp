// One PASS/FAIL line per acceptance criterion. Exit status is non-zero when
// any criterion fails.

#include <httplib.h>

#include <chrono>
#include <condition_variable>
#include <iomanip>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "jitscope/api_server.hpp"
#include "jitscope/cli.hpp"
#include "jitscope/error.hpp"
#include "jitscope/exporter.hpp"
#include "jitscope/fixture_gen.hpp"
#include "jitscope/json_views.hpp"
#include "jitscope/store.hpp"
#include "support/test_support.hpp"

using namespace jitscope;
using nlohmann::json;
using testing_support::read_file;
using testing_support::TempDir;

namespace {

// Pinned bounds.
constexpr double kOracleSuiteSeconds = 60.0;
constexpr double kLargeUploadSeconds = 5.0;
constexpr std::size_t kOracleFixtures = 100;
constexpr std::size_t kOracleMaxNodes = 200;
constexpr std::size_t kOracleMaxPhases = 8;
constexpr std::size_t kOracleMaxEvents = 2000;
constexpr std::size_t kCompositionFixtures = 20;
constexpr std::size_t kRoundTripFixtures = 10;
constexpr std::size_t kTruthFixtures = 30;
constexpr std::size_t kLargeNodes = 10000;
constexpr std::size_t kLargeMinEvents = 100000;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Counts every event record in a document: accesses and the three update kinds.
std::size_t event_count(const IRDocument& doc) {
  std::size_t n = 0;
  for (const auto& node : doc.nodes) {
    n += node.accesses.size() + node.opcode_updates.size() + node.value_updates.size() + node.edge_events.size();
  }
  return n;
}

std::size_t update_count(const IRDocument& doc) {
  std::size_t n = 0;
  for (const auto& node : doc.nodes) {
    n += node.opcode_updates.size() + node.value_updates.size() + node.edge_events.size();
  }
  return n;
}

// Oracle-suite fixtures, shrunk until they fit the event budget.
GeneratedFixture oracle_fixture(std::size_t i) {
  FixtureParams p;
  p.nodes = 20 + (i * 37) % (kOracleMaxNodes - 19);
  p.phases = 1 + i % kOracleMaxPhases;
  p.events_per_node = 1 + i % 7;
  p.seed = 0x9e3779b97f4a7c15ULL * (i + 1);
  for (;;) {
    GeneratedFixture fx = generate_fixture(p);
    if (event_count(fx.document) <= kOracleMaxEvents || p.nodes == 0) return fx;
    p.nodes = p.nodes * 9 / 10;
  }
}

struct Criterion {
  std::string name;
  bool pass = true;
  std::ostringstream why;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) why << what;
    pass = pass && ok;
  }
};

int failures = 0;

void report(Criterion& c, const std::string& detail) {
  std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << (c.pass ? detail : c.why.str()) << std::endl;
  failures += !c.pass;
}

template <typename Fn>
void run_criterion(const std::string& name, Fn body) {
  Criterion c;
  c.name = name;
  std::string detail;
  try {
    detail = body(c);
  } catch (const std::exception& e) {
    c.require(false, std::string("exception: ") + e.what());
  }
  report(c, detail);
}

std::string snapshot_oracle(Criterion& c) {
  const auto start = Clock::now();
  std::size_t snapshots = 0, max_events = 0, max_nodes = 0, max_phases = 0;
  for (std::size_t i = 0; i < kOracleFixtures; ++i) {
    const GeneratedFixture fx = oracle_fixture(i);
    max_events = std::max(max_events, event_count(fx.document));
    max_nodes = std::max(max_nodes, fx.document.nodes.size());
    max_phases = std::max(max_phases, fx.document.phases.size());
    const ResolvedDataset ds = assign_phases(fx.document);
    const PhaseEngine engine(ds);
    const oracle::Model model(fx.document);
    for (PhaseId p : engine.phase_order()) {
      const auto got = testing_support::to_oracle_form(ds, engine.snapshot_at(p));
      const auto want = model.snapshot(p.ordinal());
      const std::string where = "fixture " + std::to_string(i) + " phase " + std::to_string(p.ordinal());
      c.require(got.nodes == want.nodes, "node set/status/opcode mismatch at " + where);
      c.require(got.edges == want.edges, "edge multiset mismatch at " + where);
      ++snapshots;
    }
  }
  const double elapsed = seconds_since(start);
  c.require(max_events <= kOracleMaxEvents && max_nodes <= kOracleMaxNodes && max_phases <= kOracleMaxPhases,
            "fixture exceeded the size envelope");
  c.require(elapsed < kOracleSuiteSeconds, "took " + std::to_string(elapsed) + " s");
  std::ostringstream d;
  d << kOracleFixtures << " fixtures, " << snapshots << " snapshots equal to oracle; max " << max_nodes
    << " nodes, " << max_phases << " phases, " << max_events << " events; " << std::fixed
    << std::setprecision(2) << elapsed << " s (bound " << kOracleSuiteSeconds << " s)";
  return d.str();
}

std::size_t total(const EdgeMultiset& edges) {
  std::size_t n = 0;
  for (const auto& [key, count] : edges) n += count;
  return n;
}

std::string conservation(Criterion& c) {
  std::size_t datasets = 0, pairs = 0;
  auto check = [&](const std::string& label, const ResolvedDataset& ds) {
    const PhaseEngine engine(ds);
    const auto summaries = engine.summarize_all();
    std::size_t generated = 0, removed = 0, alive = 0;
    for (const auto& s : summaries) {
      generated += s.generated;
      removed += s.removed;
    }
    for (const auto& n : ds.nodes) alive += n.alive;
    c.require(generated == ds.nodes.size(), label + ": sum generated != node count");
    c.require(generated - removed == alive, label + ": generated - removed != alive");

    const auto order = engine.phase_order();
    for (std::size_t k = 1; k < order.size(); ++k) {
      const PhaseSummary& s = summaries[k];
      const PhaseDiff d = engine.diff(order[k - 1], order[k]);
      const std::string where = label + " phase " + std::to_string(order[k].ordinal());
      c.require(d.nodes_added.size() == s.generated, where + ": |nodes_added| != generated");
      c.require(d.nodes_removed.size() == s.removed, where + ": |nodes_removed| != removed");
      // Replays of removals that found no edge change nothing, so they are added back.
      const auto before = engine.snapshot_at(order[k - 1]);
      const auto after = engine.snapshot_at(order[k]);
      std::size_t missing = 0, dangling = 0;
      for (const auto& a : after.anomalies) {
        if (a.code == "A_DANGLING_EDGE") ++dangling;
      }
      missing = std::count_if(after.anomalies.begin(), after.anomalies.end(),
                              [](const Anomaly& a) { return a.code == "A_REMOVE_MISSING_EDGE"; }) -
                std::count_if(before.anomalies.begin(), before.anomalies.end(),
                              [](const Anomaly& a) { return a.code == "A_REMOVE_MISSING_EDGE"; });
      const long net = static_cast<long>(total(d.edges_added)) - static_cast<long>(total(d.edges_removed));
      const long expected = static_cast<long>(s.edge_adds) - static_cast<long>(s.edge_removes) + static_cast<long>(missing);
      c.require(dangling == 0, where + ": snapshot reported dangling edges");
      c.require(net == expected, where + ": edge net change " + std::to_string(net) +
                                                     " != adds - removes + missing " + std::to_string(expected));
      c.require(total(d.edges_added) <= s.edge_adds + s.edge_replaces, where + ": more edges added than events");
      c.require(total(d.edges_removed) <= s.edge_removes + s.edge_replaces,
                where + ": more edges removed than events");
      ++pairs;
    }
    ++datasets;
  };
  check("curated", testing_support::curated());
  for (std::size_t i = 0; i < kOracleFixtures; ++i) {
    check("fixture " + std::to_string(i), assign_phases(oracle_fixture(i).document));
  }
  return std::to_string(datasets) + " datasets, " + std::to_string(pairs) +
         " adjacent phase pairs; node conservation and diff/summary agreement exact";
}

std::string composition(Criterion& c) {
  std::size_t triples = 0;
  for (std::size_t i = 0; i < kCompositionFixtures; ++i) {
    const GeneratedFixture fx = oracle_fixture(i * 5 + 3);
    const ResolvedDataset ds = assign_phases(fx.document);
    const PhaseEngine engine(ds);
    const auto order = engine.phase_order();
    std::map<std::pair<std::size_t, std::size_t>, PhaseDiff> diffs;
    for (std::size_t a = 0; a < order.size(); ++a)
      for (std::size_t b = a; b < order.size(); ++b) diffs[{a, b}] = engine.diff(order[a], order[b]);
    for (std::size_t a = 0; a < order.size(); ++a)
      for (std::size_t b = a; b < order.size(); ++b)
        for (std::size_t cc = b; cc < order.size(); ++cc) {
          c.require(compose(diffs[{a, b}], diffs[{b, cc}]) == diffs[{a, cc}],
                    "fixture " + std::to_string(i) + " triple (" + std::to_string(a) + "," + std::to_string(b) +
                        "," + std::to_string(cc) + ")");
          ++triples;
        }
  }
  return std::to_string(kCompositionFixtures) + " fixtures, " + std::to_string(triples) + " phase triples composed exactly";
}

int cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

std::string cli_output(std::vector<std::string> args) {
  std::ostringstream out, err;
  cli::run(args, out, err);
  return out.str();
}

std::string round_trip(Criterion& c) {
  TempDir dir("acceptance-rt");
  std::size_t files_compared = 0;
  for (std::size_t i = 0; i <= kRoundTripFixtures; ++i) {
    const std::string tag = std::to_string(i);
    std::filesystem::path input;
    if (i == 0) {
      input = testing_support::data_dir() / "curated.jir.json";
    } else {
      input = dir / ("f" + tag + ".json");
      c.require(cli({"gen-fixture", "--nodes", std::to_string(20 * i), "--phases", std::to_string(1 + i % 8),
                     "--seed", std::to_string(1000 + i), "-o", input.string()}) == 0,
                "gen-fixture failed");
    }
    const auto db = (dir / ("a" + tag + ".db")).string();
    c.require(cli({"ingest", input.string(), "--db", db}) == 0, "ingest failed for " + tag);
    const auto out1 = dir / ("out1_" + tag);
    const auto out2 = dir / ("out2_" + tag);
    c.require(cli({"export", "--db", db, "-o", out1.string(), "--all"}) == 0, "export failed");
    c.require(cli({"export", "--db", db, "-o", out2.string(), "--all"}) == 0, "export failed");
    for (const auto& entry : std::filesystem::directory_iterator(out1)) {
      c.require(read_file(entry.path()) == read_file(out2 / entry.path().filename()),
                "export not byte-identical: " + entry.path().filename().string());
      ++files_compared;
    }

    // re-ingest the exported tables and ask every query again
    const auto db2 = (dir / ("b" + tag + ".db")).string();
    c.require(cli({"import", "--db", db2, "--from", out1.string()}) == 0, "import failed for " + tag);
    Store original = Store::open(db);
    Store copy = Store::open(db2);
    for (const auto& table : table_names()) {
      std::ostringstream a, b;
      write_table_csv(original, table, a);
      write_table_csv(copy, table, b);
      c.require(a.str() == b.str(), "table " + table + " differs after re-ingest (" + tag + ")");
    }
    const ResolvedDataset ds_a = original.read_dataset();
    const ResolvedDataset ds_b = copy.read_dataset();
    c.require(ds_a == ds_b, "read_dataset differs (" + tag + ")");
    c.require(original.read_phase_summaries() == copy.read_phase_summaries(), "phase summaries differ");
    c.require(original.meta() == copy.meta(), "ingest meta differs");
    c.require(original.query_nodes({}) == copy.query_nodes({}), "query_nodes differs");
    for (NodeId n = 0; n < ds_a.nodes.size(); ++n) {
      c.require(original.query_last_access(n) == copy.query_last_access(n), "last access differs");
      c.require(original.query_node_events(n) == copy.query_node_events(n), "node events differ");
    }
    const PhaseEngine ea(ds_a), eb(ds_b);
    for (PhaseId p : ea.phase_order()) {
      c.require(views::snapshot(ds_a, ea.snapshot_at(p)) == views::snapshot(ds_b, eb.snapshot_at(p)),
                "snapshot differs");
    }
    c.require(cli_output({"summary", "--db", db}) == cli_output({"summary", "--db", db2}), "summary differs");
  }
  return std::to_string(kRoundTripFixtures + 1) + " datasets; all ten tables and queries identical after re-ingest; " +
         std::to_string(files_compared) + " CSV files byte-identical across two exports";
}

std::string fixture_truth(Criterion& c) {
  TempDir dir("acceptance-truth");
  std::size_t rows = 0;
  for (std::size_t i = 0; i < kTruthFixtures; ++i) {
    const auto path = (dir / ("t" + std::to_string(i) + ".json")).string();
    const auto db = (dir / ("t" + std::to_string(i) + ".db")).string();
    std::vector<std::string> gen = {"gen-fixture", "--nodes", std::to_string(5 + i * 13),
                                    "--phases", std::to_string(1 + i % 8),
                                    "--events-per-node", std::to_string(i % 10),
                                    "--seed", std::to_string(7 + i * 101), "-o", path};
    if (i == 0) gen = {"gen-fixture", "--nodes", "50", "--phases", "4", "--seed", "7", "-o", path};
    c.require(cli(gen) == 0, "gen-fixture failed");
    c.require(cli({"ingest", path, "--db", db}) == 0, "ingest failed");
    const json summary = json::parse(cli_output({"summary", "--db", db, "--format", "json"}));
    const json truth = json::parse(read_file(path + ".truth.json"))["summaries"];
    c.require(summary == truth, "summary differs from truth for fixture " + std::to_string(i));
    rows += truth.size();
  }
  return std::to_string(kTruthFixtures) + " fixtures, " + std::to_string(rows) +
         " phase rows equal to the sidecar truth in every count";
}

std::string curated_queries(Criterion& c) {
  TempDir dir("acceptance-curated");
  const auto db = (dir / "curated.db").string();
  c.require(cli({"ingest", (testing_support::data_dir() / "curated.jir.json").string(), "--db", db}) == 0,
            "ingest failed");
  Store store = Store::open(db);
  const ResolvedDataset ds = store.read_dataset();
  const PhaseEngine engine(ds);

  const PhaseId U, GB(0), INL(1), TL(2), DCE(3);
  const std::vector<std::vector<ValueChange>> values = {
      {}, {}, {{GB, 10, "1"}, {TL, 34, "3"}}, {}, {}, {}, {}, {}, {}, {}, {{TL, 38, "float64"}}, {{DCE, 46, "0"}}};
  const std::vector<LastAccess> last = {
      {11, 1, "GraphBuilder::Build", GB},
      {12, 1, "GraphBuilder::Build", GB},
      {34, 21, "TypedLowering::ReduceJSAdd", TL},
      {32, 21, "TypedLowering::ReduceJSAdd", TL},
      {23, 12, "JSInliner::InlineCall", INL},
      {42, 32, "DeadCodeElimination::RemoveDeadInput", DCE},
      {43, 31, "DeadCodeElimination::ReduceNode", DCE},
      {37, 22, "TypedLowering::ReduceCheckedTaggedToFloat64", TL},
      {44, 32, "DeadCodeElimination::RemoveDeadInput", DCE},
      {3, 99, "Interpreter::CollectFeedback", U},
      {45, 31, "DeadCodeElimination::ReduceNode", DCE},
      {46, 31, "DeadCodeElimination::ReduceNode", DCE},
  };
  c.require(ds.nodes.size() == 12, "curated fixture should have 12 nodes");
  for (NodeId n = 0; n < 12; ++n) {
    c.require(engine.value_change_phases(n) == values[n], "value_change_phases wrong for node " + std::to_string(n));
    c.require(store.query_last_access(n) == last[n], "query_last_access wrong for node " + std::to_string(n));
  }
  bool missing = false;
  try {
    store.query_last_access(999);
  } catch (const Error& e) {
    missing = e.code() == std::string("E_NO_SUCH_NODE");
  }
  c.require(missing, "unknown node did not raise E_NO_SUCH_NODE");
  return "value_change_phases and query_last_access match hand-verified answers for all 12 nodes";
}

std::string api_contract(Criterion& c) {
  TempDir dir("acceptance-api");
  std::size_t goldens = 0;
  {
    DatasetController controller(dir / "api.db", kDefaultMaxUploadBytes, [] { return std::string("1970-01-01T00:00:00Z"); });
    c.require(controller.phases().status == 409 && controller.snapshot("0").status == 409 &&
                  controller.summary().status == 409 && controller.export_csv("nodes").status == 409,
              "empty dataset did not answer 409");
    const std::string text = testing_support::curated_text();
    const HttpResult upload = controller.upload(text, "curated.jir.json");
    c.require(upload.status == 200, "curated upload failed: " + upload.body);

    const std::vector<std::pair<std::string, std::function<HttpResult()>>> json_cases = {
        {"upload", [&] { return upload; }},
        {"status", [&] { return controller.status(); }},
        {"phases", [&] { return controller.phases(); }},
        {"summary", [&] { return controller.summary(); }},
        {"snapshot_unassigned", [&] { return controller.snapshot("-1"); }},
        {"snapshot_0", [&] { return controller.snapshot("0"); }},
        {"snapshot_1", [&] { return controller.snapshot("1"); }},
        {"snapshot_2", [&] { return controller.snapshot("2"); }},
        {"snapshot_3", [&] { return controller.snapshot("3"); }},
        {"diff_0_1", [&] { return controller.diff("0", "1"); }},
        {"diff_1_2", [&] { return controller.diff("1", "2"); }},
        {"diff_2_3", [&] { return controller.diff("2", "3"); }},
        {"diff_unassigned_3", [&] { return controller.diff("-1", "3"); }},
        {"node_6_phase_1", [&] { return controller.node("6", "1"); }},
        {"node_10_phase_2", [&] { return controller.node("10", "2"); }},
        {"node_7_phase_2", [&] { return controller.node("7", "2"); }},
        {"node_4_phase_3", [&] { return controller.node("4", "3"); }},
        {"node_9_phase_unassigned", [&] { return controller.node("9", "-1"); }},
        {"search_jsadd_1", [&] { return controller.search("jsadd", "1"); }},
        {"search_numberadd_2", [&] { return controller.search("NumberAdd", "2"); }},
    };
    for (const auto& [name, call] : json_cases) {
      const HttpResult r = call();
      const json golden = json::parse(read_file(testing_support::golden_dir() / (name + ".json")));
      c.require(r.status == 200 && json::parse(r.body) == golden, "golden mismatch: " + name);
      ++goldens;
    }
    for (const std::string name : {"functions", "snapshot_edges_1", "phase_summary"}) {
      const HttpResult r = controller.export_csv(name);
      c.require(r.status == 200 && r.content_type == "text/csv" &&
                    r.body == read_file(testing_support::golden_dir() / ("export_" + name + ".csv")),
                "golden mismatch: export " + name);
      ++goldens;
    }

    c.require(controller.snapshot("4").status == 404, "unknown phase ordinal not 404");
    c.require(controller.node("12", std::nullopt).status == 404, "unknown node not 404");
    c.require(controller.export_csv("bogus").status == 404, "unknown table not 404");
    const HttpResult overlap = controller.upload(R"({"format_version": 1, "functions": {},
      "phases": [{"name": "A", "funcIdStart": 0, "funcIdEnd": 10}, {"name": "B", "funcIdStart": 10, "funcIdEnd": 20}],
      "nodes": []})");
    c.require(overlap.status == 422 && json::parse(overlap.body)["issues"][0]["code"] == "E_PHASE_OVERLAP",
              "overlapping phases not rejected with 422");
    c.require(controller.status().body == upload.body, "failed upload disturbed the active dataset");

    std::mutex m;
    std::condition_variable cv;
    bool inside = false, release = false;
    controller.set_ingest_observer([&] {
      std::unique_lock lock(m);
      inside = true;
      cv.notify_all();
      cv.wait(lock, [&] { return release; });
    });
    HttpResult first;
    std::thread t([&] { first = controller.upload(text, "curated.jir.json"); });
    {
      std::unique_lock lock(m);
      cv.wait(lock, [&] { return inside; });
    }
    const HttpResult second = controller.upload(text);
    {
      std::lock_guard lock(m);
      release = true;
    }
    cv.notify_all();
    t.join();
    c.require(second.status == 409 && first.status == 200, "concurrent upload not answered 409");
  }

  // Over a socket: size limit enforced by the transport, then the large trace.
  ServerOptions options;
  options.port = 0;
  options.db_path = dir / "large.db";
  GeneratedFixture large = generate_fixture({kLargeNodes, 8, 9, 2024});
  const std::size_t events = event_count(large.document);
  const std::size_t updates = update_count(large.document);
  // the bound holds even when accesses are not counted as events
  c.require(updates >= kLargeMinEvents, "large trace has only " + std::to_string(updates) + " update events");
  const std::string body = write_document(large.document);
  large = {};
  ApiServer server(options);
  const int port = server.bind();
  std::thread loop([&] { server.listen(); });
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(60, 0);

  ServerOptions small = options;
  small.db_path = dir / "small.db";
  small.max_upload_bytes = 1024;
  ApiServer limited(small);
  const int small_port = limited.bind();
  std::thread small_loop([&] { limited.listen(); });
  httplib::Client small_client("127.0.0.1", small_port);
  auto too_big = small_client.Post("/api/upload", std::string(4096, ' '), "application/json");
  c.require(too_big && too_big->status == 413, "oversized upload not answered 413");
  limited.stop();
  small_loop.join();

  const auto start = Clock::now();
  auto up = client.Post("/api/upload?name=large.json", body, "application/json");
  auto snap = client.Get("/api/snapshot/0");
  const double elapsed = seconds_since(start);
  c.require(up && up->status == 200, "large upload failed");
  c.require(snap && snap->status == 200, "first snapshot failed");
  c.require(elapsed < kLargeUploadSeconds, "large upload + first snapshot took " + std::to_string(elapsed) + " s");
  server.stop();
  loop.join();

  std::ostringstream d;
  d << goldens << " golden responses equal; 409/413/422/404 exercised; " << kLargeNodes << "-node, " << events
    << "-event (" << updates << " excluding accesses) upload + first snapshot in " << std::fixed << std::setprecision(2) << elapsed << " s (bound "
    << kLargeUploadSeconds << " s)";
  return d.str();
}

}  // namespace

int main() {
  run_criterion("snapshot-replay-oracle", snapshot_oracle);
  run_criterion("conservation", conservation);
  run_criterion("diff-composition", composition);
  run_criterion("round-trip", round_trip);
  run_criterion("fixture-ground-truth", fixture_truth);
  run_criterion("evaluation-queries", curated_queries);
  run_criterion("api-contract", api_contract);
  return failures == 0 ? 0 : 1;
}
