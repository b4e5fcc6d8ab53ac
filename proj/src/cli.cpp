#include "jitscope/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "jitscope/api_server.hpp"
#include "jitscope/error.hpp"
#include "jitscope/exporter.hpp"
#include "jitscope/fixture_gen.hpp"
#include "jitscope/ingest.hpp"
#include "jitscope/json_views.hpp"
#include "jitscope/store.hpp"

namespace jitscope::cli {

namespace fs = std::filesystem;

namespace {

std::string default_db() {
  const char* env = std::getenv("JITSCOPE_DB");
  return env != nullptr && *env != '\0' ? env : "jitscope.db";
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("E_IO", "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("E_IO", "cannot write " + path.string());
  out << content;
  if (!out) throw Error("E_IO", "write failed for " + path.string());
}

Store open_existing(const fs::path& db) {
  if (db != ":memory:" && !fs::exists(db)) throw Error("E_IO", "no database at " + db.string());
  return Store::open(db);
}

int exit_code_for(const std::string& code) {
  static const std::vector<std::string> validation = {
      "E_VALIDATION", "E_MALFORMED_JSON", "E_UNSUPPORTED_VERSION", "E_MISSING_FIELD",
      "E_CONFLICTING_FUNC_ID"};
  static const std::vector<std::string> usage = {"E_BAD_ARGS", "E_NO_SUCH_TABLE", "E_NO_SUCH_PHASE",
                                                 "E_NO_SUCH_NODE", "E_DB_NOT_EMPTY", "E_BAD_RANGE"};
  if (std::find(validation.begin(), validation.end(), code) != validation.end()) return kValidation;
  if (std::find(usage.begin(), usage.end(), code) != usage.end()) return kUsage;
  return kIo;
}

std::string issue_line(const ValidationIssue& issue) {
  std::string line{to_string(issue.severity)};
  line += ' ';
  line += issue.code;
  line += ' ';
  line += issue.locator.empty() ? "-" : issue.locator;
  line += ' ';
  line += issue.message;
  return line;
}

PhaseId parse_phase_arg(const ResolvedDataset& dataset, const std::string& text) {
  if (text == "unassigned" || text == "-1") return PhaseId::unassigned();
  int ordinal = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), ordinal);
  if (ec == std::errc() && ptr == text.data() + text.size() && ordinal >= 0 &&
      static_cast<std::size_t>(ordinal) < dataset.phases.size()) {
    return PhaseId(ordinal);
  }
  for (std::size_t p = 0; p < dataset.phases.size(); ++p) {
    if (dataset.phases[p].name == text) return PhaseId(static_cast<int>(p));
  }
  throw Error("E_NO_SUCH_PHASE", "unknown phase '" + text + "'");
}

void print_summary_table(const ResolvedDataset& dataset, const std::vector<PhaseSummary>& rows,
                         std::ostream& out) {
  const std::vector<std::string> headers = {"phase_id",       "phase",         "generated",
                                            "removed",        "opcode_updates", "value_updates",
                                            "edge_adds",      "edge_removes",  "edge_replaces"};
  std::vector<std::vector<std::string>> cells;
  for (const PhaseSummary& s : rows) {
    cells.push_back({std::to_string(s.phase.ordinal()), std::string(dataset.phase_name(s.phase)),
                     std::to_string(s.generated), std::to_string(s.removed),
                     std::to_string(s.opcode_updates), std::to_string(s.value_updates),
                     std::to_string(s.edge_adds), std::to_string(s.edge_removes),
                     std::to_string(s.edge_replaces)});
  }
  std::vector<std::size_t> width(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) {
    width[c] = headers[c].size();
    for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
  }
  const auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << "  ";
      // phase names read left to right, counts line up on the right
      if (c == 1) out << std::left; else out << std::right;
      out << std::setw(static_cast<int>(width[c])) << row[c];
    }
    out << std::right << '\n';
  };
  emit(headers);
  for (const auto& row : cells) emit(row);
}

void print_load_report(const LoadReport& report, std::ostream& out) {
  std::size_t width = 5;
  for (const auto& name : table_names()) width = std::max(width, name.size());
  out << std::left << std::setw(static_cast<int>(width)) << "table" << "  rows\n";
  for (const auto& name : table_names()) {
    out << std::left << std::setw(static_cast<int>(width)) << name << "  " << report.count(name) << '\n';
  }
  out << std::right;
}

ApiServer* g_server = nullptr;

extern "C" void handle_stop_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"jitscope: phase-aware inspection of JIT compiler IR traces", "jitscope"};
  app.require_subcommand(1);

  std::string input;
  std::string format = "text";
  std::string db = default_db();
  bool replace = false;

  auto* validate = app.add_subcommand("validate", "Check a JIR file and print every issue");
  validate->add_option("input", input, "JIR JSON file")->required();
  validate->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

  auto* ingest = app.add_subcommand("ingest", "Validate a JIR file and load it into a database");
  ingest->add_option("input", input, "JIR JSON file")->required();
  ingest->add_option("--db", db, "database file (default $JITSCOPE_DB or jitscope.db)");
  ingest->add_flag("--replace", replace, "overwrite a database that already holds a dataset");

  std::string out_dir = ".";
  std::string table;
  std::string snapshot_phase;
  bool want_summary = false;
  bool want_all = false;
  auto* exporter = app.add_subcommand("export", "Write CSV files from a database");
  exporter->add_option("--db", db, "database file");
  exporter->add_option("-o,--out", out_dir, "destination directory");
  auto* opt_table = exporter->add_option("--table", table, "one schema table");
  auto* opt_snapshot = exporter->add_option("--snapshot", snapshot_phase,
                                            "one phase snapshot (ordinal, name, -1 or unassigned)");
  auto* opt_summary = exporter->add_flag("--summary", want_summary, "the phase summary table");
  auto* opt_all = exporter->add_flag("--all", want_all, "every table, snapshot and the summary");
  opt_table->excludes(opt_snapshot, opt_summary, opt_all);
  opt_snapshot->excludes(opt_summary, opt_all);
  opt_summary->excludes(opt_all);

  auto* summary = app.add_subcommand("summary", "Print per-phase transformation counts");
  summary->add_option("--db", db, "database file");
  summary->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

  ServerOptions server_options;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API until interrupted");
  serve->add_option("--db", db, "database file");
  serve->add_option("--port", server_options.port, "listen port (0 picks one)");
  serve->add_option("--host", server_options.host, "listen address");
  serve->add_option("--max-upload-bytes", server_options.max_upload_bytes, "largest accepted upload");
  std::string ui_dir;
  serve->add_option("--ui-dir", ui_dir, "static UI bundle served at /");

  FixtureParams params;
  std::string fixture_path;
  auto* gen = app.add_subcommand(
      "gen-fixture",
      "Write a synthetic JIR file plus <path>.truth.json with the expected phase summaries.\n"
      "Each node is created in the unassigned pseudo-phase with probability 0.15, otherwise in a\n"
      "uniformly chosen phase. Between 10% and 20% of nodes die in a phase at or after their\n"
      "creation. Extra events per node follow a geometric distribution with the given mean and\n"
      "mix opcode updates, value updates, edge adds, removes (rarely of an absent edge),\n"
      "replaces and read-only accesses. About one input edge in ten is duplicated.");
  gen->add_option("--nodes", params.nodes, "node count")->check(CLI::NonNegativeNumber);
  gen->add_option("--phases", params.phases, "phase count (at least 1)");
  gen->add_option("--events-per-node", params.events_per_node, "mean extra events per node");
  gen->add_option("--seed", params.seed, "random seed");
  gen->add_option("-o,--output", fixture_path, "output file")->required();

  std::string import_dir;
  auto* import = app.add_subcommand("import", "Load table CSV files written by export back into a database");
  import->add_option("--db", db, "database file");
  import->add_option("--from", import_dir, "directory holding <table>.csv files")->required();
  import->add_flag("--replace", replace, "overwrite a database that already holds a dataset");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (validate->parsed()) {
      const std::string text = read_file(input);
      std::vector<ValidationIssue> issues;
      bool ok = true;
      try {
        load_document(text, issues);
      } catch (const Error&) {
        ok = false;
      }
      if (format == "json") {
        views::Json report = {{"valid", ok}, {"issues", views::issues(issues)}};
        out << report.dump(2) << '\n';
      } else {
        for (const ValidationIssue& issue : issues) out << issue_line(issue) << '\n';
      }
      return ok ? kOk : kValidation;
    }

    if (ingest->parsed()) {
      const std::string text = read_file(input);
      std::vector<ValidationIssue> issues;
      ResolvedDataset dataset;
      try {
        dataset = load_document(text, issues);
      } catch (const Error&) {
        for (const ValidationIssue& issue : issues) err << issue_line(issue) << '\n';
        return kValidation;
      }
      for (const ValidationIssue& issue : issues) err << issue_line(issue) << '\n';
      IngestMeta meta;
      meta.format_version = dataset.format_version;
      meta.source_name = fs::path(input).filename().string();
      meta.content_hash = content_hash(text);
      meta.ingested_at = ingest_timestamp();
      LoadOptions options;
      options.replace = replace;
      options.meta = meta;
      const auto summaries = PhaseEngine(dataset).summarize_all();
      Store store = Store::open(db);
      print_load_report(store.load(dataset, summaries, options), out);
      return kOk;
    }

    if (exporter->parsed()) {
      if (!opt_table->count() && !opt_snapshot->count() && !want_summary && !want_all) {
        err << "export: one of --table, --snapshot, --summary or --all is required\n";
        return kUsage;
      }
      Store store = open_existing(db);
      if (!opt_table->count() && store.empty()) throw Error("E_IO", "database holds no dataset");
      fs::create_directories(out_dir);
      if (opt_table->count()) {
        export_table(store, table, out_dir);
        return kOk;
      }
      const ResolvedDataset dataset = store.read_dataset();
      const PhaseEngine engine(dataset);
      if (opt_snapshot->count()) {
        export_snapshot(engine, parse_phase_arg(dataset, snapshot_phase), out_dir);
      } else if (want_summary) {
        export_summary(engine, out_dir);
      } else {
        export_all(store, engine, out_dir);
      }
      return kOk;
    }

    if (summary->parsed()) {
      Store store = open_existing(db);
      if (store.empty()) throw Error("E_IO", "database holds no dataset");
      const ResolvedDataset dataset = store.read_dataset();
      const auto rows = store.read_phase_summaries();
      if (format == "json") {
        out << views::summaries(dataset, rows).dump(2) << '\n';
      } else {
        print_summary_table(dataset, rows, out);
      }
      return kOk;
    }

    if (serve->parsed()) {
      server_options.db_path = db;
      if (!ui_dir.empty()) server_options.ui_dir = ui_dir;
      ApiServer server(server_options);
      const int port = server.bind();
      out << "listening on http://" << server_options.host << ':' << port << std::endl;
      g_server = &server;
      std::signal(SIGINT, handle_stop_signal);
      std::signal(SIGTERM, handle_stop_signal);
      server.listen();
      g_server = nullptr;
      return kOk;
    }

    if (gen->parsed()) {
      const GeneratedFixture fixture = generate_fixture(params);
      write_file(fixture_path, write_document(fixture.document));
      write_file(fixture_path + ".truth.json", truth_json(fixture, params));
      return kOk;
    }

    if (import->parsed()) {
      Store store = Store::open(db);
      print_load_report(import_tables(store, import_dir, replace), out);
      return kOk;
    }
  } catch (const Error& e) {
    err << e.code() << ": " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "E_IO: " << e.what() << '\n';
    return kIo;
  }
  return kUsage;
}

}  // namespace jitscope::cli
