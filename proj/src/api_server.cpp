#include "jitscope/api_server.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>
#include <sstream>
#include <system_error>

#include "jitscope/error.hpp"
#include "jitscope/exporter.hpp"
#include "jitscope/json_views.hpp"

namespace jitscope {

namespace {

using views::Json;

HttpResult json_result(int status, const Json& body) { return {status, body.dump(), "application/json"}; }

HttpResult error_result(int status, std::string_view code, std::string_view message) {
  return json_result(status, views::error(code, message));
}

HttpResult not_loaded() { return error_result(409, "E_NO_DATASET", "no dataset is loaded"); }

template <typename T>
std::optional<T> parse_integer(std::string_view text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

// "-1", "unassigned", a phase ordinal or a phase name.
std::optional<PhaseId> resolve_phase(const ResolvedDataset& dataset, std::string_view text) {
  if (text == "unassigned" || text == kUnassignedPhaseName) return PhaseId::unassigned();
  if (auto ordinal = parse_integer<int>(text)) {
    if (*ordinal == -1) return PhaseId::unassigned();
    if (*ordinal >= 0 && static_cast<std::size_t>(*ordinal) < dataset.phases.size()) return PhaseId(*ordinal);
    return std::nullopt;
  }
  for (std::size_t p = 0; p < dataset.phases.size(); ++p) {
    if (dataset.phases[p].name == text) return PhaseId(static_cast<int>(p));
  }
  return std::nullopt;
}

HttpResult unknown_phase(std::string_view text) {
  return error_result(404, "E_NO_SUCH_PHASE", "unknown phase '" + std::string(text) + "'");
}

Json status_view(const Store& store) {
  const auto meta = store.meta();
  const LoadReport counts = store.row_counts();
  return {{"loaded", true},
          {"source_name", meta ? meta->source_name : ""},
          {"content_hash", meta ? meta->content_hash : ""},
          {"node_count", counts.count("nodes")},
          {"phase_count", counts.count("phases")},
          {"instruction_count", counts.count("instructions")},
          {"ingested_at", meta ? Json(meta->ingested_at) : Json(nullptr)}};
}

Json empty_status() {
  return {{"loaded", false},     {"source_name", ""},     {"content_hash", ""},
          {"node_count", 0},     {"phase_count", 0},      {"instruction_count", 0},
          {"ingested_at", nullptr}};
}

}  // namespace

ActiveDataset::ActiveDataset(ResolvedDataset resolved, Store db)
    : dataset(std::move(resolved)), engine(dataset), store(std::move(db)) {
  status_json = status_view(store).dump();
}

DatasetController::DatasetController(std::filesystem::path db_path, std::size_t max_upload_bytes,
                                     Clock clock)
    : db_path_(std::move(db_path)), max_upload_bytes_(max_upload_bytes), clock_(std::move(clock)) {
  if (!clock_) clock_ = ingest_timestamp;
  if (!db_path_.empty() && std::filesystem::exists(db_path_)) {
    Store store = Store::open(db_path_);
    if (!store.empty()) {
      ResolvedDataset dataset = store.read_dataset();
      active_ = std::make_shared<const ActiveDataset>(std::move(dataset), std::move(store));
    }
  }
}

std::shared_ptr<const ActiveDataset> DatasetController::current() const {
  std::lock_guard lock(swap_mutex_);
  return active_;
}

void DatasetController::publish(std::shared_ptr<const ActiveDataset> next) {
  std::shared_ptr<const ActiveDataset> previous;
  {
    std::lock_guard lock(swap_mutex_);
    previous = std::exchange(active_, std::move(next));
  }
  // previous is released outside the lock; readers may still hold it
}

HttpResult DatasetController::upload(std::string_view body, std::string_view source_name) {
  if (body.size() > max_upload_bytes_) {
    return error_result(413, "E_PAYLOAD_TOO_LARGE",
                        "upload of " + std::to_string(body.size()) + " bytes exceeds the limit of " +
                            std::to_string(max_upload_bytes_));
  }
  std::unique_lock slot(ingest_mutex_, std::try_to_lock);
  if (!slot.owns_lock()) return error_result(409, "E_INGEST_IN_PROGRESS", "another upload is being ingested");

  std::vector<ValidationIssue> issues;
  ResolvedDataset dataset;
  try {
    dataset = load_document(body, issues);
  } catch (const Error& e) {
    Json out = views::error(e.code(), e.what());
    if (issues.empty()) issues.push_back({Severity::kError, e.code(), "", e.what()});
    out["issues"] = views::issues(issues);
    return json_result(422, out);
  }
  if (observer_) observer_();

  try {
    IngestMeta meta;
    meta.format_version = dataset.format_version;
    meta.source_name = std::string(source_name);
    meta.content_hash = content_hash(body);
    meta.ingested_at = clock_();
    LoadOptions options;
    options.meta = meta;

    // Summaries come from a throwaway engine; the published one is rebuilt
    // against the dataset's final address.
    std::vector<PhaseSummary> summaries = PhaseEngine(dataset).summarize_all();

    std::shared_ptr<const ActiveDataset> next;
    if (db_path_.empty()) {
      Store store = Store::open(":memory:");
      store.load(dataset, summaries, options);
      next = std::make_shared<const ActiveDataset>(std::move(dataset), std::move(store));
    } else {
      std::filesystem::path staging = db_path_;
      staging += ".ingest";
      std::filesystem::remove(staging);
      {
        Store store = Store::open(staging);
        store.load(dataset, summaries, options);
      }
      std::filesystem::rename(staging, db_path_);
      next = std::make_shared<const ActiveDataset>(std::move(dataset), Store::open(db_path_));
    }
    HttpResult result{200, next->status_json, "application/json"};
    publish(std::move(next));
    return result;
  } catch (const Error& e) {
    return error_result(500, e.code(), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return error_result(500, "E_IO", e.what());
  }
}

HttpResult DatasetController::status() const {
  auto active = current();
  if (!active) return json_result(200, empty_status());
  return {200, active->status_json, "application/json"};
}

HttpResult DatasetController::phases() const {
  auto active = current();
  if (!active) return not_loaded();
  return json_result(200, views::phases(active->dataset));
}

HttpResult DatasetController::snapshot(std::string_view phase) const {
  auto active = current();
  if (!active) return not_loaded();
  auto id = resolve_phase(active->dataset, phase);
  if (!id) return unknown_phase(phase);
  return json_result(200, views::snapshot(active->dataset, active->engine.snapshot_at(*id)));
}

HttpResult DatasetController::diff(std::string_view from, std::string_view to) const {
  auto active = current();
  if (!active) return not_loaded();
  auto a = resolve_phase(active->dataset, from);
  if (!a) return unknown_phase(from);
  auto b = resolve_phase(active->dataset, to);
  if (!b) return unknown_phase(to);
  try {
    return json_result(200, views::diff(active->dataset, active->engine.diff(*a, *b)));
  } catch (const Error& e) {
    return error_result(400, e.code(), e.what());
  }
}

HttpResult DatasetController::summary() const {
  auto active = current();
  if (!active) return not_loaded();
  const auto all = active->engine.summarize_all();
  return json_result(200, views::summaries(active->dataset, all));
}

HttpResult DatasetController::node(std::string_view id, std::optional<std::string_view> phase) const {
  auto active = current();
  if (!active) return not_loaded();
  const ResolvedDataset& dataset = active->dataset;
  auto node_id = parse_integer<NodeId>(id);
  if (!node_id || *node_id >= dataset.nodes.size()) {
    return error_result(404, "E_NO_SUCH_NODE", "unknown node '" + std::string(id) + "'");
  }
  PhaseId at = dataset.final_phase();
  if (phase) {
    auto resolved = resolve_phase(dataset, *phase);
    if (!resolved) return unknown_phase(*phase);
    at = *resolved;
  }

  const IRNode& node = dataset.nodes[*node_id];
  const NodeState state = active->engine.node_state(*node_id, at);
  const NodePhaseActivity activity = active->engine.node_activity(*node_id, at);
  const auto& removed = dataset.removed_phase[*node_id];

  Json opcode_changes = Json::array();
  for (const OpcodeUpdate& u : activity.opcode_updates) {
    opcode_changes.push_back({{"instr_id", u.instr_id}, {"new_opcode", u.new_opcode}});
  }
  Json value_changes = Json::array();
  for (const ValueUpdate& u : activity.value_updates) {
    value_changes.push_back({{"instr_id", u.instr_id}, {"value", u.value}});
  }
  Json edge_changes = Json::array();
  for (const EdgeEvent& e : activity.edge_events) edge_changes.push_back(views::edge_event(e));

  Json out = {
      {"node_id", *node_id},
      {"address", node.address},
      {"initial_opcode", node.opcode},
      {"mnemonic", node.mnemonic},
      {"alive", node.alive},
      {"created_phase", views::phase_ref(dataset, dataset.created_phase[*node_id])},
      {"removed_phase", removed ? views::phase_ref(dataset, *removed) : Json(nullptr)},
      {"phase", views::phase_ref(dataset, at)},
      {"present", state.present},
      {"status", state.status ? Json(to_string(*state.status)) : Json(nullptr)},
      {"effective_opcode", state.effective_opcode},
      {"current_value", state.current_value ? Json(*state.current_value) : Json(nullptr)},
      {"generated_this_phase", state.status && generated_in_phase(*state.status)},
      {"opcode_changes", std::move(opcode_changes)},
      {"value_changes", std::move(value_changes)},
      {"edge_changes", std::move(edge_changes)},
      {"last_access", views::last_access(dataset, active->store.query_last_access(*node_id))},
  };
  return json_result(200, out);
}

HttpResult DatasetController::search(std::optional<std::string_view> query,
                                     std::optional<std::string_view> phase) const {
  auto active = current();
  if (!active) return not_loaded();
  if (!query) return error_result(400, "E_BAD_REQUEST", "missing query parameter 'q'");
  PhaseId at = active->dataset.final_phase();
  if (phase) {
    auto resolved = resolve_phase(active->dataset, *phase);
    if (!resolved) return unknown_phase(*phase);
    at = *resolved;
  }
  return json_result(200, Json(active->engine.search(*query, at)));
}

HttpResult DatasetController::export_csv(std::string_view name) const {
  auto active = current();
  if (!active) return not_loaded();
  const auto no_table = [&] {
    return error_result(404, "E_NO_SUCH_TABLE", "unknown export '" + std::string(name) + "'");
  };
  std::ostringstream out;
  const auto& tables = table_names();
  if (std::find(tables.begin(), tables.end(), name) != tables.end()) {
    write_table_csv(active->store, std::string(name), out);
  } else if (name == "phase_summary") {
    const auto all = active->engine.summarize_all();
    write_summary_csv(active->dataset, all, out);
  } else {
    constexpr std::string_view kNodes = "snapshot_nodes_";
    constexpr std::string_view kEdges = "snapshot_edges_";
    const bool nodes = name.starts_with(kNodes);
    if (!nodes && !name.starts_with(kEdges)) return no_table();
    const std::string_view tag = name.substr(kNodes.size());
    std::optional<PhaseId> phase;
    if (tag == "unassigned") {
      phase = PhaseId::unassigned();
    } else if (auto ordinal = parse_integer<int>(tag);
               ordinal && *ordinal >= 0 && static_cast<std::size_t>(*ordinal) < active->dataset.phases.size()) {
      phase = PhaseId(*ordinal);
    }
    if (!phase) return no_table();
    const GraphSnapshot snap = active->engine.snapshot_at(*phase);
    if (nodes) write_snapshot_nodes_csv(snap, out);
    else write_snapshot_edges_csv(snap, out);
  }
  return {200, out.str(), "text/csv"};
}

ApiServer::ApiServer(ServerOptions options)
    : options_(std::move(options)),
      controller_(options_.db_path, options_.max_upload_bytes),
      http_(std::make_unique<httplib::Server>()) {
  install_routes();
}

ApiServer::~ApiServer() { stop(); }

void ApiServer::install_routes() {
  httplib::Server& http = *http_;
  DatasetController& c = controller_;
  // Larger bodies are refused by the transport before they reach the handler.
  http.set_payload_max_length(options_.max_upload_bytes);

  const auto reply = [](httplib::Response& res, const HttpResult& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  const auto param = [](const httplib::Request& req, const char* key) -> std::optional<std::string> {
    if (!req.has_param(key)) return std::nullopt;
    return req.get_param_value(key);
  };

  http.Post("/api/upload", [&c, reply](const httplib::Request& req, httplib::Response& res) {
    std::string name = req.has_param("name") ? req.get_param_value("name") : "upload.json";
    reply(res, c.upload(req.body, name));
  });
  http.Get("/api/status", [&c, reply](const httplib::Request&, httplib::Response& res) { reply(res, c.status()); });
  http.Get("/api/phases", [&c, reply](const httplib::Request&, httplib::Response& res) { reply(res, c.phases()); });
  http.Get("/api/summary", [&c, reply](const httplib::Request&, httplib::Response& res) { reply(res, c.summary()); });
  http.Get(R"(/api/snapshot/([^/]+))", [&c, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, c.snapshot(req.matches[1].str()));
  });
  http.Get(R"(/api/diff/([^/]+)/([^/]+))", [&c, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, c.diff(req.matches[1].str(), req.matches[2].str()));
  });
  http.Get(R"(/api/nodes/([^/]+))", [&c, reply, param](const httplib::Request& req, httplib::Response& res) {
    auto phase = param(req, "phase");
    reply(res, c.node(req.matches[1].str(), phase ? std::optional<std::string_view>(*phase) : std::nullopt));
  });
  http.Get("/api/search", [&c, reply, param](const httplib::Request& req, httplib::Response& res) {
    auto q = param(req, "q");
    auto phase = param(req, "phase");
    reply(res, c.search(q ? std::optional<std::string_view>(*q) : std::nullopt,
                        phase ? std::optional<std::string_view>(*phase) : std::nullopt));
  });
  http.Get(R"(/api/export/([^/]+)\.csv)", [&c, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, c.export_csv(req.matches[1].str()));
  });

  http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 413) {
      res.set_content(views::error("E_PAYLOAD_TOO_LARGE", "upload exceeds the size limit").dump(),
                      "application/json");
    } else if (res.status == 404) {
      res.set_content(views::error("E_NOT_FOUND", "no such endpoint").dump(), "application/json");
    }
  });
  http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string code = "E_INTERNAL";
    std::string message = "unexpected failure";
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      code = e.code();
      message = e.what();
    } catch (const std::exception& e) {
      message = e.what();
    }
    res.status = 500;
    res.set_content(views::error(code, message).dump(), "application/json");
  });

  if (options_.ui_dir && !http.set_mount_point("/", options_.ui_dir->string())) {
    throw Error("E_IO", "cannot serve UI bundle from " + options_.ui_dir->string());
  }
}

int ApiServer::bind() {
  int port = options_.port;
  if (port == 0) {
    port = http_->bind_to_any_port(options_.host);
  } else if (!http_->bind_to_port(options_.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw Error("E_IO", "cannot listen on " + options_.host + ":" + std::to_string(options_.port));
  }
  return port;
}

void ApiServer::listen() { http_->listen_after_bind(); }

void ApiServer::stop() {
  if (http_ && http_->is_running()) http_->stop();
}

}  // namespace jitscope
