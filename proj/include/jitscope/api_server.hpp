#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "jitscope/ingest.hpp"
#include "jitscope/phase_engine.hpp"
#include "jitscope/store.hpp"

namespace httplib {
class Server;
}

namespace jitscope {

inline constexpr std::size_t kDefaultMaxUploadBytes = 64u << 20;

struct HttpResult {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// Everything derived from one ingested file. Immutable once published.
struct ActiveDataset {
  explicit ActiveDataset(ResolvedDataset resolved, Store db);

  ResolvedDataset dataset;
  PhaseEngine engine;
  Store store;
  std::string status_json;
};

// Request handling without any transport. Every method is safe to call from
// several threads; uploads are single-flight and publish a new dataset with a
// pointer swap, so a request sees either the old or the new one.
class DatasetController {
 public:
  using Clock = std::function<std::string()>;

  // An empty db_path keeps every dataset in memory. An existing non-empty
  // database is picked up as the active dataset.
  explicit DatasetController(std::filesystem::path db_path,
                             std::size_t max_upload_bytes = kDefaultMaxUploadBytes,
                             Clock clock = {});

  HttpResult upload(std::string_view body, std::string_view source_name = "upload.json");

  HttpResult status() const;
  HttpResult phases() const;
  HttpResult snapshot(std::string_view phase) const;
  HttpResult diff(std::string_view from, std::string_view to) const;
  HttpResult summary() const;
  HttpResult node(std::string_view id, std::optional<std::string_view> phase) const;
  HttpResult search(std::optional<std::string_view> query,
                    std::optional<std::string_view> phase) const;
  HttpResult export_csv(std::string_view name) const;

  std::size_t max_upload_bytes() const { return max_upload_bytes_; }

  // Runs inside upload() after validation, with the ingest slot held.
  void set_ingest_observer(std::function<void()> observer) { observer_ = std::move(observer); }

 private:
  std::shared_ptr<const ActiveDataset> current() const;
  void publish(std::shared_ptr<const ActiveDataset> next);

  std::filesystem::path db_path_;
  std::size_t max_upload_bytes_;
  Clock clock_;
  std::function<void()> observer_;

  std::mutex ingest_mutex_;
  mutable std::mutex swap_mutex_;
  std::shared_ptr<const ActiveDataset> active_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::size_t max_upload_bytes = kDefaultMaxUploadBytes;
  std::filesystem::path db_path;
  std::optional<std::filesystem::path> ui_dir;
};

class ApiServer {
 public:
  explicit ApiServer(ServerOptions options);
  ~ApiServer();

  DatasetController& controller() { return controller_; }

  // Binds the listening socket and returns the bound port. Throws E_IO.
  int bind();
  // Serves until stop(); bind() must have succeeded.
  void listen();
  void stop();

 private:
  void install_routes();

  ServerOptions options_;
  DatasetController controller_;
  std::unique_ptr<httplib::Server> http_;
};

}  // namespace jitscope
