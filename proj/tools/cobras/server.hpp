#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

namespace cobras_cli {

struct ServerConfig {
  std::string data_path;
  std::string label_column;
  std::size_t budget = 100;
  std::uint64_t seed = 0;
  std::filesystem::path session_dir = "sessions";
  // Upper bound on how long a message poll blocks when nothing is new.
  std::chrono::milliseconds poll_timeout{25000};
};

/// HTTP long-poll front end for interactive sessions.
///
///   POST /api/sessions                       {"budget"?, "seed"?} -> {"session_id", ...}
///   GET  /api/sessions/<id>                  status
///   GET  /api/sessions/<id>/messages?after=N  messages N, N+1, ... (blocks until one exists)
///   POST /api/sessions/<id>/messages          {"type":"answer","qnum","value"} | {"type":"stop"}
///   GET  /api/sessions/<id>/trace             trace JSON
///
/// Every answer rewrites <session_dir>/<id>.json, so a session whose server
/// went away is rebuilt from its trace the next time its id is used. A
/// rebuilt session restarts its message numbering at 0.
class SessionServer {
 public:
  explicit SessionServer(ServerConfig config);
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  // Binds to host:port (port 0 picks a free port). Returns the bound port or -1.
  int bind(const std::string& host, int port);
  // Serves until stop() is called. Requires a successful bind().
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cobras_cli
