#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <thread>

#include "seaforge/backend.hpp"

namespace httplib {
class Server;
}

namespace seaforge {

/// Serves an in-process backend over the HTTP adapter's wire contract. Used to run the
/// mock behind a socket for adapter tests and local dry runs.
class GenerationServer {
 public:
  explicit GenerationServer(std::shared_ptr<const GenerationBackend> backend,
                            std::chrono::milliseconds reply_delay = std::chrono::milliseconds{0});
  ~GenerationServer();
  GenerationServer(const GenerationServer&) = delete;
  GenerationServer& operator=(const GenerationServer&) = delete;

  /// Binds and serves on a background thread; port 0 picks a free port. Returns the port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  void install_routes();

  std::shared_ptr<const GenerationBackend> backend_;
  std::chrono::milliseconds reply_delay_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace seaforge
