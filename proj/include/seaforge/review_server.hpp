#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include "seaforge/review.hpp"

namespace httplib {
class Server;
}

namespace seaforge {

/// JSON-over-HTTP front end of a ReviewStore.
///
///   POST /api/session                 {sample_size, seed, filter{kept_only, backend_name, sea_state}, label, id}
///   GET  /api/session/{id}/next       {done, item}
///   POST /api/session/{id}/verdict    {edited_id, reviewer, rule_flags{...}}
///   GET  /api/session/{id}/stats
///   GET  /api/stats?sessions=a,b      all sessions when the parameter is absent
///   GET  /api/image/{edited_id}       PNG bytes from the pipeline output tree
///
/// Errors reply {"error": {"code", "message"}} with 404 for unknown ids, 409 for a
/// duplicate verdict and 400 otherwise.
class ReviewServer {
 public:
  ReviewServer(std::shared_ptr<ReviewStore> store, std::filesystem::path output_root);
  ~ReviewServer();
  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  /// Serves on a background thread; port 0 picks a free port. Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void listen(const std::string& host, int port);
  void stop();

 private:
  void install_routes();

  std::shared_ptr<ReviewStore> store_;
  std::filesystem::path output_root_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

/// Where the pipeline left the image of `record`: SS<k>/ when kept, discarded/ otherwise.
std::filesystem::path locate_edited_image(const std::filesystem::path& output_root, const ManifestRecord& record);

}  // namespace seaforge
