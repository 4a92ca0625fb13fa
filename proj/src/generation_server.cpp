#include "seaforge/generation_server.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "seaforge/error.hpp"
#include "seaforge/image_io.hpp"

namespace seaforge {

using nlohmann::json;

GenerationServer::GenerationServer(std::shared_ptr<const GenerationBackend> backend,
                                   std::chrono::milliseconds reply_delay)
    : backend_(std::move(backend)),
      reply_delay_(reply_delay),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

GenerationServer::~GenerationServer() { stop(); }

void GenerationServer::install_routes() {
  server_->Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"status", "ok"}, {"backend", backend_->name()}}.dump(),
                     "application/json");
  });
  server_->Post("/v1/generate", [this](const httplib::Request& req, httplib::Response& res) {
    if (reply_delay_.count() > 0) std::this_thread::sleep_for(reply_delay_);
    std::string rid;
    try {
      const json body = json::parse(req.body);
      rid = body.value("request_id", std::string{});
      GenerationRequest request = decode_generation_request(body, nullptr);
      request.id_prefix = request.source.id;
      json images = json::array();
      for (const auto& img : backend_->generate(request)) {
        images.push_back(base64_encode(encode_png(img.pixels)));
      }
      res.set_content(json{{"request_id", rid}, {"images", std::move(images)}}.dump(),
                      "application/json");
    } catch (const std::exception& e) {
      spdlog::warn("generation request {} failed: {}", rid, e.what());
      res.status = 400;
      res.set_content(
          json{{"request_id", rid}, {"error", {{"code", "bad_request"}, {"message", e.what()}}}}
              .dump(),
          "application/json");
    }
  });
}

int GenerationServer::start(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::io_failure, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void GenerationServer::listen(const std::string& host, int port) {
  if (!server_->listen(host, port)) {
    throw Error(Errc::io_failure, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void GenerationServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace seaforge
