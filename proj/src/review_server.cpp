#include "seaforge/review_server.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "seaforge/error.hpp"
#include "seaforge/pipeline.hpp"

namespace seaforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int status_for(Errc code) {
  switch (code) {
    case Errc::unknown_session:
    case Errc::unknown_item:
    case Errc::unknown_image_id:
    case Errc::no_sessions:
      return 404;
    case Errc::duplicate_verdict:
      return 409;
    default:
      return 400;
  }
}

void reply_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", {{"code", code}, {"message", message}}}}.dump(), "application/json");
}

void reply(httplib::Response& res, const json& body) { res.set_content(body.dump(), "application/json"); }

// Runs a handler and maps library and parse errors onto the error object.
template <typename F>
auto guarded(F&& f) {
  return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      reply_error(res, status_for(e.code()), to_string(e.code()), e.what());
    } catch (const json::exception& e) {
      reply_error(res, 400, "BadRequest", e.what());
    }
  };
}

std::vector<std::string> split_ids(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string id; std::getline(ss, id, ',');) {
    if (!id.empty()) out.push_back(id);
  }
  return out;
}

}  // namespace

fs::path locate_edited_image(const fs::path& output_root, const ManifestRecord& record) {
  return record.kept ? kept_image_path(output_root, record.sea_state, record.edited_id)
                     : discarded_image_path(output_root, record.edited_id);
}

ReviewServer::ReviewServer(std::shared_ptr<ReviewStore> store, fs::path output_root)
    : store_(std::move(store)), output_root_(std::move(output_root)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

ReviewServer::~ReviewServer() { stop(); }

void ReviewServer::install_routes() {
  server_->Post("/api/session", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const json body = req.body.empty() ? json::object() : json::parse(req.body);
    SessionSpec spec;
    spec.id = body.value("id", std::string{});
    spec.sample_size = body.value("sample_size", spec.sample_size);
    spec.seed = body.value("seed", spec.seed);
    spec.label = body.value("label", std::string{});
    if (body.contains("filter")) {
      const json& f = body["filter"];
      spec.filter.kept_only = f.value("kept_only", false);
      if (f.contains("backend_name") && !f["backend_name"].is_null()) {
        spec.filter.backend_name = f["backend_name"].get<std::string>();
      }
      if (f.contains("sea_state") && !f["sea_state"].is_null()) {
        spec.filter.sea_state = sea_state_from_level(f["sea_state"].get<int>());
      }
    }
    const ReviewSession s = store_->create_session(spec);
    res.status = 201;
    reply(res, {{"session_id", s.spec.id}, {"n_items", s.items.size()}, {"items", s.items}});
  }));

  server_->Get(R"(/api/session/([^/]+)/next)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto item = store_->next_item(req.matches[1]);
    if (!item) {
      reply(res, {{"done", true}, {"item", nullptr}});
      return;
    }
    json j = to_json(*item);
    j["image_url"] = "/api/image/" + item->edited_id;
    reply(res, {{"done", false}, {"item", j}});
  }));

  server_->Post(R"(/api/session/([^/]+)/verdict)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = json::parse(req.body);
                  const json& f = body.at("rule_flags");
                  const RuleFlags flags{f.at("background_valid").get<bool>(),
                                        f.at("background_realistic").get<bool>(),
                                        f.at("boat_preserved").get<bool>()};
                  const ReviewVerdict v = store_->submit_verdict(
                      req.matches[1], body.at("edited_id").get<std::string>(),
                      body.value("reviewer", std::string{}), flags);
                  res.status = 201;
                  reply(res, to_json(v));
                }));

  server_->Get(R"(/api/session/([^/]+)/stats)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    reply(res, to_json(store_->session_stats(req.matches[1])));
  }));

  server_->Get("/api/stats", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto ids = req.has_param("sessions") ? split_ids(req.get_param_value("sessions"))
                                               : std::vector<std::string>{};
    json sessions = json::array();
    for (const auto& id : ids.empty() ? store_->session_ids() : ids) {
      sessions.push_back(to_json(store_->session_stats(id)));
    }
    json body = to_json(store_->good_image_rate(ids));
    body["sessions"] = std::move(sessions);
    reply(res, body);
  }));

  server_->Get(R"(/api/image/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto record = store_->record(id);
    if (!record) throw Error(Errc::unknown_image_id, "'" + id + "' is not in the manifest");
    const fs::path file = locate_edited_image(output_root_, *record);
    std::ifstream in(file, std::ios::binary);
    if (!in) {
      reply_error(res, 404, "ImageNotStored", file.string() + " does not exist");
      return;
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    res.set_content(std::move(bytes), "image/png");
  }));
}

int ReviewServer::start(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::io_failure, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void ReviewServer::listen(const std::string& host, int port) {
  spdlog::info("review service on http://{}:{}", host, port);
  if (!server_->listen(host, port)) {
    throw Error(Errc::io_failure, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void ReviewServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace seaforge
