#include "panolayout/annotation_http.hpp"

#include <httplib.h>

#include <charconv>

#include "panolayout/errors.hpp"

namespace panolayout {

namespace {

constexpr const char* kJson = "application/json";
constexpr const char* kIdPattern = "([0-9a-f]+)";

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  res.status = status;
  res.set_content(nlohmann::json{{"code", code}, {"message", message}}.dump(), kJson);
}

nlohmann::json body_json(const httplib::Request& req, bool required) {
  if (req.body.empty()) {
    if (required) throw bad_request("request body must be a JSON object");
    return nlohmann::json::object();
  }
  auto j = nlohmann::json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw bad_request("request body must be a JSON object");
  return j;
}

long revision_of(const nlohmann::json& j) {
  if (!j.contains("revision") || !j["revision"].is_number_integer()) throw bad_request("integer revision required");
  return j["revision"].get<long>();
}

std::optional<long> optional_revision(const nlohmann::json& j) {
  if (!j.contains("revision")) return std::nullopt;
  return revision_of(j);
}

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

// Wraps a handler so that library and service errors become JSON errors.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ServiceError& e) {
      send_error(res, e.status(), e.code(), e.what());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, "bad_request", e.what());
    } catch (const InvalidLayoutError& e) {
      send_error(res, 422, "invalid_edit", e.what());
    } catch (const Error& e) {
      send_error(res, 400, "bad_request", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

std::string route(const std::string& tail) { return std::string("/sessions/") + kIdPattern + tail; }

}  // namespace

struct AnnotationServer::Impl {
  SessionStore& store;
  httplib::Server server;

  explicit Impl(SessionStore& s) : store(s) {
    server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      if (!req.is_multipart_form_data() || !req.has_file("panorama")) {
        throw bad_request("multipart field 'panorama' is required");
      }
      const auto pano = bytes_of(req.get_file_value("panorama").content);
      std::optional<MapInputs> maps;
      if (req.has_file("fc") || req.has_file("fp")) {
        if (!req.has_file("fc") || !req.has_file("fp") || !req.has_file("height")) {
          throw bad_request("fc, fp and height must be supplied together");
        }
        MapInputs m;
        m.fc_plpm = bytes_of(req.get_file_value("fc").content);
        m.fp_plpm = bytes_of(req.get_file_value("fp").content);
        const std::string h = req.get_file_value("height").content;
        const auto [ptr, ec] = std::from_chars(h.data(), h.data() + h.size(), m.height_m);
        if (ec != std::errc{} || ptr != h.data() + h.size()) throw bad_request("height must be a number");
        maps = std::move(m);
      }
      const std::string id = store.create(pano, maps);
      res.status = 201;
      res.set_content(nlohmann::json{{"id", id}}.dump(), kJson);
    }));
    server.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
      res.set_content(nlohmann::json{{"ids", store.ids()}}.dump(), kJson);
    }));
    server.Get(route("/panorama"), guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto png = store.panorama(req.matches[1]);
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    }));
    server.Get(route("/layout"), guarded([this](const httplib::Request& req, httplib::Response& res) {
      res.set_content(session_view_json(store.get(req.matches[1])).dump(), kJson);
    }));
    server.Post(route("/edits"), guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto j = body_json(req, true);
      if (!j.contains("op")) throw bad_request("edit body needs 'op'");
      const EditOp op = EditOp::from_json(j["op"]);
      res.set_content(session_view_json(store.apply_edit(req.matches[1], revision_of(j), op)).dump(), kJson);
    }));
    server.Post(route("/snap"), guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto j = body_json(req, true);
      if (!j.contains("wall_index") || !j["wall_index"].is_number_integer()) {
        throw bad_request("integer wall_index required");
      }
      const auto view = store.snap(req.matches[1], revision_of(j), j["wall_index"].get<int>());
      res.set_content(session_view_json(view).dump(), kJson);
    }));
    server.Post(route("/undo"), guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto view = store.undo(req.matches[1], optional_revision(body_json(req, false)));
      res.set_content(session_view_json(view).dump(), kJson);
    }));
    server.Post(route("/redo"), guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto view = store.redo(req.matches[1], optional_revision(body_json(req, false)));
      res.set_content(session_view_json(view).dump(), kJson);
    }));
    server.Get(route("/overlay"), guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      const SessionView view = store.get(id);
      nlohmann::json loops = nlohmann::json::array();
      for (const auto& loop : store.overlay(id)) loops.push_back(loop);
      res.set_content(nlohmann::json{{"loops", loops}, {"width", view.pano_w}, {"height", view.pano_h},
                                     {"revision", view.revision}}
                          .dump(),
                      kJson);
    }));
    server.Get(route("/export"), guarded([this](const httplib::Request& req, httplib::Response& res) {
      const SessionView view = store.get(req.matches[1]);
      res.set_header("Content-Disposition", "attachment; filename=\"layout.json\"");
      res.set_content(layout_to_json(view.layout).dump(2) + "\n", kJson);
    }));
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty() && res.status == 404) send_error(res, 404, "not_found", "no such route");
    });
  }
};

AnnotationServer::AnnotationServer(SessionStore& store) : impl_(std::make_unique<Impl>(store)) {}
AnnotationServer::~AnnotationServer() = default;

bool AnnotationServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
int AnnotationServer::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool AnnotationServer::serve() { return impl_->server.listen_after_bind(); }
void AnnotationServer::wait_until_ready() const { impl_->server.wait_until_ready(); }
void AnnotationServer::stop() { impl_->server.stop(); }

}  // namespace panolayout
