#include "avgcn/service.hpp"

#include <fstream>
#include <random>
#include <regex>

#include "avgcn/error.hpp"
#include "avgcn/gaze.hpp"
#include "httplib.h"
#include "json.hpp"

namespace avgcn::service {

namespace fs = std::filesystem;
using nlohmann::json;

SessionStore::SessionStore(fs::path dir) : dir_(std::move(dir)) {}

bool SessionStore::valid_id(const std::string& id) {
  static const std::regex pattern("[A-Za-z0-9_-]{1,64}");
  return std::regex_match(id, pattern);
}

bool SessionStore::commit(const std::string& id, const std::string& bytes) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create session directory " + dir_.string() + ": " + ec.message());
  std::random_device rd;
  const fs::path tmp = dir_ / (".upload-" + id + "-" + std::to_string(rd()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.flush()) {
      out.close();
      fs::remove(tmp, ec);
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::lock_guard lock(mutex_);
  const fs::path final_path = dir_ / (id + ".json");
  if (fs::exists(final_path)) {
    fs::remove(tmp, ec);
    return false;
  }
  fs::rename(tmp, final_path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot store session " + id);
  }
  return true;
}

std::string SessionStore::create(const std::string& bytes) {
  std::random_device rd;
  for (int attempt = 0; attempt < 16; ++attempt) {
    char buf[40];
    std::uint64_t n;
    {
      std::lock_guard lock(mutex_);
      n = ++counter_;
    }
    std::snprintf(buf, sizeof buf, "s%08x%08x%04llx", rd(), rd(),
                  static_cast<unsigned long long>(n & 0xffff));
    if (commit(buf, bytes)) return buf;
  }
  throw IoError("could not allocate a session id");
}

bool SessionStore::put(const std::string& id, const std::string& bytes) {
  if (!valid_id(id)) throw ContractError("invalid session id");
  return commit(id, bytes);
}

std::optional<std::string> SessionStore::get(const std::string& id) const {
  if (!valid_id(id)) return std::nullopt;
  std::ifstream in(dir_ / (id + ".json"), std::ios::binary);
  if (!in) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Service::Service(scenes::SceneCatalog catalog, SessionStore& store)
    : catalog_(std::move(catalog)), store_(store) {}

namespace {

Response json_response(int status, const json& body) {
  return {status, body.dump() + "\n", "application/json"};
}

Response error(int status, const std::string& message) {
  return json_response(status, {{"error", message}});
}

Response invalid_session(const gaze::SchemaError& e) {
  json fields = json::array();
  for (const auto& f : e.errors()) fields.push_back({{"field", f.field}, {"message", f.message}});
  return json_response(400, {{"error", "invalid session"}, {"fields", fields}});
}

}  // namespace

Response Service::handle(const std::string& method, const std::string& path,
                         const std::string& body) const {
  static const std::string scenes_prefix = "/scenes/";
  static const std::string sessions_prefix = "/sessions/";
  try {
    if (method == "GET" && path == "/health") return json_response(200, {{"status", "ok"}});
    if (method == "GET" && path == "/scenes")
      return {200, scenes::scene_list_json(catalog_.all()), "application/json"};
    if (method == "GET" && path.rfind(scenes_prefix, 0) == 0) {
      const auto* scene = catalog_.find(path.substr(scenes_prefix.size()));
      if (!scene) return error(404, "no such scene");
      return {200, scenes::scene_to_json(*scene), "application/json"};
    }
    if (method == "POST" && path == "/sessions") {
      gaze::parse_session(body);
      const std::string id = store_.create(body);
      return json_response(201, {{"session_id", id}});
    }
    if (path.rfind(sessions_prefix, 0) == 0) {
      const std::string id = path.substr(sessions_prefix.size());
      if (!SessionStore::valid_id(id)) return error(400, "invalid session id");
      if (method == "GET") {
        auto bytes = store_.get(id);
        if (!bytes) return error(404, "no such session");
        return {200, *bytes, "application/json"};
      }
      if (method == "PUT") {
        gaze::parse_session(body);
        if (!store_.put(id, body)) return error(409, "session " + id + " already exists");
        return json_response(201, {{"session_id", id}});
      }
      return error(405, "method not allowed");
    }
    if (path == "/sessions" || path == "/scenes" || path == "/health")
      return error(405, "method not allowed");
    return error(404, "not found");
  } catch (const gaze::SchemaError& e) {
    return invalid_session(e);
  } catch (const IoError& e) {
    return error(500, std::string("storage failure: ") + e.what());
  }
}

struct Server::Impl {
  httplib::Server http;
  std::thread thread;
};

Server::Server(const Service& service, const std::string& host, int port)
    : impl_(std::make_unique<Impl>()) {
  auto& http = impl_->http;
  http.set_payload_max_length(16 * 1024 * 1024);
  http.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                            {"Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"},
                            {"Access-Control-Allow-Headers", "Content-Type"}});
  auto route = [&service](const httplib::Request& req, httplib::Response& res) {
    if (req.method == "OPTIONS") {
      res.status = 204;
      return;
    }
    const Response r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  const std::string any = R"(/.*)";
  http.Get(any, route);
  http.Post(any, route);
  http.Put(any, route);
  http.Options(any, route);
  http.Delete(any, route);

  port_ = port == 0 ? http.bind_to_any_port(host) : (http.bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
}

Server::~Server() { stop(); }

void Server::stop() {
  if (!impl_) return;
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void Server::wait() {
  if (impl_ && impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace avgcn::service
