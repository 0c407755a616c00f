#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "avgcn/scenes.hpp"

namespace avgcn::service {

/// Uploaded sessions, one file per id, never overwritten.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir);

  /// Stores under a fresh id and returns it.
  std::string create(const std::string& bytes);
  /// False if `id` is already taken.
  bool put(const std::string& id, const std::string& bytes);
  std::optional<std::string> get(const std::string& id) const;

  static bool valid_id(const std::string& id);
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  bool commit(const std::string& id, const std::string& bytes);

  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::uint64_t counter_ = 0;
};

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Request routing without any transport; the HTTP server delegates here.
class Service {
 public:
  Service(scenes::SceneCatalog catalog, SessionStore& store);

  Response handle(const std::string& method, const std::string& path,
                  const std::string& body) const;

 private:
  scenes::SceneCatalog catalog_;
  SessionStore& store_;
};

/// HTTP front end running on a background thread.
class Server {
 public:
  Server(const Service& service, const std::string& host, int port);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  int port() const noexcept { return port_; }
  void stop();
  /// Blocks until the server stops.
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace avgcn::service
