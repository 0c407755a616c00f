#include <fstream>
#include <set>
#include <thread>

#include "avgcn/service.hpp"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "unit/session_fixture.hpp"
#include "unit/tempdir.hpp"

using namespace avgcn;
using namespace avgcn::service;
using nlohmann::json;

namespace {

scenes::SceneCatalog small_catalog() {
  std::vector<traj::RawTrack> tracks;
  for (int p = 0; p < 3; ++p) {
    traj::RawTrack t;
    t.pedestrian_id = p + 1;
    for (int f = 0; f < 60; ++f) t.samples.push_back({f * 10, {0.1 * f, 0.7 * p}});
    tracks.push_back(std::move(t));
  }
  scenes::SceneCatalog c;
  c.add(scenes::build_scenes("ETH", tracks));
  return c;
}

std::string valid_body(const scenes::SceneCatalog& c) {
  return gaze::serialize_session(testing::steering_session(c.all().front(), 3.0, 1));
}

std::size_t file_count(const std::filesystem::path& dir) {
  std::size_t n = 0;
  if (!std::filesystem::exists(dir)) return 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) n += e.is_regular_file();
  return n;
}

}  // namespace

TEST_CASE("empty corpus lists no scenes") {
  testing::TempDir dir;
  SessionStore store(dir / "sessions");
  Service svc({}, store);
  const auto r = svc.handle("GET", "/scenes", "");
  CHECK(r.status == 200);
  CHECK(json::parse(r.body)["scenes"].empty());
  CHECK(svc.handle("GET", "/health", "").status == 200);
  CHECK(svc.handle("GET", "/scenes/ETH-0", "").status == 404);
  CHECK(svc.handle("GET", "/nowhere", "").status == 404);
  CHECK(svc.handle("DELETE", "/scenes", "").status == 405);
}

TEST_CASE("scene replay fetch") {
  testing::TempDir dir;
  SessionStore store(dir / "sessions");
  const auto catalog = small_catalog();
  Service svc(catalog, store);
  const auto list = json::parse(svc.handle("GET", "/scenes", "").body);
  REQUIRE(list["scenes"].size() == 1);
  const std::string id = list["scenes"][0]["scene_id"];
  const auto r = svc.handle("GET", "/scenes/" + id, "");
  CHECK(r.status == 200);
  CHECK(r.body == scenes::scene_to_json(catalog.all().front()));
}

TEST_CASE("uploaded sessions round trip byte for byte") {
  testing::TempDir dir;
  SessionStore store(dir / "sessions");
  const auto catalog = small_catalog();
  Service svc(catalog, store);
  // Unusual but valid formatting must be preserved exactly.
  const std::string body = "  " + valid_body(catalog) + "\n\n";
  const auto posted = svc.handle("POST", "/sessions", body);
  REQUIRE(posted.status == 201);
  const std::string id = json::parse(posted.body)["session_id"];
  const auto got = svc.handle("GET", "/sessions/" + id, "");
  CHECK(got.status == 200);
  CHECK(got.body == body);
  CHECK(svc.handle("GET", "/sessions/unknown", "").status == 404);
  CHECK(svc.handle("GET", "/sessions/..%2Fetc", "").status == 400);
  CHECK(svc.handle("DELETE", "/sessions/" + id, "").status == 405);
}

TEST_CASE("stored sessions are immutable") {
  testing::TempDir dir;
  SessionStore store(dir / "sessions");
  const auto catalog = small_catalog();
  Service svc(catalog, store);
  const std::string body = valid_body(catalog);
  CHECK(svc.handle("PUT", "/sessions/trial-1", body).status == 201);
  auto other = testing::steering_session(catalog.all().front(), 2.0, 0);
  const auto again = svc.handle("PUT", "/sessions/trial-1", gaze::serialize_session(other));
  CHECK(again.status == 409);
  CHECK(svc.handle("GET", "/sessions/trial-1", "").body == body);
}

TEST_CASE("malformed sessions are rejected with field errors") {
  testing::TempDir dir;
  SessionStore store(dir / "sessions");
  const auto catalog = small_catalog();
  Service svc(catalog, store);

  auto s = testing::steering_session(catalog.all().front(), 3.0, 1);
  s.samples[17].t = s.samples[16].t - 0.001;
  const auto r = svc.handle("POST", "/sessions", gaze::serialize_session(s));
  CHECK(r.status == 400);
  const auto j = json::parse(r.body);
  REQUIRE(!j["fields"].empty());
  CHECK(j["fields"][0]["field"] == "samples[17].t");
  CHECK(j["fields"][0]["message"].get<std::string>().find("sample index 17") !=
        std::string::npos);

  auto doc = json::parse(valid_body(catalog));
  doc["extra"] = 1;
  const auto unknown = svc.handle("POST", "/sessions", doc.dump());
  CHECK(unknown.status == 400);
  CHECK(json::parse(unknown.body)["fields"][0]["field"] == "extra");

  CHECK(svc.handle("POST", "/sessions", "{").status == 400);
  CHECK(svc.handle("PUT", "/sessions/x", "[]").status == 400);
  CHECK(file_count(dir / "sessions") == 0);
}

TEST_CASE("storage failure returns a server error and leaves no file") {
  testing::TempDir dir;
  std::ofstream(dir / "blocked") << "not a directory";
  SessionStore store(dir / "blocked");
  const auto catalog = small_catalog();
  Service svc(catalog, store);
  const auto r = svc.handle("POST", "/sessions", valid_body(catalog));
  CHECK(r.status == 500);
  CHECK(file_count(dir.path()) == 1);
}

TEST_CASE("http server handles concurrent uploads") {
  testing::TempDir dir;
  SessionStore store(dir / "sessions");
  const auto catalog = small_catalog();
  Service svc(catalog, store);
  Server server(svc, "127.0.0.1", 0);
  REQUIRE(server.port() > 0);

  httplib::Client client("127.0.0.1", server.port());
  auto scenes = client.Get("/scenes");
  REQUIRE(scenes);
  CHECK(scenes->status == 200);
  CHECK(scenes->get_header_value("Access-Control-Allow-Origin") == "*");
  auto pre = client.Options("/sessions");
  REQUIRE(pre);
  CHECK(pre->status == 204);

  const std::string body = valid_body(catalog);
  std::vector<std::string> ids(8);
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < ids.size(); ++i)
    threads.emplace_back([&, i] {
      httplib::Client c("127.0.0.1", server.port());
      auto r = c.Post("/sessions", body, "application/json");
      if (r && r->status == 201) ids[i] = json::parse(r->body)["session_id"];
    });
  for (auto& t : threads) t.join();
  std::set<std::string> unique(ids.begin(), ids.end());
  CHECK(unique.size() == ids.size());
  CHECK(!unique.count(""));
  CHECK(file_count(dir / "sessions") == ids.size());

  auto got = client.Get("/sessions/" + ids[3]);
  REQUIRE(got);
  CHECK(got->body == body);

  std::vector<int> statuses(6);
  threads.clear();
  for (std::size_t i = 0; i < statuses.size(); ++i)
    threads.emplace_back([&, i] {
      httplib::Client c("127.0.0.1", server.port());
      auto r = c.Put("/sessions/shared", body, "application/json");
      statuses[i] = r ? r->status : -1;
    });
  for (auto& t : threads) t.join();
  CHECK(std::count(statuses.begin(), statuses.end(), 201) == 1);
  CHECK(std::count(statuses.begin(), statuses.end(), 409) == 5);

  auto bad = client.Post("/sessions", "{}", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  server.stop();
}
