#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "avgcn/error.hpp"
#include "avgcn/rng.hpp"
#include "avgcn/trajdata.hpp"
#include "doctest.h"

using namespace avgcn;
using namespace avgcn::traj;

namespace {

// Rows for `peds` pedestrians; pedestrian p is present on frames in
// [first[p], last[p]] with frame ids multiplied by `frame_step`.
std::string fixture(const std::vector<std::pair<int, int>>& spans,
                    int frame_step) {
  std::ostringstream os;
  int max_frame = 0;
  for (auto [a, b] : spans) max_frame = std::max(max_frame, b);
  for (int f = 0; f <= max_frame; ++f)
    for (std::size_t p = 0; p < spans.size(); ++p)
      if (f >= spans[p].first && f <= spans[p].second)
        os << f * frame_step << ' ' << p + 1 << ' ' << 0.1 * f + p << ' '
           << -0.05 * f * static_cast<double>(p) << '\n';
  return os.str();
}

}  // namespace

TEST_CASE("two rows for one pedestrian give one two-sample track") {
  auto tracks = parse_dataset_text("0 7 1.0 2.0\n10 7 1.5 2.5\n");
  REQUIRE(tracks.size() == 1);
  CHECK(tracks[0].pedestrian_id == 7);
  REQUIRE(tracks[0].samples.size() == 2);
  CHECK(tracks[0].samples[1].position == Vec2{1.5, 2.5});
}

TEST_CASE("non-numeric field is a parse error at its line") {
  try {
    parse_dataset_text("abc 1 0.0 0.0\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
  try {
    parse_dataset_text("0 1 0.0 0.0\n\n10 1 x 0.0\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_dataset_text("0 1 0.0\n"), ParseError);
}

TEST_CASE("S-GAN style float ids and comments parse") {
  auto tracks = parse_dataset_text("# header\n780.0\t1.0\t8.46\t3.59\n790.0\t1.0\t9.0\t3.6\n");
  REQUIRE(tracks.size() == 1);
  CHECK(tracks[0].samples.front().frame == 780);
}

TEST_CASE("non-monotone frames for a pedestrian are a data error") {
  CHECK_THROWS_AS(parse_dataset_text("10 1 0 0\n0 1 0 0\n"), DataError);
  CHECK_THROWS_AS(parse_dataset_text("10 1 0 0\n10 1 0 0\n"), DataError);
}

TEST_CASE("unreadable file is an I/O error") {
  CHECK_THROWS_AS(parse_dataset("/nonexistent/avgcn/file.txt"), IoError);
}

TEST_CASE("stride 10 keeps four of forty frames") {
  std::ostringstream os;
  for (int f = 0; f < 40; ++f) {
    os << f << " 1 " << 0.01 * f << " 0\n";
    os << f << " 2 " << 1.0 << ' ' << 0.02 * f << '\n';
  }
  auto tracks = parse_dataset_text(os.str(), 10);
  REQUIRE(tracks.size() == 2);
  for (const auto& t : tracks) {
    REQUIRE(t.samples.size() == 4);
    CHECK(t.samples[0].frame == 0);
    CHECK(t.samples[3].frame == 30);
  }
}

TEST_CASE("single pedestrian for twenty frames makes one window") {
  auto windows = build_windows(parse_dataset_text(fixture({{0, 19}}, 10)), "ETH");
  REQUIRE(windows.size() == 1);
  CHECK(windows[0].size() == 1);
  CHECK(windows[0].dataset_id == "ETH");
}

TEST_CASE("pedestrian present for nineteen frames is excluded") {
  auto windows =
      build_windows(parse_dataset_text(fixture({{0, 19}, {1, 19}}, 10)), "X");
  REQUIRE(windows.size() == 1);
  REQUIRE(windows[0].size() == 1);
  CHECK(windows[0].pedestrians[0].id == 1);
}

TEST_CASE("window membership matches a brute-force scan") {
  const std::vector<std::pair<int, int>> spans{{0, 24}, {3, 24}, {0, 21}};
  auto tracks = parse_dataset_text(fixture(spans, 10));
  auto windows = build_windows(tracks, "Z");
  CHECK(windows.size() == 6);

  // Oracle: for every start frame, every pedestrian whose span covers all 20.
  std::vector<std::set<std::int64_t>> expected;
  for (int start = 0; start + 20 <= 25; ++start) {
    std::set<std::int64_t> members;
    for (std::size_t p = 0; p < spans.size(); ++p) {
      bool all = true;
      for (int f = start; f < start + 20; ++f)
        all = all && f >= spans[p].first && f <= spans[p].second;
      if (all) members.insert(static_cast<std::int64_t>(p + 1));
    }
    if (!members.empty()) expected.push_back(members);
  }
  REQUIRE(windows.size() == expected.size());
  for (std::size_t w = 0; w < windows.size(); ++w) {
    std::set<std::int64_t> got;
    for (const auto& p : windows[w].pedestrians) got.insert(p.id);
    CHECK(got == expected[w]);
    CHECK(windows[w].start_frame == static_cast<std::int64_t>(w) * 10);
  }
}

TEST_CASE("displacements are consistent with absolute positions") {
  num::Rng rng(4);
  std::ostringstream os;
  double x[3] = {0, 5, -3}, y[3] = {0, 1, 2};
  for (int f = 0; f < 30; ++f)
    for (int p = 0; p < 3; ++p) {
      x[p] += rng.uniform(-0.3, 0.5);
      y[p] += rng.uniform(-0.4, 0.4);
      os << f * 10 << ' ' << p << ' ' << x[p] << ' ' << y[p] << '\n';
    }
  auto windows = build_windows(parse_dataset_text(os.str()), "R");
  REQUIRE(windows.size() == 11);
  for (const auto& w : windows) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      const auto& p = w.pedestrians[i];
      CHECK(p.rel_displacements[0] == Vec2{});
      Vec2 acc = p.abs_positions[0];
      for (std::size_t t = 0; t < w.length(); ++t) {
        acc += p.rel_displacements[t];
        CHECK(norm(acc - p.abs_positions[t]) < 1e-9);
      }
      for (std::size_t t = 1; t < w.length(); ++t) {
        // Spreadsheet-style recomputation of the backward difference.
        const double vx = (p.abs_positions[t].x - p.abs_positions[t - 1].x) / 0.4;
        const double vy = (p.abs_positions[t].y - p.abs_positions[t - 1].y) / 0.4;
        const Vec2 v = velocity_at(w, i, t);
        CHECK(v.x == doctest::Approx(vx).epsilon(1e-12));
        CHECK(v.y == doctest::Approx(vy).epsilon(1e-12));
      }
      CHECK(norm(p.velocity_at_obs - velocity_at(w, i, w.t_obs - 1)) < 1e-12);
    }
  }
}

TEST_CASE("velocity_at arithmetic and contract") {
  SceneWindow w;
  PedestrianTrack still, mover;
  still.abs_positions.assign(20, Vec2{1.0, 1.0});
  for (int t = 0; t < 20; ++t) mover.abs_positions.push_back({0.4 * t, 0.0});
  w.pedestrians = {still, mover};
  recompute_derived(w);
  CHECK(velocity_at(w, 0, 5) == Vec2{0.0, 0.0});
  CHECK(velocity_at(w, 1, 5).x == doctest::Approx(1.0));
  CHECK(velocity_at(w, 1, 5).y == 0.0);
  CHECK_THROWS_AS(velocity_at(w, 0, 0), ContractError);
}

TEST_CASE("relative context is antisymmetric and zero on the focal entry") {
  auto windows = build_windows(
      parse_dataset_text(fixture({{0, 19}, {0, 19}, {0, 19}}, 10)), "A");
  REQUIRE(windows.size() == 1);
  const auto& w = windows[0];
  for (std::size_t i = 0; i < w.size(); ++i) {
    auto pi = relative_context(w, i, 7);
    CHECK(pi[i] == Vec2{});
    for (std::size_t j = 0; j < w.size(); ++j) {
      auto pj = relative_context(w, j, 7);
      CHECK(norm(pi[j] + pj[i]) < 1e-12);
    }
  }
}

TEST_CASE("leave-one-out split partitions the corpus") {
  std::vector<Dataset> datasets;
  const char* names[] = {"ETH", "HOTEL", "UNIV", "ZARA1", "ZARA2"};
  for (int d = 0; d < 5; ++d) {
    Dataset ds{names[d], {}};
    for (int k = 0; k < 10 + d; ++k) {
      SceneWindow w;
      w.dataset_id = names[d];
      w.start_frame = k;
      ds.windows.push_back(w);
    }
    datasets.push_back(ds);
  }
  std::set<std::pair<std::string, std::int64_t>> test_union;
  for (const char* held : names) {
    Split s = leave_one_out_split(datasets, held, 0.1);
    for (const auto& w : s.test) CHECK(w.dataset_id == held);
    std::set<std::pair<std::string, std::int64_t>> all;
    std::size_t total = 0;
    for (const auto* part : {&s.train, &s.validation, &s.test})
      for (const auto& w : *part) {
        all.insert({w.dataset_id, w.start_frame});
        ++total;
      }
    CHECK(total == 10 + 11 + 12 + 13 + 14);
    CHECK(all.size() == total);
    for (const auto& w : s.train) CHECK(w.dataset_id != held);
    for (const auto& w : s.test) {
      auto key = std::make_pair(w.dataset_id, w.start_frame);
      CHECK(test_union.count(key) == 0);
      test_union.insert(key);
    }
  }
  CHECK(test_union.size() == 60);
  CHECK(leave_one_out_split(datasets, "eth").test.size() == 10);
  CHECK_THROWS_AS(leave_one_out_split(datasets, "MALL"), ConfigError);
  datasets.pop_back();
  CHECK_THROWS_AS(leave_one_out_split(datasets, "ETH"), ConfigError);
}

TEST_CASE("load_dataset reads files from disk") {
  const auto dir = std::filesystem::temp_directory_path() / "avgcn_trajdata_test";
  std::filesystem::create_directories(dir);
  const auto file = dir / "one.txt";
  std::ofstream(file) << fixture({{0, 21}}, 10);
  Dataset ds = load_dataset("HOTEL", {file});
  CHECK(ds.windows.size() == 3);
  std::filesystem::remove_all(dir);
}
