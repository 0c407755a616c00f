#include <algorithm>
#include <cmath>
#include <numeric>

#include "avgcn/gaze.hpp"
#include "doctest.h"
#include "unit/fixtures.hpp"

using namespace avgcn;
using namespace avgcn::gaze;

namespace {

GazeSession session_at_rate(double hz, double duration, double t0 = 0.0) {
  GazeSession s;
  s.scene_ref = {"ETH", 780};
  s.goal = {5.0, 1.0};
  const auto n = static_cast<std::size_t>(std::llround(duration * hz)) + 1;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0 + static_cast<double>(k) / hz;
    s.samples.push_back({t, {0.1 * t, 1.0}, {t, 0.0}, {1.0, 0.0}});
  }
  return s;
}

double sum(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

}  // namespace

TEST_CASE("a 50 Hz session gives ten points per 0.2 s window") {
  GazeSession s = session_at_rate(50.0, 3.0);
  for (double t : {0.4, 1.0, 2.2, 3.0}) {
    CHECK(extract_window(s, t).points.size() == 10);
  }
}

TEST_CASE("a window straddling the session start keeps only in-range points") {
  GazeSession s = session_at_rate(50.0, 2.0, 1.0);
  // (0.9, 1.06]: samples at 1.00, 1.02, 1.04, 1.06.
  CHECK(extract_window(s, 1.06).points.size() == 4);
  CHECK(extract_window(s, 1.0).points.size() == 1);
  CHECK_THROWS_AS(extract_window(s, 0.99), RangeError);
  CHECK_THROWS_AS(extract_window(s, 3.5), RangeError);
}

TEST_CASE("window membership matches a brute-force filter") {
  num::Rng rng(12);
  GazeSession s;
  s.scene_ref = {"HOTEL", 0};
  double t = 0.0;
  for (int k = 0; k < 400; ++k) {
    t += rng.uniform(0.005, 0.045);
    s.samples.push_back({t, {static_cast<double>(k), 0.0}, {}, {}});
  }
  for (int trial = 0; trial < 50; ++trial) {
    const double at = rng.uniform(s.samples.front().t, s.samples.back().t);
    std::vector<double> expected;
    for (const auto& smp : s.samples)
      if (smp.t > at - 0.2 && smp.t <= at) expected.push_back(smp.gaze_xy.x);
    std::vector<double> got;
    for (const Vec2& p : extract_window(s, at).points) got.push_back(p.x);
    CHECK(got == expected);
  }
}

TEST_CASE("equidistant pedestrians share attention equally") {
  std::vector<Vec2> gaze{{0.0, 0.0}};
  std::vector<Vec2> peds{{1.0, 0.0}, {0.0, -1.0}};
  auto a = ground_truth_attention(gaze, peds, 0.7);
  CHECK(a.weights[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(a.weights[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_FALSE(a.uniform_fallback);
}

TEST_CASE("gaze on a pedestrian concentrates attention there") {
  const double sigma2 = 0.25;
  const double sigma = std::sqrt(sigma2);
  std::vector<Vec2> gaze{{2.0, 3.0}};
  std::vector<Vec2> peds{{2.0, 3.0}, {2.0 + 10.0 * sigma, 3.0}};
  CHECK(ground_truth_attention(gaze, peds, sigma2).weights[0] > 0.999);
}

TEST_CASE("ground truth attention matches a direct mixture-density evaluation") {
  std::vector<Vec2> gaze{{0.3, -0.2}, {1.1, 0.4}};
  std::vector<Vec2> peds{{0.0, 0.0}, {1.0, 1.0}, {-0.5, 2.0}};
  // Oracle: explicit 2-D Gaussian pdf including its normaliser, summed.
  const double sigma2 = 1.0;
  const double two_pi = 2.0 * 3.14159265358979323846;
  std::vector<double> density(3, 0.0);
  for (std::size_t j = 0; j < 3; ++j)
    for (const Vec2& g : gaze) {
      const double dx = peds[j].x - g.x, dy = peds[j].y - g.y;
      density[j] += std::exp(-(dx * dx + dy * dy) / (2.0 * sigma2)) /
                    (two_pi * sigma2);
    }
  const double total = sum(density);
  auto a = ground_truth_attention(gaze, peds, sigma2);
  for (std::size_t j = 0; j < 3; ++j)
    CHECK(std::abs(a.weights[j] - density[j] / total) < 1e-12);
}

TEST_CASE("ground truth attention contract and underflow fallback") {
  std::vector<Vec2> gaze{{0.0, 0.0}};
  std::vector<Vec2> peds{{100.0, 0.0}, {0.0, 200.0}, {-300.0, 0.0}};
  CHECK_THROWS_AS(ground_truth_attention(gaze, peds, 0.0), ContractError);
  CHECK_THROWS_AS(ground_truth_attention(gaze, peds, -1.0), ContractError);
  CHECK_THROWS_AS(ground_truth_attention({}, peds, 1.0), ContractError);
  auto a = ground_truth_attention(gaze, peds, 1e-3);
  CHECK(a.uniform_fallback);
  for (double w : a.weights) CHECK(w == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("ground truth attention properties over random cases") {
  num::Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.index(7);
    const std::size_t g = 1 + rng.index(5);
    std::vector<Vec2> peds, gaze;
    for (std::size_t j = 0; j < n; ++j)
      peds.push_back({rng.uniform(-5, 5), rng.uniform(-5, 5)});
    for (std::size_t k = 0; k < g; ++k)
      gaze.push_back({rng.uniform(-5, 5), rng.uniform(-5, 5)});
    const double sigma2 = rng.uniform(0.2, 4.0);
    auto a = ground_truth_attention(gaze, peds, sigma2);
    CHECK(std::abs(sum(a.weights) - 1.0) < 1e-9);
    for (double w : a.weights) CHECK(w >= 0.0);

    // Permutation equivariance.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t k = n; k > 1; --k) std::swap(perm[k - 1], perm[rng.index(k)]);
    std::vector<Vec2> permuted;
    for (std::size_t k : perm) permuted.push_back(peds[k]);
    auto b = ground_truth_attention(gaze, permuted, sigma2);
    for (std::size_t k = 0; k < n; ++k)
      CHECK(std::abs(b.weights[k] - a.weights[perm[k]]) < 1e-12);

    // Scaling coordinates by s and sigma by s leaves weights unchanged.
    const double s = rng.uniform(0.5, 3.0);
    std::vector<Vec2> sp, sg;
    for (const Vec2& p : peds) sp.push_back(p * s);
    for (const Vec2& q : gaze) sg.push_back(q * s);
    auto c = ground_truth_attention(sg, sp, sigma2 * s * s);
    for (std::size_t k = 0; k < n; ++k)
      CHECK(std::abs(c.weights[k] - a.weights[k]) < 1e-9);
  }
}

TEST_CASE("shrinking sigma2 drives the nearest pedestrian's weight to one") {
  std::vector<Vec2> gaze{{0.1, 0.0}, {-0.1, 0.05}};
  std::vector<Vec2> peds{{0.0, 0.0}, {1.0, 0.5}, {-1.2, 0.3}};
  double prev = 0.0;
  for (double sigma2 : {1.0, 0.5, 0.1, 0.01}) {
    const double w = ground_truth_attention(gaze, peds, sigma2).weights[0];
    CHECK(w > prev);
    prev = w;
  }
  CHECK(prev > 0.999);
}

TEST_CASE("synthetic oracle looks at the approaching neighbour") {
  // Focal walks +x. Neighbour 1 ahead walking toward it, neighbour 2 nearer
  // but behind and walking away.
  auto w = testing::linear_window({{0, 0}, {4, 0}, {-1, 0}},
                                  {{1, 0}, {-1, 0}, {-1, 0}});
  CHECK(synthetic_gaze_target(w, 0) == 1);
  num::Rng rng(3);
  auto pts = synthetic_gaze_oracle(w, 0, rng);
  REQUIRE(pts.points.size() == 10);
  Vec2 centre;
  for (const Vec2& p : pts.points) centre += p / 10.0;
  CHECK(distance(centre, {4, 0}) < 0.3);
}

TEST_CASE("synthetic oracle with a single pedestrian looks ahead of it") {
  auto w = testing::linear_window({{2, 1}}, {{1.0, 0.5}});
  num::Rng rng(5);
  SyntheticGazeOptions opts;
  opts.jitter_std = 0.0;
  auto pts = synthetic_gaze_oracle(w, 0, rng, opts);
  for (const Vec2& p : pts.points) CHECK(distance(p, {2.4, 1.2}) < 1e-12);
}

TEST_CASE("synthetic oracle target matches a brute-force criterion scan") {
  num::Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vec2> pos{{0, 0}}, vel{{rng.uniform(-1, 1), rng.uniform(-1, 1)}};
    for (int k = 0; k < 4; ++k) {
      pos.push_back({rng.uniform(-6, 6), rng.uniform(-6, 6)});
      vel.push_back({rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)});
    }
    auto w = testing::linear_window(pos, vel);
    // Brute force: evaluate time-to-reach for every neighbour explicitly.
    std::size_t best = 0;
    double best_score = 1e300;
    std::size_t nearest = 0;
    double nearest_d = 1e300;
    for (std::size_t j = 1; j < pos.size(); ++j) {
      const double dx = pos[j].x - pos[0].x, dy = pos[j].y - pos[0].y;
      const double d = std::sqrt(dx * dx + dy * dy);
      const double rvx = vel[j].x - vel[0].x, rvy = vel[j].y - vel[0].y;
      const double closing = -(dx * rvx + dy * rvy) / d;
      if (d < nearest_d) { nearest_d = d; nearest = j; }
      if (closing > 0 && d / closing < best_score) { best_score = d / closing; best = j; }
    }
    const std::size_t expected = best ? best : nearest;
    CHECK(synthetic_gaze_target(w, 0) == expected);
  }
}

TEST_CASE("session documents round-trip and validate") {
  GazeSession s = session_at_rate(50.0, 1.5);
  const std::string text = serialize_session(s);
  GazeSession back = parse_session(text);
  CHECK(serialize_session(back) == text);
  CHECK(back.samples.size() == s.samples.size());
  CHECK(back.scene_ref.start_frame == 780);
}

TEST_CASE("decreasing timestamps are rejected naming the sample index") {
  GazeSession s = session_at_rate(50.0, 1.0);
  std::swap(s.samples[7].t, s.samples[8].t);
  try {
    parse_session(serialize_session(s));
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    REQUIRE_FALSE(e.errors().empty());
    CHECK(e.errors()[0].field == "samples[8].t");
    CHECK(e.errors()[0].message.find("sample index 8") != std::string::npos);
  }
}

TEST_CASE("schema rejects unknown keys, bad versions, and slow sampling") {
  CHECK_THROWS_AS(parse_session("{\"format_version\":1}"), SchemaError);
  CHECK_THROWS_AS(parse_session("not json"), SchemaError);

  GazeSession s = session_at_rate(50.0, 1.0);
  std::string text = serialize_session(s);
  std::string extra = text;
  extra.insert(1, "\"colour\": \"red\",");
  try {
    parse_session(extra);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.errors()[0].field == "colour");
  }

  s.format_version = 2;
  CHECK_THROWS_AS(parse_session(serialize_session(s)), SchemaError);

  CHECK(validate(session_at_rate(20.0, 3.0)).empty());
  CHECK_FALSE(validate(session_at_rate(10.0, 3.0)).empty());
  GazeSession gap = session_at_rate(50.0, 4.0);
  gap.samples.erase(gap.samples.begin() + 60, gap.samples.begin() + 100);
  CHECK_FALSE(validate(gap).empty());
}
