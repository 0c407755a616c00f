#include <cmath>
#include <numbers>

#include "avgcn/error.hpp"
#include "avgcn/eval.hpp"
#include "avgcn/synthetic.hpp"
#include "doctest.h"
#include "json.hpp"
#include "unit/fixtures.hpp"

using namespace avgcn;
using namespace avgcn::eval;

namespace {

std::vector<Vec2> random_path(num::Rng& rng, std::size_t n) {
  std::vector<Vec2> p;
  Vec2 x{rng.uniform(-3, 3), rng.uniform(-3, 3)};
  for (std::size_t t = 0; t < n; ++t) {
    x += Vec2{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    p.push_back(x);
  }
  return p;
}

}  // namespace

TEST_CASE("ade and fde") {
  num::Rng rng(1);
  auto gt = random_path(rng, 12);
  CHECK(ade(gt, gt) == 0.0);
  CHECK(fde(gt, gt) == 0.0);

  std::vector<Vec2> origin(12, Vec2{0, 0}), offset(12, Vec2{0.3, 0.4});
  CHECK(ade(offset, origin) == 0.5);
  CHECK(fde(offset, origin) == 0.5);
  std::vector<Vec2> shifted;
  for (const Vec2& p : gt) shifted.push_back(p + Vec2{0.3, 0.4});
  CHECK(std::abs(ade(shifted, gt) - 0.5) < 1e-12);
  CHECK(std::abs(fde(shifted, gt) - 0.5) < 1e-12);

  for (int trial = 0; trial < 50; ++trial) {
    auto a = random_path(rng, 12), b = random_path(rng, 12);
    double sum = 0.0;
    for (std::size_t t = 0; t < 12; ++t) sum += std::hypot(a[t].x - b[t].x, a[t].y - b[t].y);
    CHECK(std::abs(ade(a, b) - sum / 12.0) < 1e-12);
    CHECK(std::abs(fde(a, b) - std::hypot(a[11].x - b[11].x, a[11].y - b[11].y)) < 1e-12);

    const double theta = rng.uniform(-3, 3);
    const Vec2 shift{rng.uniform(-9, 9), rng.uniform(-9, 9)};
    std::vector<Vec2> ra, rb;
    for (std::size_t t = 0; t < 12; ++t) {
      ra.push_back(rotate(a[t], theta) + shift);
      rb.push_back(rotate(b[t], theta) + shift);
    }
    CHECK(std::abs(ade(ra, rb) - ade(a, b)) < 1e-9);
    CHECK(std::abs(fde(ra, rb) - fde(a, b)) < 1e-9);
  }
  CHECK_THROWS_AS(ade(gt, random_path(rng, 11)), ContractError);
  CHECK_THROWS_AS(fde(std::vector<Vec2>{}, std::vector<Vec2>{}), ContractError);
}

TEST_CASE("best of k") {
  num::Rng rng(2);
  auto gt = random_path(rng, 12);
  std::vector<std::vector<Vec2>> samples;
  for (int k = 0; k < 20; ++k) samples.push_back(random_path(rng, 12));

  auto one = best_of_k({samples[0]}, gt);
  CHECK(one.ade == ade(samples[0], gt));
  CHECK(one.fde == fde(samples[0], gt));

  auto all = best_of_k(samples, gt);
  for (const auto& s : samples) {
    CHECK(all.ade <= ade(s, gt));
    CHECK(all.fde <= fde(s, gt));
  }
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k : {1, 5, 20}) {
    std::vector<std::vector<Vec2>> prefix(samples.begin(), samples.begin() + k);
    const double v = best_of_k(prefix, gt).ade;
    CHECK(v <= prev);
    prev = v;
  }

  auto with_perfect = samples;
  with_perfect.push_back(gt);
  auto zero = best_of_k(with_perfect, gt);
  CHECK(zero.ade == 0.0);
  CHECK(zero.fde == 0.0);

  // Minima are independent: one sample wins ADE, another wins FDE.
  std::vector<Vec2> flat(12, Vec2{0, 0});
  std::vector<Vec2> near_all(12, Vec2{0.1, 0}), near_end(12, Vec2{1, 0});
  near_end[11] = {0, 0};
  auto mixed = best_of_k({near_all, near_end}, flat);
  CHECK(mixed.ade == doctest::Approx(0.1));
  CHECK(mixed.fde == 0.0);

  CHECK_THROWS_AS(best_of_k({}, gt), ContractError);
}

TEST_CASE("constant velocity baseline") {
  auto linear = testing::linear_window({{0, 0}, {3, 1}, {-1, 2}}, {{1, 0}, {0, 0}, {-0.5, 0.7}});
  auto cv = constant_velocity_baseline(linear);
  REQUIRE(cv.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    auto abs = predictor::to_absolute(last_observed_position(linear, i), cv[i]);
    CHECK(ade(abs, ground_truth_future(linear, i)) < 1e-12);
  }
  CHECK(cv[1][5] == Vec2{0, 0});

  // Walks +x at 1 m/s, then turns to +y at the last observed step.
  traj::SceneWindow turn = testing::linear_window({{0, 0}}, {{1, 0}});
  for (std::size_t s = 1; s <= turn.t_pred; ++s)
    turn.pedestrians[0].abs_positions[turn.t_obs - 1 + s] = {0, 0.4 * static_cast<double>(s)};
  traj::recompute_derived(turn);
  auto abs = predictor::to_absolute({0, 0}, constant_velocity_baseline(turn)[0]);
  const double expected = std::sqrt(2.0) * 0.4 * 6.5;
  CHECK(ade(abs, ground_truth_future(turn, 0)) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(fde(abs, ground_truth_future(turn, 0)) ==
        doctest::Approx(std::sqrt(2.0) * 0.4 * 12).epsilon(1e-12));
}

TEST_CASE("metric report serialisation and validation") {
  MetricReport r;
  r.arm = "AVGCN";
  r.k = 20;
  r.seeds = {1, 2};
  r.rows = {{"ETH", {0.6, 1.1}, {0.9, 1.8}, 10, 40}, {"HOTEL", {0.3, 0.5}, {0.4, 0.8}, 12, 30}};
  r.recompute_average();
  CHECK(r.average.ade == doctest::Approx(0.45));
  CHECK(r.average.fde == doctest::Approx(0.8));
  CHECK(r.baseline_average.ade == doctest::Approx(0.65));

  const std::string text = r.to_json();
  CHECK(validate_report(text).empty());
  MetricReport back = parse_report(text);
  CHECK(back.rows.size() == 2);
  CHECK(back.rows[1].dataset == "HOTEL");
  CHECK(back.to_json() == text);
  CHECK(r.to_table().find("AVG") != std::string::npos);

  auto j = nlohmann::json::parse(text);
  j["extra"] = 1;
  CHECK_FALSE(validate_report(j.dump()).empty());
  j.erase("extra");
  j["average"]["model"]["ade"] = 0.5;
  CHECK_FALSE(validate_report(j.dump()).empty());
  j["average"]["model"]["ade"] = 0.45;
  j["rows"][0]["model"]["fde"] = -1.0;
  CHECK_FALSE(validate_report(j.dump()).empty());
  j["rows"][0]["model"]["fde"] = 1.1;
  j["arm"] = "SGAN";
  CHECK_FALSE(validate_report(j.dump()).empty());
  CHECK_FALSE(validate_report("{").empty());
  CHECK_THROWS_AS(parse_report("[]"), DataError);
}

TEST_CASE("evaluation and the experiment runner on a toy corpus") {
  auto corpus = synth::crowd_corpus(6, 3);
  ExperimentConfig cfg;
  cfg.arm = predictor::arm_from_name("GCN");
  cfg.held_out = {"hotel"};
  cfg.seeds = {4};
  cfg.k = 3;
  cfg.train.epochs = 1;
  auto report = run_experiment(corpus, cfg, nullptr);
  CHECK(validate_report(report.to_json()).empty());
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].dataset == "HOTEL");
  CHECK(report.rows[0].windows == 6);
  CHECK(report.average.ade == report.rows[0].model.ade);

  cfg.arm = predictor::arm_from_name("AVGCN");
  CHECK_THROWS_AS(run_experiment(corpus, cfg, nullptr), ConfigError);

  num::Rng rng(5);
  auto params = predictor::PredictorParams::initialise(rng);
  const auto& test = corpus[0].windows;
  auto k1 = evaluate(test, params, predictor::arm_from_name("GCN"), nullptr, 1, 9);
  auto k5 = evaluate(test, params, predictor::arm_from_name("GCN"), nullptr, 5, 9);
  auto k20 = evaluate(test, params, predictor::arm_from_name("GCN"), nullptr, 20, 9);
  CHECK(k5.model.ade <= k1.model.ade);
  CHECK(k20.model.ade <= k5.model.ade);
  CHECK(k20.model.fde <= k5.model.fde);
  CHECK(k1.baseline.ade == k20.baseline.ade);
}

TEST_CASE("crowd simulation") {
  synth::CrowdOptions o;
  o.frames = 60;
  auto a = synth::crowd_tracks(o, 11);
  auto b = synth::crowd_tracks(o, 11);
  REQUIRE(!a.empty());
  CHECK(a.size() == b.size());
  CHECK(a[0].samples.size() == b[0].samples.size());
  CHECK(a[0].samples.back().position == b[0].samples.back().position);

  auto parsed = traj::parse_dataset_text(synth::format_tracks(a));
  REQUIRE(parsed.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(parsed[i].pedestrian_id == a[i].pedestrian_id);
    REQUIRE(parsed[i].samples.size() == a[i].samples.size());
    for (std::size_t k = 0; k < a[i].samples.size(); ++k) {
      CHECK(parsed[i].samples[k].frame == a[i].samples[k].frame);
      CHECK(parsed[i].samples[k].position == a[i].samples[k].position);
    }
  }

  auto corpus = synth::crowd_corpus(10, 2);
  REQUIRE(corpus.size() == 5);
  for (std::size_t d = 0; d < 5; ++d) {
    CHECK(corpus[d].name == synth::kDatasetNames[d]);
    CHECK(corpus[d].windows.size() == 10);
    for (const auto& w : corpus[d].windows) {
      CHECK(w.size() >= 1);
      for (const auto& p : w.pedestrians) CHECK(p.abs_positions.size() == 20);
    }
  }
}

TEST_CASE("causal windows") {
  auto windows = synth::causal_windows(200, 4, 5);
  for (const auto& cw : windows) {
    REQUIRE(cw.window.size() == 5);
    CHECK(cw.causal >= 1);
    CHECK(gaze::synthetic_gaze_target(cw.window, 0) == cw.causal);
    const auto rel = traj::relative_context(cw.window, 0, cw.window.t_obs - 1);
    CHECK(vf::in_visual_field(rel[cw.causal], cw.window.pedestrians[0].velocity_at_obs, {}));
    // The focal step after the observation departs from constant velocity.
    const auto& p = cw.window.pedestrians[0];
    const Vec2 next = p.rel_displacements[cw.window.t_obs];
    const Vec2 cv = p.velocity_at_obs * traj::kStepSeconds;
    CHECK(distance(next, cv) > 0.1);
    CHECK(dot(next - cv, rel[cw.causal]) < 0.0);
  }
  auto ex = synth::causal_examples(windows, 1);
  CHECK(ex.size() == 200);
  CHECK(ex[0].input.focal == 0);
  CHECK(ex[0].gaze.points.size() == 10);
}
