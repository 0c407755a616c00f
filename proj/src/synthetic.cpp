#include "avgcn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "avgcn/error.hpp"
#include "avgcn/gaze.hpp"
#include "avgcn/rng.hpp"

namespace avgcn::synth {

namespace {

struct Walker {
  std::int64_t id;
  Vec2 pos;
  Vec2 vel;
  Vec2 goal;
  double speed;
};

Vec2 unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

Vec2 edge_point(num::Rng& rng, int side, double area) {
  const double u = rng.uniform(0.1, 0.9) * area;
  switch (side) {
    case 0: return {0.0, u};
    case 1: return {area, u};
    case 2: return {u, 0.0};
    default: return {u, area};
  }
}

}  // namespace

std::vector<traj::RawTrack> crowd_tracks(const CrowdOptions& o, std::uint64_t seed) {
  if (o.area <= 0.0 || o.min_speed <= 0.0 || o.max_speed < o.min_speed)
    throw ConfigError("invalid crowd simulation options");
  num::Rng rng(seed);
  std::vector<Walker> alive;
  std::vector<traj::RawTrack> tracks;
  std::int64_t next_id = 1;
  const double dt = traj::kStepSeconds;

  for (std::size_t f = 0; f < o.frames; ++f) {
    while (alive.size() < o.max_pedestrians && rng.uniform() < o.spawn_probability) {
      const int side = static_cast<int>(rng.index(4));
      const int opposite = side ^ 1;
      Walker w{next_id++, edge_point(rng, side, o.area), {}, edge_point(rng, opposite, o.area),
               rng.uniform(o.min_speed, o.max_speed)};
      const Vec2 dir = (w.goal - w.pos) / norm(w.goal - w.pos);
      w.vel = dir * w.speed;
      alive.push_back(w);
      tracks.push_back({w.id, {}});
      if (alive.size() == o.max_pedestrians) break;
    }

    std::vector<Vec2> next_vel(alive.size());
    for (std::size_t i = 0; i < alive.size(); ++i) {
      const Walker& w = alive[i];
      const Vec2 to_goal = w.goal - w.pos;
      Vec2 desired = to_goal / std::max(norm(to_goal), 1e-9) * w.speed;
      for (std::size_t j = 0; j < alive.size(); ++j) {
        if (j == i) continue;
        const Vec2 r = w.pos - alive[j].pos;
        const double d = norm(r);
        if (d > 1e-6 && d < 3.0) desired += r / (d * d) * o.repulsion;
      }
      Vec2 v = w.vel * 0.6 + desired * 0.4 + Vec2{rng.normal(), rng.normal()} * 0.03;
      const double s = norm(v);
      if (s > 1.3 * o.max_speed) v = v * (1.3 * o.max_speed / s);
      next_vel[i] = v;
    }

    std::vector<Walker> kept;
    for (std::size_t i = 0; i < alive.size(); ++i) {
      Walker w = alive[i];
      auto track = std::find_if(tracks.begin(), tracks.end(),
                                [&](const traj::RawTrack& t) { return t.pedestrian_id == w.id; });
      track->samples.push_back(
          {static_cast<std::int64_t>(f) * traj::kDefaultFrameStride, w.pos});
      w.vel = next_vel[i];
      w.pos += w.vel * dt;
      if (distance(w.pos, w.goal) > 0.5) kept.push_back(w);
    }
    alive = std::move(kept);
  }
  std::erase_if(tracks, [](const traj::RawTrack& t) { return t.samples.empty(); });
  return tracks;
}

std::string format_tracks(const std::vector<traj::RawTrack>& tracks) {
  struct Line {
    std::int64_t frame, id;
    Vec2 p;
  };
  std::vector<Line> lines;
  for (const auto& t : tracks)
    for (const auto& s : t.samples) lines.push_back({s.frame, t.pedestrian_id, s.position});
  std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
    return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
  });
  std::ostringstream out;
  out.precision(17);
  for (const Line& l : lines) out << l.frame << '\t' << l.id << '\t' << l.p.x << '\t' << l.p.y << '\n';
  return out.str();
}

std::vector<traj::Dataset> crowd_corpus(std::size_t windows_per_dataset, std::uint64_t seed,
                                        const CrowdOptions& options) {
  if (windows_per_dataset == 0) throw ConfigError("windows_per_dataset must be >= 1");
  std::vector<traj::Dataset> out;
  const num::Rng root(seed);
  for (std::size_t d = 0; d < kDatasetNames.size(); ++d) {
    CrowdOptions o = options;
    o.frames = std::max(o.frames, windows_per_dataset + 40);
    std::vector<traj::SceneWindow> windows;
    for (int attempt = 0; attempt < 6; ++attempt) {
      auto tracks = crowd_tracks(o, root.fork(d).next_u64());
      windows = traj::build_windows(tracks, kDatasetNames[d]);
      if (windows.size() >= windows_per_dataset) break;
      o.frames *= 2;
    }
    if (windows.size() < windows_per_dataset)
      throw DataError("crowd simulation produced too few windows for " + kDatasetNames[d]);
    traj::Dataset ds{kDatasetNames[d], {}};
    for (std::size_t k = 0; k < windows_per_dataset; ++k)
      ds.windows.push_back(windows[k * windows.size() / windows_per_dataset]);
    out.push_back(std::move(ds));
  }
  return out;
}

std::vector<CausalWindow> causal_windows(std::size_t count, std::uint64_t seed,
                                         std::size_t pedestrians) {
  if (pedestrians < 2) throw ConfigError("causal windows need at least two pedestrians");
  num::Rng rng(seed);
  std::vector<CausalWindow> out;
  const double deg = std::numbers::pi / 180.0;
  for (std::size_t w = 0; w < count; ++w) {
    const double heading = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const Vec2 origin{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const Vec2 v0 = unit(heading) * rng.uniform(0.8, 1.4);
    const std::size_t causal = 1 + rng.index(pedestrians - 1);

    std::vector<Vec2> at_obs(pedestrians), vel(pedestrians);
    at_obs[0] = origin;
    vel[0] = v0;
    Vec2 swerve{};
    for (std::size_t j = 1; j < pedestrians; ++j) {
      if (j == causal) {
        const double d = rng.uniform(1.5, 3.5);
        const Vec2 dir = unit(heading + rng.uniform(-50, 50) * deg);
        at_obs[j] = origin + dir * d;
        vel[j] = v0 - dir * rng.uniform(0.8, 1.6) +
                 Vec2{-dir.y, dir.x} * rng.uniform(-0.3, 0.3);
        swerve = dir * (-0.6 / d);
      } else {
        const double d = rng.uniform(1.5, 5.0);
        const Vec2 dir = unit(rng.uniform(-std::numbers::pi, std::numbers::pi));
        at_obs[j] = origin + dir * d;
        vel[j] = v0 + dir * rng.uniform(0.3, 1.2) +
                 Vec2{-dir.y, dir.x} * rng.uniform(-0.3, 0.3);
      }
    }

    CausalWindow cw;
    cw.causal = causal;
    traj::SceneWindow& win = cw.window;
    win.dataset_id = "CAUSAL";
    win.start_frame = static_cast<std::int64_t>(w) * 1000;
    const Vec2 step0 = v0 * traj::kStepSeconds + swerve;
    for (std::size_t j = 0; j < pedestrians; ++j) {
      traj::PedestrianTrack p;
      p.id = static_cast<std::int64_t>(j + 1);
      for (std::size_t t = 0; t < win.length(); ++t) {
        const double k = static_cast<double>(t) - static_cast<double>(win.t_obs - 1);
        if (j == 0 && k > 0) {
          p.abs_positions.push_back(origin + step0 * k);
        } else {
          p.abs_positions.push_back(at_obs[j] + vel[j] * (k * traj::kStepSeconds));
        }
      }
      win.pedestrians.push_back(std::move(p));
    }
    traj::recompute_derived(win);
    out.push_back(std::move(cw));
  }
  return out;
}

std::vector<attention::AttentionExample> causal_examples(
    const std::vector<CausalWindow>& windows, std::uint64_t seed) {
  num::Rng rng(seed);
  std::vector<attention::AttentionExample> out;
  for (const auto& cw : windows) {
    attention::AttentionExample ex;
    ex.input = attention::make_input(cw.window, 0);
    ex.target_motion = attention::next_motion_target(cw.window, 0);
    ex.positions = cw.window.positions_at(cw.window.t_obs - 1);
    ex.gaze = gaze::synthetic_gaze_oracle(cw.window, 0, rng);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace avgcn::synth
