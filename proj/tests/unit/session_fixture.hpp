#pragma once

#include <cmath>

#include "avgcn/gaze.hpp"
#include "avgcn/scenes.hpp"

namespace avgcn::testing {

/// 50 Hz steering trial walking straight from the scene start towards its
/// goal; the cursor rests on crowd pedestrian `look_at` when present.
inline gaze::GazeSession steering_session(const scenes::SceneReplay& scene,
                                          double seconds = 4.0, std::size_t look_at = 0) {
  gaze::GazeSession s;
  s.scene_ref = {scene.dataset_id, scene.start_frame};
  s.goal = scene.goal;
  const Vec2 dir = scene.goal - scene.start;
  const double len = std::hypot(dir.x, dir.y);
  const Vec2 v = dir / len * 1.2;
  const std::size_t n = static_cast<std::size_t>(seconds * 50.0) + 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / 50.0;
    const std::size_t frame = std::min(
        scene.frames.size() - 1, static_cast<std::size_t>(t / scene.frame_interval));
    const auto& peds = scene.frames[frame].pedestrians;
    const Vec2 agent = scene.start + v * t;
    const Vec2 g = look_at < peds.size() ? peds[look_at].position : agent + v;
    s.samples.push_back({t, g, agent, v});
  }
  return s;
}

}  // namespace avgcn::testing
