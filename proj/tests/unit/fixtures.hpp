#pragma once

#include <vector>

#include "avgcn/geometry.hpp"
#include "avgcn/rng.hpp"
#include "avgcn/trajdata.hpp"

namespace avgcn::testing {

/// Window of constant-velocity pedestrians positioned at `at_obs` on the last
/// observed step.
inline traj::SceneWindow linear_window(const std::vector<Vec2>& at_obs,
                                       const std::vector<Vec2>& velocity) {
  traj::SceneWindow w;
  w.dataset_id = "FIXTURE";
  for (std::size_t i = 0; i < at_obs.size(); ++i) {
    traj::PedestrianTrack p;
    p.id = static_cast<std::int64_t>(i + 1);
    for (std::size_t t = 0; t < w.length(); ++t) {
      const double dt = (static_cast<double>(t) - static_cast<double>(w.t_obs - 1)) *
                        traj::kStepSeconds;
      p.abs_positions.push_back(at_obs[i] + velocity[i] * dt);
    }
    w.pedestrians.push_back(std::move(p));
  }
  traj::recompute_derived(w);
  return w;
}

/// Random-walk window with `n` pedestrians spread over a few meters.
inline traj::SceneWindow random_window(num::Rng& rng, std::size_t n) {
  traj::SceneWindow w;
  w.dataset_id = "RANDOM";
  for (std::size_t i = 0; i < n; ++i) {
    traj::PedestrianTrack p;
    p.id = static_cast<std::int64_t>(i + 1);
    Vec2 pos{rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0)};
    const Vec2 drift{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    for (std::size_t t = 0; t < w.length(); ++t) {
      p.abs_positions.push_back(pos);
      pos += drift + Vec2{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)};
    }
    w.pedestrians.push_back(std::move(p));
  }
  traj::recompute_derived(w);
  return w;
}

}  // namespace avgcn::testing
