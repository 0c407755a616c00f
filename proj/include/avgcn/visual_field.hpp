#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "avgcn/attention_net.hpp"
#include "avgcn/geometry.hpp"
#include "avgcn/trajdata.hpp"

namespace avgcn::vf {

struct VisualFieldConfig {
  double field_angle_deg = 120.0;  // full cone width
  bool inclusive_boundary = true;

  void validate() const;
};

/// Speeds below this leave facing undefined and disable filtering.
inline constexpr double kStationarySpeed = 1e-6;

/// True if a neighbour at `rel` (relative to the focal pedestrian) lies inside
/// the forward cone around `facing`.
bool in_visual_field(Vec2 rel, Vec2 facing, const VisualFieldConfig& cfg);

/// Zeroes attention on neighbours outside the forward cone and renormalises.
/// The focal entry always survives, as do neighbours at zero offset; a
/// stationary focal pedestrian gets no filtering. If nothing with positive
/// weight survives, all weight goes to the focal entry.
std::vector<double> visual_filter(std::span<const double> attention,
                                  std::span<const Vec2> rel_positions,
                                  std::size_t focal, Vec2 focal_velocity,
                                  const VisualFieldConfig& cfg = {});

/// Attention of `focal` over the window after the forward-cone filter, at the
/// last observed step.
std::vector<double> compose_visual_attention(
    const attention::AttentionNetParams& params, const traj::SceneWindow& window,
    std::size_t focal, const VisualFieldConfig& cfg = {});

}  // namespace avgcn::vf
