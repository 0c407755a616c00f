#include "avgcn/visual_field.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "avgcn/error.hpp"

namespace avgcn::vf {

void VisualFieldConfig::validate() const {
  if (!(field_angle_deg > 0.0 && field_angle_deg <= 360.0)) {
    throw ConfigError("field angle must be in (0, 360] degrees, got " +
                      std::to_string(field_angle_deg));
  }
}

bool in_visual_field(Vec2 rel, Vec2 facing, const VisualFieldConfig& cfg) {
  if (norm(facing) < kStationarySpeed || (rel.x == 0.0 && rel.y == 0.0))
    return true;
  const double angle = std::atan2(std::abs(cross(facing, rel)), dot(facing, rel));
  const double half = 0.5 * cfg.field_angle_deg * std::numbers::pi / 180.0;
  constexpr double kTol = 1e-12;
  return cfg.inclusive_boundary ? angle <= half + kTol : angle < half - kTol;
}

std::vector<double> visual_filter(std::span<const double> attention,
                                  std::span<const Vec2> rel_positions,
                                  std::size_t focal, Vec2 focal_velocity,
                                  const VisualFieldConfig& cfg) {
  cfg.validate();
  const std::size_t n = attention.size();
  if (rel_positions.size() != n) {
    throw DimensionError("visual_filter: " + std::to_string(n) +
                         " weights but " + std::to_string(rel_positions.size()) +
                         " positions");
  }
  if (focal >= n) throw ContractError("visual_filter: focal index out of range");

  std::vector<double> out(n, 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == focal || in_visual_field(rel_positions[j], focal_velocity, cfg)) {
      out[j] = attention[j];
      total += attention[j];
    }
  }
  if (!(total > 0.0)) {
    std::fill(out.begin(), out.end(), 0.0);
    out[focal] = 1.0;
    return out;
  }
  for (double& w : out) w /= total;
  return out;
}

std::vector<double> compose_visual_attention(
    const attention::AttentionNetParams& params, const traj::SceneWindow& window,
    std::size_t focal, const VisualFieldConfig& cfg) {
  const auto raw = attention::forward(params, attention::make_input(window, focal));
  const auto rel = traj::relative_context(window, focal, window.t_obs - 1);
  return visual_filter(raw.attention, rel, focal,
                       window.pedestrians.at(focal).velocity_at_obs, cfg);
}

}  // namespace avgcn::vf
