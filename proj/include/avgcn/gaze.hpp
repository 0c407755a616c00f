#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "avgcn/error.hpp"
#include "avgcn/geometry.hpp"
#include "avgcn/rng.hpp"
#include "avgcn/trajdata.hpp"

namespace avgcn::gaze {

inline constexpr int kFormatVersion = 1;
/// Gaze points within this many seconds before t_obs supervise one example.
inline constexpr double kWindowSeconds = 0.2;
inline constexpr double kMinSampleRateHz = 20.0;

struct SceneRef {
  std::string dataset_id;
  std::int64_t start_frame = 0;
};

struct GazeSample {
  double t = 0.0;  // seconds since trial start
  Vec2 gaze_xy;    // cursor position, world meters
  Vec2 agent_xy;   // virtual pedestrian position, meters
  Vec2 agent_v;    // virtual pedestrian velocity, m/s
};

/// One recorded steering trial over a replayed crowd.
struct GazeSession {
  int format_version = kFormatVersion;
  SceneRef scene_ref;
  Vec2 goal;
  std::vector<GazeSample> samples;
};

struct FieldError {
  std::string field;  // e.g. "samples[12].t"
  std::string message;
};

/// Raised when a session document does not satisfy the schema.
class SchemaError : public Error {
 public:
  explicit SchemaError(std::vector<FieldError> errors);
  const std::vector<FieldError>& errors() const noexcept { return errors_; }

 private:
  std::vector<FieldError> errors_;
};

/// Semantic checks on an in-memory session: timestamps strictly increase and
/// the sample rate is at least 20 Hz overall and over every 1 s span.
std::vector<FieldError> validate(const GazeSession& session);

/// Parses and validates a JSON session document; throws SchemaError listing
/// every offending field. Unknown keys are rejected.
GazeSession parse_session(std::string_view json_text);
std::string serialize_session(const GazeSession& session);

GazeSession load_session(const std::filesystem::path& path);
void save_session(const GazeSession& session, const std::filesystem::path& path);

struct GazeWindowPoints {
  std::vector<Vec2> points;
  bool empty() const noexcept { return points.empty(); }
};

/// Gaze samples with t in (t_obs_time - window, t_obs_time].
GazeWindowPoints extract_window(const GazeSession& session, double t_obs_time,
                                double window = kWindowSeconds);

struct GroundTruthAttention {
  std::vector<double> weights;
  double sigma2 = 1.0;
  /// True when every mixture density underflowed and weights are uniform.
  bool uniform_fallback = false;
};

/// Normalised Gaussian-mixture density at each pedestrian position: one
/// isotropic Gaussian of variance sigma2 per gaze point, averaged.
GroundTruthAttention ground_truth_attention(std::span<const Vec2> gaze_points,
                                            std::span<const Vec2> ped_positions,
                                            double sigma2);

struct SyntheticGazeOptions {
  std::size_t points = 10;     // 50 Hz over the 0.2 s window
  double jitter_std = 0.2;     // meters
};

/// Index of the pedestrian the synthetic oracle looks at: among neighbours
/// closing in on the focal pedestrian, the one with the smallest
/// distance / closing speed; otherwise the nearest neighbour. Returns focal
/// when the window has a single pedestrian.
std::size_t synthetic_gaze_target(const traj::SceneWindow& window,
                                  std::size_t focal);

/// Jittered gaze points on the oracle target at the last observed step. With
/// a single pedestrian the points sit on the focal pedestrian's projected
/// position one step ahead.
GazeWindowPoints synthetic_gaze_oracle(const traj::SceneWindow& window,
                                       std::size_t focal, num::Rng& rng,
                                       const SyntheticGazeOptions& options = {});

}  // namespace avgcn::gaze
