#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "avgcn/geometry.hpp"

namespace avgcn::traj {

/// Seconds between consecutive retained frames.
inline constexpr double kStepSeconds = 0.4;
inline constexpr std::size_t kObsLen = 8;
inline constexpr std::size_t kPredLen = 12;
inline constexpr std::size_t kSeqLen = kObsLen + kPredLen;
/// ETH/UCY annotations are at 25 fps; every 10th frame gives 0.4 s steps.
inline constexpr int kDefaultFrameStride = 10;

struct TrackSample {
  std::int64_t frame = 0;
  Vec2 position;
};

struct RawTrack {
  std::int64_t pedestrian_id = 0;
  std::vector<TrackSample> samples;  // strictly increasing frames
};

/// Reads `frame_id ped_id x y` rows (whitespace separated, meters). Blank
/// lines and lines starting with '#' are ignored. Only frames whose offset from
/// the first frame in the file is a multiple of `frame_stride` are retained.
std::vector<RawTrack> parse_dataset(const std::filesystem::path& path,
                                    int frame_stride = kDefaultFrameStride);
std::vector<RawTrack> parse_dataset_text(std::string_view text,
                                         int frame_stride = kDefaultFrameStride);

struct PedestrianTrack {
  std::int64_t id = 0;
  std::vector<Vec2> abs_positions;      // t_obs + t_pred entries
  std::vector<Vec2> rel_displacements;  // [0] is (0, 0)
  Vec2 velocity_at_obs;                 // m/s at the last observed step
};

/// One prediction instance: every pedestrian present for the whole window.
struct SceneWindow {
  std::string dataset_id;
  std::int64_t start_frame = 0;
  std::size_t t_obs = kObsLen;
  std::size_t t_pred = kPredLen;
  std::vector<PedestrianTrack> pedestrians;

  std::size_t size() const noexcept { return pedestrians.size(); }
  std::size_t length() const noexcept { return t_obs + t_pred; }
  /// Absolute positions of every pedestrian at step t.
  std::vector<Vec2> positions_at(std::size_t t) const;
};

/// Sliding windows over the retained frames (stride one frame). Pedestrians
/// missing any of the t_obs + t_pred frames are left out; windows without
/// pedestrians are dropped. Pedestrians are ordered by id.
std::vector<SceneWindow> build_windows(const std::vector<RawTrack>& tracks,
                                       std::string dataset_id,
                                       std::size_t t_obs = kObsLen,
                                       std::size_t t_pred = kPredLen);

/// Rebuilds a window's derived fields (displacements, observed velocity) from
/// its absolute positions.
void recompute_derived(SceneWindow& window);

/// p_rel[j] = x_j - x_focal at step t.
std::vector<Vec2> relative_context(const SceneWindow& window,
                                   std::size_t focal, std::size_t t);

/// Backward-difference velocity at step t (t >= 1), m/s.
Vec2 velocity_at(const SceneWindow& window, std::size_t pedestrian,
                 std::size_t t);

struct Dataset {
  std::string name;
  std::vector<SceneWindow> windows;
};

/// Parses each file and concatenates the windows under one dataset name.
Dataset load_dataset(std::string name,
                     const std::vector<std::filesystem::path>& files,
                     int frame_stride = kDefaultFrameStride);

struct Split {
  std::vector<SceneWindow> train;
  std::vector<SceneWindow> validation;
  std::vector<SceneWindow> test;
};

/// Leave-one-out split over exactly five datasets. The held-out dataset is
/// the test set; from each remaining dataset the trailing
/// round(validation_fraction * n) windows go to validation, the rest to
/// training.
Split leave_one_out_split(const std::vector<Dataset>& datasets,
                          std::string_view held_out,
                          double validation_fraction = 0.1);

}  // namespace avgcn::traj
