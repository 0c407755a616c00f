#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "avgcn/attention_net.hpp"
#include "avgcn/gaze.hpp"
#include "avgcn/trajdata.hpp"

namespace avgcn::scenes {

struct ReplayPedestrian {
  std::int64_t id = 0;
  Vec2 position;
};

struct ReplayFrame {
  std::int64_t frame = 0;
  std::vector<ReplayPedestrian> pedestrians;
};

/// A stretch of recorded crowd for the steering task; frames are 0.4 s apart.
struct SceneReplay {
  std::string scene_id;  // "<dataset>-<start_frame>"
  std::string dataset_id;
  std::int64_t start_frame = 0;
  double frame_interval = traj::kStepSeconds;
  std::vector<ReplayFrame> frames;
  Vec2 start;
  Vec2 goal;
};

struct SceneOptions {
  std::size_t replay_frames = 50;
  std::size_t scene_stride = 25;    // retained frames between scene starts
  std::size_t pedestrian_limit = 30;
};

/// Scenes cut from one dataset's retained frames. Pedestrian positions are
/// copied verbatim; when more than the limit appear, those with the most
/// samples in the scene are kept (ties by id).
std::vector<SceneReplay> build_scenes(const std::string& dataset_id,
                                      const std::vector<traj::RawTrack>& tracks,
                                      const SceneOptions& options = {});

std::string scene_to_json(const SceneReplay& scene);
/// Summary without frames, for listings.
std::string scene_list_json(const std::vector<SceneReplay>& scenes);

/// Catalogue keyed by scene id.
class SceneCatalog {
 public:
  void add(std::vector<SceneReplay> scenes);
  const SceneReplay* find(const std::string& scene_id) const;
  const SceneReplay* find(const std::string& dataset_id, std::int64_t start_frame) const;
  const std::vector<SceneReplay>& all() const noexcept { return scenes_; }

 private:
  std::vector<SceneReplay> scenes_;
  std::map<std::string, std::size_t> index_;
};

/// Attention examples from one recorded trial: the virtual pedestrian is the
/// focal node at every replay frame where its next position is known and the
/// gaze window is not empty.
std::vector<attention::AttentionExample> session_examples(const gaze::GazeSession& session,
                                                          const SceneReplay& scene);

}  // namespace avgcn::scenes
