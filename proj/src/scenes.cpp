#include "avgcn/scenes.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "avgcn/error.hpp"
#include "json.hpp"

namespace avgcn::scenes {

using nlohmann::json;

std::vector<SceneReplay> build_scenes(const std::string& dataset_id,
                                      const std::vector<traj::RawTrack>& tracks,
                                      const SceneOptions& options) {
  if (options.replay_frames < 2 || options.scene_stride == 0 || options.pedestrian_limit == 0)
    throw ConfigError("invalid scene options");
  std::set<std::int64_t> frame_set;
  for (const auto& t : tracks)
    for (const auto& s : t.samples) frame_set.insert(s.frame);
  const std::vector<std::int64_t> frames(frame_set.begin(), frame_set.end());

  std::vector<SceneReplay> scenes;
  for (std::size_t s = 0; s + options.replay_frames <= frames.size(); s += options.scene_stride) {
    const std::int64_t first = frames[s];
    const std::int64_t last = frames[s + options.replay_frames - 1];

    std::vector<std::pair<std::size_t, std::int64_t>> counts;  // (samples, id)
    for (const auto& t : tracks) {
      const auto n = static_cast<std::size_t>(std::count_if(
          t.samples.begin(), t.samples.end(),
          [&](const traj::TrackSample& x) { return x.frame >= first && x.frame <= last; }));
      if (n > 0) counts.push_back({n, t.pedestrian_id});
    }
    if (counts.empty()) continue;
    std::sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    if (counts.size() > options.pedestrian_limit) counts.resize(options.pedestrian_limit);
    std::set<std::int64_t> keep;
    for (const auto& c : counts) keep.insert(c.second);

    SceneReplay scene;
    scene.dataset_id = dataset_id;
    scene.start_frame = first;
    scene.scene_id = dataset_id + "-" + std::to_string(first);
    for (std::size_t f = s; f < s + options.replay_frames; ++f)
      scene.frames.push_back({frames[f], {}});
    Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Vec2 hi = lo * -1.0;
    for (const auto& t : tracks) {
      if (!keep.count(t.pedestrian_id)) continue;
      for (const auto& x : t.samples) {
        if (x.frame < first || x.frame > last) continue;
        auto it = std::lower_bound(frames.begin() + static_cast<std::ptrdiff_t>(s),
                                   frames.begin() + static_cast<std::ptrdiff_t>(s + options.replay_frames),
                                   x.frame);
        scene.frames[static_cast<std::size_t>(it - frames.begin()) - s].pedestrians.push_back(
            {t.pedestrian_id, x.position});
        lo = {std::min(lo.x, x.position.x), std::min(lo.y, x.position.y)};
        hi = {std::max(hi.x, x.position.x), std::max(hi.y, x.position.y)};
      }
    }
    for (auto& f : scene.frames)
      std::sort(f.pedestrians.begin(), f.pedestrians.end(),
                [](const ReplayPedestrian& a, const ReplayPedestrian& b) { return a.id < b.id; });
    const double mid = 0.5 * (lo.y + hi.y);
    scene.start = {lo.x - 1.0, mid};
    scene.goal = {hi.x + 1.0, mid};
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

namespace {

json point(Vec2 p) { return json::array({p.x, p.y}); }

json summary(const SceneReplay& s) {
  std::set<std::int64_t> ids;
  for (const auto& f : s.frames)
    for (const auto& p : f.pedestrians) ids.insert(p.id);
  return {{"scene_id", s.scene_id},
          {"dataset_id", s.dataset_id},
          {"start_frame", s.start_frame},
          {"frames", s.frames.size()},
          {"pedestrians", ids.size()}};
}

}  // namespace

std::string scene_to_json(const SceneReplay& s) {
  json frames = json::array();
  for (const auto& f : s.frames) {
    json peds = json::array();
    for (const auto& p : f.pedestrians)
      peds.push_back({{"id", p.id}, {"x", p.position.x}, {"y", p.position.y}});
    frames.push_back({{"frame", f.frame}, {"pedestrians", peds}});
  }
  json j = {{"scene_id", s.scene_id},     {"dataset_id", s.dataset_id},
            {"start_frame", s.start_frame}, {"frame_interval", s.frame_interval},
            {"start", point(s.start)},     {"goal", point(s.goal)},
            {"frames", frames}};
  return j.dump() + "\n";
}

std::string scene_list_json(const std::vector<SceneReplay>& scenes) {
  json list = json::array();
  for (const auto& s : scenes) list.push_back(summary(s));
  return json{{"scenes", list}}.dump() + "\n";
}

void SceneCatalog::add(std::vector<SceneReplay> scenes) {
  for (auto& s : scenes) {
    if (index_.count(s.scene_id)) throw DataError("duplicate scene id " + s.scene_id);
    index_[s.scene_id] = scenes_.size();
    scenes_.push_back(std::move(s));
  }
}

const SceneReplay* SceneCatalog::find(const std::string& scene_id) const {
  auto it = index_.find(scene_id);
  return it == index_.end() ? nullptr : &scenes_[it->second];
}

const SceneReplay* SceneCatalog::find(const std::string& dataset_id,
                                      std::int64_t start_frame) const {
  return find(dataset_id + "-" + std::to_string(start_frame));
}

namespace {

template <typename Get>
std::optional<Vec2> interpolate(const std::vector<gaze::GazeSample>& samples, double t, Get get) {
  if (samples.empty() || t < samples.front().t || t > samples.back().t) return std::nullopt;
  auto it = std::lower_bound(samples.begin(), samples.end(), t,
                             [](const gaze::GazeSample& s, double v) { return s.t < v; });
  if (it->t == t || it == samples.begin()) return get(*it);
  const auto& a = *(it - 1);
  const auto& b = *it;
  const double w = (t - a.t) / (b.t - a.t);
  return get(a) * (1.0 - w) + get(b) * w;
}

}  // namespace

std::vector<attention::AttentionExample> session_examples(const gaze::GazeSession& session,
                                                          const SceneReplay& scene) {
  if (session.scene_ref.dataset_id != scene.dataset_id ||
      session.scene_ref.start_frame != scene.start_frame)
    throw DataError("session refers to " + session.scene_ref.dataset_id + "-" +
                    std::to_string(session.scene_ref.start_frame) + ", not scene " +
                    scene.scene_id);
  const auto pos_of = [](const gaze::GazeSample& s) { return s.agent_xy; };
  const auto vel_of = [](const gaze::GazeSample& s) { return s.agent_v; };
  const double dt = scene.frame_interval;

  std::vector<attention::AttentionExample> out;
  for (std::size_t k = 1; k + 1 < scene.frames.size(); ++k) {
    const double t = static_cast<double>(k) * dt;
    const auto p = interpolate(session.samples, t, pos_of);
    const auto p_next = interpolate(session.samples, t + dt, pos_of);
    const auto v = interpolate(session.samples, t, vel_of);
    if (!p || !p_next || !v) continue;
    auto g = gaze::extract_window(session, t);
    if (g.empty()) continue;

    std::vector<std::pair<Vec2, Vec2>> crowd;  // position, velocity
    for (const auto& ped : scene.frames[k].pedestrians) {
      const auto& prev = scene.frames[k - 1].pedestrians;
      auto it = std::find_if(prev.begin(), prev.end(),
                             [&](const ReplayPedestrian& q) { return q.id == ped.id; });
      if (it != prev.end()) crowd.push_back({ped.position, (ped.position - it->position) / dt});
    }

    attention::AttentionExample ex;
    ex.input.focal = 0;
    ex.input.features = num::Tensor::zeros(crowd.size() + 1, attention::kInputDim);
    ex.input.features(0, 2) = v->x;
    ex.input.features(0, 3) = v->y;
    ex.positions.push_back(*p);
    for (std::size_t j = 0; j < crowd.size(); ++j) {
      const Vec2 rel = crowd[j].first - *p;
      ex.input.features(j + 1, 0) = rel.x;
      ex.input.features(j + 1, 1) = rel.y;
      ex.input.features(j + 1, 2) = crowd[j].second.x;
      ex.input.features(j + 1, 3) = crowd[j].second.y;
      ex.positions.push_back(crowd[j].first);
    }
    const Vec2 d = *p_next - *p;
    ex.target_motion = num::Tensor::row({d.x, d.y, d.x / dt, d.y / dt});
    ex.gaze = std::move(g);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace avgcn::scenes
