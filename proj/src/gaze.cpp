#include "avgcn/gaze.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace avgcn::gaze {

using nlohmann::json;

namespace {

std::string join_errors(const std::vector<FieldError>& errors) {
  std::string out = "invalid gaze session:";
  for (const auto& e : errors) out += " " + e.field + ": " + e.message + ";";
  return out;
}

class Reader {
 public:
  std::vector<FieldError> errors;

  void fail(std::string field, std::string message) {
    errors.push_back({std::move(field), std::move(message)});
  }

  void only_keys(const json& obj, const std::string& where,
                 std::initializer_list<const char*> keys) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (std::none_of(keys.begin(), keys.end(),
                       [&](const char* k) { return it.key() == k; }))
        fail(where + (where.empty() ? "" : ".") + it.key(), "unknown field");
    }
  }

  const json* member(const json& obj, const std::string& where,
                     const char* key) {
    const std::string path = where.empty() ? key : where + "." + key;
    auto it = obj.find(key);
    if (it == obj.end()) {
      fail(path, "missing");
      return nullptr;
    }
    return &*it;
  }

  double number(const json& v, const std::string& path) {
    if (!v.is_number()) {
      fail(path, "expected a number");
      return 0.0;
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(path, "must be finite");
    return d;
  }

  Vec2 vec2(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2) {
      fail(path, "expected an array of two numbers");
      return {};
    }
    return {number(v[0], path + "[0]"), number(v[1], path + "[1]")};
  }
};

json vec_json(Vec2 v) { return json::array({v.x, v.y}); }

}  // namespace

SchemaError::SchemaError(std::vector<FieldError> errors)
    : Error(join_errors(errors)), errors_(std::move(errors)) {}

std::vector<FieldError> validate(const GazeSession& session) {
  std::vector<FieldError> errors;
  if (session.format_version != kFormatVersion) {
    errors.push_back({"format_version",
                      "unsupported version " +
                          std::to_string(session.format_version) +
                          " (supported: " + std::to_string(kFormatVersion) + ")"});
  }
  if (session.scene_ref.dataset_id.empty())
    errors.push_back({"scene_ref.dataset_id", "must not be empty"});
  const auto& s = session.samples;
  if (s.size() < 2) {
    errors.push_back({"samples", "need at least two samples"});
    return errors;
  }
  bool monotone = true;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (!(s[i].t > s[i - 1].t)) {
      std::ostringstream msg;
      msg << "timestamp " << s[i].t << " does not exceed previous " << s[i - 1].t
          << " (sample index " << i << ")";
      errors.push_back({"samples[" + std::to_string(i) + "].t", msg.str()});
      monotone = false;
    }
  }
  if (!monotone) return errors;

  const double span = s.back().t - s.front().t;
  const double rate = static_cast<double>(s.size() - 1) / span;
  if (rate < kMinSampleRateHz - 1e-9) {
    std::ostringstream msg;
    msg << "sample rate " << rate << " Hz is below " << kMinSampleRateHz << " Hz";
    errors.push_back({"samples", msg.str()});
    return errors;
  }
  // Every full one-second span must hold at least 20 samples.
  std::size_t hi = 0;
  for (std::size_t lo = 0; lo < s.size() && s[lo].t + 1.0 <= s.back().t + 1e-9;
       ++lo) {
    hi = std::max(hi, lo);
    while (hi < s.size() && s[hi].t < s[lo].t + 1.0 - 1e-9) ++hi;
    if (hi - lo < static_cast<std::size_t>(kMinSampleRateHz)) {
      std::ostringstream msg;
      msg << "only " << hi - lo << " samples in the 1 s span starting at t="
          << s[lo].t << " (sample index " << lo << ")";
      errors.push_back({"samples[" + std::to_string(lo) + "]", msg.str()});
      break;
    }
  }
  return errors;
}

GazeSession parse_session(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::vector<FieldError>{{"$", std::string("not valid JSON: ") + e.what()}});
  }
  Reader r;
  GazeSession out;
  if (!doc.is_object())
    throw SchemaError(std::vector<FieldError>{{"$", "expected an object"}});
  r.only_keys(doc, "", {"format_version", "scene_ref", "goal", "samples"});

  if (const json* v = r.member(doc, "", "format_version")) {
    if (!v->is_number_integer()) {
      r.fail("format_version", "expected an integer");
    } else {
      out.format_version = v->get<int>();
    }
  }
  if (const json* v = r.member(doc, "", "scene_ref")) {
    if (!v->is_object()) {
      r.fail("scene_ref", "expected an object");
    } else {
      r.only_keys(*v, "scene_ref", {"dataset_id", "start_frame"});
      if (const json* d = r.member(*v, "scene_ref", "dataset_id")) {
        if (d->is_string()) out.scene_ref.dataset_id = d->get<std::string>();
        else r.fail("scene_ref.dataset_id", "expected a string");
      }
      if (const json* f = r.member(*v, "scene_ref", "start_frame")) {
        if (f->is_number_integer()) out.scene_ref.start_frame = f->get<std::int64_t>();
        else r.fail("scene_ref.start_frame", "expected an integer");
      }
    }
  }
  if (const json* v = r.member(doc, "", "goal")) out.goal = r.vec2(*v, "goal");
  if (const json* v = r.member(doc, "", "samples")) {
    if (!v->is_array()) {
      r.fail("samples", "expected an array");
    } else {
      for (std::size_t i = 0; i < v->size(); ++i) {
        const json& item = (*v)[i];
        const std::string where = "samples[" + std::to_string(i) + "]";
        if (!item.is_object()) {
          r.fail(where, "expected an object");
          continue;
        }
        r.only_keys(item, where, {"t", "gaze_xy", "agent_xy", "agent_v"});
        GazeSample s;
        if (const json* f = r.member(item, where, "t")) s.t = r.number(*f, where + ".t");
        if (const json* f = r.member(item, where, "gaze_xy"))
          s.gaze_xy = r.vec2(*f, where + ".gaze_xy");
        if (const json* f = r.member(item, where, "agent_xy"))
          s.agent_xy = r.vec2(*f, where + ".agent_xy");
        if (const json* f = r.member(item, where, "agent_v"))
          s.agent_v = r.vec2(*f, where + ".agent_v");
        out.samples.push_back(s);
      }
    }
  }
  if (!r.errors.empty()) throw SchemaError(std::move(r.errors));
  auto semantic = validate(out);
  if (!semantic.empty()) throw SchemaError(std::move(semantic));
  return out;
}

std::string serialize_session(const GazeSession& session) {
  json samples = json::array();
  for (const auto& s : session.samples) {
    samples.push_back({{"t", s.t},
                       {"gaze_xy", vec_json(s.gaze_xy)},
                       {"agent_xy", vec_json(s.agent_xy)},
                       {"agent_v", vec_json(s.agent_v)}});
  }
  json doc = {{"format_version", session.format_version},
              {"scene_ref",
               {{"dataset_id", session.scene_ref.dataset_id},
                {"start_frame", session.scene_ref.start_frame}}},
              {"goal", vec_json(session.goal)},
              {"samples", std::move(samples)}};
  return doc.dump(2) + "\n";
}

GazeSession load_session(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read gaze session " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_session(ss.str());
}

void save_session(const GazeSession& session, const std::filesystem::path& path) {
  auto errors = validate(session);
  if (!errors.empty()) throw SchemaError(std::move(errors));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write gaze session " + path.string());
  out << serialize_session(session);
  if (!out) throw IoError("error writing " + path.string());
}

GazeWindowPoints extract_window(const GazeSession& session, double t_obs_time,
                                double window) {
  const auto& s = session.samples;
  if (s.empty() || t_obs_time < s.front().t - 1e-9 ||
      t_obs_time > s.back().t + 1e-9) {
    std::ostringstream msg;
    msg << "t_obs " << t_obs_time << " s is outside the session span";
    if (!s.empty()) msg << " [" << s.front().t << ", " << s.back().t << "]";
    throw RangeError(msg.str());
  }
  // Boundary tolerance keeps 50 Hz timestamps such as 0.8 from being
  // misclassified by rounding.
  constexpr double kTol = 1e-9;
  GazeWindowPoints out;
  for (const auto& sample : s) {
    if (sample.t > t_obs_time - window + kTol && sample.t <= t_obs_time + kTol)
      out.points.push_back(sample.gaze_xy);
  }
  return out;
}

GroundTruthAttention ground_truth_attention(std::span<const Vec2> gaze_points,
                                            std::span<const Vec2> ped_positions,
                                            double sigma2) {
  if (!(sigma2 > 0.0)) throw ContractError("ground_truth_attention: sigma2 must be > 0");
  if (ped_positions.empty())
    throw ContractError("ground_truth_attention: need at least one pedestrian");
  if (gaze_points.empty())
    throw ContractError("ground_truth_attention: need at least one gaze point");

  GroundTruthAttention out;
  out.sigma2 = sigma2;
  out.weights.resize(ped_positions.size());
  double total = 0.0;
  for (std::size_t j = 0; j < ped_positions.size(); ++j) {
    double density = 0.0;
    for (const Vec2& g : gaze_points)
      density += std::exp(-squared_norm(ped_positions[j] - g) / (2.0 * sigma2));
    density /= static_cast<double>(gaze_points.size());
    out.weights[j] = density;
    total += density;
  }
  if (!(total > 0.0)) {
    std::fill(out.weights.begin(), out.weights.end(),
              1.0 / static_cast<double>(ped_positions.size()));
    out.uniform_fallback = true;
    return out;
  }
  for (double& w : out.weights) w /= total;
  return out;
}

std::size_t synthetic_gaze_target(const traj::SceneWindow& window,
                                  std::size_t focal) {
  if (focal >= window.size()) throw ContractError("focal pedestrian out of range");
  if (window.size() == 1) return focal;
  const std::size_t t = window.t_obs - 1;
  const Vec2 pi = window.pedestrians[focal].abs_positions[t];
  const Vec2 vi = window.pedestrians[focal].velocity_at_obs;

  std::size_t best_approach = window.size();
  double best_time = std::numeric_limits<double>::infinity();
  std::size_t nearest = window.size();
  double nearest_dist = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < window.size(); ++j) {
    if (j == focal) continue;
    const Vec2 r = window.pedestrians[j].abs_positions[t] - pi;
    const Vec2 vrel = window.pedestrians[j].velocity_at_obs - vi;
    const double d = norm(r);
    if (d < nearest_dist) {
      nearest_dist = d;
      nearest = j;
    }
    if (d == 0.0) continue;
    const double closing = -dot(r, vrel) / d;
    if (closing > 0.0 && d / closing < best_time) {
      best_time = d / closing;
      best_approach = j;
    }
  }
  return best_approach < window.size() ? best_approach : nearest;
}

GazeWindowPoints synthetic_gaze_oracle(const traj::SceneWindow& window,
                                       std::size_t focal, num::Rng& rng,
                                       const SyntheticGazeOptions& options) {
  const std::size_t target = synthetic_gaze_target(window, focal);
  const std::size_t t = window.t_obs - 1;
  const auto& ped = window.pedestrians[target];
  Vec2 centre = ped.abs_positions[t];
  if (window.size() == 1) centre += ped.velocity_at_obs * traj::kStepSeconds;
  GazeWindowPoints out;
  for (std::size_t k = 0; k < options.points; ++k) {
    out.points.push_back({centre.x + options.jitter_std * rng.normal(),
                          centre.y + options.jitter_std * rng.normal()});
  }
  return out;
}

}  // namespace avgcn::gaze
