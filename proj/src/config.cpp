#include "avgcn/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>

#include "avgcn/error.hpp"
#include "avgcn/synthetic.hpp"
#include "json.hpp"

namespace avgcn::cli {

using nlohmann::json;

namespace {

struct Field {
  const char* key;
  std::function<json(const RunConfig&)> get;
  std::function<void(RunConfig&, const json&)> set;
};

template <typename T>
Field field(const char* key, T RunConfig::*member) {
  return {key, [member](const RunConfig& c) { return json(c.*member); },
          [key, member](RunConfig& c, const json& v) {
            try {
              if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw ConfigError("");
              } else if constexpr (std::is_floating_point_v<T>) {
                if (!v.is_number()) throw ConfigError("");
              } else if constexpr (std::is_unsigned_v<T>) {
                if (!v.is_number_unsigned()) throw ConfigError("");
              } else {
                if (!v.is_number_integer()) throw ConfigError("");
              }
              c.*member = v.get<T>();
            } catch (const std::exception&) {
              throw ConfigError(std::string("config key '") + key + "' has the wrong type");
            }
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      field("command", &RunConfig::command),
      field("data_dir", &RunConfig::data_dir),
      field("held_out", &RunConfig::held_out),
      field("arm", &RunConfig::arm),
      field("gaze", &RunConfig::gaze),
      field("output_dir", &RunConfig::output_dir),
      field("attention_checkpoint", &RunConfig::attention_checkpoint),
      field("predictor_checkpoint", &RunConfig::predictor_checkpoint),
      field("frame_stride", &RunConfig::frame_stride),
      field("validation_fraction", &RunConfig::validation_fraction),
      field("attention_lr", &RunConfig::attention_lr),
      field("attention_epochs", &RunConfig::attention_epochs),
      field("attention_batch", &RunConfig::attention_batch),
      field("beta", &RunConfig::beta),
      field("predictor_lr", &RunConfig::predictor_lr),
      field("predictor_epochs", &RunConfig::predictor_epochs),
      field("predictor_batch", &RunConfig::predictor_batch),
      field("alpha", &RunConfig::alpha),
      field("field_angle", &RunConfig::field_angle),
      field("k", &RunConfig::k),
      field("seed", &RunConfig::seed),
      field("host", &RunConfig::host),
      field("port", &RunConfig::port),
      field("session_dir", &RunConfig::session_dir),
      field("scene_limit", &RunConfig::scene_limit),
      field("replay_frames", &RunConfig::replay_frames),
      field("scene_stride", &RunConfig::scene_stride),
  };
  return table;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

void RunConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be > 0");
  };
  positive(attention_lr, "attention_lr");
  positive(predictor_lr, "predictor_lr");
  if (attention_batch == 0) throw ConfigError("attention_batch must be >= 1");
  if (predictor_batch == 0) throw ConfigError("predictor_batch must be >= 1");
  if (k == 0) throw ConfigError("k must be >= 1");
  if (beta < 0.0) throw ConfigError("beta must be >= 0");
  if (alpha < 0.0) throw ConfigError("alpha must be >= 0");
  if (frame_stride < 1) throw ConfigError("frame_stride must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw ConfigError("validation_fraction must be in [0, 1)");
  if (port < 0 || port > 65535) throw ConfigError("port must be in [0, 65535]");
  if (scene_limit == 0) throw ConfigError("scene_limit must be >= 1");
  if (replay_frames < 2) throw ConfigError("replay_frames must be >= 2");
  if (scene_stride == 0) throw ConfigError("scene_stride must be >= 1");
  vf::VisualFieldConfig{field_angle, true}.validate();
  predictor::arm_from_name(arm);
  const auto& names = synth::kDatasetNames;
  if (std::none_of(names.begin(), names.end(),
                   [&](const std::string& n) { return lower(n) == lower(held_out); }))
    throw ConfigError("held_out must be one of ETH, HOTEL, UNIV, ZARA1, ZARA2; got '" +
                      held_out + "'");
}

attention::AttentionTrainConfig RunConfig::attention_train() const {
  attention::AttentionTrainConfig c;
  c.learning_rate = attention_lr;
  c.epochs = attention_epochs;
  c.batch_size = attention_batch;
  c.beta = beta;
  c.seed = seed;
  return c;
}

predictor::PredictorTrainConfig RunConfig::predictor_train() const {
  predictor::PredictorTrainConfig c;
  c.learning_rate = predictor_lr;
  c.epochs = predictor_epochs;
  c.batch_size = predictor_batch;
  c.alpha = alpha;
  c.seed = seed;
  return c;
}

predictor::ArmConfig RunConfig::arm_config() const {
  predictor::ArmConfig a = predictor::arm_from_name(arm);
  a.field.field_angle_deg = field_angle;
  return a;
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    auto it = std::find_if(fields().begin(), fields().end(),
                           [&](const Field& f) { return key == f.key; });
    if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
    it->set(c, value);
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_json(const RunConfig& c) {
  json j = json::object();
  for (const Field& f : fields()) j[f.key] = f.get(c);
  return j.dump(2) + "\n";
}

void save_config(const RunConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(config);
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

std::map<std::string, std::vector<std::filesystem::path>> discover_datasets(
    const std::filesystem::path& data_dir) {
  namespace fs = std::filesystem;
  if (data_dir.empty() || !fs::is_directory(data_dir))
    throw ConfigError("data directory '" + data_dir.string() +
                      "' not found; pass --data-dir, or create a toy corpus with "
                      "`avgcn synth --out <dir>`");
  std::map<std::string, std::vector<fs::path>> out;
  for (const auto& entry : fs::directory_iterator(data_dir)) {
    const std::string stem = lower(entry.path().stem().string());
    for (const auto& name : synth::kDatasetNames) {
      if (lower(name) != stem) continue;
      if (entry.is_directory()) {
        for (const auto& f : fs::recursive_directory_iterator(entry.path()))
          if (f.is_regular_file() && f.path().extension() == ".txt")
            out[name].push_back(f.path());
      } else if (entry.path().extension() == ".txt") {
        out[name].push_back(entry.path());
      }
    }
  }
  for (auto& [_, files] : out) std::sort(files.begin(), files.end());
  return out;
}

}  // namespace avgcn::cli
