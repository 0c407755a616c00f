#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "avgcn/attention_net.hpp"
#include "avgcn/predictor.hpp"

namespace avgcn::cli {

/// Settings shared by every command and by the service. Defaults follow the
/// published training setup.
struct RunConfig {
  std::string command;
  std::string data_dir;
  std::string held_out = "ETH";
  std::string arm = "AVGCN";
  std::string gaze = "synthetic";  // or a directory of recorded sessions
  std::string output_dir = "runs";
  std::string attention_checkpoint;
  std::string predictor_checkpoint;
  int frame_stride = 10;
  double validation_fraction = 0.1;

  double attention_lr = 1e-3;
  std::size_t attention_epochs = 100;
  std::size_t attention_batch = 64;
  double beta = 0.5;

  double predictor_lr = 1e-4;
  std::size_t predictor_epochs = 200;
  std::size_t predictor_batch = 64;
  double alpha = 0.001;

  double field_angle = 120.0;
  std::size_t k = 20;
  std::uint64_t seed = 0;

  // Service.
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string session_dir = "sessions";
  std::size_t scene_limit = 30;
  std::size_t replay_frames = 50;
  std::size_t scene_stride = 25;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;

  attention::AttentionTrainConfig attention_train() const;
  predictor::PredictorTrainConfig predictor_train() const;
  predictor::ArmConfig arm_config() const;
};

/// Strict JSON decoding: unknown keys and wrong types raise ConfigError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string to_json(const RunConfig& config);
/// Written next to a command's outputs.
void save_config(const RunConfig& config, const std::filesystem::path& path);

/// Dataset name -> trajectory files. A dataset is either `<dir>/<NAME>.txt` or
/// every `.txt` file under `<dir>/<NAME>/`; names match case-insensitively.
std::map<std::string, std::vector<std::filesystem::path>> discover_datasets(
    const std::filesystem::path& data_dir);

}  // namespace avgcn::cli
