#include "avgcn/commands.hpp"

#include <fstream>

#include "avgcn/checkpoint.hpp"
#include "avgcn/error.hpp"
#include "avgcn/gaze.hpp"
#include "avgcn/synthetic.hpp"
#include "json.hpp"

namespace avgcn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

fs::path prepare_output(const RunConfig& config, const std::string& command) {
  config.validate();
  const fs::path dir = config.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  RunConfig stored = config;
  stored.command = command;
  save_config(stored, dir / "config.json");
  return dir;
}

attention::AttentionNetParams load_attention(const RunConfig& config) {
  if (config.attention_checkpoint.empty())
    throw ConfigError("arm " + config.arm +
                      " needs --attention-checkpoint; train one with `avgcn train-attention`");
  return {num::load_checkpoint_as(config.attention_checkpoint, "attention",
                                  attention::AttentionNetParams::zeros().weights)};
}

predictor::PredictorParams load_predictor(const RunConfig& config) {
  if (config.predictor_checkpoint.empty())
    throw ConfigError("--predictor-checkpoint is required; train one with `avgcn train-predictor`");
  return {num::load_checkpoint_as(config.predictor_checkpoint, "predictor",
                                  predictor::PredictorParams::zeros().weights)};
}

bool learned(const RunConfig& config) {
  return config.arm_config().source == predictor::AttentionSource::Learned;
}

json points(const std::vector<Vec2>& ps) {
  json a = json::array();
  for (const Vec2& p : ps) a.push_back({p.x, p.y});
  return a;
}

std::vector<attention::AttentionExample> recorded_examples(const RunConfig& config,
                                                           const traj::Split&) {
  const fs::path dir = config.gaze;
  if (!fs::is_directory(dir))
    throw ConfigError("gaze directory '" + dir.string() +
                      "' not found; pass --gaze synthetic or a directory of sessions");
  const auto catalog = build_catalog(config);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<attention::AttentionExample> out;
  for (const auto& f : files) {
    const auto session = gaze::load_session(f);
    std::string ds = session.scene_ref.dataset_id;
    std::string held = config.held_out;
    for (auto* s : {&ds, &held})
      for (char& c : *s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (ds == held) continue;
    const auto* scene = catalog.find(session.scene_ref.dataset_id, session.scene_ref.start_frame);
    if (!scene) throw DataError(f.string() + " refers to an unknown scene");
    auto ex = scenes::session_examples(session, *scene);
    out.insert(out.end(), std::make_move_iterator(ex.begin()), std::make_move_iterator(ex.end()));
  }
  if (out.empty())
    throw ConfigError("no usable gaze sessions in " + dir.string() +
                      " outside the held-out dataset; record some with the capture UI");
  return out;
}

json attention_log_json(const attention::TrainLog& log) {
  return {{"initial_train_loss", log.initial_train_loss},
          {"train_loss", log.train_loss},
          {"validation_loss", log.validation_loss}};
}

attention::AttentionTrainResult train_attention(const RunConfig& config,
                                                const traj::Split& split) {
  std::vector<attention::AttentionExample> train_set, val_set;
  if (config.gaze == "synthetic") {
    train_set = attention::synthetic_examples(split.train, config.seed);
    val_set = attention::synthetic_examples(split.validation, config.seed + 1);
  } else {
    train_set = recorded_examples(config, split);
    const std::size_t n_val = static_cast<std::size_t>(
        static_cast<double>(train_set.size()) * config.validation_fraction + 0.5);
    val_set.assign(std::make_move_iterator(train_set.end() - static_cast<std::ptrdiff_t>(n_val)),
                   std::make_move_iterator(train_set.end()));
    train_set.resize(train_set.size() - n_val);
  }
  if (train_set.empty()) throw ConfigError("no attention training examples");
  return attention::train(train_set, val_set, config.attention_train());
}

}  // namespace

std::vector<traj::Dataset> load_corpus(const RunConfig& config) {
  const auto found = discover_datasets(config.data_dir);
  std::vector<traj::Dataset> out;
  std::string missing;
  for (const auto& name : synth::kDatasetNames) {
    auto it = found.find(name);
    if (it == found.end() || it->second.empty()) {
      missing += (missing.empty() ? "" : ", ") + name;
      continue;
    }
    out.push_back(traj::load_dataset(name, it->second, config.frame_stride));
  }
  if (!missing.empty())
    throw ConfigError("datasets missing under " + config.data_dir + ": " + missing +
                      " (expected <NAME>.txt or <NAME>/*.txt)");
  return out;
}

scenes::SceneCatalog build_catalog(const RunConfig& config) {
  scenes::SceneCatalog catalog;
  if (config.data_dir.empty()) return catalog;
  scenes::SceneOptions opts{config.replay_frames, config.scene_stride, config.scene_limit};
  for (const auto& [name, files] : discover_datasets(config.data_dir)) {
    for (const auto& f : files) {
      auto built = scenes::build_scenes(name, traj::parse_dataset(f, config.frame_stride), opts);
      std::erase_if(built, [&](const scenes::SceneReplay& s) {
        return catalog.find(s.scene_id) != nullptr;
      });
      catalog.add(std::move(built));
    }
  }
  return catalog;
}

void cmd_synth(const fs::path& out_dir, std::size_t frames, std::uint64_t seed) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  const num::Rng root(seed);
  for (std::size_t d = 0; d < synth::kDatasetNames.size(); ++d) {
    synth::CrowdOptions o;
    o.frames = frames;
    write_text(out_dir / (synth::kDatasetNames[d] + ".txt"),
               synth::format_tracks(synth::crowd_tracks(o, root.fork(d).next_u64())));
  }
}

fs::path cmd_train_attention(const RunConfig& config) {
  const fs::path dir = prepare_output(config, "train-attention");
  const auto split = traj::leave_one_out_split(load_corpus(config), config.held_out,
                                               config.validation_fraction);
  const auto result = train_attention(config, split);
  const fs::path ckpt = dir / "attention.ckpt";
  num::save_checkpoint(ckpt, {"attention", result.params.weights});
  write_text(dir / "attention_log.json", attention_log_json(result.log).dump(2) + "\n");
  return ckpt;
}

fs::path cmd_train_predictor(const RunConfig& config) {
  config.validate();
  std::optional<attention::AttentionNetParams> att;
  if (learned(config)) att = load_attention(config);
  const fs::path dir = prepare_output(config, "train-predictor");
  const auto split = traj::leave_one_out_split(load_corpus(config), config.held_out,
                                               config.validation_fraction);
  if (split.train.empty()) throw ConfigError("no training windows");
  const auto prepared = predictor::prepare(split.train, config.arm_config(), att ? &*att : nullptr);
  const auto result = predictor::train(prepared, config.predictor_train());
  const fs::path ckpt = dir / "predictor.ckpt";
  num::save_checkpoint(ckpt, {"predictor", result.params.weights});
  json log = {{"arm", config.arm},
              {"epoch_loss", result.log.epoch_loss},
              {"epoch_reconstruction", result.log.epoch_reconstruction},
              {"steps", result.log.steps}};
  write_text(dir / "predictor_log.json", log.dump(2) + "\n");
  return ckpt;
}

eval::MetricReport cmd_eval(const RunConfig& config) {
  config.validate();
  std::optional<attention::AttentionNetParams> att;
  if (learned(config)) att = load_attention(config);
  const auto params = load_predictor(config);
  const fs::path dir = prepare_output(config, "eval");
  const auto corpus = load_corpus(config);
  const auto split = traj::leave_one_out_split(corpus, config.held_out, 0.0);
  if (split.test.empty()) throw DataError("held-out dataset has no windows");
  const auto s = eval::evaluate(split.test, params, config.arm_config(), att ? &*att : nullptr,
                                config.k, config.seed);
  eval::MetricReport report;
  report.arm = predictor::arm_name(config.arm_config());
  report.k = config.k;
  report.seeds = {config.seed};
  report.rows.push_back({split.test.front().dataset_id, s.model, s.baseline, s.windows,
                         s.pedestrians});
  report.recompute_average();
  write_text(dir / "report.json", report.to_json());
  write_text(dir / "report.txt", report.to_table());
  return report;
}

fs::path cmd_predict(const RunConfig& config) {
  config.validate();
  std::optional<attention::AttentionNetParams> att;
  if (learned(config)) att = load_attention(config);
  const auto params = load_predictor(config);
  const fs::path dir = prepare_output(config, "predict");
  const auto split = traj::leave_one_out_split(load_corpus(config), config.held_out, 0.0);
  const fs::path out_path = dir / "predictions.jsonl";
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + out_path.string());
  const num::Rng root(config.seed);
  for (std::size_t w = 0; w < split.test.size(); ++w) {
    const auto& win = split.test[w];
    const auto a = predictor::attention_matrix(win, config.arm_config(), att ? &*att : nullptr);
    const auto set = predictor::predict(win, params, a, root.fork(w), {config.k, 0.0});
    json peds = json::array();
    for (std::size_t i = 0; i < win.size(); ++i) {
      const auto& track = win.pedestrians[i].abs_positions;
      const Vec2 origin = eval::last_observed_position(win, i);
      json samples = json::array();
      for (const auto& s : set.pedestrians[i].samples)
        samples.push_back(points(predictor::to_absolute(origin, s)));
      peds.push_back({{"id", win.pedestrians[i].id},
                      {"observed", points({track.begin(), track.begin() + static_cast<std::ptrdiff_t>(win.t_obs)})},
                      {"ground_truth", points(eval::ground_truth_future(win, i))},
                      {"mean", points(predictor::to_absolute(origin, set.pedestrians[i].mean))},
                      {"samples", samples}});
    }
    out << json{{"dataset", win.dataset_id}, {"start_frame", win.start_frame}, {"pedestrians", peds}}
               .dump()
        << '\n';
  }
  if (!out.flush()) throw IoError("write failed for " + out_path.string());
  return out_path;
}

std::vector<eval::MetricReport> cmd_ablation(const RunConfig& config) {
  const fs::path dir = prepare_output(config, "ablation");
  const auto corpus = load_corpus(config);
  attention::AttentionNetParams att;
  if (!config.attention_checkpoint.empty()) {
    att = load_attention(config);
  } else {
    const auto split = traj::leave_one_out_split(corpus, config.held_out, config.validation_fraction);
    att = train_attention(config, split).params;
    num::save_checkpoint(dir / "attention.ckpt", {"attention", att.weights});
  }
  std::vector<eval::MetricReport> reports;
  std::string table;
  for (const char* arm : {"GCN", "AGCN", "VGCN", "AVGCN"}) {
    RunConfig c = config;
    c.arm = arm;
    eval::ExperimentConfig ec;
    ec.arm = c.arm_config();
    ec.held_out = {config.held_out};
    ec.seeds = {config.seed};
    ec.k = config.k;
    ec.validation_fraction = config.validation_fraction;
    ec.train = config.predictor_train();
    auto report = eval::run_experiment(corpus, ec, &att);
    write_text(dir / (std::string("report_") + arm + ".json"), report.to_json());
    table += report.to_table() + "\n";
    reports.push_back(std::move(report));
  }
  write_text(dir / "ablation.txt", table);
  return reports;
}

}  // namespace avgcn::cli
