#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "avgcn/config.hpp"
#include "avgcn/eval.hpp"
#include "avgcn/scenes.hpp"
#include "avgcn/trajdata.hpp"

namespace avgcn::cli {

/// All five datasets found under config.data_dir, in canonical order.
std::vector<traj::Dataset> load_corpus(const RunConfig& config);

/// Scene replays for every dataset file under config.data_dir (empty when no
/// data directory is configured).
scenes::SceneCatalog build_catalog(const RunConfig& config);

/// Writes `<NAME>.txt` crowd simulations for the five dataset names.
void cmd_synth(const std::filesystem::path& out_dir, std::size_t frames, std::uint64_t seed);

/// Each command writes its outputs and the effective config.json into
/// config.output_dir and returns the main artifact path.
std::filesystem::path cmd_train_attention(const RunConfig& config);
std::filesystem::path cmd_train_predictor(const RunConfig& config);
eval::MetricReport cmd_eval(const RunConfig& config);
std::filesystem::path cmd_predict(const RunConfig& config);
/// Trains the attention network once (unless a checkpoint is given) and runs
/// all four arms on the held-out fold.
std::vector<eval::MetricReport> cmd_ablation(const RunConfig& config);

}  // namespace avgcn::cli
