#include <chrono>
#include <csignal>
#include <iostream>
#include <string_view>
#include <thread>

#include "CLI11.hpp"
#include "avgcn/commands.hpp"
#include "avgcn/error.hpp"
#include "avgcn/service.hpp"

using namespace avgcn;

namespace {

// --config is applied first so that explicit flags override the file.
std::string find_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string_view a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return std::string(a.substr(9));
  }
  return {};
}

void data_options(CLI::App* app, cli::RunConfig& c) {
  app->add_option("--data-dir", c.data_dir, "directory holding ETH/HOTEL/UNIV/ZARA1/ZARA2");
  app->add_option("--held-out", c.held_out, "dataset used as the test fold");
  app->add_option("--output-dir", c.output_dir, "where outputs and config.json go");
  app->add_option("--frame-stride", c.frame_stride, "annotation frames per retained frame");
  app->add_option("--validation-fraction", c.validation_fraction);
  app->add_option("--seed", c.seed);
}

void attention_options(CLI::App* app, cli::RunConfig& c) {
  app->add_option("--gaze", c.gaze, "'synthetic' or a directory of recorded sessions");
  app->add_option("--attention-lr", c.attention_lr);
  app->add_option("--attention-epochs", c.attention_epochs);
  app->add_option("--attention-batch", c.attention_batch);
  app->add_option("--beta", c.beta, "weight of the gaze term");
}

void predictor_options(CLI::App* app, cli::RunConfig& c) {
  app->add_option("--arm", c.arm, "GCN, AGCN, VGCN or AVGCN");
  app->add_option("--attention-checkpoint", c.attention_checkpoint);
  app->add_option("--predictor-lr", c.predictor_lr);
  app->add_option("--predictor-epochs", c.predictor_epochs);
  app->add_option("--predictor-batch", c.predictor_batch);
  app->add_option("--alpha", c.alpha, "weight of the KL term");
  app->add_option("--field-angle", c.field_angle, "visual field half-angle, degrees");
}

void eval_options(CLI::App* app, cli::RunConfig& c) {
  app->add_option("--predictor-checkpoint", c.predictor_checkpoint);
  app->add_option("-k,--k", c.k, "samples per pedestrian for best-of-k");
}

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AVGCN trajectory forecasting"};
  app.require_subcommand(1);
  app.fallthrough();
  cli::RunConfig cfg;
  std::string config_path;
  app.add_option("--config", config_path, "JSON config; flags override its values");

  try {
    if (const auto path = find_config_path(argc, argv); !path.empty())
      cfg = cli::load_config(path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  std::string synth_out = "data";
  std::size_t synth_frames = 400;
  auto* synth = app.add_subcommand("synth", "write a simulated five-dataset toy corpus");
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--frames", synth_frames, "retained frames per dataset");
  synth->add_option("--seed", cfg.seed);

  auto* train_att = app.add_subcommand("train-attention", "train the gaze-supervised attention net");
  data_options(train_att, cfg);
  attention_options(train_att, cfg);

  auto* train_pred = app.add_subcommand("train-predictor", "train the trajectory predictor");
  data_options(train_pred, cfg);
  predictor_options(train_pred, cfg);

  auto* evaluate = app.add_subcommand("eval", "ADE/FDE on the held-out dataset");
  data_options(evaluate, cfg);
  predictor_options(evaluate, cfg);
  eval_options(evaluate, cfg);

  auto* predict = app.add_subcommand("predict", "sampled trajectories for the held-out dataset");
  data_options(predict, cfg);
  predictor_options(predict, cfg);
  eval_options(predict, cfg);

  auto* ablation = app.add_subcommand("ablation", "train and evaluate all four arms");
  data_options(ablation, cfg);
  attention_options(ablation, cfg);
  predictor_options(ablation, cfg);
  ablation->add_option("-k,--k", cfg.k);

  auto* serve = app.add_subcommand("serve", "scene replays and session uploads over HTTP");
  serve->add_option("--data-dir", cfg.data_dir);
  serve->add_option("--host", cfg.host);
  serve->add_option("--port", cfg.port);
  serve->add_option("--session-dir", cfg.session_dir);
  serve->add_option("--scene-limit", cfg.scene_limit, "pedestrians per scene");
  serve->add_option("--replay-frames", cfg.replay_frames);
  serve->add_option("--scene-stride", cfg.scene_stride);
  serve->add_option("--frame-stride", cfg.frame_stride);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      cli::cmd_synth(synth_out, synth_frames, cfg.seed);
      std::cout << "wrote toy corpus to " << synth_out << "\n";
    } else if (train_att->parsed()) {
      std::cout << cli::cmd_train_attention(cfg).string() << "\n";
    } else if (train_pred->parsed()) {
      std::cout << cli::cmd_train_predictor(cfg).string() << "\n";
    } else if (evaluate->parsed()) {
      std::cout << cli::cmd_eval(cfg).to_table();
    } else if (predict->parsed()) {
      std::cout << cli::cmd_predict(cfg).string() << "\n";
    } else if (ablation->parsed()) {
      for (const auto& r : cli::cmd_ablation(cfg)) std::cout << r.to_table() << "\n";
    } else if (serve->parsed()) {
      cfg.validate();
      service::SessionStore store(cfg.session_dir);
      service::Service svc(cli::build_catalog(cfg), store);
      service::Server server(svc, cfg.host, cfg.port);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on http://" << cfg.host << ":" << server.port() << std::endl;
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
