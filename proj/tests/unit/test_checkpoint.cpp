#include <filesystem>
#include <fstream>

#include "avgcn/attention_net.hpp"
#include "avgcn/checkpoint.hpp"
#include "avgcn/error.hpp"
#include "avgcn/predictor.hpp"
#include "doctest.h"

using namespace avgcn;
namespace fs = std::filesystem;

TEST_CASE("checkpoint text round trip is exact") {
  num::Rng rng(1);
  num::Checkpoint c{"predictor", predictor::PredictorParams::initialise(rng).weights};
  c.params.at("mlp_dec.b") = num::Tensor::row({1e-300, -0.1});
  const std::string text = num::format_checkpoint(c);
  num::Checkpoint back = num::parse_checkpoint(text);
  CHECK(back.kind == "predictor");
  CHECK(back.params == c.params);
  CHECK(num::format_checkpoint(back) == text);
}

TEST_CASE("checkpoint files and layout checks") {
  const fs::path dir = fs::temp_directory_path() / "avgcn_ckpt_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  num::Rng rng(2);
  auto att = attention::AttentionNetParams::initialise(rng);
  num::save_checkpoint(dir / "att.ckpt", {"attention", att.weights});
  CHECK_FALSE(fs::exists(dir / "att.ckpt.tmp"));

  auto loaded = num::load_checkpoint_as(dir / "att.ckpt", "attention",
                                        attention::AttentionNetParams::zeros().weights);
  CHECK(loaded == att.weights);
  CHECK_THROWS_AS(num::load_checkpoint_as(dir / "att.ckpt", "predictor",
                                          predictor::PredictorParams::zeros().weights),
                  DataError);
  num::save_checkpoint(dir / "wrong.ckpt", {"attention", predictor::PredictorParams::zeros().weights});
  CHECK_THROWS_AS(num::load_checkpoint_as(dir / "wrong.ckpt", "attention",
                                          attention::AttentionNetParams::zeros().weights),
                  DimensionError);
  CHECK_THROWS_AS(num::load_checkpoint(dir / "missing.ckpt"), IoError);
  CHECK_THROWS_AS(num::save_checkpoint(dir / "no" / "such" / "dir.ckpt", {"attention", att.weights}),
                  IoError);
  fs::remove_all(dir);
}

TEST_CASE("malformed checkpoints report the line") {
  auto line_of = [](const std::string& text) {
    try {
      num::parse_checkpoint(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  CHECK(line_of("hello 1\n") == 1);
  CHECK(line_of("avgcn-checkpoint 2\n") == 1);
  CHECK(line_of("avgcn-checkpoint 1\nkind attention\ntensors 1\nw 1 2\n1 x\n") == 5);
  CHECK(line_of("avgcn-checkpoint 1\nkind attention\ntensors 1\nw 1 2\n1 2 3\n") == 5);
  CHECK(line_of("avgcn-checkpoint 1\nkind attention\ntensors 2\nw 1 1\n1\n") == 6);
  CHECK_THROWS_AS(num::parse_checkpoint("avgcn-checkpoint 1\nkind a\ntensors 1\nw 1 1\nnan\n"),
                  Error);
}
