#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "avgcn/attention_net.hpp"
#include "avgcn/autodiff.hpp"
#include "avgcn/params.hpp"
#include "avgcn/rng.hpp"
#include "avgcn/tensor.hpp"
#include "avgcn/trajdata.hpp"
#include "avgcn/visual_field.hpp"

namespace avgcn::predictor {

inline constexpr std::size_t kMotionEmbed = 16;
inline constexpr std::size_t kEncoderHidden = 32;
inline constexpr std::size_t kContextEmbed = 16;
inline constexpr std::size_t kNodeDim = kEncoderHidden + kContextEmbed;  // 48
inline constexpr std::size_t kGcnHidden = 128;
inline constexpr std::size_t kLatentDim = 8;
inline constexpr std::size_t kFeedbackEmbed = 16;
inline constexpr std::size_t kDecoderHidden = 32;

/// Learnable weights of the trajectory network.
struct PredictorParams {
  num::ParamSet weights;

  static PredictorParams initialise(num::Rng& rng);
  static PredictorParams zeros();
  void validate() const;
};

/// Where the crowd-graph attention comes from (the four ablation arms).
enum class AttentionSource { Uniform, Learned };

struct ArmConfig {
  AttentionSource source = AttentionSource::Learned;
  bool visual_filter = true;
  vf::VisualFieldConfig field;
};

/// GCN, AGCN, VGCN, AVGCN (case-insensitive); ConfigError otherwise.
ArmConfig arm_from_name(const std::string& name);
std::string arm_name(const ArmConfig& arm);

/// N x N row-stochastic matrix, row i = attention of pedestrian i over the
/// window at the last observed step. `attention_params` is required for the
/// learned source.
num::Tensor attention_matrix(const traj::SceneWindow& window, const ArmConfig& arm,
                             const attention::AttentionNetParams* attention_params);

/// Observed displacements as t_obs matrices of N x 2.
std::vector<num::Tensor> observed_steps(const traj::SceneWindow& window);
/// Ground-truth future displacements, N x (2 * t_pred), step-major per row.
num::Tensor future_displacements(const traj::SceneWindow& window);

/// LSTM encoding of each row's displacement sequence from a zero state.
num::Var encode_motion(num::Tape& tape, const num::BoundParams& p,
                       const std::vector<num::Tensor>& steps);

/// Row i: sum_j a_ij * MLP_cont(x_j - x_i).
num::Var social_context(num::Tape& tape, const num::BoundParams& p,
                        const std::vector<Vec2>& positions,
                        const num::Tensor& attention);

/// Two graph convolutions over node features (N x 48), returning N x 8.
num::Var social_gcn(num::Tape& tape, const num::BoundParams& p, num::Var nodes,
                    const num::Tensor& attention);

struct Latent {
  num::Var mean;     // N x 8
  num::Var log_var;  // N x 8
};

Latent latent_head(const num::BoundParams& p, num::Var v);

/// Feedback decoder from a zero state; returns N x (2 * steps), step-major.
num::Var decode(num::Tape& tape, const num::BoundParams& p, num::Var z,
                const num::Tensor& last_observed, std::size_t steps);

/// Mean per-step displacement error plus alpha times the mean KL to N(0, I).
num::Var prediction_loss(num::Tape& tape, num::Var predicted,
                         const num::Tensor& target, const Latent& latent,
                         double alpha);

/// Everything up to the latent distribution for one window.
struct EncodedWindow {
  num::Var motion;   // e: N x 32
  num::Var context;  // p: N x 16
  num::Var social;   // v: N x 8
  Latent latent;
};

EncodedWindow encode_window(num::Tape& tape, const num::BoundParams& p,
                            const traj::SceneWindow& window,
                            const num::Tensor& attention);

/// A training window with its precomputed attention matrix.
struct PreparedWindow {
  const traj::SceneWindow* window = nullptr;
  num::Tensor attention;
};

std::vector<PreparedWindow> prepare(const std::vector<traj::SceneWindow>& windows,
                                    const ArmConfig& arm,
                                    const attention::AttentionNetParams* attention_params);
std::vector<PreparedWindow> prepare(const std::vector<traj::SceneWindow>&& windows,
                                    const ArmConfig& arm,
                                    const attention::AttentionNetParams* attention_params) = delete;

struct WindowLoss {
  num::Var total;
  num::Var reconstruction;
};

/// Training objective with one reparameterised z draw per pedestrian.
WindowLoss window_loss(num::Tape& tape, const num::BoundParams& p,
                       const PreparedWindow& w, double alpha, num::Rng& rng);

/// Deterministic variant decoding from z = mean (used for checks).
double window_loss_at_mean(const PredictorParams& params, const PreparedWindow& w,
                           double alpha);

struct PredictorTrainConfig {
  double learning_rate = 1e-4;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double alpha = 0.001;
  std::uint64_t seed = 0;
  /// Stop after this many optimizer steps (0 = no limit).
  std::size_t max_steps = 0;
};

struct PredictorTrainLog {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_reconstruction;
  std::size_t steps = 0;
};

struct PredictorTrainResult {
  PredictorParams params;
  PredictorTrainLog log;
};

PredictorTrainResult train(const std::vector<PreparedWindow>& windows,
                           const PredictorTrainConfig& config);

struct PedestrianPrediction {
  std::int64_t id = 0;
  std::vector<std::vector<Vec2>> samples;  // k x t_pred displacements
  std::vector<Vec2> mean;                  // decoded from z = mean
};

struct PredictionSet {
  std::vector<PedestrianPrediction> pedestrians;
};

struct PredictOptions {
  std::size_t k = 20;
  /// Added to every predicted log-variance before sampling.
  double log_var_offset = 0.0;
};

/// Sampling streams are keyed by pedestrian id so results do not depend on
/// the order of pedestrians in the window.
PredictionSet predict(const traj::SceneWindow& window, const PredictorParams& params,
                      const num::Tensor& attention, const num::Rng& rng,
                      const PredictOptions& options = {});

/// Displacements accumulated from `origin`.
std::vector<Vec2> to_absolute(Vec2 origin, const std::vector<Vec2>& displacements);

}  // namespace avgcn::predictor
