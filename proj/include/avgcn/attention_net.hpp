#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "avgcn/adam.hpp"
#include "avgcn/autodiff.hpp"
#include "avgcn/gaze.hpp"
#include "avgcn/geometry.hpp"
#include "avgcn/params.hpp"
#include "avgcn/rng.hpp"
#include "avgcn/tensor.hpp"
#include "avgcn/trajdata.hpp"

namespace avgcn::attention {

inline constexpr std::size_t kInputDim = 4;    // dx, dy, vx, vy
inline constexpr std::size_t kMlpHidden = 128;
inline constexpr std::size_t kEmbedDim = 64;
inline constexpr std::size_t kGcnHidden = 64;
inline constexpr std::size_t kGcnOut = 2;      // (q, attention logit) per node
inline constexpr std::size_t kMotionDim = 4;

/// Per-neighbour features for one focal pedestrian at the last observed step:
/// row j is (x_j - x_i, y_j - y_i, vx_j, vy_j).
struct AttentionInput {
  num::Tensor features;  // N x 4
  std::size_t focal = 0;

  std::size_t size() const noexcept { return features.rows(); }
};

AttentionInput make_input(const traj::SceneWindow& window, std::size_t focal);

/// Next-step motion of the focal pedestrian, (dx, dy, vx, vy) one step after
/// the last observation.
num::Tensor next_motion_target(const traj::SceneWindow& window,
                               std::size_t focal);

/// Star graph on `focal` with self-loops, rows normalised to one.
num::Tensor star_adjacency(std::size_t n, std::size_t focal);

/// Learnable weights: two-layer embedding MLP (4->128->64), two graph
/// convolutions (64->64->2) and the motion head (64->4).
struct AttentionNetParams {
  num::ParamSet weights;

  static AttentionNetParams initialise(num::Rng& rng);
  static AttentionNetParams zeros();
  /// Throws DimensionError if `weights` does not have the fixed layout.
  void validate() const;
};

/// Tape handles for one forward pass.
struct AttentionGraph {
  num::Var embedding;   // b: N x 64
  num::Var hidden;      // u: N x 64, first graph convolution
  num::Var node_out;    // N x 2
  num::Var logits;      // 1 x N
  num::Var attention;   // a_i: 1 x N
  num::Var log_attention;
  num::Var log_sigma2;  // 1 x 1
  num::Var pooled;      // 1 x 64
  num::Var motion;      // 1 x 4
};

AttentionGraph forward(num::Tape& tape, const num::BoundParams& params,
                       const AttentionInput& input);

struct AttentionOutput {
  std::vector<double> attention;
  double log_sigma2 = 0.0;
  num::Tensor motion;  // 1 x 4
};

AttentionOutput forward(const AttentionNetParams& params,
                        const AttentionInput& input);

/// One supervised example for the attention network.
struct AttentionExample {
  AttentionInput input;
  num::Tensor target_motion;          // 1 x 4
  std::vector<Vec2> positions;        // absolute positions of the N nodes
  gaze::GazeWindowPoints gaze;        // may be empty: motion term only
};

/// Weight of the gaze term. A fixed log sigma^2 replaces the learned
/// bandwidth (comparison runs only).
struct AttentionLossConfig {
  double beta = 0.5;
  std::optional<double> fixed_log_sigma2;

  AttentionLossConfig(double b = 0.5) : beta(b) {}
};

/// Squared motion error plus beta * KL(a_i || a_gt(sigma)), with sigma^2 taken
/// from the same forward pass. The KL term is skipped when there is no gaze.
num::Var attention_loss(num::Tape& tape, const AttentionGraph& graph,
                        const AttentionExample& example,
                        const AttentionLossConfig& loss);

double attention_loss(const AttentionNetParams& params,
                      const AttentionExample& example,
                      const AttentionLossConfig& loss);

/// Loss and gradients summed over `batch` and divided by its size.
double loss_and_gradients(const AttentionNetParams& params,
                          const std::vector<const AttentionExample*>& batch,
                          const AttentionLossConfig& loss,
                          num::ParamSet& gradients);

struct AttentionTrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double beta = 0.5;
  std::optional<double> fixed_log_sigma2;
  std::uint64_t seed = 0;

  AttentionLossConfig loss() const;
};

struct TrainLog {
  double initial_train_loss = 0.0;
  std::vector<double> train_loss;       // running mean over each epoch
  std::vector<double> validation_loss;  // full pass after each epoch
};

struct AttentionTrainResult {
  AttentionNetParams params;
  TrainLog log;
};

AttentionTrainResult train(const std::vector<AttentionExample>& train_set,
                           const std::vector<AttentionExample>& validation_set,
                           const AttentionTrainConfig& config);

double mean_loss(const AttentionNetParams& params,
                 const std::vector<AttentionExample>& examples,
                 const AttentionLossConfig& loss);

/// Mean absolute error of the motion head over all four components.
double evaluate_motion_mae(const AttentionNetParams& params,
                           const std::vector<AttentionExample>& test_set);

/// One example per pedestrian of each window, supervised by the synthetic gaze
/// oracle. Windows need at least one predicted step.
std::vector<AttentionExample> synthetic_examples(
    const std::vector<traj::SceneWindow>& windows, std::uint64_t seed);

}  // namespace avgcn::attention
