#include "avgcn/attention_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "avgcn/error.hpp"

namespace avgcn::attention {

using num::BoundParams;
using num::ParamSet;
using num::Tape;
using num::Tensor;
using num::Var;

namespace {

constexpr double kKlFloor = 1e-12;

struct Layout {
  const char* name;
  std::size_t rows;
  std::size_t cols;
};

constexpr Layout kLayout[] = {
    {"mlp_att.w1", kInputDim, kMlpHidden}, {"mlp_att.b1", 1, kMlpHidden},
    {"mlp_att.w2", kMlpHidden, kEmbedDim}, {"mlp_att.b2", 1, kEmbedDim},
    {"gcn_att.w1", kEmbedDim, kGcnHidden}, {"gcn_att.w2", kGcnHidden, kGcnOut},
    {"fc.w", kGcnHidden, kMotionDim},      {"fc.b", 1, kMotionDim},
};

}  // namespace

AttentionInput make_input(const traj::SceneWindow& window, std::size_t focal) {
  if (focal >= window.size()) throw ContractError("make_input: focal out of range");
  const std::size_t t = window.t_obs - 1;
  const Vec2 origin = window.pedestrians[focal].abs_positions[t];
  Tensor f = Tensor::zeros(window.size(), kInputDim);
  for (std::size_t j = 0; j < window.size(); ++j) {
    const auto& p = window.pedestrians[j];
    const Vec2 rel = p.abs_positions[t] - origin;
    f(j, 0) = rel.x;
    f(j, 1) = rel.y;
    f(j, 2) = p.velocity_at_obs.x;
    f(j, 3) = p.velocity_at_obs.y;
  }
  return {std::move(f), focal};
}

Tensor next_motion_target(const traj::SceneWindow& window, std::size_t focal) {
  if (focal >= window.size()) throw ContractError("next_motion_target: focal out of range");
  if (window.t_pred < 1) throw ContractError("next_motion_target: no future step");
  const auto& pos = window.pedestrians[focal].abs_positions;
  const Vec2 d = pos[window.t_obs] - pos[window.t_obs - 1];
  const Vec2 v = d / traj::kStepSeconds;
  return Tensor::row({d.x, d.y, v.x, v.y});
}

Tensor star_adjacency(std::size_t n, std::size_t focal) {
  if (focal >= n) {
    throw ContractError("star_adjacency: focal " + std::to_string(focal) +
                        " out of range for n=" + std::to_string(n));
  }
  Tensor a = Tensor::zeros(n, n);
  for (std::size_t j = 0; j < n; ++j) a(focal, j) = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    if (r == focal) continue;
    a(r, r) = 0.5;
    a(r, focal) = 0.5;
  }
  return a;
}

AttentionNetParams AttentionNetParams::initialise(num::Rng& rng) {
  AttentionNetParams p;
  for (const Layout& l : kLayout) {
    if (l.rows == 1) {
      p.weights.add(l.name, Tensor::zeros(1, l.cols));
    } else {
      p.weights.add(l.name, num::glorot(rng, l.rows, l.cols));
    }
  }
  return p;
}

AttentionNetParams AttentionNetParams::zeros() {
  AttentionNetParams p;
  for (const Layout& l : kLayout) p.weights.add(l.name, Tensor::zeros(l.rows, l.cols));
  return p;
}

void AttentionNetParams::validate() const {
  AttentionNetParams::zeros().weights.require_same_layout(weights,
                                                          "attention parameters");
}

AttentionGraph forward(Tape& tape, const BoundParams& p,
                       const AttentionInput& input) {
  const std::size_t n = input.size();
  if (n == 0) throw ContractError("attention forward: no pedestrians");
  if (input.features.cols() != kInputDim) {
    throw DimensionError("attention forward: features must be N x 4, got " +
                         input.features.shape_string());
  }
  AttentionGraph g;
  Var s = tape.constant(input.features);
  Var adj = tape.constant(star_adjacency(n, input.focal));

  Var h = num::relu(num::add_row(num::matmul(s, p["mlp_att.w1"]), p["mlp_att.b1"]));
  g.embedding =
      num::relu(num::add_row(num::matmul(h, p["mlp_att.w2"]), p["mlp_att.b2"]));
  g.hidden = num::relu(num::matmul(num::matmul(adj, g.embedding), p["gcn_att.w1"]));
  g.node_out = num::matmul(num::matmul(adj, g.hidden), p["gcn_att.w2"]);

  g.logits = num::transpose(num::slice_cols(g.node_out, 1, 1));
  g.attention = num::softmax_rows(g.logits);
  g.log_attention = num::log_softmax_rows(g.logits);
  g.log_sigma2 = num::mean(num::slice_cols(g.node_out, 0, 1));
  g.pooled = num::matmul(g.attention, g.hidden);
  g.motion = num::add_row(num::matmul(g.pooled, p["fc.w"]), p["fc.b"]);
  return g;
}

AttentionOutput forward(const AttentionNetParams& params,
                        const AttentionInput& input) {
  Tape tape;
  BoundParams p(tape, params.weights);
  AttentionGraph g = forward(tape, p, input);
  AttentionOutput out;
  out.attention = g.attention.value().values();
  out.log_sigma2 = g.log_sigma2.value().item();
  out.motion = g.motion.value();
  return out;
}

Var attention_loss(Tape& tape, const AttentionGraph& graph,
                   const AttentionExample& example, const AttentionLossConfig& cfg) {
  const double beta = cfg.beta;
  Var target = tape.constant(example.target_motion);
  Var loss = num::sum(num::square(num::sub(graph.motion, target)));
  if (beta == 0.0 || example.gaze.empty()) return loss;

  const std::size_t n = graph.attention.cols();
  if (example.positions.size() != n) {
    throw DimensionError("attention_loss: " + std::to_string(n) +
                         " attention weights but " +
                         std::to_string(example.positions.size()) + " positions");
  }
  Var log_sigma2 = cfg.fixed_log_sigma2
                       ? tape.constant(Tensor::filled(1, 1, *cfg.fixed_log_sigma2))
                       : graph.log_sigma2;
  const double sigma2 = std::exp(log_sigma2.value().item());
  const auto direct =
      gaze::ground_truth_attention(example.gaze.points, example.positions, sigma2);

  Var log_q;
  if (direct.uniform_fallback) {
    log_q = tape.constant(
        Tensor::filled(1, n, -std::log(static_cast<double>(n))));
  } else {
    // log a_gt_j = logsumexp_g(-|x_j - g|^2 / (2 sigma^2)) - normaliser, which
    // equals the direct mixture formula without its underflow.
    const auto& pts = example.gaze.points;
    Tensor sq = Tensor::zeros(n, pts.size());
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < pts.size(); ++k)
        sq(j, k) = -0.5 * squared_norm(example.positions[j] - pts[k]);
    Var inv_sigma2 = num::exp(num::neg(log_sigma2));
    Var scaled = num::mul_scalar(tape.constant(std::move(sq)), inv_sigma2);
    log_q = num::log_softmax_rows(num::transpose(num::logsumexp_rows(scaled)));
    log_q = num::clamp_min(log_q, std::log(kKlFloor));
  }
  Var kl = num::sum(
      num::mul(graph.attention, num::sub(graph.log_attention, log_q)));
  return num::add(loss, num::scale(kl, beta));
}

double attention_loss(const AttentionNetParams& params,
                      const AttentionExample& example, const AttentionLossConfig& loss) {
  Tape tape;
  BoundParams p(tape, params.weights);
  return attention_loss(tape, forward(tape, p, example.input), example, loss)
      .value()
      .item();
}

double loss_and_gradients(const AttentionNetParams& params,
                          const std::vector<const AttentionExample*>& batch,
                          const AttentionLossConfig& loss, ParamSet& gradients) {
  if (batch.empty()) throw ContractError("loss_and_gradients: empty batch");
  Tape tape;
  BoundParams p(tape, params.weights);
  std::vector<Var> losses;
  losses.reserve(batch.size());
  for (const AttentionExample* ex : batch)
    losses.push_back(attention_loss(tape, forward(tape, p, ex->input), *ex, loss));
  Var total = num::scale(num::sum(num::concat_rows(losses)),
                         1.0 / static_cast<double>(batch.size()));
  tape.backward(total);
  gradients = p.gradients();
  return total.value().item();
}

double mean_loss(const AttentionNetParams& params,
                 const std::vector<AttentionExample>& examples,
                 const AttentionLossConfig& loss) {
  if (examples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& ex : examples) acc += attention_loss(params, ex, loss);
  return acc / static_cast<double>(examples.size());
}

AttentionLossConfig AttentionTrainConfig::loss() const {
  AttentionLossConfig l(beta);
  l.fixed_log_sigma2 = fixed_log_sigma2;
  return l;
}

AttentionTrainResult train(const std::vector<AttentionExample>& train_set,
                           const std::vector<AttentionExample>& validation_set,
                           const AttentionTrainConfig& config) {
  if (train_set.empty()) throw ConfigError("attention training set is empty");
  if (config.batch_size == 0) throw ConfigError("batch size must be >= 1");

  num::Rng rng(config.seed);
  num::Rng init_rng = rng.fork(1);
  num::Rng order_rng = rng.fork(2);
  AttentionTrainResult result{AttentionNetParams::initialise(init_rng), {}};
  num::AdamState adam = num::AdamState::fresh(
      result.params.weights, {config.learning_rate, 0.9, 0.999, 1e-8});

  result.log.initial_train_loss = mean_loss(result.params, train_set, config.loss());
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  ParamSet grads;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t k = order.size(); k > 1; --k)
      std::swap(order[k - 1], order[order_rng.index(k)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<const AttentionExample*> batch;
      for (std::size_t k = start; k < end; ++k) batch.push_back(&train_set[order[k]]);
      const double l = loss_and_gradients(result.params, batch, config.loss(), grads);
      epoch_loss += l * static_cast<double>(batch.size());
      num::adam_step(result.params.weights, grads, adam);
    }
    result.log.train_loss.push_back(epoch_loss / static_cast<double>(order.size()));
    if (!validation_set.empty())
      result.log.validation_loss.push_back(
          mean_loss(result.params, validation_set, config.loss()));
  }
  return result;
}

double evaluate_motion_mae(const AttentionNetParams& params,
                           const std::vector<AttentionExample>& test_set) {
  if (test_set.empty()) throw ContractError("evaluate_motion_mae: empty test set");
  double acc = 0.0;
  for (const auto& ex : test_set) {
    const Tensor m = forward(params, ex.input).motion;
    for (std::size_t k = 0; k < kMotionDim; ++k)
      acc += std::abs(m[k] - ex.target_motion[k]);
  }
  return acc / static_cast<double>(test_set.size() * kMotionDim);
}

std::vector<AttentionExample> synthetic_examples(
    const std::vector<traj::SceneWindow>& windows, std::uint64_t seed) {
  std::vector<AttentionExample> out;
  num::Rng rng(seed);
  for (const auto& w : windows) {
    const auto positions = w.positions_at(w.t_obs - 1);
    for (std::size_t i = 0; i < w.size(); ++i) {
      AttentionExample ex;
      ex.input = make_input(w, i);
      ex.target_motion = next_motion_target(w, i);
      ex.positions = positions;
      ex.gaze = gaze::synthetic_gaze_oracle(w, i, rng);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

}  // namespace avgcn::attention
