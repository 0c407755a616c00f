#include "avgcn/predictor.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "avgcn/adam.hpp"
#include "avgcn/error.hpp"

namespace avgcn::predictor {

using num::BoundParams;
using num::ParamSet;
using num::Tape;
using num::Tensor;
using num::Var;

namespace {

struct Layout {
  const char* name;
  std::size_t rows;
  std::size_t cols;
};

constexpr Layout kLayout[] = {
    {"mlp_mot.w", 2, kMotionEmbed},
    {"mlp_mot.b", 1, kMotionEmbed},
    {"lstm_en.w_input", kMotionEmbed, 4 * kEncoderHidden},
    {"lstm_en.w_hidden", kEncoderHidden, 4 * kEncoderHidden},
    {"lstm_en.b", 1, 4 * kEncoderHidden},
    {"mlp_cont.w", 2, kContextEmbed},
    {"mlp_cont.b", 1, kContextEmbed},
    {"gcn_si.w1", kNodeDim, kGcnHidden},
    {"gcn_si.w2", kGcnHidden, kLatentDim},
    {"mlp_mean.w", kLatentDim, kLatentDim},
    {"mlp_mean.b", 1, kLatentDim},
    {"mlp_var.w", kLatentDim, kLatentDim},
    {"mlp_var.b", 1, kLatentDim},
    {"mlp_enc.w", 2, kFeedbackEmbed},
    {"mlp_enc.b", 1, kFeedbackEmbed},
    {"lstm_de.w_input", kLatentDim + kFeedbackEmbed, 4 * kDecoderHidden},
    {"lstm_de.w_hidden", kDecoderHidden, 4 * kDecoderHidden},
    {"lstm_de.b", 1, 4 * kDecoderHidden},
    {"mlp_dec.w", kDecoderHidden, 2},
    {"mlp_dec.b", 1, 2},
};

Var dense(const BoundParams& p, Var x, const std::string& prefix) {
  return num::add_row(num::matmul(x, p[prefix + ".w"]), p[prefix + ".b"]);
}

num::LstmWeights lstm(const BoundParams& p, const std::string& prefix) {
  return {p[prefix + ".w_input"], p[prefix + ".w_hidden"], p[prefix + ".b"]};
}

void require_row_stochastic(const Tensor& a, std::size_t n, const char* what) {
  if (a.rows() != n || a.cols() != n) {
    throw DimensionError(std::string(what) + ": attention must be " +
                         std::to_string(n) + "x" + std::to_string(n) + ", got " +
                         a.shape_string());
  }
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (a(r, c) < 0.0) throw ContractError(std::string(what) + ": negative attention");
      s += a(r, c);
    }
    if (std::abs(s - 1.0) > 1e-9) {
      throw ContractError(std::string(what) + ": attention row " + std::to_string(r) +
                          " sums to " + std::to_string(s));
    }
  }
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

PredictorParams PredictorParams::initialise(num::Rng& rng) {
  PredictorParams p;
  for (const Layout& l : kLayout) {
    if (l.rows == 1) {
      p.weights.add(l.name, Tensor::zeros(1, l.cols));
    } else {
      p.weights.add(l.name, num::glorot(rng, l.rows, l.cols));
    }
  }
  return p;
}

PredictorParams PredictorParams::zeros() {
  PredictorParams p;
  for (const Layout& l : kLayout) p.weights.add(l.name, Tensor::zeros(l.rows, l.cols));
  return p;
}

void PredictorParams::validate() const {
  PredictorParams::zeros().weights.require_same_layout(weights, "predictor parameters");
}

ArmConfig arm_from_name(const std::string& name) {
  const std::string n = upper(name);
  ArmConfig arm;
  if (n == "GCN") {
    arm.source = AttentionSource::Uniform;
    arm.visual_filter = false;
  } else if (n == "AGCN") {
    arm.source = AttentionSource::Learned;
    arm.visual_filter = false;
  } else if (n == "VGCN") {
    arm.source = AttentionSource::Uniform;
    arm.visual_filter = true;
  } else if (n == "AVGCN") {
    arm.source = AttentionSource::Learned;
    arm.visual_filter = true;
  } else {
    throw ConfigError("unknown model arm '" + name +
                      "' (expected GCN, AGCN, VGCN or AVGCN)");
  }
  return arm;
}

std::string arm_name(const ArmConfig& arm) {
  const bool learned = arm.source == AttentionSource::Learned;
  if (learned) return arm.visual_filter ? "AVGCN" : "AGCN";
  return arm.visual_filter ? "VGCN" : "GCN";
}

Tensor attention_matrix(const traj::SceneWindow& window, const ArmConfig& arm,
                        const attention::AttentionNetParams* attention_params) {
  const std::size_t n = window.size();
  if (n == 0) throw ContractError("attention_matrix: empty window");
  if (arm.source == AttentionSource::Learned && attention_params == nullptr)
    throw ConfigError("learned attention requires attention network parameters");
  arm.field.validate();

  Tensor a = Tensor::zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    if (arm.source == AttentionSource::Learned) {
      row = attention::forward(*attention_params, attention::make_input(window, i))
                .attention;
    } else {
      row.assign(n, 1.0 / static_cast<double>(n));
    }
    if (arm.visual_filter) {
      row = vf::visual_filter(row, traj::relative_context(window, i, window.t_obs - 1),
                              i, window.pedestrians[i].velocity_at_obs, arm.field);
    }
    for (std::size_t j = 0; j < n; ++j) a(i, j) = row[j];
  }
  return a;
}

std::vector<Tensor> observed_steps(const traj::SceneWindow& window) {
  std::vector<Tensor> steps;
  for (std::size_t t = 0; t < window.t_obs; ++t) {
    Tensor x = Tensor::zeros(window.size(), 2);
    for (std::size_t i = 0; i < window.size(); ++i) {
      x(i, 0) = window.pedestrians[i].rel_displacements[t].x;
      x(i, 1) = window.pedestrians[i].rel_displacements[t].y;
    }
    steps.push_back(std::move(x));
  }
  return steps;
}

Tensor future_displacements(const traj::SceneWindow& window) {
  Tensor y = Tensor::zeros(window.size(), 2 * window.t_pred);
  for (std::size_t i = 0; i < window.size(); ++i) {
    for (std::size_t s = 0; s < window.t_pred; ++s) {
      const Vec2 d = window.pedestrians[i].rel_displacements[window.t_obs + s];
      y(i, 2 * s) = d.x;
      y(i, 2 * s + 1) = d.y;
    }
  }
  return y;
}

Var encode_motion(Tape& tape, const BoundParams& p, const std::vector<Tensor>& steps) {
  if (steps.empty()) throw ContractError("encode_motion: empty sequence");
  const std::size_t n = steps.front().rows();
  num::LstmState state{tape.constant(Tensor::zeros(n, kEncoderHidden)),
                       tape.constant(Tensor::zeros(n, kEncoderHidden))};
  const num::LstmWeights w = lstm(p, "lstm_en");
  for (const Tensor& x : steps) {
    if (x.rows() != n || x.cols() != 2)
      throw DimensionError("encode_motion: step must be " + std::to_string(n) +
                           "x2, got " + x.shape_string());
    Var e = num::relu(dense(p, tape.constant(x), "mlp_mot"));
    state = num::lstm_cell(e, state, w);
  }
  return state.h;
}

Var social_context(Tape& tape, const BoundParams& p, const std::vector<Vec2>& positions,
                   const Tensor& attention) {
  const std::size_t n = positions.size();
  if (attention.rows() != n || attention.cols() != n)
    throw ContractError("social_context: attention is " + attention.shape_string() +
                        " for " + std::to_string(n) + " pedestrians");
  // Row i*n + j holds x_j - x_i; the block selector applies row i of the
  // attention to block i.
  Tensor rel = Tensor::zeros(n * n, 2);
  Tensor select = Tensor::zeros(n, n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const Vec2 d = positions[j] - positions[i];
      rel(i * n + j, 0) = d.x;
      rel(i * n + j, 1) = d.y;
      select(i, i * n + j) = attention(i, j);
    }
  }
  Var emb = num::relu(dense(p, tape.constant(std::move(rel)), "mlp_cont"));
  return num::matmul(tape.constant(std::move(select)), emb);
}

Var social_gcn(Tape& tape, const BoundParams& p, Var nodes, const Tensor& attention) {
  require_row_stochastic(attention, nodes.rows(), "social_gcn");
  Var a = tape.constant(attention);
  Var h = num::relu(num::matmul(num::matmul(a, nodes), p["gcn_si.w1"]));
  return num::matmul(num::matmul(a, h), p["gcn_si.w2"]);
}

Latent latent_head(const BoundParams& p, Var v) {
  if (v.cols() != kLatentDim)
    throw DimensionError("latent_head: expected N x 8, got " + v.value().shape_string());
  return {dense(p, v, "mlp_mean"), dense(p, v, "mlp_var")};
}

Var decode(Tape& tape, const BoundParams& p, Var z, const Tensor& last_observed,
           std::size_t steps) {
  if (steps < 1) throw ContractError("decode: steps must be >= 1");
  const std::size_t n = z.rows();
  if (z.cols() != kLatentDim || last_observed.rows() != n || last_observed.cols() != 2)
    throw DimensionError("decode: z " + z.value().shape_string() + ", last " +
                         last_observed.shape_string());
  num::LstmState state{tape.constant(Tensor::zeros(n, kDecoderHidden)),
                       tape.constant(Tensor::zeros(n, kDecoderHidden))};
  const num::LstmWeights w = lstm(p, "lstm_de");
  Var prev = tape.constant(last_observed);
  Var out;
  for (std::size_t s = 0; s < steps; ++s) {
    Var fb = num::relu(dense(p, prev, "mlp_enc"));
    state = num::lstm_cell(num::concat_cols(z, fb), state, w);
    prev = dense(p, state.h, "mlp_dec");
    out = s == 0 ? prev : num::concat_cols(out, prev);
  }
  return out;
}

Var prediction_loss(Tape& tape, Var predicted, const Tensor& target,
                    const Latent& latent, double alpha) {
  if (predicted.rows() != target.rows() || predicted.cols() != target.cols() ||
      target.cols() % 2 != 0)
    throw DimensionError("prediction_loss: predicted " +
                         predicted.value().shape_string() + " vs target " +
                         target.shape_string());
  const std::size_t n = target.rows();
  Var diff = num::sub(predicted, tape.constant(target));
  std::vector<Var> norms;
  for (std::size_t s = 0; s < target.cols() / 2; ++s)
    norms.push_back(num::row_norm(num::slice_cols(diff, 2 * s, 2)));
  Var recon = num::mean(num::concat_rows(norms));
  if (alpha == 0.0) return recon;

  Var mu2 = num::square(latent.mean);
  Var var = num::exp(latent.log_var);
  Var terms = num::add_constant(num::sub(num::add(mu2, var), latent.log_var), -1.0);
  Var kl = num::scale(num::sum(terms), 0.5 / static_cast<double>(n));
  return num::add(recon, num::scale(kl, alpha));
}

EncodedWindow encode_window(Tape& tape, const BoundParams& p,
                            const traj::SceneWindow& window, const Tensor& attention) {
  if (window.size() == 0) throw ContractError("encode_window: empty window");
  EncodedWindow enc;
  enc.motion = encode_motion(tape, p, observed_steps(window));
  enc.context = social_context(tape, p, window.positions_at(window.t_obs - 1), attention);
  enc.social = social_gcn(tape, p, num::concat_cols(enc.motion, enc.context), attention);
  enc.latent = latent_head(p, enc.social);
  return enc;
}

std::vector<PreparedWindow> prepare(const std::vector<traj::SceneWindow>& windows,
                                    const ArmConfig& arm,
                                    const attention::AttentionNetParams* attention_params) {
  std::vector<PreparedWindow> out;
  out.reserve(windows.size());
  for (const auto& w : windows)
    out.push_back({&w, attention_matrix(w, arm, attention_params)});
  return out;
}

namespace {

Tensor last_observed(const traj::SceneWindow& w) {
  Tensor last = Tensor::zeros(w.size(), 2);
  for (std::size_t i = 0; i < w.size(); ++i) {
    last(i, 0) = w.pedestrians[i].rel_displacements[w.t_obs - 1].x;
    last(i, 1) = w.pedestrians[i].rel_displacements[w.t_obs - 1].y;
  }
  return last;
}

}  // namespace

WindowLoss window_loss(Tape& tape, const BoundParams& p, const PreparedWindow& pw,
                       double alpha, num::Rng& rng) {
  const traj::SceneWindow& w = *pw.window;
  EncodedWindow enc = encode_window(tape, p, w, pw.attention);
  Var z = num::sample_normal(rng, enc.latent.mean, enc.latent.log_var);
  Var pred = decode(tape, p, z, last_observed(w), w.t_pred);
  const Tensor target = future_displacements(w);
  return {prediction_loss(tape, pred, target, enc.latent, alpha),
          prediction_loss(tape, pred, target, enc.latent, 0.0)};
}

double window_loss_at_mean(const PredictorParams& params, const PreparedWindow& pw,
                           double alpha) {
  Tape tape;
  BoundParams p(tape, params.weights);
  const traj::SceneWindow& w = *pw.window;
  EncodedWindow enc = encode_window(tape, p, w, pw.attention);
  Var pred = decode(tape, p, enc.latent.mean, last_observed(w), w.t_pred);
  return prediction_loss(tape, pred, future_displacements(w), enc.latent, alpha)
      .value()
      .item();
}

PredictorTrainResult train(const std::vector<PreparedWindow>& windows,
                           const PredictorTrainConfig& config) {
  if (windows.empty()) throw ConfigError("predictor training set is empty");
  if (config.batch_size == 0) throw ConfigError("batch size must be >= 1");

  num::Rng rng(config.seed);
  num::Rng init_rng = rng.fork(1);
  num::Rng order_rng = rng.fork(2);
  num::Rng noise_rng = rng.fork(3);
  PredictorTrainResult result{PredictorParams::initialise(init_rng), {}};
  num::AdamState adam = num::AdamState::fresh(
      result.params.weights, {config.learning_rate, 0.9, 0.999, 1e-8});

  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t k = order.size(); k > 1; --k)
      std::swap(order[k - 1], order[order_rng.index(k)]);
    double total = 0.0, recon = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      if (config.max_steps && result.log.steps >= config.max_steps) break;
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      Tape tape;
      BoundParams p(tape, result.params.weights);
      std::vector<Var> losses;
      for (std::size_t k = start; k < end; ++k) {
        WindowLoss l = window_loss(tape, p, windows[order[k]], config.alpha, noise_rng);
        losses.push_back(l.total);
        recon += l.reconstruction.value().item();
      }
      const double count = static_cast<double>(end - start);
      Var batch_loss = num::scale(num::sum(num::concat_rows(losses)), 1.0 / count);
      tape.backward(batch_loss);
      total += batch_loss.value().item() * count;
      seen += end - start;
      num::adam_step(result.params.weights, p.gradients(), adam);
      ++result.log.steps;
    }
    if (seen == 0) break;
    result.log.epoch_loss.push_back(total / static_cast<double>(seen));
    result.log.epoch_reconstruction.push_back(recon / static_cast<double>(seen));
  }
  return result;
}

PredictionSet predict(const traj::SceneWindow& window, const PredictorParams& params,
                      const Tensor& attention, const num::Rng& rng,
                      const PredictOptions& options) {
  if (options.k < 1) throw ContractError("predict: k must be >= 1");
  const std::size_t n = window.size();
  Tape tape;
  BoundParams p(tape, params.weights);
  EncodedWindow enc = encode_window(tape, p, window, attention);
  const Tensor& mu = enc.latent.mean.value();
  const Tensor& lv = enc.latent.log_var.value();
  const Tensor last = last_observed(window);

  auto unpack = [&](const Tensor& out, std::size_t i) {
    std::vector<Vec2> traj(window.t_pred);
    for (std::size_t s = 0; s < window.t_pred; ++s)
      traj[s] = {out(i, 2 * s), out(i, 2 * s + 1)};
    return traj;
  };

  PredictionSet set;
  set.pedestrians.resize(n);
  const Tensor mean_out = decode(tape, p, tape.constant(mu), last, window.t_pred).value();
  std::vector<num::Rng> streams;
  for (std::size_t i = 0; i < n; ++i) {
    set.pedestrians[i].id = window.pedestrians[i].id;
    set.pedestrians[i].mean = unpack(mean_out, i);
    streams.push_back(rng.fork(static_cast<std::uint64_t>(window.pedestrians[i].id)));
  }
  for (std::size_t s = 0; s < options.k; ++s) {
    Tensor z = Tensor::zeros(n, kLatentDim);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < kLatentDim; ++d)
        z(i, d) = mu(i, d) +
                  std::exp(0.5 * (lv(i, d) + options.log_var_offset)) * streams[i].normal();
    const Tensor out = decode(tape, p, tape.constant(std::move(z)), last, window.t_pred).value();
    for (std::size_t i = 0; i < n; ++i) set.pedestrians[i].samples.push_back(unpack(out, i));
  }
  return set;
}

std::vector<Vec2> to_absolute(Vec2 origin, const std::vector<Vec2>& displacements) {
  std::vector<Vec2> out;
  out.reserve(displacements.size());
  for (const Vec2& d : displacements) {
    origin += d;
    out.push_back(origin);
  }
  return out;
}

}  // namespace avgcn::predictor
