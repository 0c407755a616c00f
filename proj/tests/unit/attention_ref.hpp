#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "avgcn/attention_net.hpp"
#include "unit/fixtures.hpp"

namespace avgcn::testing::att {

using namespace avgcn::attention;
using num::Tensor;

using Mat = std::vector<std::vector<double>>;

inline Mat to_mat(const Tensor& t) {
  Mat m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t(r, c);
  return m;
}

inline Mat mm(const Mat& a, const Mat& b) {
  Mat out(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b[0].size(); ++j)
      for (std::size_t k = 0; k < b.size(); ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

inline Mat bias_relu(Mat m, const Mat& b, bool relu) {
  for (auto& row : m)
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] += b[0][j];
      if (relu) row[j] = std::max(0.0, row[j]);
    }
  return m;
}

struct Reference {
  Mat b, u, out;
  std::vector<double> attention;
  double log_sigma2;
  std::vector<double> pooled, motion;
};

// Independent scalar forward pass written from the layer definitions.
inline Reference reference_forward(const AttentionNetParams& p, const Mat& s,
                            std::size_t focal) {
  const std::size_t n = s.size();
  Mat adj(n, std::vector<double>(n, 0.0));
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<bool> edge(n, false);
    edge[r] = true;  // self loop
    if (r == focal) std::fill(edge.begin(), edge.end(), true);
    else edge[focal] = true;
    const double deg = static_cast<double>(std::count(edge.begin(), edge.end(), true));
    for (std::size_t c = 0; c < n; ++c) adj[r][c] = edge[c] ? 1.0 / deg : 0.0;
  }
  const auto& w = p.weights;
  Reference ref;
  Mat h = bias_relu(mm(s, to_mat(w.at("mlp_att.w1"))), to_mat(w.at("mlp_att.b1")), true);
  ref.b = bias_relu(mm(h, to_mat(w.at("mlp_att.w2"))), to_mat(w.at("mlp_att.b2")), true);
  ref.u = mm(mm(adj, ref.b), to_mat(w.at("gcn_att.w1")));
  for (auto& row : ref.u)
    for (double& v : row) v = std::max(0.0, v);
  ref.out = mm(mm(adj, ref.u), to_mat(w.at("gcn_att.w2")));
  double mx = -1e300;
  for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, ref.out[j][1]);
  double z = 0.0;
  for (std::size_t j = 0; j < n; ++j) z += std::exp(ref.out[j][1] - mx);
  ref.log_sigma2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    ref.attention.push_back(std::exp(ref.out[j][1] - mx) / z);
    ref.log_sigma2 += ref.out[j][0] / static_cast<double>(n);
  }
  ref.pooled.assign(ref.u[0].size(), 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t c = 0; c < ref.pooled.size(); ++c)
      ref.pooled[c] += ref.attention[j] * ref.u[j][c];
  const Mat fw = to_mat(w.at("fc.w"));
  const Mat fb = to_mat(w.at("fc.b"));
  for (std::size_t k = 0; k < 4; ++k) {
    double v = fb[0][k];
    for (std::size_t c = 0; c < ref.pooled.size(); ++c) v += ref.pooled[c] * fw[c][k];
    ref.motion.push_back(v);
  }
  return ref;
}

inline AttentionExample fixture_example(num::Rng& rng, std::size_t n) {
  auto w = testing::random_window(rng, n);
  const std::size_t focal = rng.index(n);
  AttentionExample ex;
  ex.input = make_input(w, focal);
  ex.target_motion = next_motion_target(w, focal);
  ex.positions = w.positions_at(w.t_obs - 1);
  ex.gaze = gaze::synthetic_gaze_oracle(w, focal, rng);
  return ex;
}

// Scales every weight so activations stay in a non-trivial range.
inline AttentionNetParams random_attention_params(num::Rng& rng) {
  AttentionNetParams p = AttentionNetParams::initialise(rng);
  for (auto& e : p.weights)
    for (std::size_t k = 0; k < e.value.size(); ++k)
      if (e.name.find(".b") != std::string::npos) e.value[k] = rng.uniform(-0.2, 0.2);
  return p;
}

}  // namespace avgcn::testing::att
