#pragma once

#include <cstdint>

#include "avgcn/params.hpp"

namespace avgcn::num {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators laid out like the parameters they track.
struct AdamState {
  AdamConfig config;
  ParamSet first_moment;
  ParamSet second_moment;
  std::uint64_t step = 0;

  static AdamState fresh(const ParamSet& params, AdamConfig config);
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state);

}  // namespace avgcn::num
