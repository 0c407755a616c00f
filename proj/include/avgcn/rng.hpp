#pragma once

#include <cstdint>

#include "avgcn/autodiff.hpp"
#include "avgcn/tensor.hpp"

namespace avgcn::num {

/// Counter-based generator: the n-th draw is a pure function of (seed, n), so
/// streams are reproducible across runs and platforms. fork() derives an
/// independent stream keyed by an integer (e.g. a pedestrian id).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  Rng fork(std::uint64_t key) const;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

Tensor standard_normal(Rng& rng, std::size_t rows, std::size_t cols);

/// Reparameterized Gaussian draw: mean + exp(log_var / 2) * eps with
/// eps ~ N(0, I). Gradients flow to mean and log_var.
Var sample_normal(Rng& rng, Var mean, Var log_var);

}  // namespace avgcn::num
