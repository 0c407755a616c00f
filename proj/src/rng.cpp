#include "avgcn/rng.hpp"

#include <cmath>
#include <numbers>

#include "avgcn/error.hpp"

namespace avgcn::num {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t Rng::next_u64() {
  return splitmix64(splitmix64(seed_) ^ (counter_++ * 0xd1b54a32d192ed03ULL));
}

double Rng::uniform() {
  // 53 random mantissa bits, shifted off zero.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw ContractError("Rng::index on empty range");
  return static_cast<std::size_t>(next_u64() % n);
}

Rng Rng::fork(std::uint64_t key) const {
  return Rng(splitmix64(seed_ ^ splitmix64(key + 0x632be59bd9b4e019ULL)));
}

Tensor standard_normal(Rng& rng, std::size_t rows, std::size_t cols) {
  Tensor out = Tensor::zeros(rows, cols);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = rng.normal();
  return out;
}

Var sample_normal(Rng& rng, Var mean, Var log_var) {
  if (!mean.value().same_shape(log_var.value())) {
    throw DimensionError("sample_normal: mean " +
                         mean.value().shape_string() + " vs log_var " +
                         log_var.value().shape_string());
  }
  Var eps = mean.tape()->constant(standard_normal(rng, mean.rows(), mean.cols()));
  return add(mean, mul(exp(scale(log_var, 0.5)), eps));
}

}  // namespace avgcn::num
