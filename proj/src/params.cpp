#include "avgcn/params.hpp"

#include <cmath>

#include "avgcn/error.hpp"

namespace avgcn::num {

void ParamSet::add(std::string name, Tensor value) {
  if (contains(name)) throw ContractError("duplicate parameter '" + name + "'");
  entries_.push_back({std::move(name), std::move(value)});
}

bool ParamSet::contains(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

std::size_t ParamSet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return i;
  throw ContractError("unknown parameter '" + std::string(name) + "'");
}

const Tensor& ParamSet::at(std::string_view name) const {
  return entries_[index_of(name)].value;
}

Tensor& ParamSet::at(std::string_view name) {
  return entries_[index_of(name)].value;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (const auto& e : entries_) out.add(e.name, Tensor(e.value.shape()));
  return out;
}

void ParamSet::require_same_layout(const ParamSet& other,
                                   std::string_view what) const {
  if (other.size() != size()) {
    throw DimensionError(std::string(what) + ": expected " +
                         std::to_string(size()) + " tensors, got " +
                         std::to_string(other.size()));
  }
  for (std::size_t i = 0; i < size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.value.shape() != b.value.shape()) {
      throw DimensionError(std::string(what) + ": '" + a.name + "' " +
                           a.value.shape_string() + " vs '" + b.name + "' " +
                           b.value.shape_string());
    }
  }
}

bool ParamSet::operator==(const ParamSet& other) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (entries_[i].name != other.entries_[i].name) return false;
    if (entries_[i].value.shape() != other.entries_[i].value.shape())
      return false;
    if (entries_[i].value.values() != other.entries_[i].value.values())
      return false;
  }
  return true;
}

BoundParams::BoundParams(Tape& tape, const ParamSet& params)
    : tape_(&tape), params_(&params) {
  vars_.reserve(params.size());
  for (const auto& e : params) vars_.push_back(tape.leaf(e.value));
}

Var BoundParams::operator[](std::string_view name) const {
  return vars_[params_->index_of(name)];
}

ParamSet BoundParams::gradients() const {
  ParamSet out;
  for (std::size_t i = 0; i < vars_.size(); ++i)
    out.add((*params_)[i].name, tape_->grad(vars_[i]));
  return out;
}

Tensor glorot(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor w = Tensor::zeros(fan_in, fan_out);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-limit, limit);
  return w;
}

void axpy(ParamSet& dst, const ParamSet& src, double scale) {
  dst.require_same_layout(src, "axpy");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    Tensor& d = dst[i].value;
    const Tensor& s = src[i].value;
    for (std::size_t k = 0; k < d.size(); ++k) d[k] += scale * s[k];
  }
}

}  // namespace avgcn::num
