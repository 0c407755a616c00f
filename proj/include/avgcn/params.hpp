#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "avgcn/autodiff.hpp"
#include "avgcn/rng.hpp"
#include "avgcn/tensor.hpp"

namespace avgcn::num {

/// Ordered collection of named tensors: a network's learnable weights, or the
/// gradients with respect to them (same names, same shapes).
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor value;
  };

  void add(std::string name, Tensor value);
  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);

  std::size_t size() const noexcept { return entries_.size(); }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }
  Entry& operator[](std::size_t i) { return entries_[i]; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }

  std::size_t scalar_count() const;
  /// A zero-filled set with identical names and shapes.
  ParamSet zeros_like() const;
  /// Throws DimensionError unless names and shapes agree position by position.
  void require_same_layout(const ParamSet& other, std::string_view what) const;

  bool operator==(const ParamSet& other) const;

 private:
  std::vector<Entry> entries_;
};

/// ParamSet entries registered as tracked leaves on one tape.
class BoundParams {
 public:
  BoundParams(Tape& tape, const ParamSet& params);
  BoundParams(Tape& tape, const ParamSet&& params) = delete;

  Var operator[](std::string_view name) const;
  Var at(std::size_t i) const { return vars_[i]; }
  /// Gradients after tape.backward(), laid out like the bound ParamSet.
  ParamSet gradients() const;

 private:
  Tape* tape_;
  const ParamSet* params_;
  std::vector<Var> vars_;
};

/// Uniform Glorot initialisation for a fan_in x fan_out weight matrix.
Tensor glorot(Rng& rng, std::size_t fan_in, std::size_t fan_out);

/// Adds `scale * src` into dst entrywise (layouts must agree).
void axpy(ParamSet& dst, const ParamSet& src, double scale);

}  // namespace avgcn::num
