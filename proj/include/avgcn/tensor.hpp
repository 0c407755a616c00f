#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace avgcn::num {

using Shape = std::vector<std::size_t>;

/// Dense row-major tensor of doubles.
///
/// Most of the library works with rank-2 tensors; a rank-1 tensor behaves as a
/// single row and a rank-0 tensor as a 1x1 matrix wherever rows()/cols() are
/// used. Values must be finite: constructors that take data reject NaN/Inf.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor filled(std::size_t rows, std::size_t cols, double value);
  static Tensor scalar(double value);
  static Tensor row(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> data);
  static Tensor from_rows(
      std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rows() const noexcept;
  std::size_t cols() const noexcept;
  bool same_shape(const Tensor& other) const noexcept;

  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
  }
  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols() + c];
  }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  /// Value of a single-element tensor.
  double item() const;

  Tensor reshaped(Shape shape) const;
  std::string shape_string() const;

 private:
  Shape shape_{0};
  std::vector<double> data_;
};

std::string shape_string(const Shape& shape);
std::size_t element_count(const Shape& shape);

/// Throws NumericError naming `what` when any entry is NaN or infinite.
void check_finite(const Tensor& t, std::string_view what);

/// Plain matrix product of two rank<=2 tensors.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& t);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace avgcn::num
