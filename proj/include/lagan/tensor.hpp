#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "lagan/error.hpp"

namespace lagan {

/// Dense row-major n-dimensional array of 64-bit floats with an optional
/// same-shape gradient accumulator. All network computation runs on these.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
    values_.assign(static_cast<size_t>(count(shape_)), 0.0);
  }

  Tensor(std::vector<int64_t> shape, std::vector<double> values)
      : shape_(std::move(shape)), values_(std::move(values)) {
    require(count(shape_) == static_cast<int64_t>(values_.size()), ErrorCategory::dimension,
            "tensor value count does not match shape " + shape_string());
  }

  static Tensor zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<int64_t> shape, double value) {
    Tensor t(std::move(shape));
    for (double& v : t.values_) v = value;
    return t;
  }

  static Tensor scalar(double value) { return Tensor({}, {value}); }

  int rank() const { return static_cast<int>(shape_.size()); }
  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t extent(int axis) const { return shape_.at(static_cast<size_t>(axis)); }
  int64_t numel() const { return static_cast<int64_t>(values_.size()); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double& operator[](int64_t i) { return values_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return values_[static_cast<size_t>(i)]; }

  /// Row-major element access; rank-checked only in the indexed arity.
  template <typename... Ix>
  double& at(Ix... ix) {
    return values_[static_cast<size_t>(offset({static_cast<int64_t>(ix)...}))];
  }
  template <typename... Ix>
  double at(Ix... ix) const {
    return values_[static_cast<size_t>(offset({static_cast<int64_t>(ix)...}))];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  std::string shape_string() const {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << ']';
    return os.str();
  }

  // Gradient accumulator. Absent until ensure_grad(); same length as values.
  bool has_grad() const { return !grad_.empty(); }
  void ensure_grad() {
    if (grad_.size() != values_.size()) grad_.assign(values_.size(), 0.0);
  }
  void zero_grad() { grad_.assign(values_.size(), 0.0); }
  void drop_grad() { grad_.clear(); }
  double* grad_data() { return grad_.data(); }
  const double* grad_data() const { return grad_.data(); }
  std::vector<double>& grad() { return grad_; }
  const std::vector<double>& grad() const { return grad_; }

  static int64_t count(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t e : shape) {
      require(e >= 0, ErrorCategory::dimension, "negative tensor extent");
      n *= e;
    }
    return n;
  }

 private:
  int64_t offset(std::initializer_list<int64_t> ix) const {
    require(ix.size() == shape_.size(), ErrorCategory::dimension,
            "index arity does not match tensor rank");
    int64_t off = 0;
    size_t axis = 0;
    for (int64_t i : ix) {
      off = off * shape_[axis] + i;
      ++axis;
    }
    return off;
  }

  std::vector<int64_t> shape_;
  std::vector<double> values_;
  std::vector<double> grad_;
};

}  // namespace lagan
