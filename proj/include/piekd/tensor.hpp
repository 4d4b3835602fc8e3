#pragma once

#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "piekd/error.hpp"

namespace piekd {

// Dense row-major tensor of f64, rank 1 or 2. Rank-1 [n] behaves as a row
// [1, n] in every matrix operation. All entries must stay finite; operations
// that can produce non-finite values call assert_finite on their outputs.
class Tensor {
public:
  Tensor() = default;

  explicit Tensor(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
    validate_shape();
    data_.assign(static_cast<std::size_t>(numel_), 0.0);
  }

  Tensor(std::vector<std::int64_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape();
    check(static_cast<std::int64_t>(data_.size()) == numel_,
          "tensor: shape ", shape_str(), " expects ", numel_,
          " entries, got ", data_.size());
  }

  static Tensor zeros(std::vector<std::int64_t> shape) {
    return Tensor(std::move(shape));
  }

  static Tensor scalar(double v) { return Tensor({1, 1}, {v}); }

  static Tensor row(std::vector<double> v) {
    const auto n = static_cast<std::int64_t>(v.size());
    return Tensor({1, n}, std::move(v));
  }

  bool empty() const { return shape_.empty(); }
  std::int64_t size() const { return numel_; }
  std::int64_t rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
  std::int64_t cols() const {
    return shape_.empty() ? 0 : shape_[shape_.size() - 1];
  }
  const std::vector<std::int64_t>& shape() const { return shape_; }

  bool same_shape(const Tensor& o) const {
    return rows() == o.rows() && cols() == o.cols();
  }

  double& operator()(std::int64_t r, std::int64_t c) {
    return data_[static_cast<std::size_t>(r * cols() + c)];
  }
  double operator()(std::int64_t r, std::int64_t c) const {
    return data_[static_cast<std::size_t>(r * cols() + c)];
  }
  double& at(std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double at(std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> flat() { return {data_.data(), data_.size()}; }
  std::span<const double> flat() const { return {data_.data(), data_.size()}; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  std::string shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape_[i]);
    }
    return s + "]";
  }

  // Throws if any entry is NaN or Inf. Single-pass: the sum of absolute
  // values is finite iff every entry is.
  void assert_finite(const char* context) const;

  bool bitwise_equal(const Tensor& o) const {
    return shape_ == o.shape_ && data_.size() == o.data_.size() &&
           (data_.empty() ||
            std::memcmp(data_.data(), o.data_.data(),
                        data_.size() * sizeof(double)) == 0);
  }

  static Tensor hconcat(const Tensor& a, const Tensor& b) {
    check(a.rows() == b.rows(), "hconcat: row mismatch ", a.shape_str(),
          " vs ", b.shape_str());
    Tensor out({a.rows(), a.cols() + b.cols()});
    for (std::int64_t r = 0; r < a.rows(); ++r) {
      for (std::int64_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c);
      for (std::int64_t c = 0; c < b.cols(); ++c)
        out(r, a.cols() + c) = b(r, c);
    }
    return out;
  }

private:
  void validate_shape() {
    check(!shape_.empty() && shape_.size() <= 2, "tensor: rank must be 1 or 2");
    numel_ = 1;
    for (auto d : shape_) {
      check(d >= 1, "tensor: dims must be positive, got ", shape_str());
      numel_ *= d;
    }
  }

  std::vector<std::int64_t> shape_;
  std::vector<double> data_;
  std::int64_t numel_ = 0;
};

}  // namespace piekd
