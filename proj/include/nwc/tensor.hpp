#pragma once

#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

namespace nwc {

// Dense row-major tensor of doubles, rank 1..4. Small by design: the model
// code owns all structure, this is just indexed storage.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(count(shape_), 0.0);
  }

  Tensor(std::initializer_list<int> shape) : Tensor(std::vector<int>(shape)) {}

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& operator()(int a, int b) {
    assert(rank() == 2);
    return data_[static_cast<std::size_t>(a) * shape_[1] + b];
  }
  double operator()(int a, int b) const {
    assert(rank() == 2);
    return data_[static_cast<std::size_t>(a) * shape_[1] + b];
  }
  double& operator()(int a, int b, int c) {
    assert(rank() == 3);
    return data_[(static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c];
  }
  double operator()(int a, int b, int c) const {
    assert(rank() == 3);
    return data_[(static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c];
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor reshaped(std::vector<int> shape) const {
    assert(count(shape) == data_.size());
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = data_;
    return t;
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  static std::size_t count(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
  }

  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace nwc
