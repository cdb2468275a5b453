#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

namespace dscn {

// Dense row-major tensor. Rank is dynamic (checkpoints carry rank + dims);
// the network code indexes NCHW layouts by explicit offset arithmetic.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), T(0));
  }

  static size_t numel_of(const std::vector<int>& s) {
    size_t n = 1;
    for (int d : s) n *= static_cast<size_t>(d);
    return s.empty() ? 0 : n;
  }

  size_t numel() const { return data.size(); }
  int dim(size_t i) const { return shape[i]; }
  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }
  void zero() { std::fill(data.begin(), data.end(), T(0)); }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

}  // namespace dscn
