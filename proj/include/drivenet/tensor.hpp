#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "drivenet/error.hpp"

namespace drivenet {

// Dense row-major float32 tensor. data.size() == product(shape) at all times.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;

  explicit Tensor(std::vector<int> dims) : shape(std::move(dims)) {
    data.assign(static_cast<size_t>(checked_numel(shape)), 0.0f);
  }

  Tensor(std::vector<int> dims, std::vector<float> values)
      : shape(std::move(dims)), data(std::move(values)) {
    if (static_cast<int64_t>(data.size()) != checked_numel(shape)) {
      throw ShapeError("tensor: " + std::to_string(data.size()) +
                       " values do not fill shape " + shape_str());
    }
  }

  // Validates that every dimension is positive; returns the element count.
  static int64_t checked_numel(const std::vector<int>& dims);

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int ndim() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }

  float* ptr() { return data.data(); }
  const float* ptr() const { return data.data(); }

  float& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
  float operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

  void fill(float v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;

  std::string shape_str() const;  // e.g. "[32, 44, 60]"
};

// Throws ShapeError naming `what` unless a and b have identical shapes.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace drivenet
