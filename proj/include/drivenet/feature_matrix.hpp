#pragma once

#include <cstdint>
#include <vector>

namespace drivenet {

// Row-major N×D float matrix. Unlike Tensor, N = 0 is a valid (empty) value,
// which feature extraction over an empty image list produces.
struct FeatureMatrix {
  int64_t rows = 0;
  int cols = 0;
  std::vector<float> data;

  FeatureMatrix() = default;
  FeatureMatrix(int64_t n, int d)
      : rows(n), cols(d), data(static_cast<size_t>(n) * static_cast<size_t>(d), 0.0f) {}

  float* row(int64_t i) { return data.data() + i * cols; }
  const float* row(int64_t i) const { return data.data() + i * cols; }
};

}  // namespace drivenet
