#include "drivenet/tensor.hpp"

#include <cmath>

namespace drivenet {

int64_t Tensor::checked_numel(const std::vector<int>& dims) {
  int64_t n = 1;
  for (int d : dims) {
    if (d <= 0) {
      std::string s = "[";
      for (size_t i = 0; i < dims.size(); ++i)
        s += (i ? ", " : "") + std::to_string(dims[i]);
      throw ShapeError("tensor: non-positive dimension in shape " + s + "]");
    }
    n *= d;
  }
  return n;
}

bool Tensor::all_finite() const {
  for (float v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i)
    s += (i ? ", " : "") + std::to_string(shape[i]);
  return s + "]";
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape " + a.shape_str() +
                     " vs " + b.shape_str());
  }
}

}  // namespace drivenet
