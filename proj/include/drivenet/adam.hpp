#pragma once

#include <cstdint>
#include <vector>

#include "drivenet/tensor.hpp"

namespace drivenet {

struct AdamConfig {
  float alpha = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.99f;
  float epsilon = 1e-8f;
};

// Per-parameter-tensor optimizer state. m and v mirror the parameter shape;
// t counts completed steps.
struct AdamState {
  Tensor m;
  Tensor v;
  int64_t t = 0;
  AdamConfig cfg;

  static AdamState init(const std::vector<int>& shape, const AdamConfig& cfg);
};

// One bias-corrected Adam update:
//   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2,  t <- t+1
//   p <- p - alpha * (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps)
// Moments and parameters are stored in float32; the per-element arithmetic
// runs in double.
void adam_step(Tensor& params, const Tensor& grads, AdamState& state);

}  // namespace drivenet
