#pragma once

#include <cstdint>
#include <vector>

#include "drivenet/rng.hpp"
#include "drivenet/tensor.hpp"

namespace drivenet {

// Numeric kernels for the convolutional stage. All functions are pure:
// output depends only on the arguments (plus the explicit Rng for dropout).
// Parallel loops assign each output element to exactly one thread and keep a
// fixed per-element accumulation order, so results are bit-identical for any
// thread count.

struct Conv2dGrads {
  Tensor input;    // same shape as the forward input
  Tensor kernels;  // same shape as the kernel bank
  Tensor bias;     // per output channel
};

// Valid cross-correlation, stride 1, no padding.
// input: Cin×H×W, kernels: Cout×Cin×kH×kW, bias: Cout
// output: Cout×(H-kH+1)×(W-kW+1)
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias);
Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out);

struct PoolResult {
  Tensor output;               // C×(H/2)×(W/2)
  std::vector<int32_t> argmax; // per output element, flat index into the input;
                               // ties resolve to the first position in
                               // row-major window order
};

// 2×2 max pooling, stride 2, H and W must be even.
PoolResult maxpool2x2_forward(const Tensor& input);
Tensor maxpool2x2_backward(const std::vector<int32_t>& argmax, const Tensor& grad_out);

// y = max(0, x); subgradient at 0 is 0.
Tensor relu(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

struct DropoutResult {
  Tensor output;
  std::vector<uint8_t> mask;  // 1 = kept, 0 = dropped (all 1 outside training)
  float rate = 0.0f;
};

// Inverted dropout: kept elements are scaled by 1/(1-rate) at training time,
// inference is the identity and consumes no rng draws.
DropoutResult dropout(const Tensor& input, float rate, Rng* rng, bool training);
Tensor dropout_backward(const DropoutResult& forward, const Tensor& grad_out);

struct DenseGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

// y = Wx + b. input: N, weights: M×N, bias: M.
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);
DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out);

struct SoftmaxLoss {
  float loss = 0.0f;
  Tensor grad_logits;  // softmax(logits) - one_hot(label)
  Tensor probs;        // softmax(logits), sums to 1
};

// Cross-entropy of softmax(logits) against an integer label, computed with
// max subtraction so large logits do not overflow.
SoftmaxLoss softmax_cross_entropy(const Tensor& logits, int label);

// Plain serial twins of the kernels above. They are the readable reference
// the parallel versions are tested and benchmarked against.
namespace serial {

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias);
Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out);
PoolResult maxpool2x2_forward(const Tensor& input);
Tensor maxpool2x2_backward(const std::vector<int32_t>& argmax, const Tensor& grad_out);
Tensor relu(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);
DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out);

}  // namespace serial

}  // namespace drivenet
