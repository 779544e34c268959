#include "drivenet/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "drivenet/error.hpp"

namespace drivenet {

namespace {

void check_conv_args(const Tensor& input, const Tensor& kernels, const Tensor* bias) {
  if (input.ndim() != 3)
    throw ShapeError("conv2d: input must be Cin×H×W, got " + input.shape_str());
  if (kernels.ndim() != 4)
    throw ShapeError("conv2d: kernels must be Cout×Cin×kH×kW, got " + kernels.shape_str());
  if (kernels.dim(1) != input.dim(0))
    throw ShapeError("conv2d: kernel Cin=" + std::to_string(kernels.dim(1)) +
                     " does not match input channels=" + std::to_string(input.dim(0)));
  if (input.dim(1) < kernels.dim(2) || input.dim(2) < kernels.dim(3))
    throw ShapeError("conv2d: input " + input.shape_str() +
                     " is smaller than kernel window " + kernels.shape_str());
  if (bias && (bias->ndim() != 1 || bias->dim(0) != kernels.dim(0)))
    throw ShapeError("conv2d: bias " + bias->shape_str() + " must be [Cout=" +
                     std::to_string(kernels.dim(0)) + "]");
}

void check_pool_input(const Tensor& input) {
  if (input.ndim() != 3)
    throw ShapeError("maxpool2x2: input must be C×H×W, got " + input.shape_str());
  if (input.dim(1) % 2 != 0 || input.dim(2) % 2 != 0)
    throw ShapeError("maxpool2x2: H and W must be even, got " + input.shape_str());
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  check_conv_args(input, kernels, &bias);
  const int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int cout = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  const int oh = h - kh + 1, ow = w - kw + 1;

  Tensor out({cout, oh, ow});
  const float* in = input.ptr();
  const float* ker = kernels.ptr();
  const float* b = bias.ptr();
  float* o = out.ptr();

#pragma omp parallel for schedule(static)
  for (int co = 0; co < cout; ++co) {
    float* oc = o + static_cast<int64_t>(co) * oh * ow;
    std::fill(oc, oc + static_cast<int64_t>(oh) * ow, b[co]);
    for (int ci = 0; ci < cin; ++ci) {
      const float* ic = in + static_cast<int64_t>(ci) * h * w;
      const float* kc = ker + (static_cast<int64_t>(co) * cin + ci) * kh * kw;
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx) {
          const float kv = kc[ky * kw + kx];
          for (int y = 0; y < oh; ++y) {
            const float* irow = ic + static_cast<int64_t>(y + ky) * w + kx;
            float* orow = oc + static_cast<int64_t>(y) * ow;
            for (int x = 0; x < ow; ++x) orow[x] += kv * irow[x];
          }
        }
      }
    }
  }
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels,
                            const Tensor& grad_out) {
  check_conv_args(input, kernels, nullptr);
  const int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int cout = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  const int oh = h - kh + 1, ow = w - kw + 1;
  if (grad_out.ndim() != 3 || grad_out.dim(0) != cout || grad_out.dim(1) != oh ||
      grad_out.dim(2) != ow)
    throw ShapeError("conv2d_backward: grad_out " + grad_out.shape_str() +
                     " must be [" + std::to_string(cout) + ", " + std::to_string(oh) +
                     ", " + std::to_string(ow) + "]");

  Conv2dGrads g{Tensor(input.shape), Tensor(kernels.shape), Tensor({cout})};
  const float* in = input.ptr();
  const float* ker = kernels.ptr();
  const float* go = grad_out.ptr();

#pragma omp parallel for schedule(static)
  for (int co = 0; co < cout; ++co) {
    const float* gc = go + static_cast<int64_t>(co) * oh * ow;
    float s = 0.0f;
    for (int64_t i = 0; i < static_cast<int64_t>(oh) * ow; ++i) s += gc[i];
    g.bias[co] = s;
  }

  // d/dK: for each kernel element, a dot product of grad_out with the
  // correspondingly shifted input window. Rows accumulate into a vector
  // buffer so the horizontal reduction happens once per kernel element.
  float* gk = g.kernels.ptr();
#pragma omp parallel for schedule(static)
  for (int co = 0; co < cout; ++co) {
    std::vector<float> acc(static_cast<size_t>(ow));
    const float* gc = go + static_cast<int64_t>(co) * oh * ow;
    for (int ci = 0; ci < cin; ++ci) {
      const float* ic = in + static_cast<int64_t>(ci) * h * w;
      float* gkc = gk + (static_cast<int64_t>(co) * cin + ci) * kh * kw;
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx) {
          float* a = acc.data();
          std::fill(a, a + ow, 0.0f);
          for (int y = 0; y < oh; ++y) {
            const float* grow = gc + static_cast<int64_t>(y) * ow;
            const float* irow = ic + static_cast<int64_t>(y + ky) * w + kx;
#pragma omp simd
            for (int x = 0; x < ow; ++x) a[x] += grow[x] * irow[x];
          }
          float s = 0.0f;
          for (int x = 0; x < ow; ++x) s += a[x];
          gkc[ky * kw + kx] = s;
        }
      }
    }
  }

  // d/dinput: transposed convolution accumulated channel by channel.
  float* gi = g.input.ptr();
#pragma omp parallel for schedule(static)
  for (int ci = 0; ci < cin; ++ci) {
    float* gic = gi + static_cast<int64_t>(ci) * h * w;
    for (int co = 0; co < cout; ++co) {
      const float* gc = go + static_cast<int64_t>(co) * oh * ow;
      const float* kc = ker + (static_cast<int64_t>(co) * cin + ci) * kh * kw;
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx) {
          const float kv = kc[ky * kw + kx];
          for (int y = 0; y < oh; ++y) {
            const float* grow = gc + static_cast<int64_t>(y) * ow;
            float* girow = gic + static_cast<int64_t>(y + ky) * w + kx;
            for (int x = 0; x < ow; ++x) girow[x] += kv * grow[x];
          }
        }
      }
    }
  }
  return g;
}

PoolResult maxpool2x2_forward(const Tensor& input) {
  check_pool_input(input);
  const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int oh = h / 2, ow = w / 2;

  PoolResult r{Tensor({c, oh, ow}), std::vector<int32_t>(static_cast<size_t>(c) * oh * ow)};
  const float* in = input.ptr();
  float* out = r.output.ptr();
  int32_t* am = r.argmax.data();

#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < c; ++ch) {
    const int64_t ib = static_cast<int64_t>(ch) * h * w;
    const int64_t ob = static_cast<int64_t>(ch) * oh * ow;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const int64_t tl = ib + static_cast<int64_t>(2 * y) * w + 2 * x;
        // row-major window order: strictly-greater keeps the first maximum
        int64_t best = tl;
        if (in[tl + 1] > in[best]) best = tl + 1;
        if (in[tl + w] > in[best]) best = tl + w;
        if (in[tl + w + 1] > in[best]) best = tl + w + 1;
        out[ob + static_cast<int64_t>(y) * ow + x] = in[best];
        am[ob + static_cast<int64_t>(y) * ow + x] = static_cast<int32_t>(best);
      }
    }
  }
  return r;
}

Tensor maxpool2x2_backward(const std::vector<int32_t>& argmax, const Tensor& grad_out) {
  if (grad_out.ndim() != 3)
    throw ShapeError("maxpool2x2_backward: grad_out must be C×H×W, got " +
                     grad_out.shape_str());
  if (static_cast<int64_t>(argmax.size()) != grad_out.numel())
    throw Error("maxpool2x2_backward: argmax size " + std::to_string(argmax.size()) +
                " does not match grad_out " + grad_out.shape_str());

  const int c = grad_out.dim(0), oh = grad_out.dim(1), ow = grad_out.dim(2);
  const int h = 2 * oh, w = 2 * ow;
  Tensor gi({c, h, w});
  const float* go = grad_out.ptr();
  float* g = gi.ptr();

  for (int ch = 0; ch < c; ++ch) {
    const int64_t ib = static_cast<int64_t>(ch) * h * w;
    const int64_t ob = static_cast<int64_t>(ch) * oh * ow;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const int64_t o = ob + static_cast<int64_t>(y) * ow + x;
        const int64_t tl = ib + static_cast<int64_t>(2 * y) * w + 2 * x;
        const int64_t idx = argmax[static_cast<size_t>(o)];
        if (idx != tl && idx != tl + 1 && idx != tl + w && idx != tl + w + 1)
          throw Error("maxpool2x2_backward: argmax index " + std::to_string(idx) +
                      " lies outside its 2×2 window (output element " +
                      std::to_string(o) + ")");
        g[idx] += go[o];
      }
    }
  }
  return gi;
}

Tensor relu(const Tensor& input) {
  Tensor out(input.shape);
  const float* in = input.ptr();
  float* o = out.ptr();
  const int64_t n = input.numel();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) o[i] = in[i] > 0.0f ? in[i] : 0.0f;
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
  require_same_shape(input, grad_out, "relu_backward");
  Tensor gi(input.shape);
  const float* in = input.ptr();
  const float* go = grad_out.ptr();
  float* g = gi.ptr();
  const int64_t n = input.numel();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) g[i] = in[i] > 0.0f ? go[i] : 0.0f;
  return gi;
}

DropoutResult dropout(const Tensor& input, float rate, Rng* rng, bool training) {
  if (!(rate >= 0.0f && rate < 1.0f))
    throw ValueError("dropout: rate must be in [0,1), got " + std::to_string(rate));

  DropoutResult r;
  r.mask.assign(static_cast<size_t>(input.numel()), 1);
  if (!training) {
    // identity pass-through; rate 0 keeps dropout_backward an identity too
    r.rate = 0.0f;
    r.output = input;
    return r;
  }
  r.rate = rate;
  if (!rng) throw ValueError("dropout: training mode requires an rng");

  r.output = Tensor(input.shape);
  const float inv_keep = 1.0f / (1.0f - rate);
  const float* in = input.ptr();
  float* o = r.output.ptr();
  const int64_t n = input.numel();
  // sequential: one draw per element, in element order
  for (int64_t i = 0; i < n; ++i) {
    if (rng->next_float() < rate) {
      r.mask[static_cast<size_t>(i)] = 0;
      o[i] = 0.0f;
    } else {
      o[i] = in[i] * inv_keep;
    }
  }
  return r;
}

Tensor dropout_backward(const DropoutResult& forward, const Tensor& grad_out) {
  if (static_cast<int64_t>(forward.mask.size()) != grad_out.numel())
    throw ShapeError("dropout_backward: mask size " + std::to_string(forward.mask.size()) +
                     " does not match grad_out " + grad_out.shape_str());
  Tensor gi(grad_out.shape);
  const float inv_keep = 1.0f / (1.0f - forward.rate);
  const float* go = grad_out.ptr();
  float* g = gi.ptr();
  const int64_t n = grad_out.numel();
  for (int64_t i = 0; i < n; ++i)
    g[i] = forward.mask[static_cast<size_t>(i)] ? go[i] * inv_keep : 0.0f;
  return gi;
}

namespace {

void check_dense_args(const Tensor& input, const Tensor& weights, const Tensor* bias) {
  if (input.ndim() != 1)
    throw ShapeError("dense: input must be a vector, got " + input.shape_str());
  if (weights.ndim() != 2)
    throw ShapeError("dense: weights must be M×N, got " + weights.shape_str());
  if (weights.dim(1) != input.dim(0))
    throw ShapeError("dense: weights " + weights.shape_str() + " do not match input " +
                     input.shape_str());
  if (bias && (bias->ndim() != 1 || bias->dim(0) != weights.dim(0)))
    throw ShapeError("dense: bias " + bias->shape_str() + " must be [M=" +
                     std::to_string(weights.dim(0)) + "]");
}

}  // namespace

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  check_dense_args(input, weights, &bias);
  const int m = weights.dim(0), n = weights.dim(1);
  Tensor out({m});
  const float* in = input.ptr();
  const float* wp = weights.ptr();
  float* o = out.ptr();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const float* row = wp + static_cast<int64_t>(i) * n;
    float s = 0.0f;
#pragma omp simd reduction(+ : s)
    for (int j = 0; j < n; ++j) s += row[j] * in[j];
    o[i] = s + bias[i];
  }
  return out;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weights,
                          const Tensor& grad_out) {
  check_dense_args(input, weights, nullptr);
  const int m = weights.dim(0), n = weights.dim(1);
  if (grad_out.ndim() != 1 || grad_out.dim(0) != m)
    throw ShapeError("dense_backward: grad_out " + grad_out.shape_str() +
                     " must be [M=" + std::to_string(m) + "]");

  DenseGrads g{Tensor(input.shape), Tensor(weights.shape), grad_out};
  const float* in = input.ptr();
  const float* wp = weights.ptr();
  const float* go = grad_out.ptr();

  float* gi = g.input.ptr();
  for (int i = 0; i < m; ++i) {
    const float* row = wp + static_cast<int64_t>(i) * n;
    const float gv = go[i];
    for (int j = 0; j < n; ++j) gi[j] += gv * row[j];
  }

  float* gw = g.weights.ptr();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    float* grow = gw + static_cast<int64_t>(i) * n;
    const float gv = go[i];
    for (int j = 0; j < n; ++j) grow[j] = gv * in[j];
  }
  return g;
}

SoftmaxLoss softmax_cross_entropy(const Tensor& logits, int label) {
  if (logits.ndim() != 1)
    throw ShapeError("softmax_cross_entropy: logits must be a vector, got " +
                     logits.shape_str());
  const int k = logits.dim(0);
  if (label < 0 || label >= k)
    throw ValueError("softmax_cross_entropy: label " + std::to_string(label) +
                     " out of range [0," + std::to_string(k) + ")");

  double maxv = logits[0];
  for (int i = 1; i < k; ++i) maxv = std::max(maxv, static_cast<double>(logits[i]));
  double sumexp = 0.0;
  for (int i = 0; i < k; ++i) sumexp += std::exp(static_cast<double>(logits[i]) - maxv);

  SoftmaxLoss r;
  r.probs = Tensor({k});
  r.grad_logits = Tensor({k});
  for (int i = 0; i < k; ++i) {
    const double p = std::exp(static_cast<double>(logits[i]) - maxv) / sumexp;
    r.probs[i] = static_cast<float>(p);
    r.grad_logits[i] = static_cast<float>(p);
  }
  r.grad_logits[label] -= 1.0f;
  r.loss = static_cast<float>(-(static_cast<double>(logits[label]) - maxv - std::log(sumexp)));
  return r;
}

}  // namespace drivenet
