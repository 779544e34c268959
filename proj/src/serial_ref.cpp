// Plain single-threaded kernels with textbook loop nests. These exist so the
// OpenMP versions have an independent twin to be checked and benchmarked
// against; keep them obvious rather than fast.
#include <string>
#include <vector>

#include "drivenet/error.hpp"
#include "drivenet/kernels.hpp"

namespace drivenet::serial {

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  if (input.ndim() != 3 || kernels.ndim() != 4 || kernels.dim(1) != input.dim(0) ||
      bias.ndim() != 1 || bias.dim(0) != kernels.dim(0))
    throw ShapeError("serial::conv2d_forward: bad shapes input=" + input.shape_str() +
                     " kernels=" + kernels.shape_str() + " bias=" + bias.shape_str());
  const int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int cout = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  if (h < kh || w < kw)
    throw ShapeError("serial::conv2d_forward: input smaller than kernel window");
  const int oh = h - kh + 1, ow = w - kw + 1;

  Tensor out({cout, oh, ow});
  for (int co = 0; co < cout; ++co)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        float s = bias[co];
        for (int ci = 0; ci < cin; ++ci)
          for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx)
              s += kernels[((static_cast<int64_t>(co) * cin + ci) * kh + ky) * kw + kx] *
                   input[(static_cast<int64_t>(ci) * h + y + ky) * w + x + kx];
        out[(static_cast<int64_t>(co) * oh + y) * ow + x] = s;
      }
  return out;
}

PoolResult maxpool2x2_forward(const Tensor& input) {
  if (input.ndim() != 3 || input.dim(1) % 2 != 0 || input.dim(2) % 2 != 0)
    throw ShapeError("serial::maxpool2x2_forward: input must be C×even×even, got " +
                     input.shape_str());
  const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int oh = h / 2, ow = w / 2;
  PoolResult r{Tensor({c, oh, ow}),
               std::vector<int32_t>(static_cast<size_t>(c) * oh * ow)};
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        int64_t best = -1;
        float bv = 0.0f;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const int64_t idx =
                (static_cast<int64_t>(ch) * h + 2 * y + dy) * w + 2 * x + dx;
            if (best < 0 || input[idx] > bv) {
              best = idx;
              bv = input[idx];
            }
          }
        const int64_t o = (static_cast<int64_t>(ch) * oh + y) * ow + x;
        r.output[o] = bv;
        r.argmax[static_cast<size_t>(o)] = static_cast<int32_t>(best);
      }
  return r;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels,
                            const Tensor& grad_out) {
  if (input.ndim() != 3 || kernels.ndim() != 4 || kernels.dim(1) != input.dim(0))
    throw ShapeError("serial::conv2d_backward: bad shapes input=" + input.shape_str() +
                     " kernels=" + kernels.shape_str());
  const int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int cout = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  const int oh = h - kh + 1, ow = w - kw + 1;
  if (grad_out.ndim() != 3 || grad_out.dim(0) != cout || grad_out.dim(1) != oh ||
      grad_out.dim(2) != ow)
    throw ShapeError("serial::conv2d_backward: grad_out " + grad_out.shape_str() +
                     " does not match the forward output shape");

  Conv2dGrads g{Tensor(input.shape), Tensor(kernels.shape), Tensor({cout})};
  for (int co = 0; co < cout; ++co)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        const float go = grad_out[(static_cast<int64_t>(co) * oh + y) * ow + x];
        g.bias[co] += go;
        for (int ci = 0; ci < cin; ++ci)
          for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx) {
              const int64_t ki = ((static_cast<int64_t>(co) * cin + ci) * kh + ky) * kw + kx;
              const int64_t ii = (static_cast<int64_t>(ci) * h + y + ky) * w + x + kx;
              g.kernels[ki] += go * input[ii];
              g.input[ii] += go * kernels[ki];
            }
      }
  return g;
}

Tensor maxpool2x2_backward(const std::vector<int32_t>& argmax, const Tensor& grad_out) {
  if (grad_out.ndim() != 3)
    throw ShapeError("serial::maxpool2x2_backward: grad_out must be 3-d, got " +
                     grad_out.shape_str());
  const int c = grad_out.dim(0), oh = grad_out.dim(1), ow = grad_out.dim(2);
  const int h = 2 * oh, w = 2 * ow;
  if (argmax.size() != static_cast<size_t>(grad_out.numel()))
    throw ValueError("serial::maxpool2x2_backward: argmax length does not match grad_out");

  Tensor gin({c, h, w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        const int64_t o = (static_cast<int64_t>(ch) * oh + y) * ow + x;
        const int64_t idx = argmax[static_cast<size_t>(o)];
        const int64_t base = (static_cast<int64_t>(ch) * h + 2 * y) * w + 2 * x;
        if (idx != base && idx != base + 1 && idx != base + w && idx != base + w + 1)
          throw Error("serial::maxpool2x2_backward: argmax entry outside its window");
        gin[idx] += grad_out[o];
      }
  return gin;
}

Tensor relu(const Tensor& input) {
  Tensor out(input.shape);
  for (int64_t i = 0; i < input.numel(); ++i)
    out[i] = input[i] > 0.0f ? input[i] : 0.0f;
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
  require_same_shape(input, grad_out, "serial::relu_backward");
  Tensor gin(input.shape);
  for (int64_t i = 0; i < input.numel(); ++i)
    gin[i] = input[i] > 0.0f ? grad_out[i] : 0.0f;
  return gin;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (input.ndim() != 1 || weights.ndim() != 2 || weights.dim(1) != input.dim(0) ||
      bias.ndim() != 1 || bias.dim(0) != weights.dim(0))
    throw ShapeError("serial::dense_forward: bad shapes input=" + input.shape_str() +
                     " weights=" + weights.shape_str() + " bias=" + bias.shape_str());
  const int m = weights.dim(0), n = weights.dim(1);
  Tensor out({m});
  for (int i = 0; i < m; ++i) {
    float s = bias[i];
    for (int j = 0; j < n; ++j) s += weights[static_cast<int64_t>(i) * n + j] * input[j];
    out[i] = s;
  }
  return out;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out) {
  if (input.ndim() != 1 || weights.ndim() != 2 || weights.dim(1) != input.dim(0) ||
      grad_out.ndim() != 1 || grad_out.dim(0) != weights.dim(0))
    throw ShapeError("serial::dense_backward: bad shapes input=" + input.shape_str() +
                     " weights=" + weights.shape_str() + " grad_out=" + grad_out.shape_str());
  const int m = weights.dim(0), n = weights.dim(1);
  DenseGrads g{Tensor(input.shape), Tensor(weights.shape), Tensor({m})};
  for (int i = 0; i < m; ++i) {
    const float go = grad_out[i];
    g.bias[i] = go;
    for (int j = 0; j < n; ++j) {
      g.weights[static_cast<int64_t>(i) * n + j] = go * input[j];
      g.input[j] += go * weights[static_cast<int64_t>(i) * n + j];
    }
  }
  return g;
}

}  // namespace drivenet::serial
