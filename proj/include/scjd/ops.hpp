#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "scjd/tensor.hpp"

// Differentiable tensor operations. Every op records a backward closure when
// an input requires gradients and recording is enabled.
namespace scjd::ops {

// Batched matrix product over the last two axes; leading axes broadcast.
Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise binary ops with numpy-style broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double s);
Tensor scale(const Tensor& a, double s);

// x @ w (+ b). w is [d_in, d_out]; b, when defined, is [d_out].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);
Tensor softmax(const Tensor& x);  // over the last axis
Tensor gelu(const Tensor& x);     // tanh approximation
Tensor abs(const Tensor& x);
// Euclidean norm over the last axis; the result drops that axis.
// The subgradient at a zero vector is taken as zero.
Tensor norm_last(const Tensor& x);

// Inverted dropout. rate == 0 is the identity and consumes no randomness.
Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng);

Tensor sum(const Tensor& x);   // scalar
Tensor mean(const Tensor& x);  // scalar

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes);
Tensor transpose(const Tensor& x);  // swaps the last two axes

// x: [..., c_in, t], w: [c_out, c_in / groups, k]. No padding.
// t_out = (t - k) / stride + 1.
Tensor conv1d(const Tensor& x, const Tensor& w, std::size_t stride, std::size_t groups = 1);

// Transposed convolution. x: [..., c_in, t], w: [c_in, c_out, k].
// t_out = (t - 1) * stride + k. Exact adjoint of conv1d with the same weights.
Tensor deconv1d(const Tensor& x, const Tensor& w, std::size_t stride);

}  // namespace scjd::ops
