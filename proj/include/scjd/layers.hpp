#pragma once

#include <random>
#include <string>

#include "scjd/checkpoint.hpp"
#include "scjd/ops.hpp"

namespace scjd {

// Truncated normal (cut at two standard deviations), the usual transformer init.
Tensor trunc_normal(Shape shape, double std, std::mt19937_64& rng);

struct Linear {
  Tensor w;  // [d_in, d_out]
  Tensor b;  // [d_out]

  static Linear init(std::size_t d_in, std::size_t d_out, std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const { return ops::linear(x, w, b); }
  void collect(ParameterList& out, const std::string& prefix) const;
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;

  static LayerNorm init(std::size_t d);
  Tensor operator()(const Tensor& x) const { return ops::layer_norm(x, gamma, beta); }
  void collect(ParameterList& out, const std::string& prefix) const;
};

// Self-attention over the second-to-last axis of x: [N, tokens, width].
struct MultiHeadSelfAttention {
  Linear q, k, v, out;
  std::size_t heads = 1;

  static MultiHeadSelfAttention init(std::size_t width, std::size_t heads, std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const;
  void collect(ParameterList& out, const std::string& prefix) const;
};

struct FeedForward {
  Linear fc1, fc2;

  static FeedForward init(std::size_t width, std::size_t hidden, std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const { return fc2(ops::gelu(fc1(x))); }
  void collect(ParameterList& out, const std::string& prefix) const;
};

// Pre-norm transformer encoder layer:
//   x = x + MHSA(LN(x)); x = x + FFN(LN(x))
struct EncoderLayer {
  LayerNorm norm1;
  MultiHeadSelfAttention attn;
  LayerNorm norm2;
  FeedForward ffn;

  static EncoderLayer init(std::size_t width, std::size_t heads, std::size_t hidden, std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const;
  void collect(ParameterList& out, const std::string& prefix) const;
};

}  // namespace scjd
