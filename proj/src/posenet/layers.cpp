#include "scjd/layers.hpp"

#include <cmath>

namespace scjd {

Tensor trunc_normal(Shape shape, double std, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) {
    double z;
    do {
      z = normal(rng);
    } while (std::fabs(z) > 2.0);
    x = z * std;
  }
  return Tensor::from(std::move(shape), std::move(v), true);
}

Linear Linear::init(std::size_t d_in, std::size_t d_out, std::mt19937_64& rng) {
  return {trunc_normal({d_in, d_out}, 0.02, rng), Tensor::zeros({d_out}, true)};
}

void Linear::collect(ParameterList& out, const std::string& prefix) const {
  out.push_back({prefix + ".w", w});
  out.push_back({prefix + ".b", b});
}

LayerNorm LayerNorm::init(std::size_t d) { return {Tensor::full({d}, 1.0, true), Tensor::zeros({d}, true)}; }

void LayerNorm::collect(ParameterList& out, const std::string& prefix) const {
  out.push_back({prefix + ".gamma", gamma});
  out.push_back({prefix + ".beta", beta});
}

MultiHeadSelfAttention MultiHeadSelfAttention::init(std::size_t width, std::size_t heads, std::mt19937_64& rng) {
  if (heads == 0 || width % heads != 0) {
    throw ConfigError("attention width " + std::to_string(width) + " is not divisible by " + std::to_string(heads) +
                      " heads");
  }
  MultiHeadSelfAttention a;
  a.q = Linear::init(width, width, rng);
  a.k = Linear::init(width, width, rng);
  a.v = Linear::init(width, width, rng);
  a.out = Linear::init(width, width, rng);
  a.heads = heads;
  return a;
}

Tensor MultiHeadSelfAttention::operator()(const Tensor& x) const {
  if (x.rank() != 3) throw DimensionError("attention expects [N, tokens, width], got " + shape_str(x.shape()));
  const std::size_t n = x.dim(0), t = x.dim(1), d = x.dim(2);
  if (d != q.w.dim(0)) throw DimensionError("attention width mismatch: input " + shape_str(x.shape()));
  const std::size_t dh = d / heads;
  auto split = [&](const Tensor& y, std::vector<std::size_t> axes) {
    return ops::permute(ops::reshape(y, {n, t, heads, dh}), axes);
  };
  const Tensor qh = split(q(x), {0, 2, 1, 3});   // [n, h, t, dh]
  const Tensor kh = split(k(x), {0, 2, 3, 1});   // [n, h, dh, t]
  const Tensor vh = split(v(x), {0, 2, 1, 3});   // [n, h, t, dh]
  const Tensor scores = ops::scale(ops::matmul(qh, kh), 1.0 / std::sqrt(static_cast<double>(dh)));
  const Tensor ctx = ops::matmul(ops::softmax(scores), vh);  // [n, h, t, dh]
  return out(ops::reshape(ops::permute(ctx, {0, 2, 1, 3}), {n, t, d}));
}

void MultiHeadSelfAttention::collect(ParameterList& o, const std::string& prefix) const {
  q.collect(o, prefix + ".wq");
  k.collect(o, prefix + ".wk");
  v.collect(o, prefix + ".wv");
  out.collect(o, prefix + ".wo");
}

FeedForward FeedForward::init(std::size_t width, std::size_t hidden, std::mt19937_64& rng) {
  return {Linear::init(width, hidden, rng), Linear::init(hidden, width, rng)};
}

void FeedForward::collect(ParameterList& out, const std::string& prefix) const {
  fc1.collect(out, prefix + ".fc1");
  fc2.collect(out, prefix + ".fc2");
}

EncoderLayer EncoderLayer::init(std::size_t width, std::size_t heads, std::size_t hidden, std::mt19937_64& rng) {
  EncoderLayer l;
  l.norm1 = LayerNorm::init(width);
  l.attn = MultiHeadSelfAttention::init(width, heads, rng);
  l.norm2 = LayerNorm::init(width);
  l.ffn = FeedForward::init(width, hidden, rng);
  return l;
}

Tensor EncoderLayer::operator()(const Tensor& x) const {
  const Tensor h = ops::add(x, attn(norm1(x)));
  return ops::add(h, ffn(norm2(h)));
}

void EncoderLayer::collect(ParameterList& out, const std::string& prefix) const {
  norm1.collect(out, prefix + ".norm1");
  attn.collect(out, prefix + ".mhsa");
  norm2.collect(out, prefix + ".norm2");
  ffn.collect(out, prefix + ".ffn");
}

}  // namespace scjd
