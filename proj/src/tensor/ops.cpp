#include "scjd/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace scjd::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

using detail::make_result;

// Output-index → input-index maps for a broadcast binary op.
struct Broadcast {
  Shape out_shape;
  enum class Kind { same, b_suffix, a_suffix, general } kind = Kind::same;
  std::size_t na = 0, nb = 0;
  std::vector<std::size_t> ia, ib;  // only filled for Kind::general

  std::size_t a_index(std::size_t i) const {
    switch (kind) {
      case Kind::same:
      case Kind::b_suffix: return i;
      case Kind::a_suffix: return i % na;
      default: return ia[i];
    }
  }
  std::size_t b_index(std::size_t i) const {
    switch (kind) {
      case Kind::same:
      case Kind::a_suffix: return i;
      case Kind::b_suffix: return i % nb;
      default: return ib[i];
    }
  }
};

Shape strip_leading_ones(const Shape& s) {
  std::size_t i = 0;
  while (i + 1 < s.size() && s[i] == 1) ++i;
  return Shape(s.begin() + static_cast<std::ptrdiff_t>(i), s.end());
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.begin(), small.end(), big.end() - static_cast<std::ptrdiff_t>(small.size()));
}

Broadcast broadcast(const Shape& a, const Shape& b, const char* op) {
  Broadcast bc;
  bc.na = shape_numel(a);
  bc.nb = shape_numel(b);
  if (a == b) {
    bc.out_shape = a;
    return bc;
  }
  const Shape bs = strip_leading_ones(b);
  const Shape as = strip_leading_ones(a);
  if (is_suffix(bs, a)) {
    bc.kind = Broadcast::Kind::b_suffix;
    bc.out_shape = a;
    return bc;
  }
  if (is_suffix(as, b)) {
    bc.kind = Broadcast::Kind::a_suffix;
    bc.out_shape = b;
    return bc;
  }
  const std::size_t r = std::max(a.size(), b.size());
  Shape pa(r, 1), pb(r, 1), out(r, 1);
  std::copy(a.begin(), a.end(), pa.begin() + static_cast<std::ptrdiff_t>(r - a.size()));
  std::copy(b.begin(), b.end(), pb.begin() + static_cast<std::ptrdiff_t>(r - b.size()));
  for (std::size_t i = 0; i < r; ++i) {
    if (pa[i] != pb[i] && pa[i] != 1 && pb[i] != 1) {
      throw DimensionError(std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) +
                           " are not broadcastable");
    }
    out[i] = std::max(pa[i], pb[i]);
  }
  std::vector<std::size_t> sa(r), sb(r);
  std::size_t ka = 1, kb = 1;
  for (std::size_t i = r; i-- > 0;) {
    sa[i] = pa[i] == 1 ? 0 : ka;
    sb[i] = pb[i] == 1 ? 0 : kb;
    ka *= pa[i];
    kb *= pb[i];
  }
  const std::size_t n = shape_numel(out);
  bc.kind = Broadcast::Kind::general;
  bc.ia.resize(n);
  bc.ib.resize(n);
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t oa = 0, ob = 0;
    for (std::size_t d = 0; d < r; ++d) {
      oa += idx[d] * sa[d];
      ob += idx[d] * sb[d];
    }
    bc.ia[flat] = oa;
    bc.ib[flat] = ob;
    for (std::size_t d = r; d-- > 0;) {
      if (++idx[d] < out[d]) break;
      idx[d] = 0;
    }
  }
  bc.out_shape = std::move(out);
  return bc;
}

enum class BinOp { add, sub, mul };

template <BinOp op>
inline double apply(double x, double y) {
  if constexpr (op == BinOp::add) return x + y;
  else if constexpr (op == BinOp::sub) return x - y;
  else return x * y;
}

template <BinOp op>
void forward_kernel(const Broadcast& bc, std::span<const double> av, std::span<const double> bv,
                    Buffer& out) {
  const std::size_t n = out.size();
  switch (bc.kind) {
    case Broadcast::Kind::same:
      for (std::size_t i = 0; i < n; ++i) out[i] = apply<op>(av[i], bv[i]);
      break;
    case Broadcast::Kind::b_suffix:
      for (std::size_t base = 0; base < n; base += bc.nb)
        for (std::size_t j = 0; j < bc.nb; ++j) out[base + j] = apply<op>(av[base + j], bv[j]);
      break;
    case Broadcast::Kind::a_suffix:
      for (std::size_t base = 0; base < n; base += bc.na)
        for (std::size_t j = 0; j < bc.na; ++j) out[base + j] = apply<op>(av[j], bv[base + j]);
      break;
    default:
      for (std::size_t i = 0; i < n; ++i) out[i] = apply<op>(av[bc.ia[i]], bv[bc.ib[i]]);
  }
}

Tensor binary(const Tensor& a, const Tensor& b, BinOp op, const char* name) {
  auto bc = std::make_shared<Broadcast>(broadcast(a.shape(), b.shape(), name));
  Buffer out(shape_numel(bc->out_shape));
  if (op == BinOp::add) forward_kernel<BinOp::add>(*bc, a.values(), b.values(), out);
  else if (op == BinOp::sub) forward_kernel<BinOp::sub>(*bc, a.values(), b.values(), out);
  else forward_kernel<BinOp::mul>(*bc, a.values(), b.values(), out);
  TensorData* pa = a.data().get();
  TensorData* pb = b.data().get();
  return make_result(bc->out_shape, std::move(out), {a, b}, [pa, pb, bc, op](TensorData& o) {
    const std::size_t n = o.values.size();
    if (pa->requires_grad) {
      auto& ga = pa->grad_buffer();
      if (op != BinOp::mul && bc->kind != Broadcast::Kind::general && bc->kind != Broadcast::Kind::a_suffix) {
        for (std::size_t i = 0; i < n; ++i) ga[i] += o.grad[i];
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          const double g = o.grad[i];
          ga[bc->a_index(i)] += op == BinOp::mul ? g * pb->values[bc->b_index(i)] : g;
        }
      }
    }
    if (pb->requires_grad) {
      auto& gb = pb->grad_buffer();
      if (op == BinOp::add && bc->kind == Broadcast::Kind::b_suffix) {
        for (std::size_t base = 0; base < n; base += bc->nb)
          for (std::size_t j = 0; j < bc->nb; ++j) gb[j] += o.grad[base + j];
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          const double g = o.grad[i];
          const double d = op == BinOp::add ? g : op == BinOp::sub ? -g : g * pa->values[bc->a_index(i)];
          gb[bc->b_index(i)] += d;
        }
      }
    }
  });
}

// Maps a batch position to a flat offset, honoring size-1 broadcast axes.
std::vector<std::size_t> batch_offsets(const Shape& batch_shape, const Shape& own_batch, std::size_t mat_size) {
  const std::size_t r = batch_shape.size();
  Shape padded(r, 1);
  std::copy(own_batch.begin(), own_batch.end(), padded.begin() + static_cast<std::ptrdiff_t>(r - own_batch.size()));
  std::vector<std::size_t> stride(r);
  std::size_t k = mat_size;
  for (std::size_t i = r; i-- > 0;) {
    stride[i] = padded[i] == 1 ? 0 : k;
    k *= padded[i];
  }
  const std::size_t n = shape_numel(batch_shape);
  std::vector<std::size_t> offs(n);
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t o = 0;
    for (std::size_t d = 0; d < r; ++d) o += idx[d] * stride[d];
    offs[flat] = o;
    for (std::size_t d = r; d-- > 0;) {
      if (++idx[d] < batch_shape[d]) break;
      idx[d] = 0;
    }
  }
  return offs;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() < 2 || b.rank() < 2) {
    throw DimensionError("matmul: operands must have rank >= 2, got " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  const std::size_t m = a.dim(-2), k = a.dim(-1), k2 = b.dim(-2), n = b.dim(-1);
  if (k != k2) {
    throw DimensionError("matmul: inner dimensions differ for " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  TensorData* pa = a.data().get();
  TensorData* pb = b.data().get();

  if (b.rank() == 2) {
    // One GEMM over all leading rows of a.
    const std::size_t rows = a.numel() / k;
    Shape out_shape = a.shape();
    out_shape.back() = n;
    Buffer out(rows * n);
    MutMap(out.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n)).noalias() =
        ConstMap(pa->values.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(k)) *
        ConstMap(pb->values.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
    record_multiplies(static_cast<std::uint64_t>(rows) * k * n);
    return make_result(std::move(out_shape), std::move(out), {a, b}, [pa, pb, rows, k, n](TensorData& o) {
      const auto R = static_cast<Eigen::Index>(rows), K = static_cast<Eigen::Index>(k),
                 N = static_cast<Eigen::Index>(n);
      ConstMap g(o.grad.data(), R, N);
      if (pa->requires_grad) {
        MutMap(pa->grad_buffer().data(), R, K).noalias() += g * ConstMap(pb->values.data(), K, N).transpose();
      }
      if (pb->requires_grad) {
        MutMap(pb->grad_buffer().data(), K, N).noalias() += ConstMap(pa->values.data(), R, K).transpose() * g;
      }
    });
  }

  const Shape a_batch(a.shape().begin(), a.shape().end() - 2);
  const Shape b_batch(b.shape().begin(), b.shape().end() - 2);
  const std::size_t r = std::max(a_batch.size(), b_batch.size());
  Shape batch(r, 1);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t da = i + a_batch.size() >= r ? a_batch[i + a_batch.size() - r] : 1;
    const std::size_t db = i + b_batch.size() >= r ? b_batch[i + b_batch.size() - r] : 1;
    if (da != db && da != 1 && db != 1) {
      throw DimensionError("matmul: batch dimensions of " + shape_str(a.shape()) + " and " +
                           shape_str(b.shape()) + " are not broadcastable");
    }
    batch[i] = std::max(da, db);
  }
  auto offs_a = std::make_shared<std::vector<std::size_t>>(batch_offsets(batch, a_batch, m * k));
  auto offs_b = std::make_shared<std::vector<std::size_t>>(batch_offsets(batch, b_batch, k * n));
  const std::size_t nbatch = shape_numel(batch);
  Shape out_shape = batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  Buffer out(nbatch * m * n);
  const auto M = static_cast<Eigen::Index>(m), K = static_cast<Eigen::Index>(k), N = static_cast<Eigen::Index>(n);
  for (std::size_t i = 0; i < nbatch; ++i) {
    MutMap(out.data() + i * m * n, M, N).noalias() =
        ConstMap(pa->values.data() + (*offs_a)[i], M, K) * ConstMap(pb->values.data() + (*offs_b)[i], K, N);
  }
  record_multiplies(static_cast<std::uint64_t>(nbatch) * m * k * n);
  return make_result(std::move(out_shape), std::move(out), {a, b},
                     [pa, pb, offs_a, offs_b, nbatch, M, K, N](TensorData& o) {
                       for (std::size_t i = 0; i < nbatch; ++i) {
                         ConstMap g(o.grad.data() + i * static_cast<std::size_t>(M * N), M, N);
                         if (pa->requires_grad) {
                           MutMap(pa->grad_buffer().data() + (*offs_a)[i], M, K).noalias() +=
                               g * ConstMap(pb->values.data() + (*offs_b)[i], K, N).transpose();
                         }
                         if (pb->requires_grad) {
                           MutMap(pb->grad_buffer().data() + (*offs_b)[i], K, N).noalias() +=
                               ConstMap(pa->values.data() + (*offs_a)[i], M, K).transpose() * g;
                         }
                       }
                     });
}

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::mul, "mul"); }

Tensor add(const Tensor& a, double s) {
  Buffer out(a.values().begin(), a.values().end());
  for (auto& v : out) v += s;
  TensorData* pa = a.data().get();
  return make_result(a.shape(), std::move(out), {a}, [pa](TensorData& o) {
    auto& g = pa->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
  });
}

Tensor scale(const Tensor& a, double s) {
  Buffer out(a.values().begin(), a.values().end());
  for (auto& v : out) v *= s;
  TensorData* pa = a.data().get();
  return make_result(a.shape(), std::move(out), {a}, [pa, s](TensorData& o) {
    auto& g = pa->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * o.grad[i];
  });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (w.rank() != 2 || x.rank() < 1 || x.dim(-1) != w.dim(0)) {
    throw DimensionError("linear: input " + shape_str(x.shape()) + " does not match weight " +
                         shape_str(w.shape()));
  }
  if (b.defined() && b.numel() != w.dim(1)) {
    throw DimensionError("linear: bias " + shape_str(b.shape()) + " does not match weight " + shape_str(w.shape()));
  }
  if (!b.defined()) return x.rank() == 1 ? reshape(matmul(reshape(x, {1, x.dim(0)}), w), {w.dim(1)}) : matmul(x, w);

  // Fused GEMM + bias: one node instead of two full-size passes.
  const std::size_t k = w.dim(0), n = w.dim(1), rows = x.numel() / k;
  Shape out_shape = x.shape();
  out_shape.back() = n;
  Buffer out(rows * n);
  const auto R = static_cast<Eigen::Index>(rows), K = static_cast<Eigen::Index>(k), N = static_cast<Eigen::Index>(n);
  TensorData* px = x.data().get();
  TensorData* pw = w.data().get();
  TensorData* pb = b.data().get();
  MutMap y(out.data(), R, N);
  y.noalias() = ConstMap(px->values.data(), R, K) * ConstMap(pw->values.data(), K, N);
  y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(pb->values.data(), N);
  record_multiplies(static_cast<std::uint64_t>(rows) * k * n);
  return make_result(std::move(out_shape), std::move(out), {x, w, b}, [px, pw, pb, R, K, N](TensorData& o) {
    ConstMap g(o.grad.data(), R, N);
    if (px->requires_grad) {
      MutMap(px->grad_buffer().data(), R, K).noalias() += g * ConstMap(pw->values.data(), K, N).transpose();
    }
    if (pw->requires_grad) {
      MutMap(pw->grad_buffer().data(), K, N).noalias() += ConstMap(px->values.data(), R, K).transpose() * g;
    }
    if (pb->requires_grad) {
      Eigen::Map<Eigen::RowVectorXd>(pb->grad_buffer().data(), N) += g.colwise().sum();
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const std::size_t d = x.dim(-1);
  if (gamma.numel() != d || beta.numel() != d) {
    throw DimensionError("layer_norm: affine parameters do not match feature size of " + shape_str(x.shape()));
  }
  const std::size_t rows = x.numel() / d;
  auto xhat = std::make_shared<Buffer>(x.numel());
  auto inv_std = std::make_shared<Buffer>(rows);
  Buffer out(x.numel());
  const auto xv = x.values();
  const auto gv = gamma.values();
  const auto bv = beta.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xv.data() + r * d;
    double mu = 0.0;
    for (std::size_t i = 0; i < d; ++i) mu += row[i];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) var += (row[i] - mu) * (row[i] - mu);
    var /= static_cast<double>(d);
    const double denom = var + eps;
    const double is = denom > 0.0 ? 1.0 / std::sqrt(denom) : 0.0;
    (*inv_std)[r] = is;
    for (std::size_t i = 0; i < d; ++i) {
      const double h = (row[i] - mu) * is;
      (*xhat)[r * d + i] = h;
      out[r * d + i] = h * gv[i] + bv[i];
    }
  }
  TensorData* px = x.data().get();
  TensorData* pg = gamma.data().get();
  TensorData* pb = beta.data().get();
  return make_result(x.shape(), std::move(out), {x, gamma, beta},
                     [px, pg, pb, xhat, inv_std, rows, d](TensorData& o) {
                       Buffer dh(d);
                       for (std::size_t r = 0; r < rows; ++r) {
                         const double* g = o.grad.data() + r * d;
                         const double* h = xhat->data() + r * d;
                         if (pg->requires_grad) {
                           auto& gg = pg->grad_buffer();
                           for (std::size_t i = 0; i < d; ++i) gg[i] += g[i] * h[i];
                         }
                         if (pb->requires_grad) {
                           auto& gb = pb->grad_buffer();
                           for (std::size_t i = 0; i < d; ++i) gb[i] += g[i];
                         }
                         if (px->requires_grad) {
                           double mean_dh = 0.0, mean_dh_h = 0.0;
                           for (std::size_t i = 0; i < d; ++i) {
                             dh[i] = g[i] * pg->values[i];
                             mean_dh += dh[i];
                             mean_dh_h += dh[i] * h[i];
                           }
                           mean_dh /= static_cast<double>(d);
                           mean_dh_h /= static_cast<double>(d);
                           auto& gx = px->grad_buffer();
                           const double is = (*inv_std)[r];
                           for (std::size_t i = 0; i < d; ++i) {
                             gx[r * d + i] += is * (dh[i] - mean_dh - h[i] * mean_dh_h);
                           }
                         }
                       }
                     });
}

Tensor softmax(const Tensor& x) {
  const std::size_t d = x.dim(-1);
  const std::size_t rows = x.numel() / d;
  Buffer out(x.numel());
  const auto xv = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv.data() + r * d;
    double* y = out.data() + r * d;
    const double mx = *std::max_element(in, in + d);
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      y[i] = std::exp(in[i] - mx);
      s += y[i];
    }
    for (std::size_t i = 0; i < d; ++i) y[i] /= s;
  }
  TensorData* px = x.data().get();
  return make_result(x.shape(), std::move(out), {x}, [px, rows, d](TensorData& o) {
    auto& gx = px->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = o.values.data() + r * d;
      const double* g = o.grad.data() + r * d;
      double dot = 0.0;
      for (std::size_t i = 0; i < d; ++i) dot += g[i] * y[i];
      for (std::size_t i = 0; i < d; ++i) gx[r * d + i] += y[i] * (g[i] - dot);
    }
  });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Tensor gelu(const Tensor& x) {
  Buffer out(x.numel());
  const auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = xv[i];
    out[i] = 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
  }
  TensorData* px = x.data().get();
  return make_result(x.shape(), std::move(out), {x}, [px](TensorData& o) {
    auto& gx = px->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double v = px->values[i];
      const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
      const double dt = (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
      gx[i] += o.grad[i] * (0.5 * (1.0 + t) + 0.5 * v * dt);
    }
  });
}

Tensor abs(const Tensor& x) {
  Buffer out(x.values().begin(), x.values().end());
  for (auto& v : out) v = std::fabs(v);
  TensorData* px = x.data().get();
  return make_result(x.shape(), std::move(out), {x}, [px](TensorData& o) {
    auto& gx = px->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double v = px->values[i];
      gx[i] += v > 0.0 ? o.grad[i] : v < 0.0 ? -o.grad[i] : 0.0;
    }
  });
}

Tensor norm_last(const Tensor& x) {
  const std::size_t d = x.dim(-1);
  const std::size_t rows = x.numel() / d;
  Shape out_shape(x.shape().begin(), x.shape().end() - 1);
  if (out_shape.empty()) out_shape = {1};
  Buffer out(rows);
  const auto xv = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) s += xv[r * d + i] * xv[r * d + i];
    out[r] = std::sqrt(s);
  }
  TensorData* px = x.data().get();
  return make_result(std::move(out_shape), std::move(out), {x}, [px, rows, d](TensorData& o) {
    auto& gx = px->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const double nrm = o.values[r];
      if (nrm == 0.0) continue;
      const double f = o.grad[r] / nrm;
      for (std::size_t i = 0; i < d; ++i) gx[r * d + i] += f * px->values[r * d + i];
    }
  });
}

Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw ContractError("dropout rate must be < 1");
  auto keep = std::make_shared<Buffer>(x.numel());
  std::bernoulli_distribution bern(1.0 - rate);
  const double s = 1.0 / (1.0 - rate);
  Buffer out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    (*keep)[i] = bern(rng) ? s : 0.0;
    out[i] = x.values()[i] * (*keep)[i];
  }
  TensorData* px = x.data().get();
  return make_result(x.shape(), std::move(out), {x}, [px, keep](TensorData& o) {
    auto& gx = px->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += o.grad[i] * (*keep)[i];
  });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  TensorData* px = x.data().get();
  return make_result({1}, {s}, {x}, [px](TensorData& o) {
    auto& gx = px->grad_buffer();
    for (auto& g : gx) g += o.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw ContractError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  Buffer out(x.values().begin(), x.values().end());
  TensorData* px = x.data().get();
  return make_result(std::move(shape), std::move(out), {x}, [px](TensorData& o) {
    auto& gx = px->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += o.grad[i];
  });
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes) {
  const std::size_t r = x.rank();
  if (axes.size() != r) throw DimensionError("permute: axis list does not match rank of " + shape_str(x.shape()));
  std::vector<bool> seen(r, false);
  for (auto a : axes) {
    if (a >= r || seen[a]) throw DimensionError("permute: invalid axis permutation");
    seen[a] = true;
  }
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) out_shape[i] = x.shape()[axes[i]];
  std::vector<std::size_t> in_stride(r);
  std::size_t k = 1;
  for (std::size_t i = r; i-- > 0;) {
    in_stride[i] = k;
    k *= x.shape()[i];
  }
  const std::size_t n = x.numel();
  auto src = std::make_shared<std::vector<std::size_t>>(n);
  std::vector<std::size_t> idx(r, 0);
  Buffer out(n);
  const auto xv = x.values();
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t off = 0;
    for (std::size_t d = 0; d < r; ++d) off += idx[d] * in_stride[axes[d]];
    (*src)[flat] = off;
    out[flat] = xv[off];
    for (std::size_t d = r; d-- > 0;) {
      if (++idx[d] < out_shape[d]) break;
      idx[d] = 0;
    }
  }
  TensorData* px = x.data().get();
  return make_result(std::move(out_shape), std::move(out), {x}, [px, src](TensorData& o) {
    auto& gx = px->grad_buffer();
    for (std::size_t i = 0; i < src->size(); ++i) gx[(*src)[i]] += o.grad[i];
  });
}

Tensor transpose(const Tensor& x) {
  if (x.rank() < 2) throw DimensionError("transpose needs rank >= 2, got " + shape_str(x.shape()));
  std::vector<std::size_t> axes(x.rank());
  std::iota(axes.begin(), axes.end(), 0);
  std::swap(axes[axes.size() - 1], axes[axes.size() - 2]);
  return permute(x, axes);
}

Tensor conv1d(const Tensor& x, const Tensor& w, std::size_t stride, std::size_t groups) {
  if (x.rank() < 2 || w.rank() != 3 || stride == 0 || groups == 0) {
    throw DimensionError("conv1d: bad operands " + shape_str(x.shape()) + " and weight " + shape_str(w.shape()));
  }
  const std::size_t c_in = x.dim(-2), t = x.dim(-1);
  const std::size_t c_out = w.dim(0), cg = w.dim(1), k = w.dim(2);
  if (c_in % groups != 0 || c_out % groups != 0 || cg * groups != c_in) {
    throw DimensionError("conv1d: weight " + shape_str(w.shape()) + " does not match input " +
                         shape_str(x.shape()) + " with groups=" + std::to_string(groups));
  }
  if (t < k) {
    throw DimensionError("conv1d: sequence length " + std::to_string(t) + " shorter than kernel " +
                         std::to_string(k));
  }
  const std::size_t t_out = (t - k) / stride + 1;
  const std::size_t batch = x.numel() / (c_in * t);
  const std::size_t og = c_out / groups;
  Shape out_shape = x.shape();
  out_shape[out_shape.size() - 2] = c_out;
  out_shape.back() = t_out;
  Buffer out(batch * c_out * t_out, 0.0);
  const auto xv = x.values();
  const auto wv = w.values();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < c_out; ++o) {
      const std::size_t g = o / og;
      double* y = out.data() + (b * c_out + o) * t_out;
      for (std::size_t il = 0; il < cg; ++il) {
        const double* xi = xv.data() + (b * c_in + g * cg + il) * t;
        const double* wk = wv.data() + (o * cg + il) * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
          for (std::size_t s = 0; s < t_out; ++s) y[s] += wk[kk] * xi[s * stride + kk];
        }
      }
    }
  }
  record_multiplies(static_cast<std::uint64_t>(batch) * c_out * cg * k * t_out);
  TensorData* px = x.data().get();
  TensorData* pw = w.data().get();
  return make_result(std::move(out_shape), std::move(out), {x, w},
                     [px, pw, batch, c_in, c_out, cg, og, k, t, t_out, stride](TensorData& o) {
                       for (std::size_t b = 0; b < batch; ++b) {
                         for (std::size_t oc = 0; oc < c_out; ++oc) {
                           const std::size_t g = oc / og;
                           const double* gy = o.grad.data() + (b * c_out + oc) * t_out;
                           for (std::size_t il = 0; il < cg; ++il) {
                             const std::size_t ic = g * cg + il;
                             const double* xi = px->values.data() + (b * c_in + ic) * t;
                             const double* wk = pw->values.data() + (oc * cg + il) * k;
                             for (std::size_t kk = 0; kk < k; ++kk) {
                               if (pw->requires_grad) {
                                 double acc = 0.0;
                                 for (std::size_t s = 0; s < t_out; ++s) acc += gy[s] * xi[s * stride + kk];
                                 pw->grad_buffer()[(oc * cg + il) * k + kk] += acc;
                               }
                               if (px->requires_grad) {
                                 double* gx = px->grad_buffer().data() + (b * c_in + ic) * t;
                                 for (std::size_t s = 0; s < t_out; ++s) gx[s * stride + kk] += wk[kk] * gy[s];
                               }
                             }
                           }
                         }
                       }
                     });
}

Tensor deconv1d(const Tensor& x, const Tensor& w, std::size_t stride) {
  if (x.rank() < 2 || w.rank() != 3 || stride == 0) {
    throw DimensionError("deconv1d: bad operands " + shape_str(x.shape()) + " and weight " +
                         shape_str(w.shape()));
  }
  const std::size_t c_in = x.dim(-2), t = x.dim(-1);
  if (w.dim(0) != c_in) {
    throw DimensionError("deconv1d: weight " + shape_str(w.shape()) + " does not match input " +
                         shape_str(x.shape()));
  }
  if (t == 0) throw DimensionError("deconv1d: empty sequence");
  const std::size_t c_out = w.dim(1), k = w.dim(2);
  const std::size_t t_out = (t - 1) * stride + k;
  const std::size_t batch = x.numel() / (c_in * t);

  // Rows are (batch, step), columns are input channels.
  auto xt = std::make_shared<RowMat>(static_cast<Eigen::Index>(batch * t), static_cast<Eigen::Index>(c_in));
  const auto xv = x.values();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < c_in; ++i)
      for (std::size_t s = 0; s < t; ++s) (*xt)(static_cast<Eigen::Index>(b * t + s), static_cast<Eigen::Index>(i)) = xv[(b * c_in + i) * t + s];
  // One dense [c_in, c_out] slice per kernel tap.
  auto taps = std::make_shared<std::vector<RowMat>>(k, RowMat(static_cast<Eigen::Index>(c_in), static_cast<Eigen::Index>(c_out)));
  const auto wv = w.values();
  for (std::size_t i = 0; i < c_in; ++i)
    for (std::size_t o = 0; o < c_out; ++o)
      for (std::size_t kk = 0; kk < k; ++kk) (*taps)[kk](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(o)) = wv[(i * c_out + o) * k + kk];

  Shape out_shape = x.shape();
  out_shape[out_shape.size() - 2] = c_out;
  out_shape.back() = t_out;
  Buffer out(batch * c_out * t_out, 0.0);
  RowMat y;
  for (std::size_t kk = 0; kk < k; ++kk) {
    y.noalias() = (*xt) * (*taps)[kk];
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t s = 0; s < t; ++s)
        for (std::size_t o = 0; o < c_out; ++o)
          out[(b * c_out + o) * t_out + s * stride + kk] += y(static_cast<Eigen::Index>(b * t + s), static_cast<Eigen::Index>(o));
  }
  record_multiplies(static_cast<std::uint64_t>(batch) * t * c_in * c_out * k);

  TensorData* px = x.data().get();
  TensorData* pw = w.data().get();
  return make_result(std::move(out_shape), std::move(out), {x, w},
                     [px, pw, xt, taps, batch, c_in, c_out, k, t, t_out, stride](TensorData& o) {
                       RowMat gy(static_cast<Eigen::Index>(batch * t), static_cast<Eigen::Index>(c_out));
                       RowMat gxt = RowMat::Zero(static_cast<Eigen::Index>(batch * t), static_cast<Eigen::Index>(c_in));
                       for (std::size_t kk = 0; kk < k; ++kk) {
                         for (std::size_t b = 0; b < batch; ++b)
                           for (std::size_t s = 0; s < t; ++s)
                             for (std::size_t oc = 0; oc < c_out; ++oc)
                               gy(static_cast<Eigen::Index>(b * t + s), static_cast<Eigen::Index>(oc)) =
                                   o.grad[(b * c_out + oc) * t_out + s * stride + kk];
                         if (px->requires_grad) gxt.noalias() += gy * (*taps)[kk].transpose();
                         if (pw->requires_grad) {
                           RowMat gw = xt->transpose() * gy;
                           auto& gwb = pw->grad_buffer();
                           for (std::size_t i = 0; i < c_in; ++i)
                             for (std::size_t oc = 0; oc < c_out; ++oc)
                               gwb[(i * c_out + oc) * k + kk] += gw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(oc));
                         }
                       }
                       if (px->requires_grad) {
                         auto& gx = px->grad_buffer();
                         for (std::size_t b = 0; b < batch; ++b)
                           for (std::size_t i = 0; i < c_in; ++i)
                             for (std::size_t s = 0; s < t; ++s)
                               gx[(b * c_in + i) * t + s] += gxt(static_cast<Eigen::Index>(b * t + s), static_cast<Eigen::Index>(i));
                       }
                     });
}

}  // namespace scjd::ops
