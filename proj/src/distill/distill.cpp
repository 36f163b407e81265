#include "scjd/distill.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace scjd {

void validate(const DistillConfig& cfg) {
  if (!(cfg.alpha >= 0.0) || !(cfg.beta >= 0.0) || !(cfg.gamma >= 0.0)) {
    throw ConfigError("distill: alpha, beta and gamma must be >= 0");
  }
  if (!(cfg.reg_scale > 0.0) || !std::isfinite(cfg.reg_scale)) throw ConfigError("distill.reg_scale must be finite and > 0");
  if (cfg.stride < 1) throw ConfigError("distill.stride must be >= 1");
  if (cfg.top_k < 1 || cfg.top_k > 2 * cfg.stride - 1) {
    throw ConfigError("distill.top_k must lie in [1, 2*stride-1] (got " + std::to_string(cfg.top_k) + ")");
  }
}

ProjectionHead ProjectionHead::init(std::size_t c_student, std::size_t c_teacher, std::mt19937_64& rng) {
  return {Linear::init(c_student, c_teacher, rng)};
}

void ProjectionHead::collect(ParameterList& out, const std::string& prefix) const { fc.collect(out, prefix + ".fc"); }

DffSelection dff_pool(std::span<const double> teacher_seq, std::size_t frames, std::size_t row, std::size_t p,
                      std::size_t stride, std::span<const double> student_proj, std::size_t k) {
  if (p >= frames || teacher_seq.size() != frames * row || student_proj.size() != row) {
    throw ContractError("dff_pool: frame " + std::to_string(p) + " or feature sizes out of range");
  }
  const long reach = static_cast<long>(stride) - 1;
  const long lo = std::max(0L, static_cast<long>(p) - reach);
  const long hi = std::min(static_cast<long>(frames) - 1, static_cast<long>(p) + reach);
  if (hi < lo) throw ContractError("dff_pool: empty window");

  double sn = 0.0;
  for (double v : student_proj) sn += v * v;
  sn = std::sqrt(sn);

  struct Candidate {
    double sim;
    long offset;
    std::size_t frame;
  };
  std::vector<Candidate> cands;
  for (long f = lo; f <= hi; ++f) {
    const double* t = teacher_seq.data() + static_cast<std::size_t>(f) * row;
    double dot = 0.0, tn = 0.0;
    for (std::size_t i = 0; i < row; ++i) {
      dot += t[i] * student_proj[i];
      tn += t[i] * t[i];
    }
    const double denom = std::sqrt(tn) * sn;
    cands.push_back({denom > 0.0 ? dot / denom : 0.0, std::labs(f - static_cast<long>(p)), static_cast<std::size_t>(f)});
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    if (a.offset != b.offset) return a.offset < b.offset;
    return a.frame < b.frame;
  });
  const std::size_t take = std::min(std::max<std::size_t>(k, 1), cands.size());
  DffSelection sel;
  sel.pooled.assign(row, 0.0);
  for (std::size_t i = 0; i < take; ++i) {
    sel.frames.push_back(cands[i].frame);
    const double* t = teacher_seq.data() + cands[i].frame * row;
    for (std::size_t j = 0; j < row; ++j) sel.pooled[j] += t[j];
  }
  for (auto& v : sel.pooled) v /= static_cast<double>(take);
  return sel;
}

Tensor gather_frames(const Tensor& seq, std::span<const std::size_t> sample_indices) {
  if (seq.rank() < 2) throw DimensionError("gather_frames: need [B, frames, ...], got " + shape_str(seq.shape()));
  const std::size_t B = seq.dim(0), F = seq.dim(1);
  const std::size_t row = seq.numel() / (B * F);
  Shape out_shape = seq.shape();
  out_shape[1] = sample_indices.size();
  std::vector<double> out(B * sample_indices.size() * row);
  const auto v = seq.values();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t k = 0; k < sample_indices.size(); ++k) {
      if (sample_indices[k] >= F) {
        throw ContractError("sample index " + std::to_string(sample_indices[k]) + " out of range for " +
                            std::to_string(F) + " teacher frames");
      }
      std::copy_n(v.begin() + static_cast<long>((b * F + sample_indices[k]) * row), row,
                  out.begin() + static_cast<long>((b * sample_indices.size() + k) * row));
    }
  }
  return Tensor::from(std::move(out_shape), std::move(out));
}

Tensor emb_targets(const Tensor& student_proj, const Tensor& teacher_embeddings,
                   std::span<const std::size_t> sample_indices, std::size_t epoch, const DistillConfig& cfg) {
  if (student_proj.rank() != 4 || teacher_embeddings.rank() != 4 || student_proj.dim(1) != sample_indices.size() ||
      student_proj.dim(0) != teacher_embeddings.dim(0) || student_proj.dim(2) != teacher_embeddings.dim(2) ||
      student_proj.dim(3) != teacher_embeddings.dim(3)) {
    throw ContractError("emb_loss: student " + shape_str(student_proj.shape()) + " and teacher " +
                        shape_str(teacher_embeddings.shape()) + " are not aligned with " +
                        std::to_string(sample_indices.size()) + " sample indices");
  }
  if (epoch <= cfg.warmup_epochs) return gather_frames(teacher_embeddings, sample_indices);

  const std::size_t B = student_proj.dim(0), fs = student_proj.dim(1), ft = teacher_embeddings.dim(1);
  const std::size_t row = student_proj.dim(2) * student_proj.dim(3);
  std::vector<double> out(B * fs * row);
  const auto sv = student_proj.values();
  const auto tv = teacher_embeddings.values();
  for (std::size_t b = 0; b < B; ++b) {
    const auto seq = tv.subspan(b * ft * row, ft * row);
    for (std::size_t k = 0; k < fs; ++k) {
      const auto sel = dff_pool(seq, ft, row, sample_indices[k], cfg.stride, sv.subspan((b * fs + k) * row, row),
                                cfg.top_k);
      std::copy(sel.pooled.begin(), sel.pooled.end(), out.begin() + static_cast<long>((b * fs + k) * row));
    }
  }
  return Tensor::from(student_proj.shape(), std::move(out));
}

Tensor emb_loss(const DistillTaps& student, const DistillTaps& teacher, std::span<const std::size_t> sample_indices,
                const ProjectionHead& proj, std::size_t epoch, const DistillConfig& cfg) {
  const Tensor projected = proj(student.frame_embeddings);
  const Tensor target = emb_targets(projected, teacher.frame_embeddings, sample_indices, epoch, cfg);
  return ops::mean(ops::norm_last(ops::sub(projected, target)));
}

Tensor masked_gram(const Tensor& features, const Tensor& mask) {
  if (features.rank() < 2 || mask.rank() != 2 || mask.dim(0) != features.dim(-2) || mask.dim(1) != features.dim(-2)) {
    throw DimensionError("masked_gram: features " + shape_str(features.shape()) + " do not match mask " +
                         shape_str(mask.shape()));
  }
  const double c = static_cast<double>(features.dim(-1));
  const Tensor gram = ops::matmul(features, ops::transpose(features));
  return ops::mul(ops::scale(gram, 1.0 / std::sqrt(c)), mask);
}

Tensor attn_loss(const DistillTaps& student, const DistillTaps& teacher, std::span<const std::size_t> sample_indices,
                 const AdjacencyMask& mask) {
  const Tensor& fs = student.frame_embeddings;
  if (fs.rank() != 4 || fs.dim(1) != sample_indices.size() || teacher.frame_embeddings.rank() != 4 ||
      teacher.frame_embeddings.dim(0) != fs.dim(0)) {
    throw ContractError("attn_loss: student frames " + shape_str(fs.shape()) + " misaligned with " +
                        std::to_string(sample_indices.size()) + " sample indices");
  }
  const Tensor m = mask.to_tensor();
  Tensor target;
  {
    NoGradGuard no_grad;
    target = masked_gram(gather_frames(teacher.frame_embeddings, sample_indices), m).detach();
  }
  const Tensor diff = ops::abs(ops::sub(masked_gram(fs, m), target));
  return ops::scale(ops::sum(diff), 1.0 / static_cast<double>(fs.dim(0) * fs.dim(1)));
}

Tensor temp_loss(const Tensor& upsampled, const Tensor& teacher_temporal) {
  if (upsampled.shape() != teacher_temporal.shape()) {
    throw DimensionError("temp_loss: upsampled " + shape_str(upsampled.shape()) + " vs teacher " +
                         shape_str(teacher_temporal.shape()));
  }
  return ops::mean(ops::norm_last(ops::sub(upsampled, teacher_temporal.detach())));
}

Tensor mpjpe_loss(const Tensor& pred, const Tensor& gt) {
  if (pred.shape() != gt.shape() || pred.dim(-1) % 3 != 0) {
    throw DimensionError("mpjpe_loss: prediction " + shape_str(pred.shape()) + " vs ground truth " +
                         shape_str(gt.shape()));
  }
  const std::size_t rows = pred.numel() / 3;
  return ops::mean(ops::norm_last(ops::reshape(ops::sub(pred, gt), {rows, 3})));
}

Tensor total_loss(const LossTerms& terms, const DistillConfig& cfg) {
  auto check = [](const Tensor& t, const char* name) {
    if (t.defined() && !std::isfinite(t.item())) throw NumericalError(std::string("non-finite loss component ") + name);
  };
  check(terms.reg, "L_reg");
  check(terms.emb, "L_emb");
  check(terms.attn, "L_attn");
  check(terms.temp, "L_temp");
  Tensor total = cfg.reg_scale == 1.0 ? terms.reg : ops::scale(terms.reg, cfg.reg_scale);
  if (terms.emb.defined()) total = ops::add(total, ops::scale(terms.emb, cfg.alpha));
  if (terms.attn.defined()) total = ops::add(total, ops::scale(terms.attn, cfg.beta));
  if (terms.temp.defined()) total = ops::add(total, ops::scale(terms.temp, cfg.gamma));
  return total;
}

}  // namespace scjd
