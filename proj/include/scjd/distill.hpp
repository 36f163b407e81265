#pragma once

#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "scjd/posenet.hpp"
#include "scjd/skeleton.hpp"

namespace scjd {

struct DistillConfig {
  double alpha = 1.0;   // joint-embedding term
  double beta = 1.0;    // adjacent-joint attention term
  double gamma = 0.01;  // temporal-consistency term
  double reg_scale = 1e-3;  // regression term enters the total in metres
  std::size_t warmup_epochs = 20;  // direct alignment for epochs 1..N, pooled afterwards
  std::size_t top_k = 3;
  std::size_t stride = 3;
  bool mask_self_loops = true;
};

// Throws ConfigError naming the violated invariant.
void validate(const DistillConfig& cfg);

// Aligns student joint embeddings (C_s) with the teacher's (C_t). Used only
// while distilling; never part of the deployed student.
struct ProjectionHead {
  Linear fc;

  static ProjectionHead init(std::size_t c_student, std::size_t c_teacher, std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const { return fc(x); }
  void collect(ParameterList& out, const std::string& prefix) const;
};

struct DffSelection {
  std::vector<std::size_t> frames;  // chosen teacher frames, best first
  std::vector<double> pooled;       // mean of the chosen frames, J*C_t values
};

// Dynamic feature fusion around teacher frame `p`: ranks frames
// [p-(L-1), p+(L-1)] (clipped to the sequence) by cosine similarity to the
// projected student frame, keeps the top k (ties: smaller |offset|, then the
// earlier frame) and averages them. k is capped at the window size.
// teacher_seq holds `frames` rows of `row` values each.
DffSelection dff_pool(std::span<const double> teacher_seq, std::size_t frames, std::size_t row, std::size_t p,
                      std::size_t stride, std::span<const double> student_proj, std::size_t k);

// Loss targets for the embedding term, [B, f_s, J, C_t], no gradient.
// epoch is 1-based: epochs <= warmup use teacher frame sample_indices[k]
// directly, later epochs use dff_pool.
Tensor emb_targets(const Tensor& student_proj, const Tensor& teacher_embeddings,
                   std::span<const std::size_t> sample_indices, std::size_t epoch, const DistillConfig& cfg);

// Mean over batch, frames and joints of ||FC(F_s) - target||_2.
Tensor emb_loss(const DistillTaps& student, const DistillTaps& teacher, std::span<const std::size_t> sample_indices,
                const ProjectionHead& proj, std::size_t epoch, const DistillConfig& cfg);

// (F F^T / sqrt(C)) ⊗ mask over the last two axes of F: [..., J, C] -> [..., J, J].
Tensor masked_gram(const Tensor& features, const Tensor& mask);

// Summed elementwise |M(F_s) - M(F_t)| per aligned frame, averaged over
// batch and frames. The teacher side is a constant.
Tensor attn_loss(const DistillTaps& student, const DistillTaps& teacher, std::span<const std::size_t> sample_indices,
                 const AdjacencyMask& mask);

// Mean over batch and frames of the per-frame L2 distance.
Tensor temp_loss(const Tensor& upsampled, const Tensor& teacher_temporal);

// Mean per-joint Euclidean distance. pred, gt: [B, J*3] in millimeters.
Tensor mpjpe_loss(const Tensor& pred, const Tensor& gt);

struct LossTerms {
  Tensor reg;
  Tensor emb;   // undefined when the term is disabled
  Tensor attn;
  Tensor temp;
};

// L_reg + alpha L_emb + beta L_attn + gamma L_temp over the defined terms.
// Throws NumericalError naming the first non-finite component.
Tensor total_loss(const LossTerms& terms, const DistillConfig& cfg);

// Rows sample_indices of axis 1, as a constant: [B, f_t, ...] -> [B, f_s, ...].
Tensor gather_frames(const Tensor& seq, std::span<const std::size_t> sample_indices);

}  // namespace scjd
