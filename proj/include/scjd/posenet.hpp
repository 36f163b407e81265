#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scjd/layers.hpp"
#include "scjd/upsample.hpp"

namespace scjd {

enum class Role { teacher, student };

std::string to_string(Role r);
Role role_from_string(const std::string& s);

// Shared configuration of the spatial/temporal transformer backbone.
struct ModelConfig {
  std::size_t frames = 81;
  std::size_t joints = 17;
  std::size_t embed_dim = 32;
  std::size_t depth = 4;
  std::size_t heads = 8;
  double mlp_ratio = 2.0;
  Role role = Role::teacher;
  // Students upsample temporal features by this factor before the head.
  std::size_t upsample_stride = 1;
  // Per-joint width entering the head after upsampling (the teacher's C).
  std::size_t head_embed_dim = 0;
  // The head regresses meters; predictions are reported in millimeters.
  double output_scale_mm = 1000.0;

  std::size_t temporal_width() const { return joints * embed_dim; }
  std::size_t head_width() const { return joints * (upsample_stride > 1 ? head_embed_dim : embed_dim); }
  std::size_t head_frames() const { return frames * upsample_stride; }
  std::size_t hidden(std::size_t width) const;
};

std::size_t default_heads(std::size_t embed_dim);
ModelConfig default_teacher_config(std::size_t frames = 81, std::size_t embed_dim = 32, std::size_t depth = 4);
ModelConfig default_student_config(std::size_t frames, std::size_t stride, std::size_t teacher_embed_dim = 32,
                                   std::size_t embed_dim = 16, std::size_t depth = 4);

// Throws ConfigError naming the violated invariant.
void validate(const ModelConfig& cfg);

// Intermediate features exposed by one forward pass, batch-major.
struct DistillTaps {
  Tensor frame_embeddings;  // [B, f, J, C]     final spatial-encoder output per frame
  Tensor temporal_out;      // [B, f, J*C]      temporal-encoder output
  Tensor upsampled;         // [B, f*L, J*C_t]  students only
  Tensor center_pred;       // [B, J*3]         millimeters
};

class PoseFormerModel {
 public:
  PoseFormerModel(ModelConfig cfg, std::string prefix, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const std::string& prefix() const { return prefix_; }

  // x2d: [B, f, J, 2]
  DistillTaps forward(const Tensor& x2d) const;
  Tensor spatial_forward(const Tensor& x2d) const;               // -> [B, f, J, C]
  Tensor temporal_forward(const Tensor& frame_embeddings) const;  // -> [B, f, J*C]
  // Aggregates all frames of [B, F, D] with a depthwise full-span conv, then
  // maps to joint coordinates. F and D must match head_frames / head_width.
  Tensor regress_center(const Tensor& features) const;
  Tensor upsample(const Tensor& temporal_out) const;

  ParameterList& parameters() { return params_; }
  const ParameterList& parameters() const { return params_; }
  Parameter& parameter(const std::string& suffix);

  const std::vector<EncoderLayer>& spatial_layers() const { return spatial_; }
  const std::vector<EncoderLayer>& temporal_layers() const { return temporal_; }

 private:
  ModelConfig cfg_;
  std::string prefix_;
  Linear joint_proj_;
  Tensor spatial_pos_;   // [J, C]
  std::vector<EncoderLayer> spatial_;
  LayerNorm spatial_norm_;
  Tensor temporal_pos_;  // [f, J*C]
  std::vector<EncoderLayer> temporal_;
  LayerNorm temporal_norm_;
  DeconvUpsampler upsampler_;
  Tensor head_conv_;  // [D_head, 1, F_head] depthwise
  Linear head_;
  ParameterList params_;
};

// Closed-form parameter element count of PoseFormerModel(cfg).
std::size_t count_params(const ModelConfig& cfg);

}  // namespace scjd
