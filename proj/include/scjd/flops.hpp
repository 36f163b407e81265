#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scjd/posenet.hpp"

namespace scjd {

// Convention: one multiply-accumulate inside a matmul, conv or deconv kernel
// counts as 2 FLOPs. Elementwise ops, softmax and normalization are excluded.
struct FlopsEntry {
  std::string module;
  std::uint64_t flops = 0;
};

struct FlopsReport {
  std::string model;
  std::uint64_t analytic_flops = 0;
  std::uint64_t instrumented_multiplies = 0;  // 0 until measured
  std::vector<FlopsEntry> breakdown;
  std::size_t params = 0;

  bool consistent() const { return analytic_flops == 2 * instrumented_multiplies; }
  std::string to_json() const;
};

// Closed-form count for one forward pass over a single sequence. With
// include_training_heads the distillation projection (C -> head_embed_dim on
// every joint token) is added; it is not part of the deployed student.
FlopsReport count_flops(const ModelConfig& cfg, bool include_training_heads = false);

// Multiplies actually executed by one forward of a freshly initialized model
// on one zero-filled sequence (plus the projection head when requested).
std::uint64_t instrumented_flops(const ModelConfig& cfg, bool include_training_heads = false);

}  // namespace scjd
