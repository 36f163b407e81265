#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "scjd/distill.hpp"
#include "scjd/motion.hpp"
#include "scjd/posenet.hpp"
#include "scjd/train.hpp"

namespace scjd {

struct DataConfig {
  std::string path = "data/dataset.bin";
  DatasetSpec spec;
};

// Run-time sizing knobs that are not model or optimizer hyperparameters.
struct TrainingConfig {
  std::size_t pool_size = 2048;  // training windows; 0 = every frame of every clip
  double flip_probability = 0.5;
  std::size_t eval_frame_stride = 1;
  bool flip_test = true;
  std::size_t eval_every = 0;
  std::size_t eval_batch = 64;
};

struct RunConfig {
  ModelConfig teacher = default_teacher_config();
  ModelConfig student = default_student_config(27, 3);
  SamplerConfig sampler;
  DistillConfig distill;
  OptimizerConfig optimizer;
  // Falls back to `optimizer` when absent.
  std::optional<OptimizerConfig> teacher_optimizer;
  DataConfig data;
  TrainingConfig training;
  std::string output_dir = "runs/default";
  std::uint64_t seed = 0;

  OptimizerConfig teacher_opt() const;  // seeded from `seed`
  OptimizerConfig student_opt(std::uint64_t run_seed) const;
};

// Rejects every violated invariant with its name, e.g.
// "sampler.teacher_frames == teacher.frames (81 vs 27)".
void validate(const RunConfig& cfg);

// Conversions. Missing keys keep their defaults; unknown keys are rejected
// with ConfigError so typos do not silently fall back to defaults.
nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& path);

// Small experiment used by the acceptance suite: 200/50 clips of 240
// frames, teacher f=27 C=32 depth 2, student f=9 (stride 3) C=16 depth 2,
// 30 epochs each.
RunConfig desk_config();

}  // namespace scjd
