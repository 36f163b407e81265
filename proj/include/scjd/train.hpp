#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scjd/checkpoint.hpp"
#include "scjd/distill.hpp"
#include "scjd/metrics.hpp"
#include "scjd/motion.hpp"
#include "scjd/posenet.hpp"

namespace scjd {

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double weight_decay = 0.1;  // decoupled
  double lr_decay_per_epoch = 0.98;
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  // Windows drawn per epoch; an epoch is a fixed sample budget, not a pass
  // over every window of every clip.
  std::size_t samples_per_epoch = 1024;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
};

void validate(const OptimizerConfig& cfg);

// lr_0 * decay^epoch, epoch counted from 0.
double learning_rate_at(const OptimizerConfig& cfg, std::size_t epoch);

struct AdamState {
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

AdamState make_adam_state(const ParameterList& params);

// Decoupled weight decay (p -= lr*wd*p) followed by a bias-corrected Adam
// update. A parameter without a gradient is treated as having a zero one.
// Throws NumericalError naming the first parameter with a non-finite gradient.
void adam_step(ParameterList& params, AdamState& state, const OptimizerConfig& cfg, double lr);

// One training sample: the window centered on `center` of clip `clip`,
// optionally mirrored left/right.
struct WindowRef {
  std::uint32_t clip = 0;
  std::uint32_t center = 0;
  bool flip = false;

  bool operator==(const WindowRef&) const = default;
};

// Fixed pool of training windows. size 0 takes every frame of every clip.
// Each window is mirrored with probability flip_probability.
std::vector<WindowRef> make_window_pool(const std::vector<MotionClip>& clips, std::size_t size, std::uint64_t seed,
                                        double flip_probability = 0.5);

// Which frames of a window the model sees.
struct InputSpec {
  std::size_t window = 0;            // frames extracted around the center
  std::vector<std::size_t> indices;  // positions inside the window fed to the model
};

InputSpec dense_input(std::size_t frames);
InputSpec sampled_input(const SamplerConfig& cfg, bool sparse = true);

struct Batch {
  Tensor input;   // [B, f, J, 2]
  Tensor target;  // [B, J*3] center-frame 3D pose, millimeters
};

Batch make_batch(const std::vector<MotionClip>& clips, std::span<const WindowRef> refs, const InputSpec& spec,
                 const SkeletonTopology& topo);

// Frozen-teacher features for every window of a pool, computed once in pool
// order so the cached values do not depend on which run reads them first.
class TeacherCache {
 public:
  TeacherCache(const PoseFormerModel& teacher, const std::vector<MotionClip>& clips,
               const std::vector<WindowRef>& pool, const SkeletonTopology& topo, std::size_t chunk = 32);

  // frame_embeddings [B, f_t, J, C_t] and temporal_out [B, f_t, J*C_t].
  DistillTaps gather(std::span<const std::size_t> pool_indices) const;
  std::size_t size() const { return count_; }
  std::uint64_t teacher_checksum() const { return teacher_checksum_; }

 private:
  std::size_t count_ = 0;
  std::size_t frames_ = 0, joints_ = 0, width_ = 0;
  std::vector<double> embeddings_;
  std::vector<double> temporal_;
  std::uint64_t teacher_checksum_ = 0;
};

struct TrainData {
  const std::vector<MotionClip>* clips = nullptr;
  std::vector<WindowRef> pool;
  const SkeletonTopology* topo = nullptr;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  double loss_total = 0.0;
  double loss_reg = 0.0;
  std::optional<double> loss_emb;
  std::optional<double> loss_attn;
  std::optional<double> loss_temp;
  std::string emb_regime;            // "direct" or "pooled" when the term is active
  std::optional<double> emb_probe;   // emb loss on a fixed probe batch at epoch start
  std::optional<double> eval_mpjpe;

  std::string to_json() const;
  static EpochRecord from_json(const std::string& line);
};

struct TrainOptions {
  // Empty: nothing is written. Otherwise holds metrics.jsonl, state.ckpt
  // (parameters + optimizer moments, rewritten after every epoch) and the
  // final model checkpoint.
  std::filesystem::path out_dir;
  bool resume = false;
  // Stop after this many completed epochs (0 = run to the configured end).
  std::size_t stop_after_epoch = 0;
  const std::vector<MotionClip>* eval_clips = nullptr;
  std::size_t eval_every = 0;  // epochs; 0 disables per-epoch evaluation
  EvalOptions eval;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  std::size_t epochs_completed = 0;
};

// Minimizes the center-frame MPJPE only.
TrainResult train_teacher(PoseFormerModel& teacher, const TrainData& data, const OptimizerConfig& opt,
                          const TrainOptions& options = {});

struct DistillSetup {
  DistillConfig cfg;
  SamplerConfig sampler;
  bool sparse_sampling = true;
  bool use_emb = true;
  bool use_attn = true;
  bool use_temp = true;
  AdjacencyMask mask{0, {}};

  bool any_term() const;
};

// Trains the student (plus the projection head when the embedding term is
// active) against a frozen teacher. `teacher` may be null when no
// distillation term is active.
TrainResult distill_student(PoseFormerModel& student, ProjectionHead& proj, const TeacherCache* teacher,
                            const TrainData& data, const DistillSetup& setup, const OptimizerConfig& opt,
                            const TrainOptions& options = {});

// Model weights plus a JSON sidecar (<path>.json) carrying the ModelConfig.
void save_model(const PoseFormerModel& model, const std::filesystem::path& path);
PoseFormerModel load_model(const std::filesystem::path& path);

}  // namespace scjd
