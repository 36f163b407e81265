#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "scjd/config.hpp"
#include "scjd/train.hpp"

namespace scjd {

enum class Toggle { no_sampling, no_distill, no_emb, no_attn, no_temp, no_self_loop_mask };
using ToggleSet = std::vector<Toggle>;

std::string to_string(Toggle t);
Toggle toggle_from_string(const std::string& s);
bool has_toggle(const ToggleSet& set, Toggle t);

// "full" for the empty set, otherwise e.g. "w/o L_attn".
std::string row_label(const ToggleSet& set);

// Each row is one toggle set; every row runs once per seed.
struct AblationSpec {
  std::vector<ToggleSet> rows;
  std::vector<std::uint64_t> seeds;
};

// full / w/o L_emb / w/o L_attn / w/o L_temp.
AblationSpec component_ablation_spec(std::vector<std::uint64_t> seeds = {0, 1, 2});

// Accepts {"rows": [[...], ...], "seeds": [...]} or the single-row form
// {"toggles": [...], "seeds": [...]}.
AblationSpec ablation_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AblationSpec& spec);

// Dataset, skeleton and training pool shared by every run of one config.
struct Workspace {
  RunConfig cfg;
  SkeletonTopology topo;
  std::vector<MotionClip> train_clips;
  std::vector<MotionClip> eval_clips;
  TrainData data;

  Workspace() = default;
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;
};

// Splits the dataset into train/eval clips and draws the training pool.
std::unique_ptr<Workspace> make_workspace(const RunConfig& cfg, std::vector<MotionClip> dataset);

EvalOptions eval_options(const RunConfig& cfg);

// Trains (or resumes) the teacher described by the workspace config.
PoseFormerModel train_teacher_model(const Workspace& ws, const TrainOptions& options, TrainResult* result = nullptr);

DistillSetup make_distill_setup(const RunConfig& cfg, const ToggleSet& toggles, const SkeletonTopology& topo);

struct StudentRun {
  ToggleSet toggles;
  std::uint64_t seed = 0;
  TrainResult train;
  MetricsReport metrics;
  std::uint64_t checkpoint_checksum = 0;
};

// Trains one student with the given toggles and seed, then evaluates it on
// the eval clips. `teacher` may be null only for no_distill runs.
StudentRun run_student(const Workspace& ws, const TeacherCache* teacher, const ToggleSet& toggles,
                       std::uint64_t seed, const TrainOptions& options = {});

struct AblationRow {
  std::string label;
  ToggleSet toggles;
  std::vector<std::uint64_t> seeds;
  std::vector<double> mpjpe;
  double mean = 0.0;
  double stddev = 0.0;  // population
};

struct AblationTable {
  std::vector<AblationRow> rows;

  // One JSON record per row.
  std::string to_jsonl() const;
  // Aligned plain-text rendering.
  std::string render() const;
};

AblationTable summarize(const AblationSpec& spec, const std::vector<StudentRun>& runs);

}  // namespace scjd
