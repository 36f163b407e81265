#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "scjd/motion.hpp"

namespace scjd {

class PoseFormerModel;
struct InputSpec;

// 30 thresholds 5, 10, ..., 150 mm.
std::vector<double> auc_thresholds();

struct MetricsReport {
  double mpjpe_mm = 0.0;
  double pck150 = 0.0;
  double auc = 0.0;
  std::vector<double> per_joint_mpjpe;
  std::vector<double> pck_curve;  // one entry per auc_thresholds()
  std::size_t poses = 0;
  std::map<std::string, double> loss_means;

  std::string to_json() const;
};

// pred, gt: n poses × joints × 3, millimeters. PCK counts errors strictly
// below the threshold.
MetricsReport compute_metrics(std::span<const double> pred, std::span<const double> gt, std::size_t joints);

struct EvalOptions {
  std::size_t frame_stride = 1;  // evaluate every k-th center frame of each clip
  bool flip_test = true;         // average with the mirrored input's prediction
  std::size_t batch_size = 64;
};

// Center-frame predictions for every selected frame of every clip,
// n × joints × 3, in clip/frame order.
std::vector<double> predict_centers(const PoseFormerModel& model, const std::vector<MotionClip>& clips,
                                    const InputSpec& spec, const SkeletonTopology& topo, const EvalOptions& opts,
                                    std::vector<double>* ground_truth = nullptr);

MetricsReport evaluate(const PoseFormerModel& model, const std::vector<MotionClip>& clips, const InputSpec& spec,
                       const SkeletonTopology& topo, const EvalOptions& opts = {});

}  // namespace scjd
