#include "scjd/metrics.hpp"

#include <cmath>

#include "json.hpp"
#include "scjd/ops.hpp"
#include "scjd/posenet.hpp"
#include "scjd/train.hpp"

namespace scjd {

std::vector<double> auc_thresholds() {
  std::vector<double> t;
  for (int i = 1; i <= 30; ++i) t.push_back(5.0 * i);
  return t;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["mpjpe_mm"] = mpjpe_mm;
  j["pck150"] = pck150;
  j["auc"] = auc;
  j["per_joint_mpjpe"] = per_joint_mpjpe;
  j["pck_curve"] = pck_curve;
  j["poses"] = poses;
  if (!loss_means.empty()) j["loss_means"] = loss_means;
  return j.dump();
}

MetricsReport compute_metrics(std::span<const double> pred, std::span<const double> gt, std::size_t joints) {
  if (joints == 0 || pred.size() != gt.size() || pred.size() % (joints * 3) != 0) {
    throw DimensionError("compute_metrics: prediction and ground truth sizes disagree");
  }
  const std::size_t n = pred.size() / (joints * 3);
  const auto thresholds = auc_thresholds();
  MetricsReport r;
  r.poses = n;
  r.per_joint_mpjpe.assign(joints, 0.0);
  r.pck_curve.assign(thresholds.size(), 0.0);
  if (n == 0) return r;

  std::size_t within150 = 0;
  std::vector<std::size_t> within(thresholds.size(), 0);
  double total = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t j = 0; j < joints; ++j) {
      const std::size_t o = (p * joints + j) * 3;
      const double dx = pred[o] - gt[o], dy = pred[o + 1] - gt[o + 1], dz = pred[o + 2] - gt[o + 2];
      const double e = std::sqrt(dx * dx + dy * dy + dz * dz);
      total += e;
      r.per_joint_mpjpe[j] += e;
      if (e < 150.0) ++within150;
      for (std::size_t t = 0; t < thresholds.size(); ++t)
        if (e < thresholds[t]) ++within[t];
    }
  }
  const double count = static_cast<double>(n * joints);
  r.mpjpe_mm = total / count;
  for (auto& v : r.per_joint_mpjpe) v /= static_cast<double>(n);
  r.pck150 = static_cast<double>(within150) / count;
  double auc = 0.0;
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    r.pck_curve[t] = static_cast<double>(within[t]) / count;
    auc += r.pck_curve[t];
  }
  r.auc = auc / static_cast<double>(thresholds.size());
  return r;
}

std::vector<double> predict_centers(const PoseFormerModel& model, const std::vector<MotionClip>& clips,
                                    const InputSpec& spec, const SkeletonTopology& topo, const EvalOptions& opts,
                                    std::vector<double>* ground_truth) {
  if (opts.frame_stride == 0 || opts.batch_size == 0) throw ConfigError("eval: frame_stride and batch_size must be >= 1");
  const std::size_t J = model.config().joints;
  const auto perm = topo.flip_permutation();
  std::vector<WindowRef> refs;
  for (std::size_t c = 0; c < clips.size(); ++c) {
    for (std::size_t f = 0; f < clips[c].seq3d.frames; f += opts.frame_stride) {
      refs.push_back({static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(f), false});
    }
  }
  std::vector<double> out;
  out.reserve(refs.size() * J * 3);
  if (ground_truth) ground_truth->clear();

  NoGradGuard no_grad;
  for (std::size_t start = 0; start < refs.size(); start += opts.batch_size) {
    const std::size_t count = std::min(opts.batch_size, refs.size() - start);
    std::span<const WindowRef> chunk(refs.data() + start, count);
    const Batch plain = make_batch(clips, chunk, spec, topo);
    std::vector<double> pred(count * J * 3);
    const Tensor p0 = model.forward(plain.input).center_pred;
    std::copy(p0.values().begin(), p0.values().end(), pred.begin());
    if (opts.flip_test) {
      std::vector<WindowRef> mirrored(chunk.begin(), chunk.end());
      for (auto& r : mirrored) r.flip = true;
      const Batch flipped = make_batch(clips, mirrored, spec, topo);
      auto p1 = model.forward(flipped.input).center_pred;
      std::vector<double> back(p1.values().begin(), p1.values().end());
      flip_in_place(back, J, 3, perm);
      for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = 0.5 * (pred[i] + back[i]);
    }
    out.insert(out.end(), pred.begin(), pred.end());
    if (ground_truth) ground_truth->insert(ground_truth->end(), plain.target.values().begin(), plain.target.values().end());
  }
  return out;
}

MetricsReport evaluate(const PoseFormerModel& model, const std::vector<MotionClip>& clips, const InputSpec& spec,
                       const SkeletonTopology& topo, const EvalOptions& opts) {
  if (topo.num_joints != model.config().joints) {
    throw ConfigError("evaluate: model has " + std::to_string(model.config().joints) + " joints, skeleton has " +
                      std::to_string(topo.num_joints));
  }
  std::vector<double> gt;
  const auto pred = predict_centers(model, clips, spec, topo, opts, &gt);
  return compute_metrics(pred, gt, model.config().joints);
}

}  // namespace scjd
