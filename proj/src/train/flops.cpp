#include "scjd/flops.hpp"

#include "json.hpp"
#include "scjd/distill.hpp"
#include "scjd/ops.hpp"

namespace scjd {

std::string FlopsReport::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["params"] = params;
  j["analytic_flops"] = analytic_flops;
  j["instrumented_multiplies"] = instrumented_multiplies;
  j["consistent"] = consistent();
  nlohmann::ordered_json b = nlohmann::ordered_json::object();
  for (const auto& e : breakdown) b[e.module] = e.flops;
  j["breakdown"] = b;
  return j.dump();
}

namespace {

// Multiply-accumulates of one pre-norm encoder layer over `tokens` tokens of
// width d with FFN width h (attention scores and context each cost t*t*d).
std::uint64_t encoder_macs(std::uint64_t sequences, std::uint64_t tokens, std::uint64_t d, std::uint64_t h) {
  const std::uint64_t projections = 4 * tokens * d * d;
  const std::uint64_t attention = 2 * tokens * tokens * d;
  const std::uint64_t ffn = 2 * tokens * d * h;
  return sequences * (projections + attention + ffn);
}

}  // namespace

FlopsReport count_flops(const ModelConfig& cfg, bool include_training_heads) {
  validate(cfg);
  const std::uint64_t f = cfg.frames, J = cfg.joints, C = cfg.embed_dim, D = cfg.temporal_width();
  FlopsReport r;
  r.model = to_string(cfg.role);
  r.params = count_params(cfg);
  auto add = [&](const std::string& name, std::uint64_t macs) {
    r.breakdown.push_back({name, 2 * macs});
    r.analytic_flops += 2 * macs;
  };
  add("joint_embedding", f * J * 2 * C);
  add("spatial_encoder", cfg.depth * encoder_macs(f, J, C, cfg.hidden(C)));
  add("temporal_encoder", cfg.depth * encoder_macs(1, f, D, cfg.hidden(D)));
  const std::uint64_t H = cfg.head_width(), F = cfg.head_frames();
  if (cfg.upsample_stride > 1) add("upsampler", f * D * D * cfg.upsample_stride + F * D * H);
  add("head", H * F + H * J * 3);
  if (include_training_heads && cfg.upsample_stride > 1) add("distill_projection", f * J * C * cfg.head_embed_dim);
  return r;
}

std::uint64_t instrumented_flops(const ModelConfig& cfg, bool include_training_heads) {
  PoseFormerModel model(cfg, "probe", 0);
  std::mt19937_64 rng(0);
  const ProjectionHead proj = ProjectionHead::init(cfg.embed_dim, cfg.head_embed_dim ? cfg.head_embed_dim : 1, rng);
  const Tensor x = Tensor::zeros({1, cfg.frames, cfg.joints, 2});
  NoGradGuard no_grad;
  MultiplyCounter counter;
  const DistillTaps taps = model.forward(x);
  if (include_training_heads && cfg.upsample_stride > 1) proj(taps.frame_embeddings);
  return counter.count();
}

}  // namespace scjd
