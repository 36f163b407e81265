#include "scjd/posenet.hpp"

#include <cmath>

namespace scjd {

std::string to_string(Role r) { return r == Role::teacher ? "teacher" : "student"; }

Role role_from_string(const std::string& s) {
  if (s == "teacher") return Role::teacher;
  if (s == "student") return Role::student;
  throw ConfigError("unknown model role '" + s + "'");
}

std::size_t ModelConfig::hidden(std::size_t width) const {
  return static_cast<std::size_t>(std::lround(mlp_ratio * static_cast<double>(width)));
}

std::size_t default_heads(std::size_t embed_dim) { return embed_dim >= 32 ? 8 : 4; }

ModelConfig default_teacher_config(std::size_t frames, std::size_t embed_dim, std::size_t depth) {
  ModelConfig c;
  c.frames = frames;
  c.embed_dim = embed_dim;
  c.depth = depth;
  c.heads = default_heads(embed_dim);
  c.role = Role::teacher;
  return c;
}

ModelConfig default_student_config(std::size_t frames, std::size_t stride, std::size_t teacher_embed_dim,
                                   std::size_t embed_dim, std::size_t depth) {
  ModelConfig c;
  c.frames = frames;
  c.embed_dim = embed_dim;
  c.depth = depth;
  c.heads = default_heads(embed_dim);
  c.role = Role::student;
  c.upsample_stride = stride;
  c.head_embed_dim = teacher_embed_dim;
  return c;
}

void validate(const ModelConfig& cfg) {
  auto fail = [](const std::string& m) { throw ConfigError("model: " + m); };
  if (cfg.frames == 0 || cfg.frames % 2 == 0) fail("frames must be odd (got " + std::to_string(cfg.frames) + ")");
  if (cfg.joints == 0) fail("joints must be >= 1");
  if (cfg.embed_dim == 0) fail("embed_dim must be >= 1");
  if (cfg.depth == 0) fail("depth must be >= 1");
  if (cfg.heads == 0 || cfg.embed_dim % cfg.heads != 0) {
    fail("embed_dim must be divisible by heads (" + std::to_string(cfg.embed_dim) + " % " + std::to_string(cfg.heads) +
         ")");
  }
  if (!(cfg.mlp_ratio > 0.0) || cfg.hidden(cfg.embed_dim) == 0) fail("mlp_ratio must give a positive hidden width");
  if (cfg.upsample_stride == 0) fail("upsample_stride must be >= 1");
  if (cfg.upsample_stride > 1 && cfg.head_embed_dim == 0) fail("head_embed_dim must be set when upsampling");
  if (!(cfg.output_scale_mm > 0.0)) fail("output_scale_mm must be positive");
}

PoseFormerModel::PoseFormerModel(ModelConfig cfg, std::string prefix, std::uint64_t seed)
    : cfg_(cfg), prefix_(std::move(prefix)) {
  validate(cfg_);
  std::mt19937_64 rng(seed);
  const std::size_t C = cfg_.embed_dim, J = cfg_.joints, D = cfg_.temporal_width();
  joint_proj_ = Linear::init(2, C, rng);
  spatial_pos_ = trunc_normal({J, C}, 0.02, rng);
  for (std::size_t i = 0; i < cfg_.depth; ++i) spatial_.push_back(EncoderLayer::init(C, cfg_.heads, cfg_.hidden(C), rng));
  spatial_norm_ = LayerNorm::init(C);
  temporal_pos_ = trunc_normal({cfg_.frames, D}, 0.02, rng);
  for (std::size_t i = 0; i < cfg_.depth; ++i) temporal_.push_back(EncoderLayer::init(D, cfg_.heads, cfg_.hidden(D), rng));
  temporal_norm_ = LayerNorm::init(D);
  if (cfg_.upsample_stride > 1) {
    upsampler_ = DeconvUpsampler::init(D, cfg_.head_width(), cfg_.upsample_stride, rng);
  }
  // Starts as a frame average; small random filters stall early training.
  head_conv_ = Tensor::full({cfg_.head_width(), 1, cfg_.head_frames()}, 1.0 / static_cast<double>(cfg_.head_frames()), true);
  head_ = Linear::init(cfg_.head_width(), J * 3, rng);

  joint_proj_.collect(params_, prefix_ + ".joint_proj");
  params_.push_back({prefix_ + ".spatial_pos", spatial_pos_});
  for (std::size_t i = 0; i < spatial_.size(); ++i) spatial_[i].collect(params_, prefix_ + ".spatial.layer" + std::to_string(i));
  spatial_norm_.collect(params_, prefix_ + ".spatial_norm");
  params_.push_back({prefix_ + ".temporal_pos", temporal_pos_});
  for (std::size_t i = 0; i < temporal_.size(); ++i)
    temporal_[i].collect(params_, prefix_ + ".temporal.layer" + std::to_string(i));
  temporal_norm_.collect(params_, prefix_ + ".temporal_norm");
  if (cfg_.upsample_stride > 1) upsampler_.collect(params_, prefix_ + ".upsampler");
  params_.push_back({prefix_ + ".head.conv.w", head_conv_});
  head_.collect(params_, prefix_ + ".head.linear");
}

Parameter& PoseFormerModel::parameter(const std::string& suffix) {
  const std::string full = prefix_ + "." + suffix;
  for (auto& p : params_)
    if (p.name == full) return p;
  throw ContractError("no parameter named '" + full + "'");
}

Tensor PoseFormerModel::spatial_forward(const Tensor& x2d) const {
  const std::size_t J = cfg_.joints, C = cfg_.embed_dim;
  if (x2d.rank() != 4 || x2d.dim(1) != cfg_.frames || x2d.dim(2) != J || x2d.dim(3) != 2) {
    throw DimensionError("spatial_forward: expected [B, " + std::to_string(cfg_.frames) + ", " + std::to_string(J) +
                         ", 2], got " + shape_str(x2d.shape()));
  }
  const std::size_t B = x2d.dim(0), F = cfg_.frames;
  Tensor x = ops::reshape(x2d, {B * F, J, 2});
  x = ops::add(joint_proj_(x), spatial_pos_);
  for (const auto& layer : spatial_) x = layer(x);
  return ops::reshape(spatial_norm_(x), {B, F, J, C});
}

Tensor PoseFormerModel::temporal_forward(const Tensor& frame_embeddings) const {
  const std::size_t J = cfg_.joints, C = cfg_.embed_dim, F = cfg_.frames;
  if (frame_embeddings.rank() != 4 || frame_embeddings.dim(1) != F || frame_embeddings.dim(2) != J ||
      frame_embeddings.dim(3) != C) {
    throw DimensionError("temporal_forward: bad frame embeddings " + shape_str(frame_embeddings.shape()));
  }
  const std::size_t B = frame_embeddings.dim(0);
  Tensor z = ops::add(ops::reshape(frame_embeddings, {B, F, J * C}), temporal_pos_);
  for (const auto& layer : temporal_) z = layer(z);
  return temporal_norm_(z);
}

Tensor PoseFormerModel::upsample(const Tensor& temporal_out) const {
  if (cfg_.upsample_stride <= 1) throw ContractError("upsample: model has no upsampler");
  return upsample_student(temporal_out, upsampler_);
}

Tensor PoseFormerModel::regress_center(const Tensor& features) const {
  const std::size_t F = cfg_.head_frames(), D = cfg_.head_width();
  if (features.rank() != 3 || features.dim(1) != F || features.dim(2) != D) {
    throw DimensionError("regress_center: expected [B, " + std::to_string(F) + ", " + std::to_string(D) + "], got " +
                         shape_str(features.shape()));
  }
  const std::size_t B = features.dim(0);
  const Tensor pooled = ops::conv1d(ops::transpose(features), head_conv_, 1, D);  // [B, D, 1]
  return ops::scale(head_(ops::reshape(pooled, {B, D})), cfg_.output_scale_mm);
}

DistillTaps PoseFormerModel::forward(const Tensor& x2d) const {
  DistillTaps taps;
  taps.frame_embeddings = spatial_forward(x2d);
  taps.temporal_out = temporal_forward(taps.frame_embeddings);
  if (cfg_.upsample_stride > 1) {
    taps.upsampled = upsample(taps.temporal_out);
    taps.center_pred = regress_center(taps.upsampled);
  } else {
    taps.center_pred = regress_center(taps.temporal_out);
  }
  return taps;
}

namespace {
std::size_t encoder_layer_params(std::size_t d, std::size_t hidden) {
  return 2 * d + 4 * (d * d + d) + 2 * d + (d * hidden + hidden) + (hidden * d + d);
}
}  // namespace

std::size_t count_params(const ModelConfig& cfg) {
  const std::size_t C = cfg.embed_dim, J = cfg.joints, D = cfg.temporal_width(), F = cfg.frames;
  std::size_t n = 2 * C + C;  // joint projection
  n += J * C;                  // spatial positional embedding
  n += cfg.depth * encoder_layer_params(C, cfg.hidden(C));
  n += 2 * C;  // spatial output norm
  n += F * D;  // temporal positional embedding
  n += cfg.depth * encoder_layer_params(D, cfg.hidden(D));
  n += 2 * D;  // temporal output norm
  const std::size_t H = cfg.head_width();
  if (cfg.upsample_stride > 1) n += D * D * cfg.upsample_stride + D * H + H;
  n += H * cfg.head_frames();  // depthwise head conv
  n += H * J * 3 + J * 3;      // head linear
  return n;
}

}  // namespace scjd
