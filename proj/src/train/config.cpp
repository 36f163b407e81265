#include "scjd/config.hpp"

#include <set>

#include "scjd/byteio.hpp"
#include "scjd/seed.hpp"

namespace scjd {

using nlohmann::json;

namespace {

// Reads keys of one JSON object into a struct, rejecting anything unread.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }
  // Call after the last get(); rejects keys nobody asked for.
  void done() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
    }
  }

  template <typename T>
  void get(const char* key, T& dst) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      dst = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where_ + "." + key + ": wrong type");
    }
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json to_json(const Camera& c) {
  return {{"focal", c.focal}, {"center_x", c.center_x}, {"center_y", c.center_y}, {"distance_mm", c.distance_mm}};
}

Camera camera_from_json(const json& j, const std::string& where) {
  Camera c;
  Reader r(j, where);
  r.get("focal", c.focal);
  r.get("center_x", c.center_x);
  r.get("center_y", c.center_y);
  r.get("distance_mm", c.distance_mm);
  r.done();
  return c;
}

json to_json(const MotionParams& m) {
  return {{"amplitude_scale", m.amplitude_scale},
          {"min_frequency_hz", m.min_frequency_hz},
          {"max_frequency_hz", m.max_frequency_hz},
          {"root_travel_mm", m.root_travel_mm},
          {"fps", m.fps},
          {"camera", to_json(m.camera)},
          {"noise_std", m.noise_std}};
}

MotionParams motion_from_json(const json& j, const std::string& where) {
  MotionParams m;
  Reader r(j, where);
  r.get("amplitude_scale", m.amplitude_scale);
  r.get("min_frequency_hz", m.min_frequency_hz);
  r.get("max_frequency_hz", m.max_frequency_hz);
  r.get("root_travel_mm", m.root_travel_mm);
  r.get("fps", m.fps);
  if (const json* c = r.sub("camera")) m.camera = camera_from_json(*c, where + ".camera");
  r.get("noise_std", m.noise_std);
  r.done();
  return m;
}

json to_json(const OptimizerConfig& o) {
  return {{"learning_rate", o.learning_rate}, {"weight_decay", o.weight_decay},
          {"lr_decay_per_epoch", o.lr_decay_per_epoch}, {"epochs", o.epochs},
          {"batch_size", o.batch_size}, {"samples_per_epoch", o.samples_per_epoch},
          {"beta1", o.beta1}, {"beta2", o.beta2}, {"eps", o.eps}, {"seed", o.seed}};
}

OptimizerConfig optimizer_from_json(const json& j, const std::string& where) {
  OptimizerConfig o;
  Reader r(j, where);
  r.get("learning_rate", o.learning_rate);
  r.get("weight_decay", o.weight_decay);
  r.get("lr_decay_per_epoch", o.lr_decay_per_epoch);
  r.get("epochs", o.epochs);
  r.get("batch_size", o.batch_size);
  r.get("samples_per_epoch", o.samples_per_epoch);
  r.get("beta1", o.beta1);
  r.get("beta2", o.beta2);
  r.get("eps", o.eps);
  r.get("seed", o.seed);
  r.done();
  return o;
}

ModelConfig model_from_json(const json& j, const std::string& where) {
  ModelConfig c;
  Reader r(j, where);
  r.get("frames", c.frames);
  r.get("joints", c.joints);
  r.get("embed_dim", c.embed_dim);
  r.get("depth", c.depth);
  bool heads_given = j.contains("heads");
  r.get("heads", c.heads);
  if (!heads_given) c.heads = default_heads(c.embed_dim);
  r.get("mlp_ratio", c.mlp_ratio);
  std::string role = to_string(c.role);
  r.get("role", role);
  c.role = role_from_string(role);
  r.get("upsample_stride", c.upsample_stride);
  r.get("head_embed_dim", c.head_embed_dim);
  r.get("output_scale_mm", c.output_scale_mm);
  r.done();
  return c;
}

}  // namespace

json to_json(const ModelConfig& c) {
  return {{"frames", c.frames},
          {"joints", c.joints},
          {"embed_dim", c.embed_dim},
          {"depth", c.depth},
          {"heads", c.heads},
          {"mlp_ratio", c.mlp_ratio},
          {"role", to_string(c.role)},
          {"upsample_stride", c.upsample_stride},
          {"head_embed_dim", c.head_embed_dim},
          {"output_scale_mm", c.output_scale_mm}};
}

ModelConfig model_config_from_json(const json& j) { return model_from_json(j, "model"); }

OptimizerConfig RunConfig::teacher_opt() const {
  OptimizerConfig o = teacher_optimizer.value_or(optimizer);
  o.seed = derive_seed(seed, 11);
  return o;
}

OptimizerConfig RunConfig::student_opt(std::uint64_t run_seed) const {
  OptimizerConfig o = optimizer;
  o.seed = derive_seed(run_seed, 12);
  return o;
}

json to_json(const RunConfig& c) {
  json j;
  j["teacher"] = to_json(c.teacher);
  j["student"] = to_json(c.student);
  j["sampler"] = {{"teacher_frames", c.sampler.teacher_frames}, {"stride", c.sampler.stride}};
  j["distill"] = {{"alpha", c.distill.alpha},
                  {"beta", c.distill.beta},
                  {"gamma", c.distill.gamma},
                  {"reg_scale", c.distill.reg_scale},
                  {"warmup_epochs", c.distill.warmup_epochs},
                  {"top_k", c.distill.top_k},
                  {"stride", c.distill.stride},
                  {"mask_self_loops", c.distill.mask_self_loops}};
  j["optimizer"] = to_json(c.optimizer);
  if (c.teacher_optimizer) j["teacher_optimizer"] = to_json(*c.teacher_optimizer);
  j["data"] = {{"path", c.data.path},
               {"train_clips", c.data.spec.train_clips},
               {"eval_clips", c.data.spec.eval_clips},
               {"frames_per_clip", c.data.spec.frames_per_clip},
               {"seed", c.data.spec.seed},
               {"motion", to_json(c.data.spec.motion)}};
  j["training"] = {{"pool_size", c.training.pool_size},
                   {"flip_probability", c.training.flip_probability},
                   {"eval_frame_stride", c.training.eval_frame_stride},
                   {"flip_test", c.training.flip_test},
                   {"eval_every", c.training.eval_every},
                   {"eval_batch", c.training.eval_batch}};
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  Reader r(j, "config");
  if (const json* t = r.sub("teacher")) c.teacher = model_from_json(*t, "teacher");
  if (const json* s = r.sub("student")) c.student = model_from_json(*s, "student");
  if (const json* s = r.sub("sampler")) {
    Reader rs(*s, "sampler");
    rs.get("teacher_frames", c.sampler.teacher_frames);
    rs.get("stride", c.sampler.stride);
    rs.done();
  }
  if (const json* d = r.sub("distill")) {
    Reader rd(*d, "distill");
    rd.get("alpha", c.distill.alpha);
    rd.get("beta", c.distill.beta);
    rd.get("gamma", c.distill.gamma);
    rd.get("reg_scale", c.distill.reg_scale);
    rd.get("warmup_epochs", c.distill.warmup_epochs);
    rd.get("top_k", c.distill.top_k);
    rd.get("stride", c.distill.stride);
    rd.get("mask_self_loops", c.distill.mask_self_loops);
    rd.done();
  }
  if (const json* o = r.sub("optimizer")) c.optimizer = optimizer_from_json(*o, "optimizer");
  if (const json* o = r.sub("teacher_optimizer")) c.teacher_optimizer = optimizer_from_json(*o, "teacher_optimizer");
  if (const json* d = r.sub("data")) {
    Reader rd(*d, "data");
    rd.get("path", c.data.path);
    rd.get("train_clips", c.data.spec.train_clips);
    rd.get("eval_clips", c.data.spec.eval_clips);
    rd.get("frames_per_clip", c.data.spec.frames_per_clip);
    rd.get("seed", c.data.spec.seed);
    if (const json* m = rd.sub("motion")) c.data.spec.motion = motion_from_json(*m, "data.motion");
    rd.done();
  }
  if (const json* t = r.sub("training")) {
    Reader rt(*t, "training");
    rt.get("pool_size", c.training.pool_size);
    rt.get("flip_probability", c.training.flip_probability);
    rt.get("eval_frame_stride", c.training.eval_frame_stride);
    rt.get("flip_test", c.training.flip_test);
    rt.get("eval_every", c.training.eval_every);
    rt.get("eval_batch", c.training.eval_batch);
    rt.done();
  }
  r.get("output_dir", c.output_dir);
  r.get("seed", c.seed);
  r.done();
  return c;
}

void validate(const RunConfig& c) {
  validate(c.teacher);
  validate(c.student);
  validate(c.sampler);
  validate(c.distill);
  validate(c.optimizer);
  if (c.teacher_optimizer) validate(*c.teacher_optimizer);
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  auto num = [](std::size_t v) { return std::to_string(v); };
  if (c.teacher.role != Role::teacher) fail("teacher.role == teacher violated");
  if (c.student.role != Role::student) fail("student.role == student violated");
  if (c.sampler.teacher_frames != c.teacher.frames) {
    fail("sampler.teacher_frames == teacher.frames violated (" + num(c.sampler.teacher_frames) + " vs " +
         num(c.teacher.frames) + ")");
  }
  if (c.student.frames != c.sampler.student_frames()) {
    fail("student.frames == teacher_frames / stride violated (" + num(c.student.frames) + " vs " +
         num(c.sampler.student_frames()) + ")");
  }
  if (c.distill.stride != c.sampler.stride) {
    fail("distill.stride == sampler.stride violated (" + num(c.distill.stride) + " vs " + num(c.sampler.stride) + ")");
  }
  if (c.student.upsample_stride != c.sampler.stride) {
    fail("student.upsample_stride == sampler.stride violated (" + num(c.student.upsample_stride) + " vs " +
         num(c.sampler.stride) + ")");
  }
  if (c.student.head_embed_dim != c.teacher.embed_dim) {
    fail("student.head_embed_dim == teacher.embed_dim violated (" + num(c.student.head_embed_dim) + " vs " +
         num(c.teacher.embed_dim) + ")");
  }
  if (c.student.joints != c.teacher.joints) fail("student.joints == teacher.joints violated");
  if (!(c.training.flip_probability >= 0.0 && c.training.flip_probability <= 1.0)) {
    fail("training.flip_probability must lie in [0, 1]");
  }
  if (c.training.eval_frame_stride == 0) fail("training.eval_frame_stride must be >= 1");
  if (c.training.eval_batch == 0) fail("training.eval_batch must be >= 1");
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& path) {
  const std::string text = to_json(cfg).dump(2) + "\n";
  write_file(path, std::vector<unsigned char>(text.begin(), text.end()));
}

RunConfig desk_config() {
  RunConfig c;
  c.teacher = default_teacher_config(27, 32, 2);
  c.sampler = {27, 3};
  c.student = default_student_config(9, 3, 32, 16, 2);
  c.distill.stride = 3;
  c.optimizer.epochs = 30;
  // Small batches with a lower rate: the desk budget allows few optimizer steps.
  c.optimizer.batch_size = 8;
  c.optimizer.learning_rate = 5e-4;
  c.optimizer.samples_per_epoch = 256;
  // The teacher gets twice the windows per epoch so it ends clearly ahead of
  // the undistilled student; a weaker teacher only drags students down.
  OptimizerConfig teacher = c.optimizer;
  teacher.samples_per_epoch = 512;
  c.teacher_optimizer = teacher;
  c.data.path = "data/desk.bin";
  c.data.spec.train_clips = 200;
  c.data.spec.eval_clips = 50;
  c.data.spec.frames_per_clip = 240;
  c.training.pool_size = 2048;
  c.training.eval_frame_stride = 8;
  c.output_dir = "runs/desk";
  return c;
}

}  // namespace scjd
