#include "scjd/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "scjd/byteio.hpp"
#include "scjd/config.hpp"
#include "scjd/ops.hpp"
#include "scjd/seed.hpp"

namespace scjd {

void validate(const OptimizerConfig& cfg) {
  auto fail = [](const std::string& m) { throw ConfigError("optimizer: " + m); };
  if (!(cfg.learning_rate >= 0.0)) fail("learning_rate must be >= 0");
  if (!(cfg.weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (!(cfg.lr_decay_per_epoch > 0.0 && cfg.lr_decay_per_epoch <= 1.0)) fail("0 < lr_decay_per_epoch <= 1 violated");
  if (cfg.batch_size < 1) fail("batch_size must be >= 1");
  if (cfg.samples_per_epoch < 1) fail("samples_per_epoch must be >= 1");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) fail("betas must lie in [0, 1)");
  if (!(cfg.eps > 0.0)) fail("eps must be > 0");
}

double learning_rate_at(const OptimizerConfig& cfg, std::size_t epoch) {
  return cfg.learning_rate * std::pow(cfg.lr_decay_per_epoch, static_cast<double>(epoch));
}

AdamState make_adam_state(const ParameterList& params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.tensor.numel(), 0.0);
    s.v.emplace_back(p.tensor.numel(), 0.0);
  }
  return s;
}

void adam_step(ParameterList& params, AdamState& state, const OptimizerConfig& cfg, double lr) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ContractError("adam_step: optimizer state does not match the parameter list");
  }
  for (const auto& p : params) {
    for (double g : p.tensor.grad()) {
      if (!std::isfinite(g)) throw NumericalError("non-finite gradient in parameter '" + p.name + "'");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  const double decay = lr * cfg.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].tensor.mutable_values();
    const auto grad = params[i].tensor.grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double g = grad.empty() ? 0.0 : grad[k];
      values[k] -= decay * values[k];
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g;
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g;
      values[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + cfg.eps);
    }
  }
}

std::vector<WindowRef> make_window_pool(const std::vector<MotionClip>& clips, std::size_t size, std::uint64_t seed,
                                        double flip_probability) {
  std::size_t total = 0;
  for (const auto& c : clips) total += c.seq3d.frames;
  if (total == 0) throw DataError("training set has no frames");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution flip(flip_probability);
  std::vector<WindowRef> pool;
  if (size == 0) {
    for (std::size_t c = 0; c < clips.size(); ++c) {
      for (std::size_t f = 0; f < clips[c].seq3d.frames; ++f) {
        pool.push_back({static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(f), flip(rng)});
      }
    }
    return pool;
  }
  // Uniform over frames, so long clips are not under-represented.
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  for (std::size_t i = 0; i < size; ++i) {
    std::size_t k = pick(rng);
    std::size_t c = 0;
    while (k >= clips[c].seq3d.frames) k -= clips[c++].seq3d.frames;
    pool.push_back({static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(k), flip(rng)});
  }
  return pool;
}

InputSpec dense_input(std::size_t frames) {
  InputSpec s;
  s.window = frames;
  s.indices.resize(frames);
  std::iota(s.indices.begin(), s.indices.end(), 0);
  return s;
}

InputSpec sampled_input(const SamplerConfig& cfg, bool sparse) {
  return {cfg.teacher_frames, sparse ? sparse_sample_indices(cfg) : contiguous_indices(cfg)};
}

Batch make_batch(const std::vector<MotionClip>& clips, std::span<const WindowRef> refs, const InputSpec& spec,
                 const SkeletonTopology& topo) {
  const std::size_t J = topo.num_joints, B = refs.size(), f = spec.indices.size();
  const auto perm = topo.flip_permutation();
  std::vector<double> input(B * f * J * 2), target(B * J * 3);
  for (std::size_t b = 0; b < B; ++b) {
    const auto& r = refs[b];
    if (r.clip >= clips.size()) throw ContractError("window refers to clip " + std::to_string(r.clip));
    const auto& clip = clips[r.clip];
    if (clip.seq2d.joints != J || clip.seq3d.joints != J) {
      throw DataError("clip " + clip.id + " has " + std::to_string(clip.seq2d.joints) + " joints, skeleton has " +
                      std::to_string(J));
    }
    if (r.center >= clip.seq3d.frames) throw ContractError("window center beyond clip " + clip.id);
    const auto window = extract_window(clip.seq2d.coords, clip.seq2d.frames, J * 2, r.center, spec.window);
    double* in = input.data() + b * f * J * 2;
    for (std::size_t k = 0; k < f; ++k) {
      if (spec.indices[k] >= spec.window) throw ContractError("input index outside the window");
      std::copy_n(window.data() + spec.indices[k] * J * 2, J * 2, in + k * J * 2);
    }
    double* tg = target.data() + b * J * 3;
    std::copy_n(clip.seq3d.coords.data() + static_cast<std::size_t>(r.center) * J * 3, J * 3, tg);
    if (r.flip) {
      flip_in_place({in, f * J * 2}, J, 2, perm);
      flip_in_place({tg, J * 3}, J, 3, perm);
    }
  }
  return {Tensor::from({B, f, J, 2}, std::move(input)), Tensor::from({B, J * 3}, std::move(target))};
}

TeacherCache::TeacherCache(const PoseFormerModel& teacher, const std::vector<MotionClip>& clips,
                           const std::vector<WindowRef>& pool, const SkeletonTopology& topo, std::size_t chunk)
    : count_(pool.size()),
      frames_(teacher.config().frames),
      joints_(teacher.config().joints),
      width_(teacher.config().embed_dim),
      teacher_checksum_(parameter_checksum(teacher.parameters())) {
  const std::size_t row = frames_ * joints_ * width_;
  embeddings_.resize(count_ * row);
  temporal_.resize(count_ * row);
  const InputSpec spec = dense_input(frames_);
  NoGradGuard no_grad;
  for (std::size_t start = 0; start < count_; start += chunk) {
    const std::size_t n = std::min(chunk, count_ - start);
    const Batch batch = make_batch(clips, {pool.data() + start, n}, spec, topo);
    const Tensor emb = teacher.spatial_forward(batch.input);
    const Tensor tmp = teacher.temporal_forward(emb);
    std::copy(emb.values().begin(), emb.values().end(), embeddings_.begin() + static_cast<long>(start * row));
    std::copy(tmp.values().begin(), tmp.values().end(), temporal_.begin() + static_cast<long>(start * row));
  }
}

DistillTaps TeacherCache::gather(std::span<const std::size_t> pool_indices) const {
  const std::size_t row = frames_ * joints_ * width_, B = pool_indices.size();
  std::vector<double> emb(B * row), tmp(B * row);
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t i = pool_indices[b];
    if (i >= count_) throw ContractError("teacher cache index " + std::to_string(i) + " out of range");
    std::copy_n(embeddings_.begin() + static_cast<long>(i * row), row, emb.begin() + static_cast<long>(b * row));
    std::copy_n(temporal_.begin() + static_cast<long>(i * row), row, tmp.begin() + static_cast<long>(b * row));
  }
  DistillTaps taps;
  taps.frame_embeddings = Tensor::from({B, frames_, joints_, width_}, std::move(emb));
  taps.temporal_out = Tensor::from({B, frames_, joints_ * width_}, std::move(tmp));
  return taps;
}

std::string EpochRecord::to_json() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["lr"] = lr;
  j["loss_total"] = loss_total;
  j["loss_reg"] = loss_reg;
  if (loss_emb) j["loss_emb"] = *loss_emb;
  if (loss_attn) j["loss_attn"] = *loss_attn;
  if (loss_temp) j["loss_temp"] = *loss_temp;
  if (!emb_regime.empty()) j["emb_regime"] = emb_regime;
  if (emb_probe) j["emb_probe"] = *emb_probe;
  if (eval_mpjpe) j["eval_mpjpe"] = *eval_mpjpe;
  return j.dump();
}

EpochRecord EpochRecord::from_json(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("metrics log: ") + e.what());
  }
  EpochRecord r;
  r.epoch = j.at("epoch").get<std::size_t>();
  r.lr = j.at("lr").get<double>();
  r.loss_total = j.at("loss_total").get<double>();
  r.loss_reg = j.at("loss_reg").get<double>();
  auto opt = [&](const char* key, std::optional<double>& dst) {
    if (j.contains(key)) dst = j[key].get<double>();
  };
  opt("loss_emb", r.loss_emb);
  opt("loss_attn", r.loss_attn);
  opt("loss_temp", r.loss_temp);
  opt("emb_probe", r.emb_probe);
  opt("eval_mpjpe", r.eval_mpjpe);
  if (j.contains("emb_regime")) r.emb_regime = j["emb_regime"].get<std::string>();
  return r;
}

namespace {

std::vector<std::size_t> epoch_order(std::size_t pool, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order;
  order.reserve(samples);
  std::vector<std::size_t> perm(pool);
  while (order.size() < samples) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const std::size_t take = std::min(pool, samples - order.size());
    order.insert(order.end(), perm.begin(), perm.begin() + static_cast<long>(take));
  }
  return order;
}

using StepFn = std::function<LossTerms(std::span<const std::size_t> pool_indices, std::size_t epoch)>;
using EpochHook = std::function<void(EpochRecord&, std::size_t epoch)>;

const char* kStateFile = "state.ckpt";
const char* kLogFile = "metrics.jsonl";
const char* kModelFile = "model.ckpt";

void save_state(const std::filesystem::path& path, const ParameterList& params, const AdamState& st,
                std::size_t epoch) {
  ParameterList out = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Shape& s = params[i].tensor.shape();
    out.push_back({"adam.m/" + params[i].name, Tensor::from(s, st.m[i])});
    out.push_back({"adam.v/" + params[i].name, Tensor::from(s, st.v[i])});
  }
  out.push_back({"train.epoch", Tensor::scalar(static_cast<double>(epoch))});
  out.push_back({"train.step", Tensor::scalar(static_cast<double>(st.step))});
  const auto tmp = path.string() + ".tmp";
  write_file(tmp, encode_checkpoint(out));
  std::filesystem::rename(tmp, path);
}

std::size_t load_state(const std::filesystem::path& path, ParameterList& params, AdamState& st) {
  const ParameterList saved = load_checkpoint(path);
  assign_parameters(params, saved);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto* m = find_parameter(saved, "adam.m/" + params[i].name);
    const auto* v = find_parameter(saved, "adam.v/" + params[i].name);
    if (!m || !v || m->tensor.numel() != st.m[i].size() || v->tensor.numel() != st.v[i].size()) {
      throw FormatError("resume: optimizer moments missing for '" + params[i].name + "' in " + path.string());
    }
    st.m[i].assign(m->tensor.values().begin(), m->tensor.values().end());
    st.v[i].assign(v->tensor.values().begin(), v->tensor.values().end());
  }
  const auto* e = find_parameter(saved, "train.epoch");
  const auto* s = find_parameter(saved, "train.step");
  if (!e || !s) throw FormatError("resume: " + path.string() + " has no training counters");
  st.step = static_cast<std::uint64_t>(s->tensor.item());
  return static_cast<std::size_t>(e->tensor.item());
}

std::vector<EpochRecord> read_log(const std::filesystem::path& path, std::size_t keep) {
  std::vector<EpochRecord> out;
  std::ifstream in(path);
  std::string line;
  while (out.size() < keep && std::getline(in, line)) {
    if (!line.empty()) out.push_back(EpochRecord::from_json(line));
  }
  if (out.size() != keep) {
    throw FormatError("resume: " + path.string() + " has " + std::to_string(out.size()) + " epochs, state has " +
                      std::to_string(keep));
  }
  return out;
}

void write_log(const std::filesystem::path& path, const std::vector<EpochRecord>& log) {
  std::ostringstream os;
  for (const auto& r : log) os << r.to_json() << '\n';
  const std::string s = os.str();
  write_file(path, std::vector<unsigned char>(s.begin(), s.end()));
}

TrainResult run_training(ParameterList params, std::size_t pool_size, const OptimizerConfig& opt,
                         const TrainOptions& options, const DistillConfig& weights, const StepFn& step,
                         const EpochHook& before_epoch, const EpochHook& after_epoch,
                         const std::function<void(const std::filesystem::path&)>& save_final) {
  validate(opt);
  if (pool_size == 0) throw DataError("training pool is empty");
  AdamState st = make_adam_state(params);
  TrainResult result;
  std::size_t start = 0;
  const bool persist = !options.out_dir.empty();
  if (persist) std::filesystem::create_directories(options.out_dir);
  if (options.resume) {
    if (!persist) throw ConfigError("resume requires an output directory");
    const auto state_path = options.out_dir / kStateFile;
    if (!std::filesystem::exists(state_path)) throw FileError("resume: no training state at " + state_path.string());
    start = load_state(state_path, params, st);
    result.log = read_log(options.out_dir / kLogFile, start);
  } else if (persist) {
    write_log(options.out_dir / kLogFile, {});
  }

  std::size_t end = opt.epochs;
  if (options.stop_after_epoch) end = std::min(end, options.stop_after_epoch);
  for (std::size_t e = start; e < end; ++e) {
    EpochRecord rec;
    rec.epoch = e + 1;
    rec.lr = learning_rate_at(opt, e);
    if (before_epoch) before_epoch(rec, e + 1);

    const auto order = epoch_order(pool_size, opt.samples_per_epoch, derive_seed(opt.seed, e + 1));
    double sum_total = 0, sum_reg = 0, sum_emb = 0, sum_attn = 0, sum_temp = 0;
    bool has_emb = false, has_attn = false, has_temp = false;
    for (std::size_t b = 0; b < order.size(); b += opt.batch_size) {
      const std::size_t n = std::min(opt.batch_size, order.size() - b);
      for (auto& p : params) p.tensor.zero_grad();
      const LossTerms terms = step({order.data() + b, n}, e + 1);
      Tensor total;
      try {
        total = total_loss(terms, weights);
      } catch (const NumericalError& err) {
        throw NumericalError(std::string(err.what()) + " at epoch " + std::to_string(e + 1) +
                             (persist ? "; last good state: " + (options.out_dir / kStateFile).string() : ""));
      }
      total.backward();
      adam_step(params, st, opt, rec.lr);
      const double w = static_cast<double>(n);
      sum_total += w * total.item();
      sum_reg += w * terms.reg.item();
      if (terms.emb.defined()) has_emb = true, sum_emb += w * terms.emb.item();
      if (terms.attn.defined()) has_attn = true, sum_attn += w * terms.attn.item();
      if (terms.temp.defined()) has_temp = true, sum_temp += w * terms.temp.item();
    }
    const double count = static_cast<double>(order.size());
    rec.loss_total = sum_total / count;
    rec.loss_reg = sum_reg / count;
    if (has_emb) rec.loss_emb = sum_emb / count;
    if (has_attn) rec.loss_attn = sum_attn / count;
    if (has_temp) rec.loss_temp = sum_temp / count;
    if (after_epoch) after_epoch(rec, e + 1);

    result.log.push_back(rec);
    if (persist) {
      std::ofstream(options.out_dir / kLogFile, std::ios::app) << rec.to_json() << '\n';
      save_state(options.out_dir / kStateFile, params, st, e + 1);
    }
    if (options.on_epoch) options.on_epoch(rec);
  }
  result.epochs_completed = std::max(start, end);
  if (persist && result.epochs_completed == opt.epochs) save_final(options.out_dir / kModelFile);
  return result;
}

EpochHook eval_hook(const PoseFormerModel& model, const InputSpec& spec, const SkeletonTopology& topo,
                    const TrainOptions& options) {
  if (!options.eval_clips || options.eval_every == 0) return {};
  return [&model, spec, &topo, &options](EpochRecord& rec, std::size_t epoch) {
    if (epoch % options.eval_every != 0) return;
    rec.eval_mpjpe = evaluate(model, *options.eval_clips, spec, topo, options.eval).mpjpe_mm;
  };
}

std::vector<WindowRef> select(const std::vector<WindowRef>& pool, std::span<const std::size_t> idx) {
  std::vector<WindowRef> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(pool[i]);
  return out;
}

void check_data(const TrainData& data) {
  if (!data.clips || !data.topo) throw ContractError("training data is incomplete");
  if (data.clips->empty()) throw DataError("training set is empty");
}

}  // namespace

TrainResult train_teacher(PoseFormerModel& teacher, const TrainData& data, const OptimizerConfig& opt,
                          const TrainOptions& options) {
  check_data(data);
  const InputSpec spec = dense_input(teacher.config().frames);
  const StepFn step = [&](std::span<const std::size_t> idx, std::size_t) {
    const auto refs = select(data.pool, idx);
    const Batch batch = make_batch(*data.clips, refs, spec, *data.topo);
    LossTerms terms;
    terms.reg = mpjpe_loss(teacher.forward(batch.input).center_pred, batch.target);
    return terms;
  };
  DistillConfig reg_only;
  return run_training(teacher.parameters(), data.pool.size(), opt, options, reg_only, step, {},
                      eval_hook(teacher, spec, *data.topo, options),
                      [&](const std::filesystem::path& p) { save_model(teacher, p); });
}

bool DistillSetup::any_term() const {
  return (use_emb && cfg.alpha > 0.0) || (use_attn && cfg.beta > 0.0) || (use_temp && cfg.gamma > 0.0);
}

TrainResult distill_student(PoseFormerModel& student, ProjectionHead& proj, const TeacherCache* teacher,
                            const TrainData& data, const DistillSetup& setup, const OptimizerConfig& opt,
                            const TrainOptions& options) {
  check_data(data);
  validate(setup.cfg);
  validate(setup.sampler);
  const bool emb = setup.use_emb && setup.cfg.alpha > 0.0;
  const bool attn = setup.use_attn && setup.cfg.beta > 0.0;
  const bool temp = setup.use_temp && setup.cfg.gamma > 0.0;
  const auto& scfg = student.config();
  if (setup.cfg.stride != setup.sampler.stride) {
    throw ConfigError("distill.stride == sampler.stride violated (" + std::to_string(setup.cfg.stride) + " vs " +
                      std::to_string(setup.sampler.stride) + ")");
  }
  if (scfg.frames != setup.sampler.student_frames()) {
    throw ConfigError("student.frames == teacher_frames / stride violated");
  }
  if (setup.any_term()) {
    if (!teacher) throw ContractError("distillation terms are active but no teacher features were given");
    if (teacher->size() != data.pool.size()) throw ContractError("teacher cache does not cover the training pool");
  }
  if (attn && setup.mask.joints() != scfg.joints) throw ContractError("adjacency mask does not match the student");

  const InputSpec spec = sampled_input(setup.sampler, setup.sparse_sampling);
  const std::vector<std::size_t> align = spec.indices;
  const auto regime = [&](std::size_t epoch) { return epoch <= setup.cfg.warmup_epochs ? "direct" : "pooled"; };

  const StepFn step = [&](std::span<const std::size_t> idx, std::size_t epoch) {
    const auto refs = select(data.pool, idx);
    const Batch batch = make_batch(*data.clips, refs, spec, *data.topo);
    const DistillTaps s = student.forward(batch.input);
    LossTerms terms;
    terms.reg = mpjpe_loss(s.center_pred, batch.target);
    if (emb || attn || temp) {
      const DistillTaps t = teacher->gather(idx);
      if (emb) terms.emb = emb_loss(s, t, align, proj, epoch, setup.cfg);
      if (attn) terms.attn = attn_loss(s, t, align, setup.mask);
      if (temp) terms.temp = temp_loss(s.upsampled, t.temporal_out);
    }
    return terms;
  };

  EpochHook before;
  if (emb) {
    std::vector<std::size_t> probe(std::min(opt.batch_size, data.pool.size()));
    std::iota(probe.begin(), probe.end(), 0);
    before = [&, probe](EpochRecord& rec, std::size_t epoch) {
      NoGradGuard no_grad;
      const auto refs = select(data.pool, probe);
      const Batch batch = make_batch(*data.clips, refs, spec, *data.topo);
      const DistillTaps s = student.forward(batch.input);
      rec.emb_regime = regime(epoch);
      rec.emb_probe = emb_loss(s, teacher->gather(probe), align, proj, epoch, setup.cfg).item();
    };
  }

  ParameterList params = student.parameters();
  if (emb) proj.collect(params, "distill.proj");
  return run_training(params, data.pool.size(), opt, options, setup.cfg, step, before,
                      eval_hook(student, spec, *data.topo, options),
                      [&](const std::filesystem::path& p) { save_model(student, p); });
}

void save_model(const PoseFormerModel& model, const std::filesystem::path& path) {
  save_checkpoint(path, model.parameters());
  nlohmann::ordered_json side;
  side["prefix"] = model.prefix();
  side["model"] = to_json(model.config());
  const std::string text = side.dump(2) + "\n";
  write_file(path.string() + ".json", std::vector<unsigned char>(text.begin(), text.end()));
}

PoseFormerModel load_model(const std::filesystem::path& path) {
  const auto side_path = path.string() + ".json";
  const auto bytes = read_file(side_path);
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("model sidecar " + side_path + ": " + e.what());
  }
  if (!side.contains("model") || !side.contains("prefix")) {
    throw FormatError("model sidecar " + side_path + " lacks 'model' or 'prefix'");
  }
  PoseFormerModel model(model_config_from_json(side["model"]), side["prefix"].get<std::string>(), 0);
  const ParameterList saved = load_checkpoint(path);
  try {
    assign_parameters(model.parameters(), saved);
  } catch (const std::exception& e) {
    throw FormatError("checkpoint " + path.string() + " does not match its model config: " + e.what());
  }
  return model;
}

}  // namespace scjd
