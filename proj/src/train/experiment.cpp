#include "scjd/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "scjd/seed.hpp"

namespace scjd {

namespace {
constexpr std::pair<Toggle, const char*> kToggleNames[] = {
    {Toggle::no_sampling, "no_sampling"}, {Toggle::no_distill, "no_distill"},
    {Toggle::no_emb, "no_emb"},           {Toggle::no_attn, "no_attn"},
    {Toggle::no_temp, "no_temp"},         {Toggle::no_self_loop_mask, "no_self_loop_mask"},
};
}  // namespace

std::string to_string(Toggle t) {
  for (const auto& [k, name] : kToggleNames)
    if (k == t) return name;
  return "?";
}

Toggle toggle_from_string(const std::string& s) {
  for (const auto& [k, name] : kToggleNames)
    if (s == name) return k;
  throw ConfigError("unknown ablation toggle '" + s + "'");
}

bool has_toggle(const ToggleSet& set, Toggle t) { return std::find(set.begin(), set.end(), t) != set.end(); }

std::string row_label(const ToggleSet& set) {
  if (set.empty()) return "full";
  std::string out;
  for (Toggle t : set) {
    if (!out.empty()) out += " + ";
    switch (t) {
      case Toggle::no_emb: out += "w/o L_emb"; break;
      case Toggle::no_attn: out += "w/o L_attn"; break;
      case Toggle::no_temp: out += "w/o L_temp"; break;
      case Toggle::no_distill: out += "no distillation"; break;
      case Toggle::no_sampling: out += "contiguous frames"; break;
      case Toggle::no_self_loop_mask: out += "mask w/o self-loops"; break;
    }
  }
  return out;
}

AblationSpec component_ablation_spec(std::vector<std::uint64_t> seeds) {
  return {{{}, {Toggle::no_emb}, {Toggle::no_attn}, {Toggle::no_temp}}, std::move(seeds)};
}

AblationSpec ablation_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("ablation spec: expected an object");
  auto read_set = [](const nlohmann::json& arr) {
    if (!arr.is_array()) throw ConfigError("ablation spec: toggles must be an array of names");
    ToggleSet s;
    for (const auto& t : arr) {
      if (!t.is_string()) throw ConfigError("ablation spec: toggle names must be strings");
      const Toggle tg = toggle_from_string(t.get<std::string>());
      if (has_toggle(s, tg)) throw ConfigError("ablation spec: toggle '" + to_string(tg) + "' repeated in a row");
      s.push_back(tg);
    }
    return s;
  };
  AblationSpec spec;
  for (const auto& [key, value] : j.items()) {
    if (key != "rows" && key != "toggles" && key != "seeds") throw ConfigError("ablation spec: unknown key '" + key + "'");
  }
  if (j.contains("rows") && j.contains("toggles")) throw ConfigError("ablation spec: give either 'rows' or 'toggles'");
  if (j.contains("rows")) {
    if (!j["rows"].is_array()) throw ConfigError("ablation spec: 'rows' must be an array");
    for (const auto& r : j["rows"]) spec.rows.push_back(read_set(r));
  } else if (j.contains("toggles")) {
    spec.rows.push_back(read_set(j["toggles"]));
  } else {
    spec.rows = component_ablation_spec().rows;
  }
  if (j.contains("seeds")) {
    try {
      spec.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("ablation spec: 'seeds' must be a list of non-negative integers");
    }
  } else {
    spec.seeds = {0, 1, 2};
  }
  if (spec.rows.empty() || spec.seeds.empty()) throw ConfigError("ablation spec needs at least one row and one seed");
  return spec;
}

nlohmann::json to_json(const AblationSpec& spec) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : spec.rows) {
    nlohmann::json row = nlohmann::json::array();
    for (Toggle t : r) row.push_back(to_string(t));
    rows.push_back(row);
  }
  return {{"rows", rows}, {"seeds", spec.seeds}};
}

std::unique_ptr<Workspace> make_workspace(const RunConfig& cfg, std::vector<MotionClip> dataset) {
  validate(cfg);
  auto ws = std::make_unique<Workspace>();
  ws->cfg = cfg;
  ws->topo = build_h36m17();
  if (ws->topo.num_joints != cfg.teacher.joints) {
    throw ConfigError("teacher.joints == 17 violated for the built-in skeleton");
  }
  for (auto& c : dataset) (is_eval_clip(c) ? ws->eval_clips : ws->train_clips).push_back(std::move(c));
  if (ws->train_clips.empty()) throw DataError("dataset has no training clips");
  ws->data.clips = &ws->train_clips;
  ws->data.topo = &ws->topo;
  ws->data.pool = make_window_pool(ws->train_clips, cfg.training.pool_size, derive_seed(cfg.seed, 7),
                                   cfg.training.flip_probability);
  return ws;
}

EvalOptions eval_options(const RunConfig& cfg) {
  EvalOptions o;
  o.frame_stride = cfg.training.eval_frame_stride;
  o.flip_test = cfg.training.flip_test;
  o.batch_size = cfg.training.eval_batch;
  return o;
}

PoseFormerModel train_teacher_model(const Workspace& ws, const TrainOptions& options, TrainResult* result) {
  PoseFormerModel teacher(ws.cfg.teacher, "teacher", derive_seed(ws.cfg.seed, 1));
  TrainOptions opts = options;
  if (!opts.eval_clips && !ws.eval_clips.empty()) opts.eval_clips = &ws.eval_clips;
  if (opts.eval_every == 0) opts.eval_every = ws.cfg.training.eval_every;
  opts.eval = eval_options(ws.cfg);
  TrainResult r = train_teacher(teacher, ws.data, ws.cfg.teacher_opt(), opts);
  if (result) *result = std::move(r);
  return teacher;
}

DistillSetup make_distill_setup(const RunConfig& cfg, const ToggleSet& toggles, const SkeletonTopology& topo) {
  DistillSetup s;
  s.cfg = cfg.distill;
  s.sampler = cfg.sampler;
  s.sparse_sampling = !has_toggle(toggles, Toggle::no_sampling);
  const bool off = has_toggle(toggles, Toggle::no_distill);
  s.use_emb = !off && !has_toggle(toggles, Toggle::no_emb);
  s.use_attn = !off && !has_toggle(toggles, Toggle::no_attn);
  s.use_temp = !off && !has_toggle(toggles, Toggle::no_temp);
  const bool self_loops = cfg.distill.mask_self_loops && !has_toggle(toggles, Toggle::no_self_loop_mask);
  s.mask = adjacency_mask(topo, self_loops);
  return s;
}

StudentRun run_student(const Workspace& ws, const TeacherCache* teacher, const ToggleSet& toggles,
                       std::uint64_t seed, const TrainOptions& options) {
  const DistillSetup setup = make_distill_setup(ws.cfg, toggles, ws.topo);
  PoseFormerModel student(ws.cfg.student, "student", derive_seed(seed, 2));
  std::mt19937_64 proj_rng(derive_seed(seed, 3));
  ProjectionHead proj = ProjectionHead::init(ws.cfg.student.embed_dim, ws.cfg.teacher.embed_dim, proj_rng);

  TrainOptions opts = options;
  if (!opts.eval_clips && !ws.eval_clips.empty()) opts.eval_clips = &ws.eval_clips;
  if (opts.eval_every == 0) opts.eval_every = ws.cfg.training.eval_every;
  opts.eval = eval_options(ws.cfg);

  StudentRun run;
  run.toggles = toggles;
  run.seed = seed;
  run.train = distill_student(student, proj, setup.any_term() ? teacher : nullptr, ws.data, setup,
                              ws.cfg.student_opt(seed), opts);
  if (!ws.eval_clips.empty()) {
    run.metrics = evaluate(student, ws.eval_clips, sampled_input(setup.sampler, setup.sparse_sampling), ws.topo,
                           eval_options(ws.cfg));
  }
  if (!run.train.log.empty()) {
    const EpochRecord& last = run.train.log.back();
    run.metrics.loss_means["reg"] = last.loss_reg;
    if (last.loss_emb) run.metrics.loss_means["emb"] = *last.loss_emb;
    if (last.loss_attn) run.metrics.loss_means["attn"] = *last.loss_attn;
    if (last.loss_temp) run.metrics.loss_means["temp"] = *last.loss_temp;
  }
  run.checkpoint_checksum = parameter_checksum(student.parameters());
  return run;
}

AblationTable summarize(const AblationSpec& spec, const std::vector<StudentRun>& runs) {
  AblationTable table;
  for (const auto& toggles : spec.rows) {
    AblationRow row;
    row.label = row_label(toggles);
    row.toggles = toggles;
    for (const auto& r : runs) {
      if (r.toggles != toggles) continue;
      row.seeds.push_back(r.seed);
      row.mpjpe.push_back(r.metrics.mpjpe_mm);
    }
    if (!row.mpjpe.empty()) {
      double s = 0.0;
      for (double v : row.mpjpe) s += v;
      row.mean = s / static_cast<double>(row.mpjpe.size());
      double ss = 0.0;
      for (double v : row.mpjpe) ss += (v - row.mean) * (v - row.mean);
      row.stddev = std::sqrt(ss / static_cast<double>(row.mpjpe.size()));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string AblationTable::to_jsonl() const {
  std::ostringstream os;
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["row"] = r.label;
    nlohmann::json t = nlohmann::json::array();
    for (Toggle x : r.toggles) t.push_back(to_string(x));
    j["toggles"] = t;
    j["seeds"] = r.seeds;
    j["mpjpe_mm"] = r.mpjpe;
    j["mean"] = r.mean;
    j["std"] = r.stddev;
    os << j.dump() << '\n';
  }
  return os.str();
}

std::string AblationTable::render() const {
  std::size_t width = 13;
  for (const auto& r : rows) width = std::max(width, r.label.size());
  std::ostringstream os;
  char buf[128];
  os << "configuration" << std::string(width - 13, ' ') << "  MPJPE (mm, mean +- std)  seeds\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "  %8.3f +- %-7.3f        %zu", r.mean, r.stddev, r.mpjpe.size());
    os << r.label << std::string(width - r.label.size(), ' ') << buf << '\n';
  }
  return os.str();
}

}  // namespace scjd
