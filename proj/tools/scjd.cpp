// Command-line entry point: dataset generation, teacher training,
// distillation, evaluation, ablation grids and FLOPs reports.

#include <zlib.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "scjd/byteio.hpp"
#include "scjd/config.hpp"
#include "scjd/errors.hpp"
#include "scjd/experiment.hpp"
#include "scjd/flops.hpp"
#include "scjd/metrics.hpp"
#include "scjd/skeleton.hpp"
#include "scjd/train.hpp"

namespace fs = std::filesystem;
using namespace scjd;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kNumerical = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

RunConfig load_config(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  validate(cfg);
  return cfg;
}

// Adler-32, not CRC-32: every dataset record ends with its own CRC-32, which
// makes a whole-file CRC-32 the same constant for any content.
std::uint32_t file_checksum(const fs::path& path) {
  const auto bytes = read_file(path);
  return static_cast<std::uint32_t>(adler32(1L, bytes.data(), static_cast<uInt>(bytes.size())));
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write " + path.string());
  out << text;
}

void print_epoch(const char* who, const EpochRecord& r) {
  std::fprintf(stderr, "%s epoch %zu lr %.3g loss %.4f reg %.3f", who, r.epoch, r.lr, r.loss_total, r.loss_reg);
  if (r.loss_emb) std::fprintf(stderr, " emb %.4f (%s)", *r.loss_emb, r.emb_regime.c_str());
  if (r.loss_attn) std::fprintf(stderr, " attn %.4f", *r.loss_attn);
  if (r.loss_temp) std::fprintf(stderr, " temp %.4f", *r.loss_temp);
  if (r.eval_mpjpe) std::fprintf(stderr, " eval %.2f mm", *r.eval_mpjpe);
  std::fprintf(stderr, "\n");
}

std::unique_ptr<Workspace> open_workspace(const RunConfig& cfg) {
  return make_workspace(cfg, load_dataset(cfg.data.path));
}

fs::path teacher_dir(const RunConfig& cfg) { return fs::path(cfg.output_dir) / "teacher"; }

PoseFormerModel load_teacher(const RunConfig& cfg, const fs::path& path) {
  if (!fs::exists(path)) throw FileError("teacher checkpoint not found: " + path.string());
  PoseFormerModel teacher = load_model(path);
  if (to_json(teacher.config()) != to_json(cfg.teacher))
    throw ConfigError("teacher checkpoint config == teacher config violated (" + path.string() + ")");
  return teacher;
}

// Input layout a checkpoint expects, recovered from its own config.
InputSpec input_for(const ModelConfig& m, bool contiguous) {
  if (m.role == Role::teacher) return dense_input(m.frames);
  return sampled_input(SamplerConfig{m.head_frames(), m.upsample_stride}, !contiguous);
}

unsigned worker_count() {
  if (const char* env = std::getenv("SCJD_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return 1;
}

int cmd_gen_data(const Common& c, std::string out, const std::string& csv_dir) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (c.seed) cfg.data.spec.seed = *c.seed;
  const fs::path path = out.empty() ? fs::path(cfg.data.path) : fs::path(out);
  if (fs::exists(path) && !c.force) {
    std::cerr << "error: " << path << " exists; pass --force to overwrite\n";
    return kData;
  }
  const auto clips = generate_dataset(build_h36m17(), cfg.data.spec);
  if (clips.empty()) std::cerr << "warning: dataset has 0 clips\n";
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_dataset(clips, path);
  if (!csv_dir.empty()) {
    fs::create_directories(csv_dir);
    for (const auto& clip : clips) {
      std::ofstream f(fs::path(csv_dir) / (clip.id + ".csv"));
      export_csv(clip, f);
    }
  }
  std::cout << "clips " << clips.size() << "\nchecksum " << hex32(file_checksum(path)) << "\npath " << path.string()
            << "\n";
  return kOk;
}

int cmd_train_teacher(const Common& c, bool dry_run, bool resume) {
  const RunConfig cfg = load_config(c);
  if (dry_run) {
    const auto t = count_flops(cfg.teacher);
    const auto s = count_flops(cfg.student);
    std::cout << "config ok\n"
              << "teacher params " << t.params << " flops " << t.analytic_flops << "\n"
              << "student params " << s.params << " flops " << s.analytic_flops << "\n";
    return kOk;
  }
  const auto ws = open_workspace(cfg);
  TrainOptions opts;
  opts.out_dir = teacher_dir(cfg);
  opts.resume = resume;
  opts.on_epoch = [](const EpochRecord& r) { print_epoch("teacher", r); };
  const PoseFormerModel teacher = train_teacher_model(*ws, opts);
  std::cout << "checkpoint " << (opts.out_dir / "model.ckpt").string() << "\n";
  if (!ws->eval_clips.empty()) {
    const auto m = evaluate(teacher, ws->eval_clips, dense_input(cfg.teacher.frames), ws->topo, eval_options(cfg));
    write_text(opts.out_dir / "eval.json", m.to_json() + "\n");
    std::printf("eval mpjpe %.3f mm\n", m.mpjpe_mm);
  }
  return kOk;
}

int cmd_distill(const Common& c, const std::string& teacher_ckpt, bool no_distill, bool resume,
                const std::vector<std::string>& toggle_names, const std::string& out_dir) {
  const RunConfig cfg = load_config(c);
  ToggleSet toggles;
  for (const auto& t : toggle_names) toggles.push_back(toggle_from_string(t));
  if (no_distill && !has_toggle(toggles, Toggle::no_distill)) toggles.push_back(Toggle::no_distill);
  const DistillSetup setup = make_distill_setup(cfg, toggles, build_h36m17());

  std::optional<PoseFormerModel> teacher;
  if (setup.any_term()) {
    const fs::path p = teacher_ckpt.empty() ? teacher_dir(cfg) / "model.ckpt" : fs::path(teacher_ckpt);
    teacher.emplace(load_teacher(cfg, p));
  }
  const auto ws = open_workspace(cfg);
  std::optional<TeacherCache> cache;
  if (teacher) cache.emplace(*teacher, ws->train_clips, ws->data.pool, ws->topo);

  TrainOptions opts;
  opts.out_dir = out_dir.empty() ? fs::path(cfg.output_dir) / "student" : fs::path(out_dir);
  opts.resume = resume;
  opts.on_epoch = [](const EpochRecord& r) { print_epoch("student", r); };
  const StudentRun run = run_student(*ws, cache ? &*cache : nullptr, toggles, cfg.seed, opts);
  std::cout << "row " << row_label(toggles) << "\ncheckpoint " << (opts.out_dir / "model.ckpt").string()
            << "\nparameters " << hex64(run.checkpoint_checksum) << "\n";
  if (!ws->eval_clips.empty()) {
    write_text(opts.out_dir / "eval.json", run.metrics.to_json() + "\n");
    std::printf("eval mpjpe %.3f mm\n", run.metrics.mpjpe_mm);
  }
  return kOk;
}

int cmd_eval(const Common& c, const std::string& ckpt, const std::string& data, const std::string& split,
             bool contiguous, const std::string& out) {
  EvalOptions eo;
  if (!c.config.empty()) eo = eval_options(load_config(c));
  const PoseFormerModel model = load_model(ckpt);
  std::vector<MotionClip> clips;
  for (auto& clip : load_dataset(data)) {
    const bool ev = is_eval_clip(clip);
    if (split == "all" || (split == "eval") == ev) clips.push_back(std::move(clip));
  }
  if (clips.empty()) throw DataError("no clips in split '" + split + "' of " + data);
  const auto report = evaluate(model, clips, input_for(model.config(), contiguous), build_h36m17(), eo);
  const std::string doc = report.to_json();
  if (!out.empty()) write_text(out, doc + "\n");
  std::cout << doc << "\n";
  return kOk;
}

int cmd_ablate(const Common& c, const std::string& spec_path, const std::string& teacher_ckpt) {
  const RunConfig cfg = load_config(c);
  std::ifstream sf(spec_path);
  if (!sf) throw FileError("cannot read ablation spec " + spec_path);
  nlohmann::json sj;
  try {
    sj = nlohmann::json::parse(sf);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("ablation spec is not valid JSON: ") + e.what());
  }
  const AblationSpec spec = ablation_spec_from_json(sj);
  const auto ws = open_workspace(cfg);

  bool need_teacher = false;
  for (const auto& row : spec.rows) need_teacher |= make_distill_setup(cfg, row, ws->topo).any_term();
  std::optional<PoseFormerModel> teacher;
  if (need_teacher) {
    const fs::path p = teacher_ckpt.empty() ? teacher_dir(cfg) / "model.ckpt" : fs::path(teacher_ckpt);
    if (!teacher_ckpt.empty() || fs::exists(p)) {
      teacher.emplace(load_teacher(cfg, p));
    } else {
      std::cerr << "no teacher checkpoint at " << p << "; training one\n";
      TrainOptions to;
      to.out_dir = teacher_dir(cfg);
      to.on_epoch = [](const EpochRecord& r) { print_epoch("teacher", r); };
      teacher.emplace(train_teacher_model(*ws, to));
    }
  }
  std::optional<TeacherCache> cache;
  if (teacher) cache.emplace(*teacher, ws->train_clips, ws->data.pool, ws->topo);

  struct Cell {
    ToggleSet toggles;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& row : spec.rows)
    for (auto s : spec.seeds) cells.push_back({row, s});
  std::vector<StudentRun> runs(cells.size());
  const fs::path root = fs::path(cfg.output_dir) / "ablate";

  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        std::string slug = row_label(cells[i].toggles);
        for (auto& ch : slug)
          if (ch == ' ' || ch == '/' || ch == '+') ch = '_';
        TrainOptions to;
        to.out_dir = root / slug / ("seed" + std::to_string(cells[i].seed));
        runs[i] = run_student(*ws, cache ? &*cache : nullptr, cells[i].toggles, cells[i].seed, to);
        std::lock_guard lock(err_mu);
        std::fprintf(stderr, "%-24s seed %llu  mpjpe %.3f mm\n", row_label(cells[i].toggles).c_str(),
                     static_cast<unsigned long long>(cells[i].seed), runs[i].metrics.mpjpe_mm);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!err) err = std::current_exception();
        next = cells.size();
      }
    }
  };
  const unsigned n = std::min<unsigned>(worker_count(), static_cast<unsigned>(std::max<std::size_t>(cells.size(), 1)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);

  const AblationTable table = summarize(spec, runs);
  write_text(root / "table.jsonl", table.to_jsonl());
  write_text(root / "table.txt", table.render());
  std::cout << table.render();
  return kOk;
}

int cmd_flops(const Common& c) {
  const RunConfig cfg = load_config(c);
  bool ok = true;
  std::uint64_t analytic[2] = {0, 0};
  const ModelConfig* models[2] = {&cfg.teacher, &cfg.student};
  for (int i = 0; i < 2; ++i) {
    FlopsReport r = count_flops(*models[i]);
    r.model = i == 0 ? "teacher" : "student";
    r.instrumented_multiplies = instrumented_flops(*models[i]);
    analytic[i] = r.analytic_flops;
    std::cout << r.to_json() << "\n";
    std::cout << r.model << " analytic == 2 x instrumented: " << (r.consistent() ? "PASS" : "FAIL") << "\n";
    ok &= r.consistent();
  }
  const double ratio = static_cast<double>(analytic[1]) / static_cast<double>(analytic[0]);
  std::printf("student/teacher flops ratio %.4f (%s < 0.25)\n", ratio, ratio < 0.25 ? "PASS" : "FAIL");
  return ok ? kOk : kFailure;
}

// Prints a preset as a starting point for --config files.
int cmd_config(const std::string& preset, const std::string& out, bool force) {
  RunConfig cfg;
  if (preset == "desk") cfg = desk_config();
  const std::string text = to_json(cfg).dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
    return kOk;
  }
  if (std::filesystem::exists(out) && !force) throw FileError(out + " exists (use --force to overwrite)");
  write_text(out, text);
  std::cout << "wrote " << out << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-sampling pose transformer distillation toolkit"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", common.config, "run configuration (JSON)");
    if (config_required) opt->required();
    sub->add_option_function<std::uint64_t>(
        "--seed", [&common](const std::uint64_t& v) { common.seed = v; }, "override the configured seed");
    sub->add_flag("--force", common.force, "overwrite existing outputs");
  };

  std::string out, csv_dir, teacher_ckpt, ckpt, data, split = "eval", spec, out_dir;
  bool dry_run = false, resume = false, no_distill = false, contiguous = false;
  std::vector<std::string> toggles;

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic motion dataset");
  add_common(gen, false);
  gen->add_option("--out", out, "dataset path (default: data.path from the config)");
  gen->add_option("--csv", csv_dir, "also export every clip as CSV into this directory");

  auto* tt = app.add_subcommand("train-teacher", "pretrain the dense teacher");
  add_common(tt, true);
  tt->add_flag("--dry-run", dry_run, "validate and print parameter/FLOPs counts only");
  tt->add_flag("--resume", resume, "continue from <output_dir>/teacher/state.ckpt");

  auto* ds = app.add_subcommand("distill", "train a sparse-input student against a frozen teacher");
  add_common(ds, true);
  ds->add_option("--teacher-ckpt", teacher_ckpt, "teacher checkpoint (default: <output_dir>/teacher/model.ckpt)");
  ds->add_flag("--no-distill", no_distill, "train the student on the regression loss only");
  ds->add_option("--toggle", toggles, "ablation toggle, repeatable (no_emb, no_attn, ...)");
  ds->add_option("--out-dir", out_dir, "run directory (default: <output_dir>/student)");
  ds->add_flag("--resume", resume, "continue from the run directory's state.ckpt");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  add_common(ev, false);
  ev->add_option("--ckpt", ckpt, "model checkpoint")->required();
  ev->add_option("--data", data, "dataset file")->required();
  ev->add_option("--split", split, "eval, train or all")->check(CLI::IsMember({"eval", "train", "all"}));
  ev->add_flag("--contiguous", contiguous, "student was trained on contiguous frames");
  ev->add_option("--out", out, "also write the report here");

  auto* ab = app.add_subcommand("ablate", "run a toggle grid over seeds and tabulate MPJPE");
  add_common(ab, true);
  ab->add_option("--spec", spec, "ablation spec (JSON)")->required();
  ab->add_option("--teacher-ckpt", teacher_ckpt, "teacher checkpoint (trained if absent)");

  std::string preset = "default";
  auto* cf = app.add_subcommand("config", "print a preset run configuration");
  cf->add_option("--preset", preset, "default or desk")->check(CLI::IsMember({"default", "desk"}));
  cf->add_option("--out", out, "write to this file instead of stdout");
  cf->add_flag("--force", common.force, "overwrite an existing file");

  auto* fl = app.add_subcommand("flops", "analytic and instrumented FLOPs of teacher and student");
  add_common(fl, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*gen) return cmd_gen_data(common, out, csv_dir);
    if (*tt) return cmd_train_teacher(common, dry_run, resume);
    if (*ds) return cmd_distill(common, teacher_ckpt, no_distill, resume, toggles, out_dir);
    if (*ev) return cmd_eval(common, ckpt, data, split, contiguous, out);
    if (*ab) return cmd_ablate(common, spec, teacher_ckpt);
    if (*fl) return cmd_flops(common);
    if (*cf) return cmd_config(preset, out, common.force);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const FileError& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return kData;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
