#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "scjd/config.hpp"
#include "scjd/experiment.hpp"

namespace scjd {
namespace {

std::string config_error(const RunConfig& c) {
  try {
    validate(c);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

TEST(RunConfig, DefaultsAndDeskConfigAreValid) {
  EXPECT_EQ(config_error(RunConfig{}), "");
  const auto d = desk_config();
  EXPECT_EQ(config_error(d), "");
  EXPECT_EQ(d.teacher.frames, 27u);
  EXPECT_EQ(d.student.frames, 9u);
  EXPECT_EQ(d.student.embed_dim, 16u);
  EXPECT_EQ(d.teacher.depth, 2u);
  EXPECT_EQ(d.optimizer.epochs, 30u);
  EXPECT_EQ(d.data.spec.train_clips, 200u);
  EXPECT_EQ(d.data.spec.eval_clips, 50u);
  EXPECT_EQ(d.data.spec.frames_per_clip, 240u);
}

TEST(RunConfig, JsonRoundTripIsLossless) {
  auto c = desk_config();
  c.teacher_optimizer = c.optimizer;
  c.teacher_optimizer->learning_rate = 3e-4;
  c.distill.gamma = 0.1 + 0.2;
  c.data.spec.motion.camera.focal = 1.0 / 3.0;
  c.seed = 0xdeadbeefcafeULL;
  const auto j = to_json(c);
  const auto back = run_config_from_json(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(back.distill.gamma, c.distill.gamma);
  EXPECT_EQ(back.seed, c.seed);

  const auto path = std::filesystem::temp_directory_path() / "scjd_config_test.json";
  save_run_config(c, path);
  EXPECT_EQ(to_json(load_run_config(path)), j);
  std::filesystem::remove(path);
}

TEST(RunConfig, MissingKeysKeepDefaults) {
  const auto c = run_config_from_json(nlohmann::json::parse(R"({"seed": 7})"));
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(to_json(c.teacher), to_json(RunConfig{}.teacher));
}

TEST(RunConfig, UnknownKeysAndWrongTypesAreRejected) {
  EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"sede": 7})")), ConfigError);
  EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"distill": {"alfa": 1}})")), ConfigError);
  EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"optimizer": {"epochs": "many"}})")), ConfigError);
  EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"([1, 2])")), ConfigError);
}

TEST(RunConfig, ViolationsNameTheInvariant) {
  auto c = RunConfig{};
  c.teacher.frames = 27;
  EXPECT_NE(config_error(c).find("sampler.teacher_frames == teacher.frames"), std::string::npos);

  c = RunConfig{};
  c.student = default_student_config(9, 3);
  EXPECT_NE(config_error(c).find("student.frames == teacher_frames / stride"), std::string::npos);

  c = RunConfig{};
  c.distill.stride = 9;
  EXPECT_NE(config_error(c).find("distill.stride == sampler.stride"), std::string::npos);

  c = RunConfig{};
  c.sampler.stride = 2;
  EXPECT_NE(config_error(c).find("sampler.stride"), std::string::npos);

  c = RunConfig{};
  c.distill.top_k = 9;
  EXPECT_NE(config_error(c).find("distill.top_k"), std::string::npos);

  c = RunConfig{};
  c.student.head_embed_dim = 16;
  EXPECT_NE(config_error(c).find("student.head_embed_dim == teacher.embed_dim"), std::string::npos);
}

TEST(RunConfig, OptimizerSeedsDifferPerRun) {
  const auto c = desk_config();
  EXPECT_NE(c.student_opt(0).seed, c.student_opt(1).seed);
  EXPECT_NE(c.teacher_opt().seed, c.student_opt(0).seed);
  EXPECT_EQ(c.student_opt(2).seed, c.student_opt(2).seed);
}

TEST(Ablation, ToggleNamesRoundTrip) {
  for (auto t : {Toggle::no_sampling, Toggle::no_distill, Toggle::no_emb, Toggle::no_attn, Toggle::no_temp,
                 Toggle::no_self_loop_mask})
    EXPECT_EQ(toggle_from_string(to_string(t)), t);
  EXPECT_THROW(toggle_from_string("no_everything"), ConfigError);
}

TEST(Ablation, RowLabels) {
  EXPECT_EQ(row_label({}), "full");
  EXPECT_EQ(row_label({Toggle::no_attn}), "w/o L_attn");
  EXPECT_EQ(row_label({Toggle::no_emb}), "w/o L_emb");
  EXPECT_EQ(row_label({Toggle::no_temp}), "w/o L_temp");
}

TEST(Ablation, ComponentGridHasTwelveRuns) {
  const auto spec = component_ablation_spec();
  EXPECT_EQ(spec.rows.size() * spec.seeds.size(), 12u);
  EXPECT_TRUE(spec.rows.front().empty());
}

TEST(Ablation, SpecParsing) {
  auto s = ablation_spec_from_json(nlohmann::json::parse(R"({"toggles": ["no_attn"], "seeds": [4, 5]})"));
  ASSERT_EQ(s.rows.size(), 1u);
  EXPECT_EQ(s.rows[0], ToggleSet{Toggle::no_attn});
  EXPECT_EQ(s.seeds, (std::vector<std::uint64_t>{4, 5}));
  s = ablation_spec_from_json(nlohmann::json::parse(R"({"rows": [[], ["no_emb", "no_temp"]]})"));
  ASSERT_EQ(s.rows.size(), 2u);
  EXPECT_EQ(s.seeds, (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_EQ(ablation_spec_from_json(to_json(s)).rows, s.rows);
  EXPECT_THROW(ablation_spec_from_json(nlohmann::json::parse(R"({"rowz": []})")), ConfigError);
  EXPECT_THROW(ablation_spec_from_json(nlohmann::json::parse(R"({"toggles": ["nope"]})")), ConfigError);
}

TEST(Ablation, SummarizeComputesMeanAndPopulationStd) {
  AblationSpec spec{{{}, {Toggle::no_attn}}, {0, 1}};
  std::vector<StudentRun> runs(4);
  const double vals[4] = {10, 12, 20, 20};
  for (int i = 0; i < 4; ++i) {
    runs[i].toggles = spec.rows[i / 2];
    runs[i].seed = static_cast<std::uint64_t>(i % 2);
    runs[i].metrics.mpjpe_mm = vals[i];
  }
  const auto table = summarize(spec, runs);
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.rows[0].label, "full");
  EXPECT_DOUBLE_EQ(table.rows[0].mean, 11.0);
  EXPECT_DOUBLE_EQ(table.rows[0].stddev, 1.0);
  EXPECT_DOUBLE_EQ(table.rows[1].stddev, 0.0);
  const auto jsonl = table.to_jsonl();
  EXPECT_EQ(std::count(jsonl.begin(), jsonl.end(), '\n'), 2);
  EXPECT_NE(table.render().find("w/o L_attn"), std::string::npos);
}

}  // namespace
}  // namespace scjd
