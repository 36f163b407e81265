#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "scjd/byteio.hpp"
#include "scjd/motion.hpp"

namespace scjd {
namespace {

const SkeletonTopology& topo() {
  static const SkeletonTopology t = build_h36m17();
  return t;
}

TEST(Motion, SameSeedGivesIdenticalClips) {
  const auto a = generate_clip(topo(), 60, 42);
  const auto b = generate_clip(topo(), 60, 42);
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::memcmp(a.seq3d.coords.data(), b.seq3d.coords.data(), a.seq3d.coords.size() * 8), 0);
  EXPECT_FALSE(a == generate_clip(topo(), 60, 43));
}

TEST(Motion, RootStaysAtOriginAndShapesAgree) {
  const auto c = generate_clip(topo(), 50, 3);
  EXPECT_EQ(c.seq3d.frames, 50u);
  EXPECT_EQ(c.seq2d.frames, 50u);
  for (std::size_t f = 0; f < 50; ++f)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(c.seq3d.at(f, topo().root(), k), 0.0);
  for (double v : c.seq2d.coords) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_LE(std::fabs(v), 1.5);
  }
}

TEST(Motion, BoneLengthsArePreserved) {
  const auto c = generate_clip(topo(), 120, 9);
  const auto lengths = bone_lengths(c.seq3d, topo());
  const std::size_t E = topo().edges.size();
  ASSERT_EQ(lengths.size(), 120 * E);
  for (std::size_t f = 0; f < 120; ++f)
    for (std::size_t e = 0; e < E; ++e) EXPECT_NEAR(lengths[f * E + e], topo().bone_lengths_mm[e], 1e-6);
}

TEST(Motion, ZeroAmplitudeGivesStaticPose) {
  MotionParams p;
  p.amplitude_scale = 0.0;
  const auto c = generate_clip(topo(), 10, 5, p);
  const std::size_t row = 17 * 3;
  for (std::size_t f = 1; f < 10; ++f)
    for (std::size_t i = 0; i < row; ++i) EXPECT_EQ(c.seq3d.coords[f * row + i], c.seq3d.coords[i]);
}

TEST(Motion, ProjectionOnAxisAndLinearInFocal) {
  PoseSequence3D s;
  s.frames = 1;
  s.joints = 2;
  s.coords = {0, 0, 100, 300, -200, 50};
  Camera cam;
  const auto p = project_to_2d(s, cam, 0.0, 0);
  EXPECT_EQ(p.source, Source2D::projected_clean);
  EXPECT_EQ(p.at(0, 0, 0), 0.0);
  EXPECT_EQ(p.at(0, 0, 1), 0.0);
  Camera cam2 = cam;
  cam2.focal *= 2;
  const auto q = project_to_2d(s, cam2, 0.0, 0);
  EXPECT_NEAR(q.at(0, 1, 0), 2 * p.at(0, 1, 0), 1e-15);
  EXPECT_NEAR(q.at(0, 1, 1), 2 * p.at(0, 1, 1), 1e-15);
}

TEST(Motion, NoiselessProjectionInvertsWithKnownDepth) {
  const auto c = generate_clip(topo(), 20, 11);
  const auto p = project_to_2d(c.seq3d, c.camera, 0.0, 0);
  for (std::size_t f = 0; f < 20; ++f)
    for (std::size_t j = 0; j < 17; ++j) {
      const double depth = c.seq3d.at(f, j, 2) + c.camera.distance_mm;
      const double x = (p.at(f, j, 0) - c.camera.center_x) * depth / c.camera.focal;
      const double y = (p.at(f, j, 1) - c.camera.center_y) * depth / c.camera.focal;
      EXPECT_NEAR(x, c.seq3d.at(f, j, 0), 1e-9 * std::max(1.0, std::fabs(c.seq3d.at(f, j, 0))));
      EXPECT_NEAR(y, c.seq3d.at(f, j, 1), 1e-9 * std::max(1.0, std::fabs(c.seq3d.at(f, j, 1))));
    }
}

TEST(Motion, NoiseDisplacementFollowsRayleighMean) {
  PoseSequence3D s;
  s.frames = 10000;
  s.joints = 1;
  s.coords.assign(30000, 0.0);
  for (std::size_t f = 0; f < s.frames; ++f) s.coords[f * 3 + 0] = static_cast<double>(f % 7) * 10;
  const auto clean = project_to_2d(s, Camera{}, 0.0, 0);
  const auto noisy = project_to_2d(s, Camera{}, 0.01, 77);
  EXPECT_EQ(noisy.source, Source2D::projected_noisy);
  double mean = 0;
  for (std::size_t f = 0; f < s.frames; ++f)
    mean += std::hypot(noisy.at(f, 0, 0) - clean.at(f, 0, 0), noisy.at(f, 0, 1) - clean.at(f, 0, 1));
  mean /= static_cast<double>(s.frames);
  const double expected = 0.01 * std::sqrt(std::numbers::pi / 2);
  EXPECT_NEAR(mean, expected, 0.05 * expected);
}

TEST(Motion, DegenerateCameraThrows) {
  PoseSequence3D s;
  s.frames = 1;
  s.joints = 1;
  s.coords = {0, 0, -6000};
  EXPECT_THROW(project_to_2d(s, Camera{}, 0.0, 0), DataError);
}

TEST(Sampler, SpecExamples) {
  auto idx = sparse_sample_indices({81, 3});
  ASSERT_EQ(idx.size(), 27u);
  EXPECT_EQ(idx.front(), 1u);
  EXPECT_EQ(idx[1], 4u);
  EXPECT_EQ(idx.back(), 79u);
  EXPECT_EQ(idx[13], 40u);
  EXPECT_EQ(sparse_sample_indices({81, 27}), (std::vector<std::size_t>{13, 40, 67}));
  idx = sparse_sample_indices({81, 1});
  ASSERT_EQ(idx.size(), 81u);
  for (std::size_t i = 0; i < 81; ++i) EXPECT_EQ(idx[i], i);
}

TEST(Sampler, IdentitiesHoldForEveryValidPair) {
  for (std::size_t ft = 1; ft <= 99; ft += 2)
    for (std::size_t L = 1; L <= ft; ++L) {
      if (ft % L != 0 || (ft / L) % 2 == 0) continue;
      const SamplerConfig cfg{ft, L};
      const auto idx = sparse_sample_indices(cfg);
      ASSERT_EQ(idx.size(), ft / L);
      EXPECT_NE(std::find(idx.begin(), idx.end(), (ft - 1) / 2), idx.end());
      for (std::size_t i = 1; i < idx.size(); ++i) EXPECT_EQ(idx[i] - idx[i - 1], L);
      EXPECT_LT(idx.back(), ft);
      const auto cont = contiguous_indices(cfg);
      ASSERT_EQ(cont.size(), idx.size());
      EXPECT_EQ(cont[cont.size() / 2], (ft - 1) / 2);
    }
}

TEST(Sampler, RejectsInvalidConfigs) {
  EXPECT_THROW(validate(SamplerConfig{80, 2}), ConfigError);
  EXPECT_THROW(validate(SamplerConfig{81, 2}), ConfigError);
  EXPECT_THROW(validate(SamplerConfig{81, 0}), ConfigError);
  EXPECT_NO_THROW(validate(SamplerConfig{9, 9}));
}

TEST(Window, EdgePaddingRepeatsBoundaryFrames) {
  const std::vector<double> seq{0, 1, 2, 3, 4};  // 5 frames, row size 1
  EXPECT_EQ(extract_window(seq, 5, 1, 0, 5), (std::vector<double>{0, 0, 0, 1, 2}));
  EXPECT_EQ(extract_window(seq, 5, 1, 4, 3), (std::vector<double>{3, 4, 4}));
  EXPECT_EQ(extract_window(seq, 5, 1, 2, 9), (std::vector<double>{0, 0, 0, 1, 2, 3, 4, 4, 4}));
}

TEST(Flip, IsAnInvolution) {
  const auto c = generate_clip(topo(), 15, 21);
  const auto once = flip_augment(c.seq2d, c.seq3d, topo());
  EXPECT_FALSE(once.second == c.seq3d);
  const auto twice = flip_augment(once.first, once.second, topo());
  EXPECT_EQ(twice.first, c.seq2d);
  EXPECT_EQ(twice.second, c.seq3d);
}

TEST(Flip, SymmetricRestPoseIsAFixedPoint) {
  MotionParams p;
  p.amplitude_scale = 0.0;
  const auto c = generate_clip(topo(), 2, 1, p);
  const auto f = flip_augment(c.seq2d, c.seq3d, topo());
  for (std::size_t i = 0; i < c.seq3d.coords.size(); ++i) EXPECT_NEAR(f.second.coords[i], c.seq3d.coords[i], 1e-9);
}

TEST(Flip, PreservesPairwiseErrors) {
  const auto a = generate_clip(topo(), 5, 31), b = generate_clip(topo(), 5, 32);
  auto mpjpe = [](const PoseSequence3D& x, const PoseSequence3D& y) {
    double s = 0;
    for (std::size_t f = 0; f < x.frames; ++f)
      for (std::size_t j = 0; j < x.joints; ++j)
        s += std::hypot(x.at(f, j, 0) - y.at(f, j, 0), x.at(f, j, 1) - y.at(f, j, 1), x.at(f, j, 2) - y.at(f, j, 2));
    return s / static_cast<double>(x.frames * x.joints);
  };
  const auto fa = flip_augment(a.seq2d, a.seq3d, topo()).second;
  const auto fb = flip_augment(b.seq2d, b.seq3d, topo()).second;
  EXPECT_NEAR(mpjpe(fa, fb), mpjpe(a.seq3d, b.seq3d), 1e-9);
}

TEST(Dataset, GenerationSplitsBySeedParity) {
  DatasetSpec spec;
  spec.train_clips = 3;
  spec.eval_clips = 2;
  spec.frames_per_clip = 12;
  const auto clips = generate_dataset(topo(), spec);
  ASSERT_EQ(clips.size(), 5u);
  std::size_t evals = 0;
  for (const auto& c : clips) evals += is_eval_clip(c);
  EXPECT_EQ(evals, 2u);
  EXPECT_EQ(generate_dataset(topo(), spec), clips);
}

TEST(Dataset, RoundTripIsBitExact) {
  DatasetSpec spec;
  spec.train_clips = 2;
  spec.eval_clips = 1;
  spec.frames_per_clip = 9;
  const auto clips = generate_dataset(topo(), spec);
  const auto bytes = encode_dataset(clips);
  const auto back = decode_dataset(bytes);
  EXPECT_EQ(back, clips);
  EXPECT_EQ(encode_dataset(back), bytes);

  const auto path = std::filesystem::temp_directory_path() / "scjd_dataset_test.bin";
  save_dataset(clips, path);
  EXPECT_EQ(load_dataset(path), clips);
  std::filesystem::remove(path);
}

TEST(Dataset, EmptyDatasetIsValid) {
  const auto bytes = encode_dataset({});
  EXPECT_TRUE(decode_dataset(bytes).empty());
}

TEST(Dataset, CorruptionIsDetected) {
  DatasetSpec spec;
  spec.train_clips = 1;
  spec.eval_clips = 1;
  spec.frames_per_clip = 5;
  const auto bytes = encode_dataset(generate_dataset(topo(), spec));
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x40;
  try {
    decode_dataset(flipped);
    FAIL() << "expected a format error";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos);
  }
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(decode_dataset(truncated), FormatError);
  auto version = bytes;
  version[8] = 99;
  EXPECT_THROW(decode_dataset(version), FormatError);
}

TEST(Dataset, CsvExportHasOneRowPerFrameJoint) {
  const auto c = generate_clip(topo(), 3, 1);
  std::ostringstream out;
  export_csv(c, out);
  const std::string s = out.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')), 1u + 3 * 17);
}

}  // namespace
}  // namespace scjd
