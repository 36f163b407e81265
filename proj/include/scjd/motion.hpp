#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "scjd/skeleton.hpp"

namespace scjd {

// Pinhole camera looking down +z. Normalized image coordinates are
// focal * x / (z + distance_mm) + center.
struct Camera {
  double focal = 2.5;
  double center_x = 0.0;
  double center_y = 0.0;
  double distance_mm = 5000.0;
};

// frames × joints × 3, millimeters, root joint at the origin in every frame.
struct PoseSequence3D {
  std::size_t frames = 0;
  std::size_t joints = 0;
  double fps = 50.0;
  std::vector<double> coords;

  double& at(std::size_t f, std::size_t j, std::size_t c) { return coords[(f * joints + j) * 3 + c]; }
  double at(std::size_t f, std::size_t j, std::size_t c) const { return coords[(f * joints + j) * 3 + c]; }
};

enum class Source2D : std::uint8_t { projected_clean = 0, projected_noisy = 1 };

// frames × joints × 2 normalized image coordinates.
struct PoseSequence2D {
  std::size_t frames = 0;
  std::size_t joints = 0;
  Source2D source = Source2D::projected_clean;
  std::vector<double> coords;

  double& at(std::size_t f, std::size_t j, std::size_t c) { return coords[(f * joints + j) * 2 + c]; }
  double at(std::size_t f, std::size_t j, std::size_t c) const { return coords[(f * joints + j) * 2 + c]; }
};

struct MotionClip {
  std::string id;
  std::uint64_t seed = 0;
  Camera camera;
  double noise_std = 0.0;
  PoseSequence3D seq3d;
  PoseSequence2D seq2d;
};

bool operator==(const Camera& a, const Camera& b);
bool operator==(const PoseSequence3D& a, const PoseSequence3D& b);
bool operator==(const PoseSequence2D& a, const PoseSequence2D& b);
bool operator==(const MotionClip& a, const MotionClip& b);

struct MotionParams {
  // Multiplies every per-joint rotation amplitude; 0 gives a static T-pose.
  double amplitude_scale = 1.0;
  double min_frequency_hz = 0.2;
  double max_frequency_hz = 2.0;
  // Peak horizontal/depth excursion of the root before it is removed from
  // the 3D targets. It still moves the subject in the image.
  double root_travel_mm = 300.0;
  double fps = 50.0;
  Camera camera;
  double noise_std = 0.005;
};

// Forward-kinematics motion: each joint's local rotation angles are sums of
// 2-4 random-phase sinusoids, composed down the tree with fixed bone lengths.
MotionClip generate_clip(const SkeletonTopology& topo, std::size_t num_frames, std::uint64_t seed,
                         const MotionParams& params = {});

// Perspective projection with optional i.i.d. Gaussian noise per coordinate.
// `root_track` (frames × 3, mm) offsets the subject before projecting.
// Throws DataError when any point lands at or behind the camera plane.
PoseSequence2D project_to_2d(const PoseSequence3D& seq3d, const Camera& camera, double noise_std, std::uint64_t seed,
                             std::span<const double> root_track = {});

struct SamplerConfig {
  std::size_t teacher_frames = 81;
  std::size_t stride = 3;

  std::size_t student_frames() const { return stride ? teacher_frames / stride : 0; }
  std::size_t center() const { return (teacher_frames - 1) / 2; }
};

// Throws ConfigError naming the first violated invariant.
void validate(const SamplerConfig& cfg);

// Center-aligned equidistant frame selection inside a teacher window:
// { c + k * stride : |k| <= (f_s - 1) / 2 }, c = (f_t - 1) / 2.
std::vector<std::size_t> sparse_sample_indices(const SamplerConfig& cfg);

// Contiguous block of f_s frames around the center (the no-sampling ablation).
std::vector<std::size_t> contiguous_indices(const SamplerConfig& cfg);

// Frames [center - half, center + half] of a flat frames × joints × dims
// array, repeating the first/last frame beyond the clip bounds.
std::vector<double> extract_window(std::span<const double> coords, std::size_t frames, std::size_t row_size,
                                   long center, std::size_t window);

// Negates x and swaps left/right joints. `coords` is n × joints × dims.
void flip_in_place(std::span<double> coords, std::size_t joints, std::size_t dims,
                   const std::vector<std::size_t>& flip_perm);

std::pair<PoseSequence2D, PoseSequence3D> flip_augment(const PoseSequence2D& seq2d, const PoseSequence3D& seq3d,
                                                       const SkeletonTopology& topo);

// Per-frame bone lengths, frames × edges.
std::vector<double> bone_lengths(const PoseSequence3D& seq, const SkeletonTopology& topo);

struct DatasetSpec {
  std::size_t train_clips = 200;
  std::size_t eval_clips = 50;
  std::size_t frames_per_clip = 240;
  std::uint64_t seed = 0;
  MotionParams motion;
};

// Train clips get even seeds, eval clips odd ones.
std::vector<MotionClip> generate_dataset(const SkeletonTopology& topo, const DatasetSpec& spec);
inline bool is_eval_clip(const MotionClip& c) { return (c.seed & 1u) != 0; }

// File layout (little-endian): "SCJDDATA" | u32 version | u32 count |
// per clip: u32 record_len | record | u32 crc32(record), where record is
// str id | u64 seed | f64 fps | u32 frames | u32 joints | 4 × f64 camera |
// f64 noise_std | u8 source | frames·joints·3 f64 | frames·joints·2 f64.
inline constexpr std::uint32_t kDatasetVersion = 1;

std::vector<unsigned char> encode_dataset(const std::vector<MotionClip>& clips);
std::vector<MotionClip> decode_dataset(const std::vector<unsigned char>& bytes);
void save_dataset(const std::vector<MotionClip>& clips, const std::filesystem::path& path);
std::vector<MotionClip> load_dataset(const std::filesystem::path& path);

// One row per (frame, joint): frame,joint,x,y,z,u,v
void export_csv(const MotionClip& clip, std::ostream& out);

}  // namespace scjd
