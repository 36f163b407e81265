#include "scjd/motion.hpp"

#include <zlib.h>

#include <Eigen/Geometry>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>

#include "scjd/byteio.hpp"
#include "scjd/seed.hpp"

namespace scjd {

bool operator==(const Camera& a, const Camera& b) {
  return a.focal == b.focal && a.center_x == b.center_x && a.center_y == b.center_y && a.distance_mm == b.distance_mm;
}
bool operator==(const PoseSequence3D& a, const PoseSequence3D& b) {
  return a.frames == b.frames && a.joints == b.joints && a.fps == b.fps && a.coords == b.coords;
}
bool operator==(const PoseSequence2D& a, const PoseSequence2D& b) {
  return a.frames == b.frames && a.joints == b.joints && a.source == b.source && a.coords == b.coords;
}
bool operator==(const MotionClip& a, const MotionClip& b) {
  return a.id == b.id && a.seed == b.seed && a.camera == b.camera && a.noise_std == b.noise_std && a.seq3d == b.seq3d &&
         a.seq2d == b.seq2d;
}

namespace {

// Per-joint rotation amplitude (radians) about x, y, z for the bundled
// skeleton, keyed by joint name. A joint's rotation moves its descendants.
std::array<double, 3> joint_amplitude(const std::string& name) {
  if (name == "Hip") return {0.1, 0.8, 0.1};
  if (name == "RHip" || name == "LHip") return {0.5, 0.15, 0.25};
  if (name == "RKnee" || name == "LKnee") return {0.7, 0.0, 0.0};
  if (name == "Spine") return {0.2, 0.2, 0.2};
  if (name == "Thorax") return {0.15, 0.15, 0.15};
  if (name == "Neck") return {0.3, 0.3, 0.2};
  if (name == "RShoulder" || name == "LShoulder") return {0.8, 0.8, 0.8};
  if (name == "RElbow" || name == "LElbow") return {0.8, 0.8, 0.8};
  return {0.2, 0.2, 0.2};
}

struct Oscillator {
  std::vector<double> amp, freq, phase;
  double eval(double t) const {
    double s = 0.0;
    for (std::size_t m = 0; m < amp.size(); ++m) s += amp[m] * std::sin(2.0 * std::numbers::pi * freq[m] * t + phase[m]);
    return s;
  }
};

// Sum of 2-4 sinusoids whose amplitudes add up to at most `bound`.
Oscillator make_oscillator(std::mt19937_64& rng, double bound, const MotionParams& p) {
  std::uniform_int_distribution<int> count(2, 4);
  std::uniform_real_distribution<double> freq(p.min_frequency_hz, p.max_frequency_hz);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> weight(0.3, 1.0);
  Oscillator o;
  const int n = count(rng);
  for (int m = 0; m < n; ++m) {
    o.amp.push_back(bound * weight(rng) / n);
    o.freq.push_back(freq(rng));
    o.phase.push_back(phase(rng));
  }
  return o;
}

}  // namespace

MotionClip generate_clip(const SkeletonTopology& topo, std::size_t num_frames, std::uint64_t seed,
                         const MotionParams& params) {
  if (num_frames == 0) throw ConfigError("generate_clip: num_frames must be >= 1");
  if (topo.rest_directions.size() != topo.num_joints || topo.bone_lengths_mm.size() != topo.edges.size()) {
    throw ConfigError("generate_clip: topology lacks rest directions or bone lengths");
  }
  const std::size_t J = topo.num_joints;
  std::mt19937_64 rng(seed);

  std::vector<std::array<Oscillator, 3>> osc(J);
  for (std::size_t j = 0; j < J; ++j) {
    const auto amp = joint_amplitude(topo.names.empty() ? std::string() : topo.names[j]);
    for (int a = 0; a < 3; ++a) osc[j][a] = make_oscillator(rng, amp[a] * params.amplitude_scale, params);
  }
  std::uniform_real_distribution<double> facing(-std::numbers::pi / 3, std::numbers::pi / 3);
  const double base_yaw = facing(rng) * params.amplitude_scale;
  std::array<Oscillator, 2> travel{make_oscillator(rng, params.root_travel_mm, params),
                                   make_oscillator(rng, params.root_travel_mm, params)};

  std::vector<Eigen::Vector3d> offsets(J, Eigen::Vector3d::Zero());
  for (std::size_t j = 0; j < J; ++j) {
    const auto e = topo.edge_to(j);
    if (e == SIZE_MAX) continue;
    const auto& d = topo.rest_directions[j];
    offsets[j] = Eigen::Vector3d(d[0], d[1], d[2]).normalized() * topo.bone_lengths_mm[e];
  }
  const auto order = topo.topological_order();
  const std::size_t root = topo.root();

  MotionClip clip;
  clip.seed = seed;
  char id[32];
  std::snprintf(id, sizeof id, "clip_%016llx", static_cast<unsigned long long>(seed));
  clip.id = id;
  clip.camera = params.camera;
  clip.noise_std = params.noise_std;
  clip.seq3d.frames = num_frames;
  clip.seq3d.joints = J;
  clip.seq3d.fps = params.fps;
  clip.seq3d.coords.assign(num_frames * J * 3, 0.0);
  std::vector<double> root_track(num_frames * 3, 0.0);

  std::vector<Eigen::Matrix3d> global(J);
  std::vector<Eigen::Vector3d> pos(J);
  for (std::size_t f = 0; f < num_frames; ++f) {
    const double t = static_cast<double>(f) / params.fps;
    for (auto j : order) {
      const double ax = osc[j][0].eval(t), ay = osc[j][1].eval(t) + (j == root ? base_yaw : 0.0),
                   az = osc[j][2].eval(t);
      const Eigen::Matrix3d local = (Eigen::AngleAxisd(az, Eigen::Vector3d::UnitZ()) *
                                     Eigen::AngleAxisd(ay, Eigen::Vector3d::UnitY()) *
                                     Eigen::AngleAxisd(ax, Eigen::Vector3d::UnitX()))
                                        .toRotationMatrix();
      if (j == root) {
        global[j] = local;
        pos[j].setZero();
      } else {
        const auto p = topo.parent[j];
        global[j] = global[p] * local;
        pos[j] = pos[p] + global[p] * offsets[j];
      }
    }
    for (std::size_t j = 0; j < J; ++j)
      for (int c = 0; c < 3; ++c) clip.seq3d.at(f, j, static_cast<std::size_t>(c)) = pos[j][c];
    root_track[f * 3 + 0] = travel[0].eval(t);
    root_track[f * 3 + 2] = travel[1].eval(t);
  }
  clip.seq2d = project_to_2d(clip.seq3d, clip.camera, params.noise_std, splitmix64(seed), root_track);
  return clip;
}

PoseSequence2D project_to_2d(const PoseSequence3D& seq3d, const Camera& camera, double noise_std, std::uint64_t seed,
                             std::span<const double> root_track) {
  if (!root_track.empty() && root_track.size() != seq3d.frames * 3) {
    throw DimensionError("project_to_2d: root track must have frames x 3 entries");
  }
  PoseSequence2D out;
  out.frames = seq3d.frames;
  out.joints = seq3d.joints;
  out.source = noise_std > 0.0 ? Source2D::projected_noisy : Source2D::projected_clean;
  out.coords.resize(seq3d.frames * seq3d.joints * 2);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_std > 0.0 ? noise_std : 1.0);
  for (std::size_t f = 0; f < seq3d.frames; ++f) {
    for (std::size_t j = 0; j < seq3d.joints; ++j) {
      double x = seq3d.at(f, j, 0), y = seq3d.at(f, j, 1), z = seq3d.at(f, j, 2);
      if (!root_track.empty()) {
        x += root_track[f * 3 + 0];
        y += root_track[f * 3 + 1];
        z += root_track[f * 3 + 2];
      }
      const double depth = z + camera.distance_mm;
      if (!(depth > 0.0)) {
        throw DataError("project_to_2d: degenerate camera, depth " + std::to_string(depth) + " at frame " +
                        std::to_string(f) + " joint " + std::to_string(j));
      }
      double u = camera.focal * x / depth + camera.center_x;
      double v = camera.focal * y / depth + camera.center_y;
      if (noise_std > 0.0) {
        u += noise(rng);
        v += noise(rng);
      }
      out.at(f, j, 0) = u;
      out.at(f, j, 1) = v;
    }
  }
  return out;
}

void validate(const SamplerConfig& cfg) {
  if (cfg.teacher_frames % 2 == 0) {
    throw ConfigError("sampler.teacher_frames must be odd (got " + std::to_string(cfg.teacher_frames) + ")");
  }
  if (cfg.stride < 1) throw ConfigError("sampler.stride must be >= 1");
  if (cfg.teacher_frames % cfg.stride != 0) {
    throw ConfigError("sampler.stride must divide teacher_frames (" + std::to_string(cfg.teacher_frames) + " % " +
                      std::to_string(cfg.stride) + " != 0)");
  }
  if (cfg.student_frames() % 2 == 0) {
    throw ConfigError("sampler: student_frames = teacher_frames / stride must be odd (got " +
                      std::to_string(cfg.student_frames()) + ")");
  }
}

std::vector<std::size_t> sparse_sample_indices(const SamplerConfig& cfg) {
  validate(cfg);
  const std::size_t fs = cfg.student_frames();
  const long half = static_cast<long>(fs - 1) / 2;
  const long c = static_cast<long>(cfg.center());
  std::vector<std::size_t> idx;
  idx.reserve(fs);
  for (long k = -half; k <= half; ++k) idx.push_back(static_cast<std::size_t>(c + k * static_cast<long>(cfg.stride)));
  return idx;
}

std::vector<std::size_t> contiguous_indices(const SamplerConfig& cfg) {
  validate(cfg);
  const std::size_t fs = cfg.student_frames();
  std::vector<std::size_t> idx(fs);
  for (std::size_t k = 0; k < fs; ++k) idx[k] = cfg.center() - (fs - 1) / 2 + k;
  return idx;
}

std::vector<double> extract_window(std::span<const double> coords, std::size_t frames, std::size_t row_size,
                                   long center, std::size_t window) {
  if (frames == 0) throw DataError("extract_window: empty sequence");
  std::vector<double> out(window * row_size);
  const long half = static_cast<long>(window - 1) / 2;
  for (std::size_t w = 0; w < window; ++w) {
    long f = center - half + static_cast<long>(w);
    f = std::clamp(f, 0L, static_cast<long>(frames) - 1);
    std::copy_n(coords.begin() + f * static_cast<long>(row_size), row_size, out.begin() + static_cast<long>(w * row_size));
  }
  return out;
}

void flip_in_place(std::span<double> coords, std::size_t joints, std::size_t dims,
                   const std::vector<std::size_t>& flip_perm) {
  const std::size_t row = joints * dims;
  std::vector<double> tmp(row);
  for (std::size_t off = 0; off + row <= coords.size(); off += row) {
    for (std::size_t j = 0; j < joints; ++j) {
      const std::size_t src = flip_perm[j];
      for (std::size_t c = 0; c < dims; ++c) tmp[j * dims + c] = coords[off + src * dims + c];
      tmp[j * dims] = -tmp[j * dims];
    }
    std::copy(tmp.begin(), tmp.end(), coords.begin() + static_cast<long>(off));
  }
}

std::pair<PoseSequence2D, PoseSequence3D> flip_augment(const PoseSequence2D& seq2d, const PoseSequence3D& seq3d,
                                                       const SkeletonTopology& topo) {
  const auto perm = topo.flip_permutation();
  auto a = seq2d;
  auto b = seq3d;
  flip_in_place(a.coords, a.joints, 2, perm);
  flip_in_place(b.coords, b.joints, 3, perm);
  return {std::move(a), std::move(b)};
}

std::vector<double> bone_lengths(const PoseSequence3D& seq, const SkeletonTopology& topo) {
  std::vector<double> out;
  out.reserve(seq.frames * topo.edges.size());
  for (std::size_t f = 0; f < seq.frames; ++f) {
    for (const auto& [a, b] : topo.edges) {
      double s = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        const double d = seq.at(f, a, c) - seq.at(f, b, c);
        s += d * d;
      }
      out.push_back(std::sqrt(s));
    }
  }
  return out;
}

std::vector<MotionClip> generate_dataset(const SkeletonTopology& topo, const DatasetSpec& spec) {
  std::vector<MotionClip> clips;
  clips.reserve(spec.train_clips + spec.eval_clips);
  std::uint64_t state = splitmix64(spec.seed);
  auto next_seed = [&state](bool odd) {
    state = splitmix64(state);
    return (state & ~std::uint64_t{1}) | (odd ? 1u : 0u);
  };
  for (std::size_t i = 0; i < spec.train_clips; ++i)
    clips.push_back(generate_clip(topo, spec.frames_per_clip, next_seed(false), spec.motion));
  for (std::size_t i = 0; i < spec.eval_clips; ++i)
    clips.push_back(generate_clip(topo, spec.frames_per_clip, next_seed(true), spec.motion));
  return clips;
}

namespace {
constexpr char kDatasetMagic[8] = {'S', 'C', 'J', 'D', 'D', 'A', 'T', 'A'};

std::uint32_t crc_of(const unsigned char* p, std::size_t n) {
  return static_cast<std::uint32_t>(crc32(0L, p, static_cast<uInt>(n)));
}
}  // namespace

std::vector<unsigned char> encode_dataset(const std::vector<MotionClip>& clips) {
  ByteWriter w;
  w.raw(kDatasetMagic, 8);
  w.u32(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(clips.size()));
  for (const auto& c : clips) {
    if (c.seq2d.frames != c.seq3d.frames || c.seq2d.joints != c.seq3d.joints) {
      throw DataError("clip '" + c.id + "': 2D and 3D sequences disagree in length");
    }
    ByteWriter r;
    r.str(c.id);
    r.u64(c.seed);
    r.f64(c.seq3d.fps);
    r.u32(static_cast<std::uint32_t>(c.seq3d.frames));
    r.u32(static_cast<std::uint32_t>(c.seq3d.joints));
    r.f64(c.camera.focal);
    r.f64(c.camera.center_x);
    r.f64(c.camera.center_y);
    r.f64(c.camera.distance_mm);
    r.f64(c.noise_std);
    r.u8(static_cast<std::uint8_t>(c.seq2d.source));
    for (double v : c.seq3d.coords) r.f64(v);
    for (double v : c.seq2d.coords) r.f64(v);
    const auto& rec = r.bytes();
    w.u32(static_cast<std::uint32_t>(rec.size()));
    w.raw(rec.data(), rec.size());
    w.u32(crc_of(rec.data(), rec.size()));
  }
  return w.take();
}

std::vector<MotionClip> decode_dataset(const std::vector<unsigned char>& bytes) {
  ByteReader r(bytes);
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kDatasetMagic, 8) != 0) throw FormatError("dataset: bad magic at offset 0");
  const auto version = r.u32();
  if (version != kDatasetVersion) {
    throw FormatError("dataset: unsupported version " + std::to_string(version) + " at offset 8");
  }
  const auto count = r.u32();
  std::vector<MotionClip> clips;
  clips.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t len_offset = r.offset();
    const auto len = r.u32();
    const std::size_t begin = r.offset();
    if (len > r.remaining() || r.remaining() - len < 4) {
      throw FormatError("dataset: truncated clip record " + std::to_string(i) + " at offset " + std::to_string(len_offset));
    }
    std::uint32_t stored_crc;
    std::memcpy(&stored_crc, bytes.data() + begin + len, 4);
    if (crc_of(bytes.data() + begin, len) != stored_crc) {
      throw FormatError("dataset: checksum mismatch in clip record " + std::to_string(i) + " at offset " +
                        std::to_string(begin));
    }
    ByteReader rec(bytes, begin, begin + len);
    MotionClip c;
    c.id = rec.str();
    c.seed = rec.u64();
    c.seq3d.fps = rec.f64();
    const auto frames = rec.u32();
    const auto joints = rec.u32();
    c.camera.focal = rec.f64();
    c.camera.center_x = rec.f64();
    c.camera.center_y = rec.f64();
    c.camera.distance_mm = rec.f64();
    c.noise_std = rec.f64();
    const auto source = rec.u8();
    if (source > 1) throw FormatError("dataset: bad 2D source tag at offset " + std::to_string(rec.offset() - 1));
    const std::size_t n = static_cast<std::size_t>(frames) * joints;
    if (rec.remaining() != n * 5 * 8) {
      throw FormatError("dataset: payload size mismatch in clip record " + std::to_string(i) + " at offset " +
                        std::to_string(rec.offset()));
    }
    c.seq3d.frames = c.seq2d.frames = frames;
    c.seq3d.joints = c.seq2d.joints = joints;
    c.seq2d.source = static_cast<Source2D>(source);
    c.seq3d.coords.resize(n * 3);
    c.seq2d.coords.resize(n * 2);
    for (auto& v : c.seq3d.coords) v = rec.f64();
    for (auto& v : c.seq2d.coords) v = rec.f64();
    clips.push_back(std::move(c));
    r.seek(begin + len + 4);
  }
  if (r.remaining() != 0) throw FormatError("dataset: trailing bytes at offset " + std::to_string(r.offset()));
  return clips;
}

void save_dataset(const std::vector<MotionClip>& clips, const std::filesystem::path& path) {
  write_file(path, encode_dataset(clips));
}

std::vector<MotionClip> load_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path)); }

void export_csv(const MotionClip& clip, std::ostream& out) {
  out << "frame,joint,x,y,z,u,v\n";
  char buf[256];
  for (std::size_t f = 0; f < clip.seq3d.frames; ++f) {
    for (std::size_t j = 0; j < clip.seq3d.joints; ++j) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.6f,%.6f,%.6f,%.8f,%.8f\n", f, j, clip.seq3d.at(f, j, 0),
                    clip.seq3d.at(f, j, 1), clip.seq3d.at(f, j, 2), clip.seq2d.at(f, j, 0), clip.seq2d.at(f, j, 1));
      out << buf;
    }
  }
}

}  // namespace scjd
