#include "scjd/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <unordered_set>

#include "scjd/byteio.hpp"

namespace scjd {

std::vector<unsigned char> encode_checkpoint(const ParameterList& params) {
  ByteWriter w;
  w.raw("SCJD", 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(params.size()));
  std::unordered_set<std::string> names;
  for (const auto& p : params) {
    if (!names.insert(p.name).second) throw FormatError("duplicate parameter name '" + p.name + "'");
    if (p.name.size() > std::numeric_limits<std::uint16_t>::max()) throw FormatError("parameter name too long");
    w.u16(static_cast<std::uint16_t>(p.name.size()));
    w.raw(p.name.data(), p.name.size());
    const Shape& s = p.tensor.shape();
    if (s.size() > 255) throw FormatError("rank too large for '" + p.name + "'");
    w.u8(static_cast<std::uint8_t>(s.size()));
    for (auto d : s) w.u32(static_cast<std::uint32_t>(d));
    for (double v : p.tensor.values()) w.f64(v);
  }
  return w.take();
}

ParameterList decode_checkpoint(const std::vector<unsigned char>& bytes) {
  ByteReader r(bytes);
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, "SCJD", 4) != 0) throw FormatError("checkpoint: bad magic at offset 0");
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version) + " at offset 4");
  }
  const auto count = r.u32();
  ParameterList out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.u16();
    std::string name(len, '\0');
    r.raw(name.data(), len);
    const auto rank = r.u8();
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    const std::size_t n = shape_numel(shape);
    if (n * 8 > r.remaining()) {
      throw FormatError("checkpoint: truncated payload for '" + name + "' at offset " + std::to_string(r.offset()));
    }
    std::vector<double> values(n);
    for (auto& v : values) v = r.f64();
    out.push_back({std::move(name), Tensor::from(std::move(shape), std::move(values), true)});
  }
  if (r.remaining() != 0) {
    throw FormatError("checkpoint: trailing bytes at offset " + std::to_string(r.offset()));
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterList& params) {
  write_file(path, encode_checkpoint(params));
}

ParameterList load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

void assign_parameters(ParameterList& dst, const ParameterList& src) {
  for (auto& p : dst) {
    const Parameter* s = find_parameter(src, p.name);
    if (!s) throw FormatError("checkpoint is missing parameter '" + p.name + "'");
    if (s->tensor.shape() != p.tensor.shape()) {
      throw FormatError("parameter '" + p.name + "' has shape " + shape_str(s->tensor.shape()) +
                        " in checkpoint but " + shape_str(p.tensor.shape()) + " in model");
    }
    auto v = p.tensor.mutable_values();
    std::copy(s->tensor.values().begin(), s->tensor.values().end(), v.begin());
  }
}

const Parameter* find_parameter(const ParameterList& params, const std::string& name) {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

std::size_t parameter_elements(const ParameterList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

std::uint64_t parameter_checksum(const ParameterList& params) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& p : params) {
    mix(p.name.data(), p.name.size());
    for (auto d : p.tensor.shape()) mix(&d, sizeof d);
    mix(p.tensor.values().data(), p.tensor.numel() * sizeof(double));
  }
  return h;
}

}  // namespace scjd
