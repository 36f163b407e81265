#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "scjd/tensor.hpp"

namespace scjd {

// A trainable tensor addressed by its owning module path,
// e.g. "student.spatial.layer0.mhsa.wq".
struct Parameter {
  std::string name;
  Tensor tensor;
};

using ParameterList = std::vector<Parameter>;

// Binary layout, all integers little-endian:
//   "SCJD" | u32 version | u32 count |
//   count × ( u16 name_len | name | u8 rank | rank × u32 dim | numel × f64 )
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const ParameterList& params);
ParameterList load_checkpoint(const std::filesystem::path& path);

std::vector<unsigned char> encode_checkpoint(const ParameterList& params);
ParameterList decode_checkpoint(const std::vector<unsigned char>& bytes);

// Copies values by name into `dst`. Every destination name must be present
// with an identical shape; extra source entries are ignored.
void assign_parameters(ParameterList& dst, const ParameterList& src);

const Parameter* find_parameter(const ParameterList& params, const std::string& name);

// Total element count across all parameters.
std::size_t parameter_elements(const ParameterList& params);

// FNV-1a over names, shapes and raw value bytes. Used to compare snapshots.
std::uint64_t parameter_checksum(const ParameterList& params);

}  // namespace scjd
