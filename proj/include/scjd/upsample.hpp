#pragma once

#include <random>
#include <string>

#include "scjd/layers.hpp"

namespace scjd {

// Recovers a dense teacher-length sequence from student temporal features:
// a transposed convolution over frames (kernel = stride, no padding, so
// f_out = f_in * stride exactly), then a per-frame linear map to the
// teacher's feature width.
struct DeconvUpsampler {
  Tensor deconv_w;  // [J*C_s, J*C_s, stride]
  Linear fc;        // J*C_s -> J*C_t
  std::size_t stride = 1;

  static DeconvUpsampler init(std::size_t student_width, std::size_t teacher_width, std::size_t stride,
                              std::mt19937_64& rng);
  void collect(ParameterList& out, const std::string& prefix) const;
};

// temporal_out: [B, f_s, J*C_s] -> [B, f_s * stride, J*C_t]
Tensor upsample_student(const Tensor& temporal_out, const DeconvUpsampler& up);

}  // namespace scjd
