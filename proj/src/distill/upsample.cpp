#include "scjd/upsample.hpp"

namespace scjd {

DeconvUpsampler DeconvUpsampler::init(std::size_t student_width, std::size_t teacher_width, std::size_t stride,
                                      std::mt19937_64& rng) {
  if (stride == 0) throw ConfigError("upsampler stride must be >= 1");
  DeconvUpsampler u;
  u.deconv_w = trunc_normal({student_width, student_width, stride}, 0.02, rng);
  u.fc = Linear::init(student_width, teacher_width, rng);
  u.stride = stride;
  return u;
}

void DeconvUpsampler::collect(ParameterList& out, const std::string& prefix) const {
  out.push_back({prefix + ".deconv.w", deconv_w});
  fc.collect(out, prefix + ".fc");
}

Tensor upsample_student(const Tensor& temporal_out, const DeconvUpsampler& up) {
  if (temporal_out.rank() != 3 || temporal_out.dim(2) != up.deconv_w.dim(0)) {
    throw DimensionError("upsample_student: expected [B, frames, " + std::to_string(up.deconv_w.dim(0)) + "], got " +
                         shape_str(temporal_out.shape()));
  }
  const Tensor channels_first = ops::transpose(temporal_out);  // [B, D, f_s]
  const Tensor dense = ops::deconv1d(channels_first, up.deconv_w, up.stride);
  return up.fc(ops::transpose(dense));
}

}  // namespace scjd
