#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "scjd/checkpoint.hpp"

namespace scjd {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u16(std::uint16_t v) { raw(&v, 2); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void str(const std::string& s) {
    u16(static_cast<std::uint16_t>(s.size()));
    raw(s.data(), s.size());
  }
  std::size_t size() const { return buf_.size(); }
  const std::vector<unsigned char>& bytes() const { return buf_; }
  std::vector<unsigned char> take() { return std::move(buf_); }

 private:
  std::vector<unsigned char> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<unsigned char>& buf, std::size_t begin = 0, std::size_t end = SIZE_MAX)
      : buf_(buf), pos_(begin), end_(end == SIZE_MAX ? buf.size() : end) {}

  void raw(void* p, std::size_t n) {
    if (n > end_ - pos_) {
      throw FormatError("truncated data: need " + std::to_string(n) + " bytes at offset " + std::to_string(pos_));
    }
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() { return get<std::uint8_t>(); }
  std::uint16_t u16() { return get<std::uint16_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  double f64() { return get<double>(); }
  std::string str() {
    std::string s(u16(), '\0');
    raw(s.data(), s.size());
    return s;
  }
  void seek(std::size_t pos) {
    if (pos > end_) throw FormatError("seek past end of data to offset " + std::to_string(pos));
    pos_ = pos;
  }
  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return end_ - pos_; }

 private:
  template <class T>
  T get() {
    T v;
    raw(&v, sizeof v);
    return v;
  }
  const std::vector<unsigned char>& buf_;
  std::size_t pos_;
  std::size_t end_;
};

std::vector<unsigned char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);

}  // namespace scjd
