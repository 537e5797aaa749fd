#pragma once

// Little-endian field encoding shared by the dataset and checkpoint formats.

#include "spikematch/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

namespace spikematch::binio {

class Writer {
public:
  void bytes(const void *p, std::size_t n) {
    const auto *b = static_cast<const unsigned char *>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
      buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
      buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  const std::vector<unsigned char> &buffer() const noexcept { return buf_; }

private:
  std::vector<unsigned char> buf_;
};

class Reader {
public:
  explicit Reader(const std::vector<unsigned char> &buf) : buf_(buf) {}

  void need(std::size_t n) const {
    if (pos_ + n > buf_.size())
      throw FormatError(FormatError::Kind::truncated, "file truncated at byte " + std::to_string(pos_));
  }
  void bytes(void *out, std::size_t n) {
    need(n);
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() {
    need(1);
    return buf_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= std::uint32_t{buf_[pos_++]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= std::uint64_t{buf_[pos_++]} << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(reinterpret_cast<const char *>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const noexcept { return buf_.size() - pos_; }

private:
  const std::vector<unsigned char> &buf_;
  std::size_t pos_ = 0;
};

std::vector<unsigned char> read_file(const std::string &path);

/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::string &path, const std::vector<unsigned char> &data);

} // namespace spikematch::binio
