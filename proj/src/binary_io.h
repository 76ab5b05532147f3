#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rvqlab/error.h"

namespace rvqlab::detail {

static_assert(std::endian::native == std::endian::little,
              "serializers assume a little-endian host");

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_bytes(std::span<const std::uint8_t> data) {
    bytes_.insert(bytes_.end(), data.begin(), data.end());
  }
  void put_string(std::string_view s) {
    put(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void put_doubles(std::span<const double> values) {
    for (double v : values) put(v);
  }
  // Overwrites a previously written u64 at `at`.
  void patch_u64(std::size_t at, std::uint64_t value) {
    std::memcpy(bytes_.data() + at, &value, sizeof(value));
  }
  std::size_t size() const noexcept { return bytes_.size(); }
  std::vector<std::uint8_t>& bytes() noexcept { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

// Sequential reader; running past the end throws `code`.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, ErrorCode code)
      : data_(data), code_(code) {}

  template <typename T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    require(sizeof(T));
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::span<const std::uint8_t> get_bytes(std::size_t n) {
    require(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    auto raw = get_bytes(n);
    return std::string(raw.begin(), raw.end());
  }
  void get_doubles(std::span<double> out) {
    require(out.size() * sizeof(double));
    for (double& v : out) v = get<double>();
  }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

 private:
  void require(std::size_t n) const {
    if (n > remaining())
      fail(code_, "unexpected end of data: need " + std::to_string(n) +
                      " bytes at offset " + std::to_string(pos_) + ", have " +
                      std::to_string(remaining()));
  }

  std::span<const std::uint8_t> data_;
  ErrorCode code_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace rvqlab::detail
