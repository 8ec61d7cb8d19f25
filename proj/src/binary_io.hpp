// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>

#include "lapeig/error.hpp"

namespace lapeig::detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <typename U>
U to_little(U v) noexcept {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    U out = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b) {
      out = static_cast<U>((out << 8) | ((v >> (8 * b)) & 0xFF));
    }
    return out;
  }
}

class ByteWriter {
 public:
  explicit ByteWriter(std::ostream& out) : out_(out) {}

  void raw(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out_) throw DataError("write failure after " + std::to_string(count_) + " bytes");
    count_ += n;
  }

  template <typename U>
  void uint(U v) {
    const U le = to_little(v);
    raw(&le, sizeof(U));
  }

  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }

  void f32_array(std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
      raw(values.data(), values.size_bytes());
    } else {
      for (float v : values) f32(v);
    }
  }

  std::uint64_t count() const noexcept { return count_; }

 private:
  std::ostream& out_;
  std::uint64_t count_ = 0;
};

class ByteReader {
 public:
  ByteReader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  /// Reads exactly n bytes or throws a truncation FormatError.
  void raw(void* data, std::size_t n, std::uint64_t expected_total) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::uint64_t>(in_.gcount());
    count_ += got;
    if (got != n) {
      throw FormatError(what_ + ": truncated, expected " + std::to_string(expected_total) +
                        " bytes, got " + std::to_string(count_));
    }
  }

  template <typename U>
  U uint(std::uint64_t expected_total) {
    U le = 0;
    raw(&le, sizeof(U), expected_total);
    return to_little(le);
  }

  std::uint64_t count() const noexcept { return count_; }

 private:
  std::istream& in_;
  std::string what_;
  std::uint64_t count_ = 0;
};

/// Little-endian f32 array from a byte buffer.
inline void decode_f32(std::span<const unsigned char> bytes, std::span<float> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t le = 0;
    std::memcpy(&le, bytes.data() + 4 * i, 4);
    out[i] = std::bit_cast<float>(to_little(le));
  }
}

}  // namespace lapeig::detail
