// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lapeig {

/// Number of stored entries of a T x T lower-triangular matrix, diagonal included.
constexpr std::size_t packed_size(std::uint32_t num_tokens) noexcept {
  return static_cast<std::size_t>(num_tokens) * (static_cast<std::size_t>(num_tokens) + 1) / 2;
}

/// Offset of entry (i, j), j <= i, inside one packed head.
constexpr std::size_t packed_index(std::size_t i, std::size_t j) noexcept {
  return i * (i + 1) / 2 + j;
}

/// Read-only view of one head's packed lower-triangular attention matrix.
class HeadView {
 public:
  HeadView(std::span<const float> packed, std::uint32_t num_tokens) noexcept
      : packed_(packed), num_tokens_(num_tokens) {}

  std::uint32_t num_tokens() const noexcept { return num_tokens_; }
  std::span<const float> packed() const noexcept { return packed_; }

  /// a_ij for j <= i; entries above the diagonal are structurally zero.
  float operator()(std::size_t i, std::size_t j) const noexcept {
    return j > i ? 0.0f : packed_[packed_index(i, j)];
  }

  float diagonal(std::size_t i) const noexcept { return packed_[packed_index(i, i)]; }

  std::span<const float> row(std::size_t i) const noexcept {
    return packed_.subspan(packed_index(i, 0), i + 1);
  }

 private:
  std::span<const float> packed_;
  std::uint32_t num_tokens_;
};

/// One example's causal attention maps for every layer and head.
///
/// `values` holds the lower triangle of each T x T matrix, ordered layer-major,
/// then head-major, then row-major; each head occupies packed_size(T) floats.
struct AttentionStack {
  std::string example_id;
  std::uint32_t num_layers = 0;
  std::uint32_t num_heads = 0;
  std::uint32_t num_tokens = 0;
  std::vector<float> values;

  AttentionStack() = default;
  AttentionStack(std::string id, std::uint32_t layers, std::uint32_t heads, std::uint32_t tokens)
      : example_id(std::move(id)),
        num_layers(layers),
        num_heads(heads),
        num_tokens(tokens),
        values(static_cast<std::size_t>(layers) * heads * packed_size(tokens), 0.0f) {}

  std::size_t head_size() const noexcept { return packed_size(num_tokens); }

  std::size_t expected_size() const noexcept {
    return static_cast<std::size_t>(num_layers) * num_heads * head_size();
  }

  std::size_t head_offset(std::uint32_t layer, std::uint32_t head) const noexcept {
    return (static_cast<std::size_t>(layer) * num_heads + head) * head_size();
  }

  HeadView head(std::uint32_t layer, std::uint32_t head) const noexcept {
    return HeadView(std::span<const float>(values).subspan(head_offset(layer, head), head_size()),
                    num_tokens);
  }

  std::span<float> mutable_head(std::uint32_t layer, std::uint32_t head) noexcept {
    return std::span<float>(values).subspan(head_offset(layer, head), head_size());
  }

  float& at(std::uint32_t layer, std::uint32_t head, std::size_t i, std::size_t j) noexcept {
    return values[head_offset(layer, head) + packed_index(i, j)];
  }

  bool operator==(const AttentionStack&) const = default;
};

}  // namespace lapeig
