// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lapeig/attention_stack.hpp"

namespace lapeig {

enum class FeatureKind : std::uint16_t {
  lap_eigvals = 1,
  attn_eig = 2,
  attn_logdet = 3,
  attn_score_per_layer = 4,
};

std::string_view to_string(FeatureKind kind) noexcept;
FeatureKind parse_feature_kind(std::string_view text);
/// Kinds that take a top-k parameter.
constexpr bool uses_k(FeatureKind kind) noexcept {
  return kind == FeatureKind::lap_eigvals || kind == FeatureKind::attn_eig;
}

/// All layers, or a single layer by index.
struct LayerSelection {
  std::optional<std::uint32_t> layer;

  static LayerSelection all() noexcept { return {}; }
  static LayerSelection single(std::uint32_t l) noexcept { return {l}; }
  bool is_all() const noexcept { return !layer.has_value(); }

  /// "all" or the decimal layer index.
  std::string str() const;
  static LayerSelection parse(std::string_view text);

  bool operator==(const LayerSelection&) const = default;
};

/// Which features to compute: kind, top-k (eigenvalue kinds only) and layers.
struct FeatureSpec {
  FeatureKind kind = FeatureKind::lap_eigvals;
  std::optional<std::uint32_t> k;
  LayerSelection layers;

  /// e.g. "lap_eigvals_k20_all", "attn_logdet_l3".
  std::string tag() const;
  bool operator==(const FeatureSpec&) const = default;
};

/// Provenance of one feature column. -1 marks an axis that does not apply.
struct ColumnInfo {
  std::int32_t layer = -1;
  std::int32_t head = -1;
  std::int32_t rank = -1;

  bool operator==(const ColumnInfo&) const = default;
};

/// Clamp applied to diagonal attention before taking logs.
inline constexpr double kLogEpsilon = 1e-12;

/// Laplacian diagonal of one head; eigenvalues of L = D - A indexed by token.
struct LaplacianDiagonal {
  std::uint32_t layer = 0;
  std::uint32_t head = 0;
  std::vector<double> lambdas;
};

struct FeatureVector {
  std::vector<double> values;
  FeatureSpec spec;
};

/// lambda_i = d_ii - a_ii with d_ii = (sum_{u >= i} a_ui) / (T - i). Unsorted.
std::vector<double> laplacian_eigvals(const HeadView& head);
LaplacianDiagonal laplacian_eigvals(const AttentionStack& stack, std::uint32_t layer,
                                    std::uint32_t head);

/// Eigenvalues of the raw (triangular) attention matrix: its diagonal, by token.
std::vector<double> attention_eigvals(const HeadView& head);

/// sum_i log(max(a_ii, kLogEpsilon)).
double attention_logdet(const HeadView& head);

/// Descending, ties kept in token order; throws UsageError when k > size.
std::vector<double> top_k_descending(std::span<const double> values, std::uint32_t k);

FeatureVector lap_eigvals_features(const AttentionStack& stack, std::uint32_t k,
                                   LayerSelection layers = LayerSelection::all());
FeatureVector attn_eig_features(const AttentionStack& stack, std::uint32_t k,
                                LayerSelection layers = LayerSelection::all());
FeatureVector attn_logdet_features(const AttentionStack& stack,
                                   LayerSelection layers = LayerSelection::all());
/// Per-layer head sum of log-determinants (the unsupervised AttnScore).
FeatureVector attn_score_per_layer(const AttentionStack& stack,
                                   LayerSelection layers = LayerSelection::all());

FeatureVector compute_features(const AttentionStack& stack, const FeatureSpec& spec);

/// Output dimension for a stack with the given shape; also checks `spec` against it.
std::size_t feature_dimension(const FeatureSpec& spec, std::uint32_t num_layers,
                              std::uint32_t num_heads);
std::vector<ColumnInfo> feature_columns(const FeatureSpec& spec, std::uint32_t num_layers,
                                        std::uint32_t num_heads);

}  // namespace lapeig
