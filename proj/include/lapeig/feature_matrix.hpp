// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lapeig/attention_stack.hpp"
#include "lapeig/spectral.hpp"

namespace lapeig {

inline constexpr char kFeatMagic[4] = {'F', 'E', 'A', 'T'};
inline constexpr std::uint16_t kFeatFormatVersion = 1;
/// Set in the kind tag when the container carries a probe model instead of features.
inline constexpr std::uint16_t kFeatProbePayloadBit = 0x8000;

/// N x D row-major feature table in storage precision (32-bit float), with
/// per-row example ids and per-column (layer, head, rank) provenance.
struct FeatureMatrix {
  FeatureSpec spec;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<float> data;
  std::vector<ColumnInfo> columns;
  std::vector<std::string> row_ids;

  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(data).subspan(i * cols, cols);
  }
  std::span<float> row(std::size_t i) { return std::span<float>(data).subspan(i * cols, cols); }
  float at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  /// Rows whose id appears in `ids`, in the order of `ids`. Throws DataError on unknown ids.
  FeatureMatrix select_rows(const std::vector<std::string>& ids) const;
  /// Row subset by index, preserving order.
  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;

  bool operator==(const FeatureMatrix&) const = default;
};

struct ExtractOptions {
  /// Skip examples whose T is smaller than k instead of failing.
  bool skip_short = false;
};

struct ExtractResult {
  FeatureMatrix matrix;
  std::vector<std::string> skipped;
};

/// Feature rows for every stack, ordered by example_id. All stacks must share L and H.
ExtractResult extract_features(std::span<const AttentionStack> stacks, const FeatureSpec& spec,
                               const ExtractOptions& options = {});

/// FEAT header fields as stored.
struct FeatHeader {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::uint16_t kind_tag = 0;
  std::uint32_t k = 0;
  std::int32_t layer_selection = -1;
};

std::uint64_t write_feat(std::ostream& out, const FeatHeader& header, std::span<const float> data);
FeatHeader read_feat(std::istream& in, std::vector<float>& data);

/// Writes `<path>` plus sidecars `<stem>.cols.tsv` and `<stem>.rows.txt` beside it.
void write_feature_matrix(const FeatureMatrix& matrix, const std::filesystem::path& path);
/// Reads the FEAT table and, when present, both sidecars.
FeatureMatrix read_feature_matrix(const std::filesystem::path& path);

std::filesystem::path columns_sidecar(const std::filesystem::path& feat_path);
std::filesystem::path rows_sidecar(const std::filesystem::path& feat_path);

}  // namespace lapeig
