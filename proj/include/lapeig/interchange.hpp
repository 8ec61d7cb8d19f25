// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lapeig/attention_stack.hpp"

namespace lapeig {

inline constexpr char kStackMagic[4] = {'A', 'T', 'N', 'S'};
inline constexpr std::uint16_t kStackFormatVersion = 1;

/// Default row-sum tolerance for ingested (possibly half-precision) data.
inline constexpr double kIngestRowTolerance = 1e-2;
/// Row-sum tolerance for generated data, which is normalized in double precision.
inline constexpr double kStrictRowTolerance = 1e-6;

struct RowSumViolation {
  std::uint32_t layer;
  std::uint32_t head;
  std::uint32_t row;
  double sum;
};

struct EntryViolation {
  std::uint32_t layer;
  std::uint32_t head;
  std::uint32_t row;
  std::uint32_t col;
  float value;
};

/// Outcome of validate_stack. Empty means valid.
struct ValidationReport {
  bool size_mismatch = false;
  std::size_t expected_values = 0;
  std::size_t actual_values = 0;
  std::vector<RowSumViolation> row_sums;
  std::vector<EntryViolation> negative_entries;
  std::vector<EntryViolation> non_finite_entries;

  bool ok() const noexcept {
    return !size_mismatch && row_sums.empty() && negative_entries.empty() &&
           non_finite_entries.empty();
  }

  /// Human-readable multi-line summary, capped at `max_items` listed violations.
  std::string describe(std::size_t max_items = 20) const;
};

/// Lists every row whose sum deviates from 1 by more than `row_tolerance`,
/// every negative entry and every non-finite entry.
ValidationReport validate_stack(const AttentionStack& stack,
                                double row_tolerance = kIngestRowTolerance);

struct WriteOptions {
  bool validate = false;
  double row_tolerance = kIngestRowTolerance;
};

/// Serializes `stack` in the ATNS layout (see docs/FORMAT.md). Returns bytes written.
std::uint64_t write_stack(const AttentionStack& stack, std::ostream& sink,
                          const WriteOptions& options = {});

/// Parses one ATNS record. Values are returned exactly as stored; NaN entries
/// raise ValidationError naming the first offending (layer, head, row, col).
AttentionStack read_stack(std::istream& source);

void write_stack_file(const AttentionStack& stack, const std::filesystem::path& path,
                      const WriteOptions& options = {});
AttentionStack read_stack_file(const std::filesystem::path& path);

/// Every *.atns file directly inside `dir`, sorted by path.
std::vector<std::filesystem::path> list_stack_files(const std::filesystem::path& dir);

}  // namespace lapeig
