// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lapeig/feature_matrix.hpp"

namespace lapeig {

enum class Alternative { two_sided, greater, less };

struct MannWhitneyResult {
  double u1 = 0.0;  ///< sum of midranks of x minus |x|(|x|+1)/2
  double u2 = 0.0;  ///< |x||y| - u1
  double p = 1.0;
};

/// Mann-Whitney U with the normal approximation, tie-corrected variance and a
/// 0.5 continuity correction. `greater` tests x stochastically larger than y.
/// p lies in (0, 1]; zero variance (all values equal) gives p = 1.
MannWhitneyResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                                 Alternative alternative = Alternative::two_sided);

/// Collapses the per-rank p-values of one head: min p times the count, capped at 1.
double summarize_head_pvalues(std::span<const double> p_values);

inline constexpr double kSignificanceLevel = 0.05;

struct SignificanceGrid {
  std::uint32_t num_layers = 0;
  std::uint32_t num_heads = 0;
  std::uint32_t ranks = 1;       ///< tests per head
  std::vector<double> p_values;  ///< L x H x ranks, layer-major
  std::vector<double> summary;   ///< L x H
  double percent_significant = 0.0;  ///< fraction of heads with summary p < 0.05
  std::string feature;

  double p(std::uint32_t l, std::uint32_t h, std::uint32_t r) const {
    return p_values[(static_cast<std::size_t>(l) * num_heads + h) * ranks + r];
  }
  double head_summary(std::uint32_t l, std::uint32_t h) const {
    return summary[static_cast<std::size_t>(l) * num_heads + h];
  }

  /// "layer,head,summary_p" rows.
  std::string to_csv() const;
  /// Shape, summary and the full p-value tensor.
  std::string to_json() const;
};

/// One test per column of `features` between label-1 and label-0 rows, grouped
/// by the (layer, head) provenance of each column.
SignificanceGrid head_significance(const FeatureMatrix& features, std::span<const int> labels);

/// Cohen's kappa over arbitrary integer category codes. When expected agreement
/// is 1 (both raters constant on the same label) kappa is defined as 1.
double cohen_kappa(std::span<const int> labels_a, std::span<const int> labels_b);

}  // namespace lapeig
