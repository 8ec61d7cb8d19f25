// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lapeig/manifest.hpp"

namespace lapeig {

inline constexpr double kDefaultTrainFraction = 0.8;

struct FilterResult {
  LabeledManifest kept;
  ClassCounts before;
};

/// Drops rejected records. Throws DataError when nothing remains.
FilterResult filter_rejected(const LabeledManifest& manifest);

struct SplitPlan {
  std::uint64_t seed = 0;
  std::vector<std::string> train_ids;  ///< manifest order
  std::vector<std::string> test_ids;   ///< manifest order
  ClassCounts train_counts;
  ClassCounts test_counts;

  bool operator==(const SplitPlan&) const = default;
};

/// Per class: seeded shuffle, then the first round_half_even(train_frac * N_c)
/// ids go to train. Rejected records are ignored. Needs >= 2 examples per class.
SplitPlan stratified_split(const LabeledManifest& manifest,
                           double train_frac = kDefaultTrainFraction, std::uint64_t seed = 42);

/// Manifest copy with each record's split field set from `plan`; records outside it are dropped.
LabeledManifest apply_split(const LabeledManifest& manifest, const SplitPlan& plan);

/// Rebuilds a plan from the split fields of a manifest.
SplitPlan plan_from_manifest(const LabeledManifest& manifest, std::uint64_t seed = 0);

/// JSON lines {"example_id": ..., "split": "train"|"test"}.
void write_split_plan(const SplitPlan& plan, std::ostream& out);
SplitPlan read_split_plan(std::istream& in, const LabeledManifest& manifest);
void write_split_plan_file(const SplitPlan& plan, const std::filesystem::path& path);
SplitPlan read_split_plan_file(const std::filesystem::path& path,
                               const LabeledManifest& manifest);

struct Subsample {
  std::uint64_t seed = 0;
  std::vector<std::string> ids;  ///< manifest order, n_per_class of each class
};

/// `repeats` independent draws of exactly n_per_class ids per class, without
/// replacement within a draw. Draw r uses derive_seed(seed, r).
std::vector<Subsample> balanced_subsample(const LabeledManifest& manifest,
                                          std::size_t n_per_class = 1000,
                                          std::size_t repeats = 10, std::uint64_t seed = 42);

/// Seeded per-class subset of size round_half_even(fraction * N_c). Subsets
/// for different fractions are not nested.
std::vector<std::string> stratified_fraction(const LabeledManifest& manifest, double fraction,
                                             std::uint64_t seed = 42);

/// Class accounting table (hallucination / non_hallucination / rejected) per dataset.
std::string class_count_table(const LabeledManifest& manifest);

}  // namespace lapeig
