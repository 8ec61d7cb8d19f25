// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lapeig/attention_stack.hpp"
#include "lapeig/feature_matrix.hpp"
#include "lapeig/manifest.hpp"

namespace lapeig {

/// Flat-Dirichlet rows: row i normalizes i + 1 unit-rate exponential variates.
/// Draw order is layer, head, row, column from one SplitMix64 stream at `seed`.
AttentionStack gen_random_stack(std::uint64_t seed, std::uint32_t num_layers,
                                std::uint32_t num_heads, std::uint32_t num_tokens,
                                std::string example_id = {});

enum class ClassAssignment {
  interleaved,  ///< even example index non_hallucination, odd hallucination
  blocked,      ///< first n_per_class non_hallucination, then hallucination
};

struct PlantedSpec {
  std::uint32_t num_layers = 4;
  std::uint32_t num_heads = 4;
  std::uint32_t num_tokens = 32;
  /// Hallucination rows scale the self-attention variate by (1 + delta).
  double delta = 0.1;
  /// Gamma shape of every row variate; 1 gives flat Dirichlet rows.
  double base_concentration = 1.0;
  ClassAssignment assignment = ClassAssignment::interleaved;
  std::string dataset = "planted";
  double temperature = 1.0;
  std::string prompt_id = "synthetic";
};

struct PlantedDataset {
  std::vector<AttentionStack> stacks;
  LabeledManifest manifest;
};

/// One planted stack; `hallucination` selects the shifted class.
AttentionStack gen_planted_stack(std::uint64_t seed, const PlantedSpec& spec, bool hallucination,
                                 std::string example_id);

/// 2 * n_per_class stacks. Example e uses derive_seed(seed, e) and the id
/// "<dataset>-<e, six digits>".
PlantedDataset gen_planted_dataset(const PlantedSpec& spec, std::size_t n_per_class,
                                   std::uint64_t seed);

/// Adds N(0, sigma^2) noise to round_half_even(fraction * D) seeded columns.
/// Column choice depends only on `seed`; `noise_stream` selects fresh draws so
/// separately perturbed partitions share columns but not noise.
FeatureMatrix perturb_features(const FeatureMatrix& X, double sigma, double fraction,
                               std::uint64_t seed, std::uint64_t noise_stream = 0);

}  // namespace lapeig
