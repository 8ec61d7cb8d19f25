// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#include "lapeig/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "lapeig/error.hpp"
#include "lapeig/rng.hpp"

namespace lapeig {

namespace {

void check_shape(std::uint32_t L, std::uint32_t H, std::uint32_t T) {
  if (L == 0 || H == 0 || T == 0) throw UsageError("synthetic stacks need L, H, T >= 1");
}

// Fills every head with rows of Gamma(shape) variates, the diagonal one scaled
// by `diagonal_scale`, normalized in double precision.
void fill_rows(AttentionStack& stack, SplitMix64& rng, double shape, double diagonal_scale) {
  std::vector<double> row(stack.num_tokens);
  for (std::uint32_t l = 0; l < stack.num_layers; ++l) {
    for (std::uint32_t h = 0; h < stack.num_heads; ++h) {
      auto packed = stack.mutable_head(l, h);
      for (std::uint32_t i = 0; i < stack.num_tokens; ++i) {
        double sum = 0.0;
        for (std::uint32_t j = 0; j <= i; ++j) {
          row[j] = rng.gamma(shape);
          if (j == i) row[j] *= diagonal_scale;
          sum += row[j];
        }
        float* out = packed.data() + packed_index(i, 0);
        for (std::uint32_t j = 0; j <= i; ++j) out[j] = static_cast<float>(row[j] / sum);
      }
    }
  }
}

std::string numbered_id(const std::string& prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "-%06zu", index);
  return prefix + buf;
}

}  // namespace

AttentionStack gen_random_stack(std::uint64_t seed, std::uint32_t num_layers,
                                std::uint32_t num_heads, std::uint32_t num_tokens,
                                std::string example_id) {
  check_shape(num_layers, num_heads, num_tokens);
  if (example_id.empty()) example_id = "random-" + std::to_string(seed);
  AttentionStack stack(std::move(example_id), num_layers, num_heads, num_tokens);
  SplitMix64 rng(seed);
  fill_rows(stack, rng, 1.0, 1.0);
  return stack;
}

AttentionStack gen_planted_stack(std::uint64_t seed, const PlantedSpec& spec, bool hallucination,
                                 std::string example_id) {
  check_shape(spec.num_layers, spec.num_heads, spec.num_tokens);
  if (!(spec.delta >= 0.0)) throw UsageError("planted delta must be >= 0");
  if (!(spec.base_concentration > 0.0)) throw UsageError("base concentration must be > 0");
  AttentionStack stack(std::move(example_id), spec.num_layers, spec.num_heads, spec.num_tokens);
  SplitMix64 rng(seed);
  fill_rows(stack, rng, spec.base_concentration, hallucination ? 1.0 + spec.delta : 1.0);
  return stack;
}

PlantedDataset gen_planted_dataset(const PlantedSpec& spec, std::size_t n_per_class,
                                   std::uint64_t seed) {
  if (n_per_class == 0) throw UsageError("n_per_class must be >= 1");
  PlantedDataset out;
  const std::size_t total = 2 * n_per_class;
  out.stacks.reserve(total);
  for (std::size_t e = 0; e < total; ++e) {
    const bool hallucination = spec.assignment == ClassAssignment::interleaved
                                   ? (e % 2 == 1)
                                   : (e >= n_per_class);
    std::string id = numbered_id(spec.dataset, e);
    out.stacks.push_back(gen_planted_stack(derive_seed(seed, e), spec, hallucination, id));
    ManifestRecord record;
    record.example_id = std::move(id);
    record.label = hallucination ? Label::hallucination : Label::non_hallucination;
    record.dataset = spec.dataset;
    record.temperature = spec.temperature;
    record.prompt_id = spec.prompt_id;
    out.manifest.add(std::move(record));
  }
  return out;
}

FeatureMatrix perturb_features(const FeatureMatrix& X, double sigma, double fraction,
                               std::uint64_t seed, std::uint64_t noise_stream) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw UsageError("perturb fraction must be in [0, 1]");
  if (!(sigma >= 0.0)) throw UsageError("perturb sigma must be >= 0");
  FeatureMatrix out = X;
  if (sigma == 0.0 || X.cols == 0) return out;

  std::vector<std::size_t> columns(X.cols);
  std::iota(columns.begin(), columns.end(), std::size_t{0});
  SplitMix64 column_rng(derive_seed(seed, streams::perturb_columns));
  shuffle(std::span<std::size_t>(columns), column_rng);
  const auto n = static_cast<std::size_t>(round_half_even(fraction * static_cast<double>(X.cols)));
  columns.resize(n);
  std::sort(columns.begin(), columns.end());

  SplitMix64 noise(derive_seed(derive_seed(seed, streams::perturb_noise), noise_stream));
  for (std::uint32_t i = 0; i < out.rows; ++i) {
    auto row = out.row(i);
    for (std::size_t c : columns) {
      row[c] = static_cast<float>(static_cast<double>(row[c]) + sigma * noise.normal());
    }
  }
  return out;
}

}  // namespace lapeig
