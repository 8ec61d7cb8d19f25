// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lapeig/attention_stack.hpp"
#include "lapeig/dataset.hpp"
#include "lapeig/feature_matrix.hpp"
#include "lapeig/interchange.hpp"
#include "lapeig/manifest.hpp"
#include "lapeig/metrics.hpp"
#include "lapeig/probe.hpp"

namespace lapeig {

/// Attention stacks together with their labels.
struct Corpus {
  std::vector<AttentionStack> stacks;
  LabeledManifest manifest;

  /// Smallest T over the stacks (0 when empty).
  std::uint32_t min_tokens() const noexcept;
  /// Stacks and records restricted to the given ids (manifest order kept).
  Corpus subset(const std::vector<std::string>& ids) const;
  Corpus select(const std::optional<std::string>& dataset,
                const std::optional<double>& temperature) const;
};

struct LoadOptions {
  bool validate = true;
  double row_tolerance = kIngestRowTolerance;
};

/// Every .atns file in `dir`; each must have exactly one manifest record.
Corpus load_corpus(const std::filesystem::path& dir, const std::filesystem::path& manifest_path,
                   const LoadOptions& options = {});

/// Writes stacks as <dir>/<example_id>.atns plus <dir>/manifest.jsonl.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

/// Binary labels (1 = hallucination) for the rows of `features`.
std::vector<int> labels_for(const FeatureMatrix& features, const LabeledManifest& manifest);

/// Ids of `ids` that exist as rows of `features`, in the order of `ids`.
std::vector<std::string> rows_present(const FeatureMatrix& features,
                                      const std::vector<std::string>& ids);

struct TrainConfig {
  std::size_t pca_dims = kDefaultPcaDims;
  std::uint64_t seed = 42;
  double threshold = kDefaultThreshold;
  LogisticOptions logistic;
};

struct ExperimentResult {
  ProbeModel model;
  EvalReport train;
  EvalReport test;
};

/// Scores `model` on the rows `ids` of `features`.
EvalReport evaluate_rows(const ProbeModel& model, const FeatureMatrix& features,
                         const LabeledManifest& manifest, const std::vector<std::string>& ids,
                         const std::string& split, const TrainConfig& config);

/// Fits on the plan's train rows, reports train and test metrics.
ExperimentResult train_and_evaluate(const FeatureMatrix& features, const LabeledManifest& manifest,
                                    const SplitPlan& plan, const TrainConfig& config);

// ---------------------------------------------------------------------------
// Ablations

struct AblationConfig {
  TrainConfig train;
  FeatureKind kind = FeatureKind::lap_eigvals;
  /// k for the non-k axes; defaults to the largest usable entry of k_list.
  std::optional<std::uint32_t> k;
  std::vector<std::uint32_t> k_list{5, 10, 20, 50, 100};
  std::vector<double> sigmas{0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
  double noise_fraction = 1.0;
  std::size_t noise_repeats = 5;
  std::vector<double> fractions{0.1, 0.25, 0.5, 0.75, 1.0};
  std::size_t n_per_class = 1000;
  std::size_t subsample_repeats = 10;
  double train_fraction = kDefaultTrainFraction;
};

/// One aggregated configuration of an ablation axis.
struct SweepRow {
  std::string axis;
  std::string value;
  std::string feature;
  std::string train_dataset;
  std::string dataset;
  double temperature = 0.0;
  std::size_t runs = 0;
  double test_auroc_mean = 0.0;
  double test_auroc_std = 0.0;
  double train_auroc_mean = 0.0;
  /// Percent drop relative to the axis reference (noise: sigma = 0; cross-dataset:
  /// same-dataset AUROC). Unset for axes without a reference.
  std::optional<double> percent_drop;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::string> warnings;
};

std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow& row);
std::string sweep_csv(const SweepResult& result);

/// k values of the list that fit every stack; skipped ones are reported in `warnings`.
std::vector<std::uint32_t> usable_k(const std::vector<std::uint32_t>& k_list,
                                    std::uint32_t min_tokens,
                                    std::vector<std::string>* warnings = nullptr);
std::uint32_t default_k(const AblationConfig& config, std::uint32_t min_tokens);

SweepResult ablate_top_k(const Corpus& corpus, const SplitPlan& plan, const AblationConfig& config);
/// One probe per single layer, plus the all-layers reference row.
SweepResult ablate_layers(const Corpus& corpus, const SplitPlan& plan, const AblationConfig& config);
/// Gaussian perturbation grid; each sigma averaged over noise_repeats draws.
SweepResult ablate_noise(const FeatureMatrix& features, const LabeledManifest& manifest,
                         const SplitPlan& plan, const AblationConfig& config);
/// Train on stratified fractions of the train split, evaluate on the full test split.
SweepResult ablate_fraction(const FeatureMatrix& features, const LabeledManifest& manifest,
                            const SplitPlan& plan, const AblationConfig& config);
/// Per temperature: repeated balanced subsamples, each split 80/20 and probed.
SweepResult ablate_temperature(const Corpus& corpus, const AblationConfig& config);
/// Train on each dataset's train split, test on every dataset's test split.
SweepResult ablate_generalization(const Corpus& corpus, const AblationConfig& config);
/// One probe per prompt variant (prompt_id).
SweepResult ablate_prompts(const Corpus& corpus, const AblationConfig& config);

}  // namespace lapeig
