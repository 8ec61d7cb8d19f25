// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lapeig/error.hpp"
#include "lapeig/pipeline.hpp"
#include "lapeig/rng.hpp"
#include "lapeig/synthetic.hpp"

using namespace lapeig;
namespace fs = std::filesystem;

namespace {

Corpus planted_corpus(std::size_t n_per_class, double delta, std::uint64_t seed,
                      const std::string& dataset = "planted", double temperature = 1.0) {
  PlantedSpec spec;
  spec.delta = delta;
  spec.dataset = dataset;
  spec.temperature = temperature;
  auto d = gen_planted_dataset(spec, n_per_class, seed);
  return {std::move(d.stacks), std::move(d.manifest)};
}

void append(Corpus& into, const Corpus& from) {
  into.stacks.insert(into.stacks.end(), from.stacks.begin(), from.stacks.end());
  for (const auto& r : from.manifest.records()) into.manifest.add(r);
}

FeatureMatrix lap_features(const Corpus& c, std::uint32_t k) {
  return extract_features(c.stacks, {FeatureKind::lap_eigvals, k, LayerSelection::all()}).matrix;
}

const SweepRow& find_row(const SweepResult& r, const std::string& value) {
  const auto it = std::find_if(r.rows.begin(), r.rows.end(),
                               [&](const SweepRow& row) { return row.value == value; });
  REQUIRE(it != r.rows.end());
  return *it;
}

}  // namespace

TEST_CASE("corpus save and load round trip") {
  const auto dir = fs::temp_directory_path() / "lapeig_pipeline_corpus";
  fs::remove_all(dir);
  auto c = planted_corpus(3, 0.1, 1);
  save_corpus(c, dir);
  CHECK(fs::exists(dir / "manifest.jsonl"));
  CHECK(fs::exists(dir / "planted-000000.atns"));
  const auto back = load_corpus(dir, dir / "manifest.jsonl");
  REQUIRE(back.stacks.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(back.stacks[i] == c.stacks[i]);
  CHECK(back.min_tokens() == 32);
  CHECK(back.subset({"planted-000001"}).stacks.size() == 1);

  // A stack without a manifest record is a data error.
  std::ofstream trimmed(dir / "manifest.jsonl");
  for (std::size_t i = 0; i < 5; ++i) write_manifest(c.manifest.subset({c.stacks[i].example_id}), trimmed);
  trimmed.close();
  CHECK_THROWS_AS(load_corpus(dir, dir / "manifest.jsonl"), DataError);
  fs::remove_all(dir);
}

TEST_CASE("labels follow the feature rows") {
  auto c = planted_corpus(4, 0.1, 2);
  const auto X = lap_features(c, 3);
  const auto y = labels_for(X, c.manifest);
  REQUIRE(y.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) CHECK(y[i] == static_cast<int>(i % 2));
  CHECK(rows_present(X, {"planted-000003", "zzz"}) == std::vector<std::string>{"planted-000003"});
}

TEST_CASE("train and eval agree on the training rows") {
  const auto c = planted_corpus(400, 0.1, 3);
  const auto X = lap_features(c, 10);
  const auto plan = stratified_split(c.manifest, 0.8, 3);
  TrainConfig config;
  const auto r = train_and_evaluate(X, c.manifest, plan, config);
  const auto again = evaluate_rows(r.model, X, c.manifest, plan.train_ids, "train", config);
  CHECK(std::abs(again.auroc - r.train.auroc) <= 1e-12);
  CHECK(r.train.auroc >= r.test.auroc - 0.02);
  CHECK(r.test.n_pos + r.test.n_neg == plan.test_ids.size());
  CHECK(r.test.feature == "lap_eigvals");
  CHECK(r.test.k == "10");
}

TEST_CASE("a strongly planted signal is detected almost perfectly") {
  const auto c = planted_corpus(300, 1.0, 4);
  const auto X = lap_features(c, 10);
  const auto r = train_and_evaluate(X, c.manifest, stratified_split(c.manifest, 0.8, 4), {});
  CHECK(r.test.auroc >= 0.99);
}

TEST_CASE("shuffled labels leave little to learn") {
  auto c = planted_corpus(1000, 0.1, 5);
  // Reassign labels by a seeded shuffle; features no longer carry them.
  std::vector<Label> labels;
  for (const auto& r : c.manifest.records()) labels.push_back(r.label);
  SplitMix64 rng(55);
  shuffle(std::span<Label>(labels), rng);
  LabeledManifest shuffled;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto rec = c.manifest.records()[i];
    rec.label = labels[i];
    shuffled.add(rec);
  }
  const auto X = lap_features(c, 10);
  const auto r = train_and_evaluate(X, shuffled, stratified_split(shuffled, 0.8, 5), {});
  CHECK(r.train.auroc <= 0.75);
  CHECK(std::abs(r.test.auroc - 0.5) < 0.1);
}

TEST_CASE("a probe refuses features of another kind") {
  const auto c = planted_corpus(20, 0.1, 6);
  const auto X = lap_features(c, 5);
  const auto plan = stratified_split(c.manifest, 0.8, 6);
  const auto r = train_and_evaluate(X, c.manifest, plan, {});
  const auto other = extract_features(c.stacks, {FeatureKind::attn_logdet, std::nullopt, {}}).matrix;
  CHECK_THROWS_AS(evaluate_rows(r.model, other, c.manifest, plan.test_ids, "test", {}), UsageError);
  SplitPlan empty = plan;
  empty.test_ids.clear();
  CHECK_THROWS_AS(train_and_evaluate(X, c.manifest, empty, {}), DataError);
}

TEST_CASE("usable k drops values larger than the shortest example") {
  std::vector<std::string> warnings;
  const auto k = usable_k({5, 10, 50, 100}, 32, &warnings);
  CHECK(k == std::vector<std::uint32_t>{5, 10});
  REQUIRE(warnings.size() == 2);
  CHECK(warnings[0].find("k=50") != std::string::npos);
  AblationConfig config;
  CHECK(default_k(config, 32) == 20);
  config.k = 7;
  CHECK(default_k(config, 32) == 7);
}

TEST_CASE("top-k sweep is non-decreasing and all layers beat any single layer") {
  const auto c = planted_corpus(500, 0.1, 7);
  const auto plan = stratified_split(c.manifest, 0.8, 7);
  AblationConfig config;
  config.k_list = {5, 10, 20, 50};
  const auto sweep = ablate_top_k(c, plan, config);
  REQUIRE(sweep.rows.size() == 3);
  CHECK(sweep.warnings.size() == 1);
  for (std::size_t i = 1; i < sweep.rows.size(); ++i) {
    CHECK(sweep.rows[i].test_auroc_mean >= sweep.rows[i - 1].test_auroc_mean - 0.01);
  }
  const auto layers = ablate_layers(c, plan, config);
  REQUIRE(layers.rows.size() == 5);
  const double all = find_row(layers, "all").test_auroc_mean;
  for (const auto& row : layers.rows) CHECK(all >= row.test_auroc_mean - 0.01);
  CHECK(sweep_csv(sweep).rfind(sweep_csv_header(), 0) == 0);
}

TEST_CASE("tiny noise is harmless, large noise hurts") {
  const auto c = planted_corpus(500, 0.1, 8);
  const auto X = lap_features(c, 20);
  const auto plan = stratified_split(c.manifest, 0.8, 8);
  AblationConfig config;
  config.sigmas = {0.0, 1e-5, 1e-1};
  config.noise_repeats = 3;
  const auto r = ablate_noise(X, c.manifest, plan, config);
  REQUIRE(r.rows.size() == 3);
  CHECK(*r.rows[0].percent_drop == 0.0);
  CHECK(std::abs(*r.rows[1].percent_drop) <= 0.5);
  CHECK(*r.rows[2].percent_drop >= 10.0);
  CHECK(r.rows[2].runs == 3);
}

TEST_CASE("training fraction sweep keeps the test split fixed") {
  const auto c = planted_corpus(300, 0.2, 9);
  const auto X = lap_features(c, 10);
  const auto plan = stratified_split(c.manifest, 0.8, 9);
  AblationConfig config;
  config.fractions = {0.25, 1.0};
  const auto r = ablate_fraction(X, c.manifest, plan, config);
  REQUIRE(r.rows.size() == 2);
  const auto full = train_and_evaluate(X, c.manifest, plan, config.train);
  CHECK(r.rows[1].test_auroc_mean == doctest::Approx(full.test.auroc).epsilon(1e-12));
}

TEST_CASE("cross-dataset diagonal equals same-dataset evaluation") {
  auto c = planted_corpus(150, 0.2, 10, "alpha");
  append(c, planted_corpus(150, 0.05, 11, "beta"));
  AblationConfig config;
  config.k = 10;
  const auto r = ablate_generalization(c, config);
  REQUIRE(r.rows.size() == 4);
  for (const std::string d : {"alpha", "beta"}) {
    const auto& row = find_row(r, d + "->" + d);
    CHECK(*row.percent_drop == 0.0);
    const auto sub = c.manifest.select(d, std::nullopt);
    const auto plan = stratified_split(sub, config.train_fraction, config.train.seed);
    const auto direct = train_and_evaluate(lap_features(c, 10), c.manifest, plan, config.train);
    CHECK(row.test_auroc_mean == direct.test.auroc);
  }
  CHECK(find_row(r, "alpha->beta").train_dataset == "alpha");
  CHECK(find_row(r, "alpha->beta").dataset == "beta");
}

TEST_CASE("temperature ablation subsamples each temperature") {
  auto c = planted_corpus(60, 0.3, 12, "planted", 0.1);
  append(c, [] {
    auto other = planted_corpus(40, 0.3, 13, "planted", 1.0);
    for (auto& s : other.stacks) s.example_id = "hot-" + s.example_id;
    LabeledManifest renamed;
    for (auto r : other.manifest.records()) {
      r.example_id = "hot-" + r.example_id;
      renamed.add(r);
    }
    other.manifest = renamed;
    return other;
  }());
  AblationConfig config;
  config.k = 10;
  config.n_per_class = 50;
  config.subsample_repeats = 3;
  const auto r = ablate_temperature(c, config);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].runs == 3);
  CHECK(r.rows[0].temperature == 0.1);
  CHECK(r.warnings.size() == 1);  // 1.0 has only 40 per class
}

TEST_CASE("prompt ablation runs one probe per prompt") {
  auto c = planted_corpus(60, 0.3, 14);
  LabeledManifest relabeled;
  std::size_t i = 0;
  for (auto r : c.manifest.records()) {
    r.prompt_id = (i++ / 2) % 2 ? "p2" : "p1";
    relabeled.add(r);
  }
  c.manifest = relabeled;
  AblationConfig config;
  config.k = 5;
  const auto r = ablate_prompts(c, config);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].value == "p1");
  CHECK(r.rows[1].value == "p2");
}
