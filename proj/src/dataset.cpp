// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#include "lapeig/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "lapeig/error.hpp"
#include "lapeig/metrics.hpp"
#include "lapeig/rng.hpp"

namespace lapeig {

namespace {

constexpr Label kBinaryClasses[] = {Label::hallucination, Label::non_hallucination};

std::vector<std::size_t> class_positions(const LabeledManifest& manifest, Label label) {
  std::vector<std::size_t> out;
  const auto& records = manifest.records();
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].label == label) out.push_back(i);
  }
  return out;
}

std::vector<std::string> ids_in_manifest_order(const LabeledManifest& manifest,
                                               std::vector<std::size_t> positions) {
  std::sort(positions.begin(), positions.end());
  std::vector<std::string> out;
  out.reserve(positions.size());
  for (std::size_t p : positions) out.push_back(manifest.records()[p].example_id);
  return out;
}

}  // namespace

FilterResult filter_rejected(const LabeledManifest& manifest) {
  FilterResult result;
  result.before = manifest.counts();
  for (const auto& r : manifest.records()) {
    if (r.label != Label::rejected) result.kept.add(r);
  }
  if (result.kept.empty()) {
    throw DataError("filter_rejected: no hallucination or non_hallucination records remain (" +
                    std::to_string(result.before.rejected) + " rejected)");
  }
  return result;
}

SplitPlan stratified_split(const LabeledManifest& manifest, double train_frac,
                           std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw UsageError("stratified_split: train fraction must lie in (0, 1)");
  }
  SplitPlan plan;
  plan.seed = seed;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t class_index = 0;
  for (Label label : kBinaryClasses) {
    auto positions = class_positions(manifest, label);
    if (positions.size() < 2) {
      throw DataError("stratified_split: class " + std::string(to_string(label)) + " has " +
                      std::to_string(positions.size()) + " examples, need at least 2");
    }
    SplitMix64 rng(derive_seed(derive_seed(seed, streams::split), class_index++));
    shuffle(std::span<std::size_t>(positions), rng);
    const auto n_train = static_cast<std::size_t>(
        round_half_even(train_frac * static_cast<double>(positions.size())));
    train.insert(train.end(), positions.begin(), positions.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.insert(test.end(), positions.begin() + static_cast<std::ptrdiff_t>(n_train), positions.end());
    plan.train_counts[label] = n_train;
    plan.test_counts[label] = positions.size() - n_train;
  }
  plan.train_ids = ids_in_manifest_order(manifest, std::move(train));
  plan.test_ids = ids_in_manifest_order(manifest, std::move(test));
  return plan;
}

LabeledManifest apply_split(const LabeledManifest& manifest, const SplitPlan& plan) {
  const std::unordered_set<std::string> train(plan.train_ids.begin(), plan.train_ids.end());
  const std::unordered_set<std::string> test(plan.test_ids.begin(), plan.test_ids.end());
  LabeledManifest out;
  for (auto r : manifest.records()) {
    if (train.contains(r.example_id)) {
      r.split = Split::train;
    } else if (test.contains(r.example_id)) {
      r.split = Split::test;
    } else {
      continue;
    }
    out.add(std::move(r));
  }
  return out;
}

SplitPlan plan_from_manifest(const LabeledManifest& manifest, std::uint64_t seed) {
  SplitPlan plan;
  plan.seed = seed;
  for (const auto& r : manifest.records()) {
    if (!r.split || r.label == Label::rejected) continue;
    if (*r.split == Split::train) {
      plan.train_ids.push_back(r.example_id);
      ++plan.train_counts[r.label];
    } else {
      plan.test_ids.push_back(r.example_id);
      ++plan.test_counts[r.label];
    }
  }
  return plan;
}

void write_split_plan(const SplitPlan& plan, std::ostream& out) {
  auto emit = [&](const std::string& id, const char* split) {
    nlohmann::ordered_json j;
    j["example_id"] = id;
    j["split"] = split;
    out << j.dump() << '\n';
  };
  for (const auto& id : plan.train_ids) emit(id, "train");
  for (const auto& id : plan.test_ids) emit(id, "test");
  if (!out) throw DataError("split plan write failure");
}

SplitPlan read_split_plan(std::istream& in, const LabeledManifest& manifest) {
  SplitPlan plan;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string id;
    Split split = Split::train;
    try {
      const auto j = nlohmann::json::parse(line);
      id = j.at("example_id").get<std::string>();
      split = parse_split(j.at("split").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("split plan line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(id).second) throw DataError("split plan lists '" + id + "' twice");
    const auto& record = manifest.at(id);
    if (split == Split::train) {
      plan.train_ids.push_back(id);
      ++plan.train_counts[record.label];
    } else {
      plan.test_ids.push_back(id);
      ++plan.test_counts[record.label];
    }
  }
  return plan;
}

void write_split_plan_file(const SplitPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_split_plan(plan, out);
}

SplitPlan read_split_plan_file(const std::filesystem::path& path,
                               const LabeledManifest& manifest) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split plan " + path.string());
  return read_split_plan(in, manifest);
}

std::vector<Subsample> balanced_subsample(const LabeledManifest& manifest,
                                          std::size_t n_per_class, std::size_t repeats,
                                          std::uint64_t seed) {
  if (n_per_class == 0) throw UsageError("balanced_subsample: n_per_class must be positive");
  std::vector<std::vector<std::size_t>> pools;
  for (Label label : kBinaryClasses) {
    pools.push_back(class_positions(manifest, label));
    if (pools.back().size() < n_per_class) {
      throw DataError("balanced_subsample: class " + std::string(to_string(label)) + " has " +
                      std::to_string(pools.back().size()) + " examples, need " +
                      std::to_string(n_per_class));
    }
  }
  std::vector<Subsample> out;
  const std::uint64_t base = derive_seed(seed, streams::subsample);
  for (std::size_t r = 0; r < repeats; ++r) {
    Subsample sample;
    sample.seed = derive_seed(base, r);
    SplitMix64 rng(sample.seed);
    std::vector<std::size_t> picks;
    for (auto pool : pools) {
      // Partial Fisher-Yates: the first n_per_class slots are the draw.
      for (std::size_t i = 0; i < n_per_class; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
      }
      picks.insert(picks.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_per_class));
    }
    sample.ids = ids_in_manifest_order(manifest, std::move(picks));
    out.push_back(std::move(sample));
  }
  return out;
}

std::vector<std::string> stratified_fraction(const LabeledManifest& manifest, double fraction,
                                             std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw UsageError("stratified_fraction: fraction must lie in (0, 1]");
  }
  std::vector<std::size_t> picks;
  std::uint64_t class_index = 0;
  for (Label label : kBinaryClasses) {
    auto positions = class_positions(manifest, label);
    const auto n = static_cast<std::size_t>(
        round_half_even(fraction * static_cast<double>(positions.size())));
    if (n == 0) {
      throw DataError("stratified_fraction: fraction " + format_double(fraction) +
                      " leaves class " + std::string(to_string(label)) + " empty");
    }
    SplitMix64 rng(derive_seed(derive_seed(seed, streams::fraction), class_index++));
    shuffle(std::span<std::size_t>(positions), rng);
    picks.insert(picks.end(), positions.begin(), positions.begin() + static_cast<std::ptrdiff_t>(n));
  }
  return ids_in_manifest_order(manifest, std::move(picks));
}

std::string class_count_table(const LabeledManifest& manifest) {
  std::ostringstream out;
  out << std::left << std::setw(20) << "dataset" << std::setw(12) << "temperature" << std::right
      << std::setw(14) << "hallucination" << std::setw(18) << "non_hallucination"
      << std::setw(10) << "rejected" << std::setw(8) << "total" << '\n';
  for (const auto& dataset : manifest.datasets()) {
    for (double t : manifest.temperatures()) {
      const auto counts = manifest.select(dataset, t).counts();
      if (counts.total() == 0) continue;
      std::ostringstream temp;
      temp << t;
      out << std::left << std::setw(20) << dataset << std::setw(12) << temp.str() << std::right
          << std::setw(14) << counts.hallucination << std::setw(18) << counts.non_hallucination
          << std::setw(10) << counts.rejected << std::setw(8) << counts.total() << '\n';
    }
  }
  return out.str();
}

}  // namespace lapeig
