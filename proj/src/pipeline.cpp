// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#include "lapeig/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "lapeig/error.hpp"
#include "lapeig/rng.hpp"
#include "lapeig/synthetic.hpp"

namespace lapeig {

std::uint32_t Corpus::min_tokens() const noexcept {
  std::uint32_t out = 0;
  for (const auto& s : stacks) out = out == 0 ? s.num_tokens : std::min(out, s.num_tokens);
  return out;
}

Corpus Corpus::subset(const std::vector<std::string>& ids) const {
  Corpus out;
  out.manifest = manifest.subset(ids);
  for (const auto& s : stacks) {
    if (out.manifest.find(s.example_id) != nullptr) out.stacks.push_back(s);
  }
  return out;
}

Corpus Corpus::select(const std::optional<std::string>& dataset,
                      const std::optional<double>& temperature) const {
  const auto chosen = manifest.select(dataset, temperature);
  std::vector<std::string> ids;
  for (const auto& r : chosen.records()) ids.push_back(r.example_id);
  return subset(ids);
}

Corpus load_corpus(const std::filesystem::path& dir, const std::filesystem::path& manifest_path,
                   const LoadOptions& options) {
  Corpus corpus;
  corpus.manifest = read_manifest_file(manifest_path);
  const auto files = list_stack_files(dir);
  if (files.empty()) throw DataError("no .atns files in " + dir.string());
  std::unordered_set<std::string> seen;
  for (const auto& path : files) {
    auto stack = read_stack_file(path);
    if (options.validate) {
      const auto report = validate_stack(stack, options.row_tolerance);
      if (!report.ok()) {
        throw ValidationError(path.string() + ": invalid attention stack\n" + report.describe());
      }
    }
    if (corpus.manifest.find(stack.example_id) == nullptr) {
      throw DataError(path.string() + ": example '" + stack.example_id +
                      "' has no manifest record");
    }
    if (!seen.insert(stack.example_id).second) {
      throw DataError("example '" + stack.example_id + "' appears in more than one stack file");
    }
    corpus.stacks.push_back(std::move(stack));
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& s : corpus.stacks) write_stack_file(s, dir / (s.example_id + ".atns"));
  write_manifest_file(corpus.manifest, dir / "manifest.jsonl");
}

std::vector<int> labels_for(const FeatureMatrix& features, const LabeledManifest& manifest) {
  if (features.row_ids.size() != features.rows) {
    throw DataError("feature matrix has no row ids; cannot join labels");
  }
  std::vector<int> labels;
  labels.reserve(features.rows);
  for (const auto& id : features.row_ids) labels.push_back(binary_label(manifest.at(id).label));
  return labels;
}

std::vector<std::string> rows_present(const FeatureMatrix& features,
                                      const std::vector<std::string>& ids) {
  const std::unordered_set<std::string> have(features.row_ids.begin(), features.row_ids.end());
  std::vector<std::string> out;
  for (const auto& id : ids) {
    if (have.contains(id)) out.push_back(id);
  }
  return out;
}

namespace {

// Dataset / temperature of a set of records, "mixed" when they differ.
void describe_rows(const LabeledManifest& manifest, const std::vector<std::string>& ids,
                   std::string& dataset, double& temperature) {
  dataset.clear();
  temperature = 0.0;
  bool first = true;
  for (const auto& id : ids) {
    const auto& r = manifest.at(id);
    if (first) {
      dataset = r.dataset;
      temperature = r.temperature;
      first = false;
    } else {
      if (r.dataset != dataset) dataset = "mixed";
      if (r.temperature != temperature) temperature = std::nan("");
    }
  }
}

EvalReport echo(const FeatureSpec& spec, const TrainConfig& config) {
  EvalReport r;
  r.feature = std::string(to_string(spec.kind));
  r.k = spec.k ? std::to_string(*spec.k) : std::string("-");
  r.layers = spec.layers.str();
  r.seed = config.seed;
  return r;
}

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

// Population (ddof = 0) moments.
Moments moments(const std::vector<double>& v) {
  Moments m;
  if (v.empty()) return m;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.stddev = std::sqrt(ss / static_cast<double>(v.size()));
  return m;
}

SweepRow row_from(const std::string& axis, const std::string& value, const ExperimentResult& r) {
  SweepRow row;
  row.axis = axis;
  row.value = value;
  row.feature = r.model.spec.tag();
  row.train_dataset = r.test.train_dataset;
  row.dataset = r.test.dataset;
  row.temperature = r.test.temperature;
  row.runs = 1;
  row.test_auroc_mean = r.test.auroc;
  row.train_auroc_mean = r.train.auroc;
  return row;
}

SweepRow aggregate(const std::string& axis, const std::string& value,
                   const std::vector<ExperimentResult>& runs) {
  SweepRow row = row_from(axis, value, runs.front());
  std::vector<double> test;
  std::vector<double> train;
  for (const auto& r : runs) {
    test.push_back(r.test.auroc);
    train.push_back(r.train.auroc);
  }
  const auto mt = moments(test);
  row.runs = runs.size();
  row.test_auroc_mean = mt.mean;
  row.test_auroc_std = mt.stddev;
  row.train_auroc_mean = moments(train).mean;
  return row;
}

FeatureMatrix features_for(const Corpus& corpus, const FeatureSpec& spec) {
  return extract_features(corpus.stacks, spec).matrix;
}

SplitPlan restrict_plan(const SplitPlan& plan, const FeatureMatrix& features) {
  SplitPlan out = plan;
  out.train_ids = rows_present(features, plan.train_ids);
  out.test_ids = rows_present(features, plan.test_ids);
  return out;
}

}  // namespace

EvalReport evaluate_rows(const ProbeModel& model, const FeatureMatrix& features,
                         const LabeledManifest& manifest, const std::vector<std::string>& ids,
                         const std::string& split, const TrainConfig& config) {
  const FeatureMatrix rows = features.select_rows(ids);
  const auto labels = labels_for(rows, manifest);
  const auto scores = model.predict(rows);
  EvalReport report = echo(features.spec, config);
  report.split = split;
  report.train_dataset = model.info.dataset;
  describe_rows(manifest, ids, report.dataset, report.temperature);
  return evaluate(scores, labels, report, config.threshold);
}

ExperimentResult train_and_evaluate(const FeatureMatrix& features, const LabeledManifest& manifest,
                                    const SplitPlan& plan, const TrainConfig& config) {
  const auto train_ids = rows_present(features, plan.train_ids);
  const auto test_ids = rows_present(features, plan.test_ids);
  if (train_ids.empty()) throw DataError("no training rows available");
  if (test_ids.empty()) throw DataError("no test rows available");
  const FeatureMatrix train = features.select_rows(train_ids);
  const auto labels = labels_for(train, manifest);

  ProbeOptions options;
  options.pca_dims = config.pca_dims;
  options.logistic = config.logistic;
  options.info.seed = config.seed;
  double temperature = 0.0;
  describe_rows(manifest, train_ids, options.info.dataset, temperature);

  ExperimentResult result;
  result.model = probe_fit(train, labels, options);
  result.train = evaluate_rows(result.model, features, manifest, train_ids, "train", config);
  result.test = evaluate_rows(result.model, features, manifest, test_ids, "test", config);
  return result;
}

// ---------------------------------------------------------------------------

std::string sweep_csv_header() {
  return "axis,value,feature,train_dataset,dataset,temperature,runs,test_auroc_mean,"
         "test_auroc_std,train_auroc_mean,percent_drop";
}

std::string sweep_csv_row(const SweepRow& r) {
  return r.axis + ',' + r.value + ',' + r.feature + ',' + r.train_dataset + ',' + r.dataset + ',' +
         format_double(r.temperature) + ',' + std::to_string(r.runs) + ',' +
         format_double(r.test_auroc_mean) + ',' + format_double(r.test_auroc_std) + ',' +
         format_double(r.train_auroc_mean) + ',' +
         (r.percent_drop ? format_double(*r.percent_drop) : std::string());
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = sweep_csv_header() + '\n';
  for (const auto& row : result.rows) out += sweep_csv_row(row) + '\n';
  return out;
}

std::vector<std::uint32_t> usable_k(const std::vector<std::uint32_t>& k_list,
                                    std::uint32_t min_tokens, std::vector<std::string>* warnings) {
  std::vector<std::uint32_t> out;
  for (auto k : k_list) {
    if (k >= 1 && k <= min_tokens) {
      out.push_back(k);
    } else if (warnings != nullptr) {
      warnings->push_back("k=" + std::to_string(k) + " skipped: exceeds the shortest example (T=" +
                          std::to_string(min_tokens) + ")");
    }
  }
  return out;
}

std::uint32_t default_k(const AblationConfig& config, std::uint32_t min_tokens) {
  if (config.k) {
    if (*config.k > min_tokens) {
      throw UsageError("k=" + std::to_string(*config.k) + " exceeds the shortest example (T=" +
                       std::to_string(min_tokens) + ")");
    }
    return *config.k;
  }
  const auto ks = usable_k(config.k_list, min_tokens);
  if (ks.empty()) throw UsageError("no k in the list fits the shortest example");
  return *std::max_element(ks.begin(), ks.end());
}

namespace {

FeatureSpec ablation_spec(const AblationConfig& config, std::uint32_t k) {
  FeatureSpec spec;
  spec.kind = config.kind;
  if (uses_k(config.kind)) spec.k = k;
  return spec;
}

}  // namespace

SweepResult ablate_top_k(const Corpus& corpus, const SplitPlan& plan,
                         const AblationConfig& config) {
  if (!uses_k(config.kind)) throw UsageError("top-k sweep needs an eigenvalue feature kind");
  SweepResult out;
  for (auto k : usable_k(config.k_list, corpus.min_tokens(), &out.warnings)) {
    const auto features = features_for(corpus, ablation_spec(config, k));
    const auto r = train_and_evaluate(features, corpus.manifest, plan, config.train);
    out.rows.push_back(row_from("top_k", std::to_string(k), r));
  }
  return out;
}

SweepResult ablate_layers(const Corpus& corpus, const SplitPlan& plan,
                          const AblationConfig& config) {
  if (corpus.stacks.empty()) throw DataError("ablate_layers: empty corpus");
  SweepResult out;
  FeatureSpec spec = ablation_spec(config, default_k(config, corpus.min_tokens()));
  for (std::uint32_t l = 0; l < corpus.stacks.front().num_layers; ++l) {
    spec.layers = LayerSelection::single(l);
    const auto r = train_and_evaluate(features_for(corpus, spec), corpus.manifest, plan, config.train);
    out.rows.push_back(row_from("layer", std::to_string(l), r));
  }
  spec.layers = LayerSelection::all();
  const auto r = train_and_evaluate(features_for(corpus, spec), corpus.manifest, plan, config.train);
  out.rows.push_back(row_from("layer", "all", r));
  return out;
}

SweepResult ablate_noise(const FeatureMatrix& features, const LabeledManifest& manifest,
                         const SplitPlan& plan, const AblationConfig& config) {
  SweepResult out;
  const auto baseline = train_and_evaluate(features, manifest, plan, config.train);
  const std::uint64_t root = derive_seed(config.train.seed, streams::perturb_noise);
  for (double sigma : config.sigmas) {
    SweepRow row;
    if (sigma == 0.0) {
      row = row_from("noise_sigma", format_double(sigma), baseline);
    } else {
      std::vector<ExperimentResult> runs;
      for (std::size_t r = 0; r < std::max<std::size_t>(config.noise_repeats, 1); ++r) {
        const auto noisy = perturb_features(features, sigma, config.noise_fraction, derive_seed(root, r));
        runs.push_back(train_and_evaluate(noisy, manifest, plan, config.train));
      }
      row = aggregate("noise_sigma", format_double(sigma), runs);
    }
    row.percent_drop = 100.0 * (baseline.test.auroc - row.test_auroc_mean) / baseline.test.auroc;
    out.rows.push_back(row);
  }
  return out;
}

SweepResult ablate_fraction(const FeatureMatrix& features, const LabeledManifest& manifest,
                            const SplitPlan& plan, const AblationConfig& config) {
  SweepResult out;
  const auto full = restrict_plan(plan, features);
  const LabeledManifest train_manifest = manifest.subset(full.train_ids);
  for (double fraction : config.fractions) {
    SplitPlan reduced = full;
    reduced.train_ids = stratified_fraction(train_manifest, fraction, config.train.seed);
    const auto r = train_and_evaluate(features, manifest, reduced, config.train);
    auto row = row_from("train_fraction", format_double(fraction), r);
    out.rows.push_back(row);
  }
  return out;
}

SweepResult ablate_temperature(const Corpus& corpus, const AblationConfig& config) {
  SweepResult out;
  const FeatureSpec spec = ablation_spec(config, default_k(config, corpus.min_tokens()));
  const auto features = features_for(corpus, spec);
  for (double t : corpus.manifest.temperatures()) {
    const auto at_t = corpus.manifest.select(std::nullopt, t);
    const auto counts = at_t.counts();
    const std::size_t n = std::min({config.n_per_class, counts.hallucination, counts.non_hallucination});
    if (n < config.n_per_class) {
      out.warnings.push_back("temperature " + format_double(t) + ": only " + std::to_string(n) +
                             " examples in the smaller class, subsampling " + std::to_string(n) +
                             " per class");
    }
    if (n < 2) {
      out.warnings.push_back("temperature " + format_double(t) + " skipped: a class has < 2 examples");
      continue;
    }
    std::vector<ExperimentResult> runs;
    for (const auto& sample :
         balanced_subsample(at_t, n, config.subsample_repeats, config.train.seed)) {
      const auto plan = stratified_split(at_t.subset(sample.ids), config.train_fraction, sample.seed);
      runs.push_back(train_and_evaluate(features, corpus.manifest, plan, config.train));
    }
    out.rows.push_back(aggregate("temperature", format_double(t), runs));
  }
  return out;
}

SweepResult ablate_generalization(const Corpus& corpus, const AblationConfig& config) {
  SweepResult out;
  const FeatureSpec spec = ablation_spec(config, default_k(config, corpus.min_tokens()));
  const auto features = features_for(corpus, spec);
  const auto datasets = corpus.manifest.datasets();
  std::vector<SplitPlan> plans;
  for (const auto& d : datasets) {
    plans.push_back(stratified_split(corpus.manifest.select(d, std::nullopt), config.train_fraction,
                                     config.train.seed));
  }
  // Same-dataset runs first; they are the reference for the percent drop.
  std::vector<ExperimentResult> same;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    same.push_back(train_and_evaluate(features, corpus.manifest, plans[i], config.train));
  }
  for (std::size_t a = 0; a < datasets.size(); ++a) {
    for (std::size_t b = 0; b < datasets.size(); ++b) {
      ExperimentResult r;
      if (a == b) {
        r = same[a];
      } else {
        r.model = same[a].model;
        r.train = same[a].train;
        r.test = evaluate_rows(r.model, features, corpus.manifest,
                               rows_present(features, plans[b].test_ids), "test", config.train);
      }
      auto row = row_from("cross_dataset", datasets[a] + "->" + datasets[b], r);
      const double reference = same[b].test.auroc;
      row.percent_drop = 100.0 * (reference - r.test.auroc) / reference;
      out.rows.push_back(row);
    }
  }
  return out;
}

SweepResult ablate_prompts(const Corpus& corpus, const AblationConfig& config) {
  SweepResult out;
  const FeatureSpec spec = ablation_spec(config, default_k(config, corpus.min_tokens()));
  const auto features = features_for(corpus, spec);
  std::vector<std::string> prompts;
  for (const auto& r : corpus.manifest.records()) {
    if (std::find(prompts.begin(), prompts.end(), r.prompt_id) == prompts.end()) {
      prompts.push_back(r.prompt_id);
    }
  }
  for (const auto& p : prompts) {
    LabeledManifest subset;
    for (const auto& r : corpus.manifest.records()) {
      if (r.prompt_id == p) subset.add(r);
    }
    const auto plan = stratified_split(subset, config.train_fraction, config.train.seed);
    const auto r = train_and_evaluate(features, corpus.manifest, plan, config.train);
    out.rows.push_back(row_from("prompt", p, r));
  }
  return out;
}

}  // namespace lapeig
