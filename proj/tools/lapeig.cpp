// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

// lapeig: command-line driver for the attention-spectrum hallucination probe.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lapeig/dataset.hpp"
#include "lapeig/error.hpp"
#include "lapeig/feature_matrix.hpp"
#include "lapeig/interchange.hpp"
#include "lapeig/manifest.hpp"
#include "lapeig/metrics.hpp"
#include "lapeig/pipeline.hpp"
#include "lapeig/probe.hpp"
#include "lapeig/rng.hpp"
#include "lapeig/spectral.hpp"
#include "lapeig/stats.hpp"
#include "lapeig/synthetic.hpp"

namespace fs = std::filesystem;
using namespace lapeig;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void warn(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

/// Labeled records only; stacks of rejected examples are dropped with them.
Corpus labeled_corpus(const fs::path& dir, const fs::path& manifest, double row_tolerance) {
  LoadOptions load;
  load.row_tolerance = row_tolerance;
  Corpus corpus = load_corpus(dir, manifest, load);
  const auto filtered = filter_rejected(corpus.manifest);
  if (filtered.before.rejected > 0) {
    std::cerr << "dropped " << filtered.before.rejected << " rejected examples\n";
  }
  std::vector<std::string> ids;
  for (const auto& r : filtered.kept.records()) ids.push_back(r.example_id);
  return corpus.subset(ids);
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::string out;
  std::string mode = "planted";
  std::size_t n_per_class = 1000;
  std::uint32_t layers = 4;
  std::uint32_t heads = 4;
  std::uint32_t tokens = 32;
  double delta = 0.1;
  double base_concentration = 1.0;
  std::string assignment = "interleaved";
  std::string dataset = "planted";
  double temperature = 1.0;
  std::string prompt_id = "synthetic";
  std::uint64_t seed = 42;
  bool append = false;
};

int run_gen(const GenArgs& a) {
  Corpus corpus;
  if (a.mode == "planted") {
    PlantedSpec spec;
    spec.num_layers = a.layers;
    spec.num_heads = a.heads;
    spec.num_tokens = a.tokens;
    spec.delta = a.delta;
    spec.base_concentration = a.base_concentration;
    spec.assignment =
        a.assignment == "blocked" ? ClassAssignment::blocked : ClassAssignment::interleaved;
    spec.dataset = a.dataset;
    spec.temperature = a.temperature;
    spec.prompt_id = a.prompt_id;
    auto generated = gen_planted_dataset(spec, a.n_per_class, a.seed);
    corpus.stacks = std::move(generated.stacks);
    corpus.manifest = std::move(generated.manifest);
  } else {
    // Unstructured stacks with alternating labels: a null dataset.
    for (std::size_t e = 0; e < 2 * a.n_per_class; ++e) {
      char id[64];
      std::snprintf(id, sizeof(id), "%s-%06zu", a.dataset.c_str(), e);
      corpus.stacks.push_back(gen_random_stack(derive_seed(a.seed, e), a.layers, a.heads, a.tokens, id));
      ManifestRecord r;
      r.example_id = id;
      r.dataset = a.dataset;
      r.prompt_id = a.prompt_id;
      r.temperature = a.temperature;
      r.label = e % 2 == 1 ? Label::hallucination : Label::non_hallucination;
      corpus.manifest.add(r);
    }
  }
  const fs::path out(a.out);
  if (a.append && fs::exists(out / "manifest.jsonl")) {
    LabeledManifest merged = read_manifest_file(out / "manifest.jsonl");
    for (const auto& r : corpus.manifest.records()) merged.add(r);
    corpus.manifest = std::move(merged);
  }
  save_corpus(corpus, out);
  std::cout << "wrote " << corpus.stacks.size() << " stacks to " << out.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct ValidateArgs {
  std::string in;
  double row_tolerance = kIngestRowTolerance;
  std::string out;
};

int run_validate(const ValidateArgs& a) {
  const auto files = list_stack_files(a.in);
  if (files.empty()) throw DataError("no .atns files in " + a.in);
  std::string report;
  std::size_t bad = 0;
  for (const auto& path : files) {
    const std::string name = path.filename().string();
    try {
      const auto stack = read_stack_file(path);
      const auto v = validate_stack(stack, a.row_tolerance);
      if (v.ok()) {
        report += "ok\t" + name + '\n';
      } else {
        ++bad;
        report += "invalid\t" + name + '\n' + v.describe();
        if (!report.empty() && report.back() != '\n') report += '\n';
      }
    } catch (const DataError& e) {
      ++bad;
      report += "unreadable\t" + name + '\t' + e.what() + '\n';
    }
  }
  report += std::to_string(files.size() - bad) + " valid, " + std::to_string(bad) + " invalid\n";
  std::cout << report;
  if (!a.out.empty()) write_text(a.out, report);
  return bad == 0 ? 0 : static_cast<int>(ErrorKind::data);
}

// ---------------------------------------------------------------------------

struct FeaturesArgs {
  std::string in;
  std::vector<std::string> kinds{"lap_eigvals"};
  std::vector<std::uint32_t> ks;
  std::vector<std::string> layers{"all"};
  double row_tolerance = kIngestRowTolerance;
  std::string out;
};

std::vector<FeatureSpec> requested_specs(const std::vector<std::string>& kinds,
                                         const std::vector<std::uint32_t>& ks,
                                         const std::vector<std::string>& layers) {
  std::vector<FeatureSpec> specs;
  for (const auto& kind_text : kinds) {
    const FeatureKind kind = parse_feature_kind(kind_text);
    if (uses_k(kind) && ks.empty()) {
      throw UsageError("--k is required for feature kind " + kind_text);
    }
    for (const auto& layer_text : layers) {
      FeatureSpec spec;
      spec.kind = kind;
      spec.layers = LayerSelection::parse(layer_text);
      if (uses_k(kind)) {
        for (auto k : ks) {
          spec.k = k;
          specs.push_back(spec);
        }
      } else {
        specs.push_back(spec);
      }
    }
  }
  return specs;
}

int run_features(const FeaturesArgs& a) {
  const auto files = list_stack_files(a.in);
  if (files.empty()) throw DataError("no .atns files in " + a.in);
  std::vector<AttentionStack> stacks;
  for (const auto& path : files) {
    auto stack = read_stack_file(path);
    const auto v = validate_stack(stack, a.row_tolerance);
    if (!v.ok()) throw ValidationError(path.string() + ": invalid attention stack\n" + v.describe());
    stacks.push_back(std::move(stack));
  }
  const auto specs = requested_specs(a.kinds, a.ks, a.layers);
  ExtractOptions options;
  options.skip_short = true;
  fs::create_directories(a.out);
  for (const auto& spec : specs) {
    const auto result = extract_features(stacks, spec, options);
    const fs::path path = fs::path(a.out) / (spec.tag() + ".feat");
    write_feature_matrix(result.matrix, path);
    std::cout << "wrote " << path.string() << " (" << result.matrix.rows << " x "
              << result.matrix.cols << ")\n";
    if (!result.skipped.empty()) {
      warn(spec.tag() + ": skipped " + std::to_string(result.skipped.size()) +
           " examples with fewer than k tokens");
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct SplitArgs {
  std::string manifest;
  double train_fraction = kDefaultTrainFraction;
  std::uint64_t seed = 42;
  std::string out;
};

int run_split(const SplitArgs& a) {
  const auto manifest = read_manifest_file(a.manifest);
  std::cout << class_count_table(manifest);
  const auto kept = filter_rejected(manifest).kept;
  const auto plan = stratified_split(kept, a.train_fraction, a.seed);
  write_split_plan_file(plan, a.out);
  std::cout << "train: " << plan.train_counts.hallucination << " hallucination, "
            << plan.train_counts.non_hallucination << " non_hallucination\n"
            << "test: " << plan.test_counts.hallucination << " hallucination, "
            << plan.test_counts.non_hallucination << " non_hallucination\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string features;
  std::string manifest;
  std::string split;
  std::size_t pca_dims = kDefaultPcaDims;
  std::uint64_t seed = 42;
  double threshold = kDefaultThreshold;
  double inverse_regularization = 1.0;
  int max_iter = 2000;
  bool binary = false;
  std::string out;
};

void write_reports(const fs::path& dir, const std::string& stem,
                   const std::vector<EvalReport>& reports) {
  std::string csv = eval_csv_header() + '\n';
  std::string jsonl;
  for (const auto& r : reports) {
    csv += eval_csv_row(r) + '\n';
    jsonl += eval_json(r) + '\n';
  }
  write_text(dir / (stem + ".csv"), csv);
  write_text(dir / (stem + ".jsonl"), jsonl);
}

int run_train(const TrainArgs& a) {
  const auto features = read_feature_matrix(a.features);
  const auto manifest = read_manifest_file(a.manifest);
  const auto plan = read_split_plan_file(a.split, manifest);
  TrainConfig config;
  config.pca_dims = a.pca_dims;
  config.seed = a.seed;
  config.threshold = a.threshold;
  config.logistic.inverse_regularization = a.inverse_regularization;
  config.logistic.max_iter = a.max_iter;
  const auto result = train_and_evaluate(features, manifest, plan, config);
  if (!result.model.logistic.converged) {
    warn("logistic regression stopped after " + std::to_string(result.model.logistic.iterations) +
         " iterations without reaching the gradient tolerance");
  }
  const fs::path out(a.out);
  fs::create_directories(out);
  const fs::path model_path = out / (a.binary ? "probe.feat" : "probe.model");
  save_probe(result.model, model_path, a.binary);
  write_reports(out, "train_report", {result.train});
  std::cout << eval_csv_header() << '\n' << eval_csv_row(result.train) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string model;
  std::string features;
  std::string manifest;
  std::string split;
  std::string subset = "test";
  double threshold = kDefaultThreshold;
  std::string out;
};

int run_eval(const EvalArgs& a) {
  const auto model = load_probe(a.model);
  const auto features = read_feature_matrix(a.features);
  const auto manifest = filter_rejected(read_manifest_file(a.manifest)).kept;
  std::vector<std::string> ids;
  if (a.subset == "all") {
    for (const auto& r : manifest.records()) ids.push_back(r.example_id);
  } else {
    if (a.split.empty()) throw UsageError("--split is required unless --subset all");
    const auto plan = read_split_plan_file(a.split, manifest);
    ids = a.subset == "train" ? plan.train_ids : plan.test_ids;
  }
  ids = rows_present(features, ids);
  if (ids.empty()) throw DataError("no feature rows match the requested subset");
  TrainConfig config;
  config.seed = model.info.seed;
  config.threshold = a.threshold;
  const auto report = evaluate_rows(model, features, manifest, ids, a.subset, config);

  const auto rows = features.select_rows(ids);
  const auto roc = roc_curve(model.predict(rows), labels_for(rows, manifest));
  const fs::path out(a.out);
  write_reports(out, "eval_report", {report});
  write_text(out / "roc.csv", roc_csv(roc));
  std::cout << eval_csv_header() << '\n' << eval_csv_row(report) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct AblateArgs {
  std::string axis = "all";
  std::string in;
  std::string manifest;
  std::string split;
  std::string kind = "lap_eigvals";
  std::optional<std::uint32_t> k;
  std::vector<std::uint32_t> k_list{5, 10, 20, 50, 100};
  std::vector<double> sigmas{0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
  double noise_fraction = 1.0;
  std::size_t noise_repeats = 5;
  std::vector<double> fractions{0.1, 0.25, 0.5, 0.75, 1.0};
  std::size_t n_per_class = 1000;
  std::size_t repeats = 10;
  double train_fraction = kDefaultTrainFraction;
  std::size_t pca_dims = kDefaultPcaDims;
  std::uint64_t seed = 42;
  double row_tolerance = kIngestRowTolerance;
  std::string out;
};

const std::vector<std::string> kAblationAxes{"k",           "layers",         "noise",  "fraction",
                                             "temperature", "generalization", "prompts"};

int run_ablate(const AblateArgs& a) {
  const Corpus corpus = labeled_corpus(a.in, a.manifest, a.row_tolerance);
  AblationConfig config;
  config.train.pca_dims = a.pca_dims;
  config.train.seed = a.seed;
  config.kind = parse_feature_kind(a.kind);
  config.k = a.k;
  config.k_list = a.k_list;
  config.sigmas = a.sigmas;
  config.noise_fraction = a.noise_fraction;
  config.noise_repeats = a.noise_repeats;
  config.fractions = a.fractions;
  config.n_per_class = a.n_per_class;
  config.subsample_repeats = a.repeats;
  config.train_fraction = a.train_fraction;

  const SplitPlan plan = a.split.empty()
                             ? stratified_split(corpus.manifest, a.train_fraction, a.seed)
                             : read_split_plan_file(a.split, corpus.manifest);
  std::vector<std::string> axes;
  if (a.axis == "all") {
    axes = kAblationAxes;
  } else {
    axes.push_back(a.axis);
  }

  std::optional<FeatureMatrix> base_features;
  auto features = [&]() -> const FeatureMatrix& {
    if (!base_features) {
      FeatureSpec spec;
      spec.kind = config.kind;
      if (uses_k(config.kind)) spec.k = default_k(config, corpus.min_tokens());
      base_features = extract_features(corpus.stacks, spec).matrix;
    }
    return *base_features;
  };

  const fs::path out(a.out);
  for (const auto& axis : axes) {
    SweepResult result;
    if (axis == "k") {
      result = ablate_top_k(corpus, plan, config);
    } else if (axis == "layers") {
      result = ablate_layers(corpus, plan, config);
    } else if (axis == "noise") {
      result = ablate_noise(features(), corpus.manifest, plan, config);
    } else if (axis == "fraction") {
      result = ablate_fraction(features(), corpus.manifest, plan, config);
    } else if (axis == "temperature") {
      result = ablate_temperature(corpus, config);
    } else if (axis == "generalization") {
      result = ablate_generalization(corpus, config);
    } else if (axis == "prompts") {
      result = ablate_prompts(corpus, config);
    } else {
      throw UsageError("unknown ablation axis '" + axis + "'");
    }
    for (const auto& w : result.warnings) warn(axis + ": " + w);
    const fs::path path = out / ("ablate_" + axis + ".csv");
    write_text(path, sweep_csv(result));
    std::cout << "wrote " << path.string() << " (" << result.rows.size() << " rows)\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct StatArgs {
  std::string in;
  std::string manifest;
  std::string split;
  std::string subset = "all";
  std::uint32_t k = 10;
  double row_tolerance = kIngestRowTolerance;
  std::string out;
};

int run_stat_test(const StatArgs& a) {
  Corpus corpus = labeled_corpus(a.in, a.manifest, a.row_tolerance);
  if (a.subset != "all") {
    if (a.split.empty()) throw UsageError("--split is required unless --subset all");
    const auto plan = read_split_plan_file(a.split, corpus.manifest);
    corpus = corpus.subset(a.subset == "train" ? plan.train_ids : plan.test_ids);
  }
  FeatureSpec score_spec;
  score_spec.kind = FeatureKind::attn_logdet;
  FeatureSpec lap_spec;
  lap_spec.kind = FeatureKind::lap_eigvals;
  lap_spec.k = a.k;

  const fs::path out(a.out);
  std::string summary = "feature,num_layers,num_heads,ranks,percent_significant\n";
  for (const auto& spec : {score_spec, lap_spec}) {
    const auto features = extract_features(corpus.stacks, spec).matrix;
    const auto labels = labels_for(features, corpus.manifest);
    const auto grid = head_significance(features, labels);
    write_text(out / ("significance_" + spec.tag() + ".csv"), grid.to_csv());
    write_text(out / ("significance_" + spec.tag() + ".json"), grid.to_json() + '\n');
    summary += spec.tag() + ',' + std::to_string(grid.num_layers) + ',' +
               std::to_string(grid.num_heads) + ',' + std::to_string(grid.ranks) + ',' +
               format_double(grid.percent_significant) + '\n';
  }
  write_text(out / "significance_summary.csv", summary);
  std::cout << summary;
  return 0;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out;
};

std::string markdown_table(const std::vector<EvalReport>& reports) {
  std::string md =
      "| train | test | temp | feature | k | layers | split | AUROC | precision | recall |\n"
      "|---|---|---|---|---|---|---|---|---|---|\n";
  char buf[32];
  auto fixed = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return std::string(buf);
  };
  for (const auto& r : reports) {
    md += "| " + r.train_dataset + " | " + r.dataset + " | " + format_double(r.temperature) +
          " | " + r.feature + " | " + r.k + " | " + r.layers + " | " + r.split + " | " +
          fixed(r.auroc) + " | " + (r.precision_undefined ? "n/a" : fixed(r.precision)) + " | " +
          fixed(r.recall) + " |\n";
  }
  return md;
}

int run_report(const ReportArgs& a) {
  std::vector<EvalReport> reports;
  for (const auto& path : a.inputs) {
    std::istringstream lines(read_text(path));
    std::string line;
    while (std::getline(lines, line)) {
      if (!line.empty()) reports.push_back(eval_from_json(line));
    }
  }
  if (reports.empty()) throw DataError("no report rows in the inputs");
  const fs::path out(a.out);
  write_reports(out, "report", reports);
  const std::string md = markdown_table(reports);
  write_text(out / "report.md", md);
  std::cout << md;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention-spectrum hallucination probe toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value configuration file; command-line flags win");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_help_all_flag("--help-all", "Expand all subcommand help");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate synthetic attention stacks and a manifest");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--mode", gen.mode, "planted | random")
      ->check(CLI::IsMember({"planted", "random"}))
      ->capture_default_str();
  g->add_option("--n-per-class", gen.n_per_class, "Examples per class")->capture_default_str();
  g->add_option("--num-layers", gen.layers, "Layers L")->capture_default_str();
  g->add_option("--num-heads", gen.heads, "Heads per layer H")->capture_default_str();
  g->add_option("--tokens", gen.tokens, "Tokens T")->capture_default_str();
  g->add_option("--delta", gen.delta, "Diagonal shift of the hallucination class")
      ->capture_default_str();
  g->add_option("--base-concentration", gen.base_concentration, "Gamma shape of row variates")
      ->capture_default_str();
  g->add_option("--assignment", gen.assignment, "interleaved | blocked")
      ->check(CLI::IsMember({"interleaved", "blocked"}))
      ->capture_default_str();
  g->add_option("--dataset", gen.dataset, "Dataset name and id prefix")->capture_default_str();
  g->add_option("--temperature", gen.temperature, "Temperature recorded in the manifest")
      ->capture_default_str();
  g->add_option("--prompt-id", gen.prompt_id, "Prompt id recorded in the manifest")
      ->capture_default_str();
  g->add_option("--seed", gen.seed, "Root seed")->capture_default_str();
  g->add_flag("--append", gen.append, "Merge into an existing manifest in --out");

  ValidateArgs val;
  auto* v = app.add_subcommand("validate", "Check .atns files for row sums, signs and finiteness");
  v->add_option("--in", val.in, "Directory of .atns files")->required();
  v->add_option("--row-tolerance", val.row_tolerance, "Allowed |row sum - 1|")
      ->capture_default_str();
  v->add_option("--out", val.out, "Also write the report to this file");

  FeaturesArgs feat;
  auto* f = app.add_subcommand("features", "Extract feature matrices from .atns files");
  f->add_option("--in", feat.in, "Directory of .atns files")->required();
  f->add_option("--kind", feat.kinds, "lap_eigvals | attn_eig | attn_logdet | attn_score_per_layer")
      ->capture_default_str();
  f->add_option("--k", feat.ks, "Top-k eigenvalues per head (repeatable)");
  f->add_option("--layers", feat.layers, "'all' or a layer index (repeatable)")->capture_default_str();
  f->add_option("--row-tolerance", feat.row_tolerance, "Ingest row-sum tolerance")
      ->capture_default_str();
  f->add_option("--out", feat.out, "Output directory")->required();

  SplitArgs split;
  auto* s = app.add_subcommand("split", "Stratified train/test split of a manifest");
  s->add_option("--manifest", split.manifest, "Manifest .jsonl")->required();
  s->add_option("--train-fraction", split.train_fraction, "Train share per class")
      ->capture_default_str();
  s->add_option("--seed", split.seed, "Root seed")->capture_default_str();
  s->add_option("--out", split.out, "Split plan .jsonl")->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Fit a PCA + logistic-regression probe");
  t->add_option("--features", train.features, "FEAT file")->required();
  t->add_option("--manifest", train.manifest, "Manifest .jsonl")->required();
  t->add_option("--split", train.split, "Split plan .jsonl")->required();
  t->add_option("--pca-dims", train.pca_dims, "PCA target dimension")->capture_default_str();
  t->add_option("--seed", train.seed, "Seed echoed into the model and reports")
      ->capture_default_str();
  t->add_option("--threshold", train.threshold, "Decision threshold for precision/recall")
      ->capture_default_str();
  t->add_option("--inverse-regularization", train.inverse_regularization, "Logistic C")
      ->capture_default_str();
  t->add_option("--max-iter", train.max_iter, "Newton iteration cap")->capture_default_str();
  t->add_flag("--binary", train.binary, "Write the compact binary model instead of text");
  t->add_option("--out", train.out, "Output directory")->required();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a probe on a feature file");
  e->add_option("--model", ev.model, "Probe model file")->required();
  e->add_option("--features", ev.features, "FEAT file")->required();
  e->add_option("--manifest", ev.manifest, "Manifest .jsonl")->required();
  e->add_option("--split", ev.split, "Split plan .jsonl");
  e->add_option("--subset", ev.subset, "test | train | all")
      ->check(CLI::IsMember({"test", "train", "all"}))
      ->capture_default_str();
  e->add_option("--threshold", ev.threshold, "Decision threshold")->capture_default_str();
  e->add_option("--out", ev.out, "Output directory")->required();

  AblateArgs ab;
  auto* ablate = app.add_subcommand("ablate", "Run ablation sweeps");
  std::vector<std::string> axis_choices = kAblationAxes;
  axis_choices.push_back("all");
  ablate->add_option("--axis", ab.axis, "Sweep axis")
      ->check(CLI::IsMember(axis_choices))
      ->capture_default_str();
  ablate->add_option("--in", ab.in, "Directory of .atns files")->required();
  ablate->add_option("--manifest", ab.manifest, "Manifest .jsonl")->required();
  ablate->add_option("--split", ab.split, "Split plan .jsonl (default: stratified from --seed)");
  ablate->add_option("--kind", ab.kind, "Feature kind")->capture_default_str();
  ablate->add_option("--k", ab.k, "k for non-k axes (default: largest usable of --k-list)");
  ablate->add_option("--k-list", ab.k_list, "k values of the top-k sweep")->capture_default_str();
  ablate->add_option("--sigmas", ab.sigmas, "Noise standard deviations")->capture_default_str();
  ablate->add_option("--noise-fraction", ab.noise_fraction, "Share of perturbed columns")
      ->capture_default_str();
  ablate->add_option("--noise-repeats", ab.noise_repeats, "Draws per sigma")->capture_default_str();
  ablate->add_option("--fractions", ab.fractions, "Training fractions")->capture_default_str();
  ablate->add_option("--n-per-class", ab.n_per_class, "Balanced subsample size per class")
      ->capture_default_str();
  ablate->add_option("--repeats", ab.repeats, "Balanced subsample repeats")->capture_default_str();
  ablate->add_option("--train-fraction", ab.train_fraction, "Train share per class")
      ->capture_default_str();
  ablate->add_option("--pca-dims", ab.pca_dims, "PCA target dimension")->capture_default_str();
  ablate->add_option("--seed", ab.seed, "Root seed")->capture_default_str();
  ablate->add_option("--row-tolerance", ab.row_tolerance, "Ingest row-sum tolerance")
      ->capture_default_str();
  ablate->add_option("--out", ab.out, "Output directory")->required();

  StatArgs st;
  auto* stat = app.add_subcommand("stat-test", "Per-head Mann-Whitney significance grids");
  stat->add_option("--in", st.in, "Directory of .atns files")->required();
  stat->add_option("--manifest", st.manifest, "Manifest .jsonl")->required();
  stat->add_option("--split", st.split, "Split plan .jsonl");
  stat->add_option("--subset", st.subset, "all | train | test")
      ->check(CLI::IsMember({"test", "train", "all"}))
      ->capture_default_str();
  stat->add_option("--k", st.k, "Eigenvalues per head for the Laplacian grid")->capture_default_str();
  stat->add_option("--row-tolerance", st.row_tolerance, "Ingest row-sum tolerance")
      ->capture_default_str();
  stat->add_option("--out", st.out, "Output directory")->required();

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Collect evaluation JSON lines into tables");
  report->add_option("--in", rep.inputs, "Report .jsonl files")->required();
  report->add_option("--out", rep.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return static_cast<int>(ErrorKind::usage);
  }

  try {
    if (*g) return run_gen(gen);
    if (*v) return run_validate(val);
    if (*f) return run_features(feat);
    if (*s) return run_split(split);
    if (*t) return run_train(train);
    if (*e) return run_eval(ev);
    if (*ablate) return run_ablate(ab);
    if (*stat) return run_stat_test(st);
    if (*report) return run_report(rep);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return static_cast<int>(err.kind());
  } catch (const nlohmann::json::exception& err) {
    std::cerr << "error: malformed JSON: " << err.what() << '\n';
    return static_cast<int>(ErrorKind::data);
  } catch (const std::filesystem::filesystem_error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return static_cast<int>(ErrorKind::data);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return static_cast<int>(ErrorKind::data);
  }
  return static_cast<int>(ErrorKind::usage);
}
