// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#include "lapeig/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "lapeig/error.hpp"

namespace lapeig {

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 share the mean of ranks i+1..j.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = rank;
    i = j;
  }
  return ranks;
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw UsageError("auroc: scores and labels differ in length");
  std::size_t n_pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw UsageError("auroc: labels must be 0 or 1");
    n_pos += (y == 1);
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DataError("auroc: undefined with a single class");
  for (double s : scores) {
    if (std::isnan(s)) throw DataError("auroc: NaN score");
  }
  const auto ranks = midranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) rank_sum += ranks[i];
  }
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  // Validates inputs the same way as auroc.
  (void)auroc(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double n_pos = 0.0;
  for (int y : labels) n_pos += (y == 1);
  const double n_neg = static_cast<double>(labels.size()) - n_pos;
  std::vector<RocPoint> points{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  double tp = 0.0;
  double fp = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (labels[order[i]] == 1 ? tp : fp) += 1.0;
    if (i + 1 < order.size() && scores[order[i + 1]] == scores[order[i]]) continue;
    points.push_back({scores[order[i]], fp / n_neg, tp / n_pos});
  }
  return points;
}

std::string roc_csv(const std::vector<RocPoint>& points) {
  std::string out = "threshold,fpr,tpr\n";
  for (const auto& p : points) {
    out += format_double(p.threshold) + ',' + format_double(p.fpr) + ',' + format_double(p.tpr) + '\n';
  }
  return out;
}

PrecisionRecall precision_recall(std::span<const double> scores, std::span<const int> labels,
                                 double threshold) {
  if (scores.size() != labels.size()) {
    throw UsageError("precision_recall: scores and labels differ in length");
  }
  PrecisionRecall pr;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++pr.tp;
    else if (predicted) ++pr.fp;
    else if (actual) ++pr.fn;
    else ++pr.tn;
  }
  if (pr.tp + pr.fn == 0) throw DataError("precision_recall: recall undefined without positives");
  pr.recall = static_cast<double>(pr.tp) / static_cast<double>(pr.tp + pr.fn);
  if (pr.tp + pr.fp == 0) {
    pr.precision_undefined = true;
    pr.precision = 0.0;
  } else {
    pr.precision = static_cast<double>(pr.tp) / static_cast<double>(pr.tp + pr.fp);
  }
  return pr;
}

EvalReport evaluate(std::span<const double> scores, std::span<const int> labels,
                    EvalReport report, double threshold) {
  report.auroc = auroc(scores, labels);
  const auto pr = precision_recall(scores, labels, threshold);
  report.precision = pr.precision;
  report.recall = pr.recall;
  report.precision_undefined = pr.precision_undefined;
  report.threshold = threshold;
  report.n_pos = pr.tp + pr.fn;
  report.n_neg = pr.fp + pr.tn;
  return report;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

std::string eval_csv_header() {
  return "train_dataset,dataset,temperature,feature,k,layers,seed,split,"
         "auroc,precision,recall,precision_undefined,threshold,n_pos,n_neg";
}

std::string eval_csv_row(const EvalReport& r) {
  std::string out;
  out += r.train_dataset + ',' + r.dataset + ',' + format_double(r.temperature) + ',' + r.feature +
         ',' + r.k + ',' + r.layers + ',' + std::to_string(r.seed) + ',' + r.split + ',';
  out += format_double(r.auroc) + ',' + format_double(r.precision) + ',' +
         format_double(r.recall) + ',' + (r.precision_undefined ? "1" : "0") + ',' +
         format_double(r.threshold) + ',' + std::to_string(r.n_pos) + ',' +
         std::to_string(r.n_neg);
  return out;
}

std::string eval_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["train_dataset"] = r.train_dataset;
  j["dataset"] = r.dataset;
  if (std::isfinite(r.temperature)) {
    j["temperature"] = r.temperature;
  } else {
    j["temperature"] = nullptr;  // rows span several temperatures
  }
  j["feature"] = r.feature;
  j["k"] = r.k;
  j["layers"] = r.layers;
  j["seed"] = r.seed;
  j["split"] = r.split;
  j["auroc"] = r.auroc;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["precision_undefined"] = r.precision_undefined;
  j["threshold"] = r.threshold;
  j["n_pos"] = r.n_pos;
  j["n_neg"] = r.n_neg;
  return j.dump();
}

EvalReport eval_from_json(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    EvalReport r;
    r.train_dataset = j.value("train_dataset", std::string{});
    r.dataset = j.value("dataset", std::string{});
    const auto t = j.find("temperature");
    r.temperature = (t == j.end() || t->is_null()) ? std::numeric_limits<double>::quiet_NaN()
                                                   : t->get<double>();
    r.feature = j.value("feature", std::string{});
    r.k = j.value("k", std::string("-"));
    r.layers = j.value("layers", std::string("all"));
    r.seed = j.value("seed", std::uint64_t{0});
    r.split = j.value("split", std::string{});
    r.auroc = j.at("auroc").get<double>();
    r.precision = j.value("precision", 0.0);
    r.recall = j.value("recall", 0.0);
    r.precision_undefined = j.value("precision_undefined", false);
    r.threshold = j.value("threshold", kDefaultThreshold);
    r.n_pos = j.value("n_pos", std::size_t{0});
    r.n_neg = j.value("n_neg", std::size_t{0});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("eval report: ") + e.what());
  }
}

}  // namespace lapeig
