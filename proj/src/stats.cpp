// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#include "lapeig/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "json.hpp"
#include "lapeig/error.hpp"
#include "lapeig/metrics.hpp"

namespace lapeig {

namespace {

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double clamp_p(double p) {
  if (!(p > 0.0)) return std::numeric_limits<double>::min();
  return std::min(p, 1.0);
}

}  // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                                 Alternative alternative) {
  if (x.empty() || y.empty()) throw DataError("mann_whitney_u: empty sample");
  const double n1 = static_cast<double>(x.size());
  const double n2 = static_cast<double>(y.size());
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  for (double v : pooled) {
    if (std::isnan(v)) throw DataError("mann_whitney_u: NaN observation");
  }
  const auto ranks = midranks(pooled);
  const double r1 = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(x.size()), 0.0);

  MannWhitneyResult out;
  out.u1 = r1 - n1 * (n1 + 1.0) / 2.0;
  out.u2 = n1 * n2 - out.u1;

  // Tie term sum(t^3 - t) over groups of equal values.
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double ties = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  const double n = n1 + n2;
  const double variance = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
  if (!(variance > 0.0)) {
    out.p = 1.0;
    return out;
  }
  const double sd = std::sqrt(variance);
  const double mean = n1 * n2 / 2.0;
  switch (alternative) {
    case Alternative::two_sided: {
      const double u = std::max(out.u1, out.u2);
      out.p = clamp_p(2.0 * normal_sf((u - mean - 0.5) / sd));
      break;
    }
    case Alternative::greater:
      out.p = clamp_p(normal_sf((out.u1 - mean - 0.5) / sd));
      break;
    case Alternative::less:
      out.p = clamp_p(normal_sf((out.u2 - mean - 0.5) / sd));
      break;
  }
  return out;
}

double summarize_head_pvalues(std::span<const double> p_values) {
  if (p_values.empty()) throw UsageError("summarize_head_pvalues: no p-values");
  const double smallest = *std::min_element(p_values.begin(), p_values.end());
  return std::min(1.0, smallest * static_cast<double>(p_values.size()));
}

SignificanceGrid head_significance(const FeatureMatrix& features, std::span<const int> labels) {
  if (features.rows != labels.size()) {
    throw UsageError("head_significance: rows and labels differ in length");
  }
  if (features.columns.size() != features.cols) {
    throw UsageError("head_significance: feature matrix lacks column provenance");
  }
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += (y == 1);
  if (n_pos == 0 || n_pos == labels.size()) {
    throw DataError("head_significance: both classes must be present");
  }

  // (layer, head) -> columns in rank order.
  std::map<std::pair<std::int32_t, std::int32_t>, std::vector<std::size_t>> heads;
  std::int32_t max_layer = -1;
  std::int32_t max_head = -1;
  for (std::size_t c = 0; c < features.columns.size(); ++c) {
    const auto& info = features.columns[c];
    if (info.layer < 0 || info.head < 0) {
      throw UsageError("head_significance: features are not per-head (" + features.spec.tag() + ")");
    }
    heads[{info.layer, info.head}].push_back(c);
    max_layer = std::max(max_layer, info.layer);
    max_head = std::max(max_head, info.head);
  }

  SignificanceGrid grid;
  grid.feature = features.spec.tag();
  grid.num_layers = static_cast<std::uint32_t>(max_layer + 1);
  grid.num_heads = static_cast<std::uint32_t>(max_head + 1);
  grid.ranks = static_cast<std::uint32_t>(heads.begin()->second.size());
  if (heads.size() != static_cast<std::size_t>(grid.num_layers) * grid.num_heads) {
    throw UsageError("head_significance: features must cover every (layer, head) from 0");
  }

  grid.p_values.reserve(heads.size() * grid.ranks);
  std::vector<double> pos;
  std::vector<double> neg;
  std::size_t significant = 0;
  for (const auto& [key, cols] : heads) {
    if (cols.size() != grid.ranks) throw UsageError("head_significance: ragged rank count");
    std::vector<double> head_p;
    for (std::size_t c : cols) {
      pos.clear();
      neg.clear();
      for (std::size_t i = 0; i < features.rows; ++i) {
        (labels[i] == 1 ? pos : neg).push_back(features.at(i, c));
      }
      head_p.push_back(mann_whitney_u(pos, neg).p);
    }
    grid.p_values.insert(grid.p_values.end(), head_p.begin(), head_p.end());
    const double s = summarize_head_pvalues(head_p);
    grid.summary.push_back(s);
    significant += (s < kSignificanceLevel);
  }
  grid.percent_significant =
      static_cast<double>(significant) / static_cast<double>(grid.summary.size());
  return grid;
}

std::string SignificanceGrid::to_csv() const {
  std::string out = "layer,head,summary_p\n";
  for (std::uint32_t l = 0; l < num_layers; ++l) {
    for (std::uint32_t h = 0; h < num_heads; ++h) {
      out += std::to_string(l) + ',' + std::to_string(h) + ',' + format_double(head_summary(l, h)) + '\n';
    }
  }
  return out;
}

std::string SignificanceGrid::to_json() const {
  nlohmann::ordered_json j;
  j["feature"] = feature;
  j["num_layers"] = num_layers;
  j["num_heads"] = num_heads;
  j["ranks"] = ranks;
  j["percent_significant"] = percent_significant;
  j["summary"] = summary;
  nlohmann::ordered_json tensor = nlohmann::ordered_json::array();
  for (std::uint32_t l = 0; l < num_layers; ++l) {
    nlohmann::ordered_json layer = nlohmann::ordered_json::array();
    for (std::uint32_t h = 0; h < num_heads; ++h) {
      nlohmann::ordered_json head = nlohmann::ordered_json::array();
      for (std::uint32_t r = 0; r < ranks; ++r) head.push_back(p(l, h, r));
      layer.push_back(std::move(head));
    }
    tensor.push_back(std::move(layer));
  }
  j["p_values"] = std::move(tensor);
  return j.dump();
}

double cohen_kappa(std::span<const int> labels_a, std::span<const int> labels_b) {
  if (labels_a.size() != labels_b.size()) throw UsageError("cohen_kappa: length mismatch");
  if (labels_a.empty()) throw UsageError("cohen_kappa: empty input");
  std::map<int, std::pair<std::size_t, std::size_t>> marginals;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    ++marginals[labels_a[i]].first;
    ++marginals[labels_b[i]].second;
    agree += (labels_a[i] == labels_b[i]);
  }
  const double n = static_cast<double>(labels_a.size());
  const double observed = static_cast<double>(agree) / n;
  double expected = 0.0;
  for (const auto& [label, counts] : marginals) {
    expected += (static_cast<double>(counts.first) / n) * (static_cast<double>(counts.second) / n);
  }
  if (expected >= 1.0) return 1.0;
  return (observed - expected) / (1.0 - expected);
}

}  // namespace lapeig
