// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#include "lapeig/spectral.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "lapeig/error.hpp"

namespace lapeig {

std::string_view to_string(FeatureKind kind) noexcept {
  switch (kind) {
    case FeatureKind::lap_eigvals: return "lap_eigvals";
    case FeatureKind::attn_eig: return "attn_eig";
    case FeatureKind::attn_logdet: return "attn_logdet";
    case FeatureKind::attn_score_per_layer: return "attn_score_per_layer";
  }
  return "?";
}

FeatureKind parse_feature_kind(std::string_view text) {
  for (auto kind : {FeatureKind::lap_eigvals, FeatureKind::attn_eig, FeatureKind::attn_logdet,
                    FeatureKind::attn_score_per_layer}) {
    if (text == to_string(kind)) return kind;
  }
  throw UsageError("unknown feature kind '" + std::string(text) + "'");
}

std::string LayerSelection::str() const {
  return layer ? std::to_string(*layer) : std::string("all");
}

LayerSelection LayerSelection::parse(std::string_view text) {
  if (text == "all") return all();
  std::uint32_t l = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), l);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw UsageError("layer selection must be 'all' or a layer index, got '" +
                     std::string(text) + "'");
  }
  return single(l);
}

std::string FeatureSpec::tag() const {
  std::string out(to_string(kind));
  if (k) out += "_k" + std::to_string(*k);
  out += layers.is_all() ? std::string("_all") : "_l" + std::to_string(*layers.layer);
  return out;
}

namespace {

void require_finite(const HeadView& head, const char* context) {
  for (float v : head.packed()) {
    if (!std::isfinite(v)) throw ValidationError(std::string(context) + ": non-finite attention");
  }
}

void require_tokens(const HeadView& head, const char* context) {
  if (head.num_tokens() == 0) throw UsageError(std::string(context) + ": T must be positive");
}

struct LayerRange {
  std::uint32_t begin;
  std::uint32_t end;
};

LayerRange layer_range(LayerSelection layers, std::uint32_t num_layers) {
  if (layers.is_all()) return {0, num_layers};
  if (*layers.layer >= num_layers) {
    throw UsageError("layer " + std::to_string(*layers.layer) + " out of range for L=" +
                     std::to_string(num_layers));
  }
  return {*layers.layer, *layers.layer + 1};
}

template <typename PerHead>
FeatureVector top_k_features(const AttentionStack& stack, std::uint32_t k, LayerSelection layers,
                             FeatureKind kind, PerHead per_head) {
  if (k == 0) throw UsageError("k must be positive");
  if (k > stack.num_tokens) {
    throw UsageError("k=" + std::to_string(k) + " exceeds T=" + std::to_string(stack.num_tokens) +
                     " for '" + stack.example_id + "'");
  }
  const auto range = layer_range(layers, stack.num_layers);
  FeatureVector out;
  out.spec = {kind, k, layers};
  out.values.reserve(static_cast<std::size_t>(range.end - range.begin) * stack.num_heads * k);
  for (std::uint32_t l = range.begin; l < range.end; ++l) {
    for (std::uint32_t h = 0; h < stack.num_heads; ++h) {
      const auto eig = per_head(stack.head(l, h));
      const auto top = top_k_descending(eig, k);
      out.values.insert(out.values.end(), top.begin(), top.end());
    }
  }
  return out;
}

}  // namespace

std::vector<double> laplacian_eigvals(const HeadView& head) {
  require_tokens(head, "laplacian_eigvals");
  require_finite(head, "laplacian_eigvals");
  const std::uint32_t T = head.num_tokens();
  // Column sums over rows u >= i; entries with u < i are structurally zero.
  std::vector<double> column(T, 0.0);
  for (std::uint32_t u = 0; u < T; ++u) {
    const auto row = head.row(u);
    for (std::uint32_t i = 0; i <= u; ++i) column[i] += row[i];
  }
  std::vector<double> lambdas(T);
  for (std::uint32_t i = 0; i < T; ++i) {
    const double degree = column[i] / static_cast<double>(T - i);
    lambdas[i] = degree - static_cast<double>(head.diagonal(i));
  }
  return lambdas;
}

LaplacianDiagonal laplacian_eigvals(const AttentionStack& stack, std::uint32_t layer,
                                    std::uint32_t head) {
  if (layer >= stack.num_layers || head >= stack.num_heads) {
    throw UsageError("head (" + std::to_string(layer) + ", " + std::to_string(head) +
                     ") out of range");
  }
  return {layer, head, laplacian_eigvals(stack.head(layer, head))};
}

std::vector<double> attention_eigvals(const HeadView& head) {
  require_tokens(head, "attention_eigvals");
  require_finite(head, "attention_eigvals");
  std::vector<double> out(head.num_tokens());
  for (std::uint32_t i = 0; i < head.num_tokens(); ++i) out[i] = head.diagonal(i);
  return out;
}

double attention_logdet(const HeadView& head) {
  require_tokens(head, "attention_logdet");
  double sum = 0.0;
  for (std::uint32_t i = 0; i < head.num_tokens(); ++i) {
    sum += std::log(std::max(static_cast<double>(head.diagonal(i)), kLogEpsilon));
  }
  return sum;
}

std::vector<double> top_k_descending(std::span<const double> values, std::uint32_t k) {
  if (k > values.size()) {
    throw UsageError("k=" + std::to_string(k) + " exceeds T=" + std::to_string(values.size()));
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](double a, double b) { return a > b; });
  sorted.resize(k);
  return sorted;
}

FeatureVector lap_eigvals_features(const AttentionStack& stack, std::uint32_t k,
                                   LayerSelection layers) {
  return top_k_features(stack, k, layers, FeatureKind::lap_eigvals,
                        [](const HeadView& h) { return laplacian_eigvals(h); });
}

FeatureVector attn_eig_features(const AttentionStack& stack, std::uint32_t k,
                                LayerSelection layers) {
  return top_k_features(stack, k, layers, FeatureKind::attn_eig,
                        [](const HeadView& h) { return attention_eigvals(h); });
}

FeatureVector attn_logdet_features(const AttentionStack& stack, LayerSelection layers) {
  const auto range = layer_range(layers, stack.num_layers);
  FeatureVector out;
  out.spec = {FeatureKind::attn_logdet, std::nullopt, layers};
  for (std::uint32_t l = range.begin; l < range.end; ++l) {
    for (std::uint32_t h = 0; h < stack.num_heads; ++h) {
      out.values.push_back(attention_logdet(stack.head(l, h)));
    }
  }
  return out;
}

FeatureVector attn_score_per_layer(const AttentionStack& stack, LayerSelection layers) {
  const auto range = layer_range(layers, stack.num_layers);
  FeatureVector out;
  out.spec = {FeatureKind::attn_score_per_layer, std::nullopt, layers};
  for (std::uint32_t l = range.begin; l < range.end; ++l) {
    double sum = 0.0;
    for (std::uint32_t h = 0; h < stack.num_heads; ++h) sum += attention_logdet(stack.head(l, h));
    out.values.push_back(sum);
  }
  return out;
}

FeatureVector compute_features(const AttentionStack& stack, const FeatureSpec& spec) {
  switch (spec.kind) {
    case FeatureKind::lap_eigvals:
    case FeatureKind::attn_eig:
      if (!spec.k) throw UsageError(std::string(to_string(spec.kind)) + " requires k");
      return spec.kind == FeatureKind::lap_eigvals
                 ? lap_eigvals_features(stack, *spec.k, spec.layers)
                 : attn_eig_features(stack, *spec.k, spec.layers);
    case FeatureKind::attn_logdet:
      return attn_logdet_features(stack, spec.layers);
    case FeatureKind::attn_score_per_layer:
      return attn_score_per_layer(stack, spec.layers);
  }
  throw UsageError("unknown feature kind");
}

std::size_t feature_dimension(const FeatureSpec& spec, std::uint32_t num_layers,
                              std::uint32_t num_heads) {
  const auto range = layer_range(spec.layers, num_layers);
  const std::size_t layers = range.end - range.begin;
  switch (spec.kind) {
    case FeatureKind::lap_eigvals:
    case FeatureKind::attn_eig:
      if (!spec.k || *spec.k == 0) throw UsageError("eigenvalue features require k >= 1");
      return layers * num_heads * *spec.k;
    case FeatureKind::attn_logdet:
      return layers * num_heads;
    case FeatureKind::attn_score_per_layer:
      return layers;
  }
  return 0;
}

std::vector<ColumnInfo> feature_columns(const FeatureSpec& spec, std::uint32_t num_layers,
                                        std::uint32_t num_heads) {
  const auto range = layer_range(spec.layers, num_layers);
  std::vector<ColumnInfo> cols;
  cols.reserve(feature_dimension(spec, num_layers, num_heads));
  for (std::uint32_t l = range.begin; l < range.end; ++l) {
    const auto li = static_cast<std::int32_t>(l);
    switch (spec.kind) {
      case FeatureKind::lap_eigvals:
      case FeatureKind::attn_eig:
        for (std::uint32_t h = 0; h < num_heads; ++h) {
          for (std::uint32_t r = 0; r < *spec.k; ++r) {
            cols.push_back({li, static_cast<std::int32_t>(h), static_cast<std::int32_t>(r)});
          }
        }
        break;
      case FeatureKind::attn_logdet:
        for (std::uint32_t h = 0; h < num_heads; ++h) {
          cols.push_back({li, static_cast<std::int32_t>(h), -1});
        }
        break;
      case FeatureKind::attn_score_per_layer:
        cols.push_back({li, -1, -1});
        break;
    }
  }
  return cols;
}

}  // namespace lapeig
