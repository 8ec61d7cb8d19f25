// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#include "lapeig/feature_matrix.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "binary_io.hpp"
#include "lapeig/error.hpp"

namespace lapeig {

FeatureMatrix FeatureMatrix::select_rows(const std::vector<std::string>& ids) const {
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < row_ids.size(); ++i) index.emplace(row_ids[i], i);
  std::vector<std::size_t> picks;
  picks.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = index.find(id);
    if (it == index.end()) throw DataError("feature matrix has no row for '" + id + "'");
    picks.push_back(it->second);
  }
  return select_rows(picks);
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
  FeatureMatrix out;
  out.spec = spec;
  out.cols = cols;
  out.columns = columns;
  out.rows = static_cast<std::uint32_t>(indices.size());
  out.data.reserve(indices.size() * cols);
  for (std::size_t i : indices) {
    if (i >= rows) throw UsageError("row index out of range");
    const auto r = row(i);
    out.data.insert(out.data.end(), r.begin(), r.end());
    if (!row_ids.empty()) out.row_ids.push_back(row_ids[i]);
  }
  return out;
}

ExtractResult extract_features(std::span<const AttentionStack> stacks, const FeatureSpec& spec,
                               const ExtractOptions& options) {
  if (stacks.empty()) throw DataError("extract_features: no attention stacks");
  const std::uint32_t L = stacks.front().num_layers;
  const std::uint32_t H = stacks.front().num_heads;

  std::vector<std::size_t> order(stacks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return stacks[a].example_id < stacks[b].example_id;
  });

  ExtractResult result;
  FeatureMatrix& m = result.matrix;
  m.spec = spec;
  m.cols = static_cast<std::uint32_t>(feature_dimension(spec, L, H));
  m.columns = feature_columns(spec, L, H);
  for (std::size_t idx : order) {
    const auto& stack = stacks[idx];
    if (stack.num_layers != L || stack.num_heads != H) {
      throw DataError("stack '" + stack.example_id + "' has shape L=" +
                      std::to_string(stack.num_layers) + ", H=" + std::to_string(stack.num_heads) +
                      " but the dataset uses L=" + std::to_string(L) + ", H=" + std::to_string(H));
    }
    if (spec.k && *spec.k > stack.num_tokens && options.skip_short) {
      result.skipped.push_back(stack.example_id);
      continue;
    }
    const auto fv = compute_features(stack, spec);
    for (double v : fv.values) m.data.push_back(static_cast<float>(v));
    m.row_ids.push_back(stack.example_id);
  }
  m.rows = static_cast<std::uint32_t>(m.row_ids.size());
  if (m.rows == 0) {
    throw DataError("extract_features: every example was skipped (k larger than all T)");
  }
  return result;
}

std::uint64_t write_feat(std::ostream& out, const FeatHeader& header, std::span<const float> data) {
  if (static_cast<std::uint64_t>(header.rows) * header.cols != data.size()) {
    throw UsageError("write_feat: data size does not match N*D");
  }
  detail::ByteWriter w(out);
  w.raw(kFeatMagic, 4);
  w.uint<std::uint16_t>(kFeatFormatVersion);
  w.uint<std::uint32_t>(header.rows);
  w.uint<std::uint32_t>(header.cols);
  w.uint<std::uint16_t>(header.kind_tag);
  w.uint<std::uint32_t>(header.k);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(header.layer_selection));
  w.f32_array(data);
  return w.count();
}

FeatHeader read_feat(std::istream& in, std::vector<float>& data) {
  constexpr std::uint64_t kHeaderBytes = 4 + 2 + 4 + 4 + 2 + 4 + 4;
  detail::ByteReader r(in, "read_feat");
  char magic[4];
  r.raw(magic, 4, kHeaderBytes);
  if (!std::equal(magic, magic + 4, kFeatMagic)) throw FormatError("read_feat: bad magic");
  const auto version = r.uint<std::uint16_t>(kHeaderBytes);
  if (version != kFeatFormatVersion) {
    throw FormatError("read_feat: unsupported version " + std::to_string(version));
  }
  FeatHeader h;
  h.rows = r.uint<std::uint32_t>(kHeaderBytes);
  h.cols = r.uint<std::uint32_t>(kHeaderBytes);
  h.kind_tag = r.uint<std::uint16_t>(kHeaderBytes);
  h.k = r.uint<std::uint32_t>(kHeaderBytes);
  h.layer_selection = static_cast<std::int32_t>(r.uint<std::uint32_t>(kHeaderBytes));
  const std::uint64_t count = static_cast<std::uint64_t>(h.rows) * h.cols;
  const std::uint64_t expected = kHeaderBytes + count * 4;
  std::vector<unsigned char> bytes(count * 4);
  r.raw(bytes.data(), bytes.size(), expected);
  data.resize(count);
  detail::decode_f32(bytes, data);
  return h;
}

std::filesystem::path columns_sidecar(const std::filesystem::path& feat_path) {
  auto p = feat_path;
  return p.replace_extension(".cols.tsv");
}

std::filesystem::path rows_sidecar(const std::filesystem::path& feat_path) {
  auto p = feat_path;
  return p.replace_extension(".rows.txt");
}

namespace {

std::string axis(std::int32_t v) { return v < 0 ? std::string("-") : std::to_string(v); }

std::int32_t parse_axis(const std::string& s) { return s == "-" ? -1 : std::stoi(s); }

}  // namespace

void write_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
  FeatHeader h;
  h.rows = m.rows;
  h.cols = m.cols;
  h.kind_tag = static_cast<std::uint16_t>(m.spec.kind);
  h.k = m.spec.k.value_or(0);
  h.layer_selection = m.spec.layers.is_all() ? -1 : static_cast<std::int32_t>(*m.spec.layers.layer);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    write_feat(out, h, m.data);
  }
  {
    std::ofstream out(columns_sidecar(path), std::ios::trunc);
    out << "column\tlayer\thead\trank\n";
    for (std::size_t c = 0; c < m.columns.size(); ++c) {
      out << c << '\t' << axis(m.columns[c].layer) << '\t' << axis(m.columns[c].head) << '\t'
          << axis(m.columns[c].rank) << '\n';
    }
    if (!out) throw DataError("cannot write " + columns_sidecar(path).string());
  }
  {
    std::ofstream out(rows_sidecar(path), std::ios::trunc);
    for (const auto& id : m.row_ids) out << id << '\n';
    if (!out) throw DataError("cannot write " + rows_sidecar(path).string());
  }
}

FeatureMatrix read_feature_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  FeatureMatrix m;
  const FeatHeader h = read_feat(in, m.data);
  if (h.kind_tag & kFeatProbePayloadBit) {
    throw FormatError(path.string() + " holds a probe model, not features");
  }
  m.rows = h.rows;
  m.cols = h.cols;
  if (h.kind_tag < 1 || h.kind_tag > 4) {
    throw FormatError(path.string() + ": unknown feature kind tag " + std::to_string(h.kind_tag));
  }
  m.spec.kind = static_cast<FeatureKind>(h.kind_tag);
  if (h.k != 0) m.spec.k = h.k;
  if (h.layer_selection >= 0) {
    m.spec.layers = LayerSelection::single(static_cast<std::uint32_t>(h.layer_selection));
  }

  if (std::ifstream cols(columns_sidecar(path)); cols) {
    std::string line;
    std::getline(cols, line);  // header
    while (std::getline(cols, line)) {
      std::istringstream fields(line);
      std::string c, l, hd, r;
      fields >> c >> l >> hd >> r;
      m.columns.push_back({parse_axis(l), parse_axis(hd), parse_axis(r)});
    }
    if (m.columns.size() != m.cols) {
      throw FormatError(columns_sidecar(path).string() + ": column count mismatch");
    }
  }
  if (std::ifstream rows(rows_sidecar(path)); rows) {
    std::string line;
    while (std::getline(rows, line)) {
      if (!line.empty()) m.row_ids.push_back(line);
    }
    if (m.row_ids.size() != m.rows) {
      throw FormatError(rows_sidecar(path).string() + ": row count mismatch");
    }
  }
  return m;
}

}  // namespace lapeig
