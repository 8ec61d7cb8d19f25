// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#include "lapeig/interchange.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "binary_io.hpp"
#include "lapeig/error.hpp"

namespace lapeig {

namespace {

constexpr std::uint64_t kFixedHeaderBytes = 4 + 2 + 4 * 3 + 4;

// Number of packed floats, or 0 on overflow of the addressable byte range.
std::uint64_t checked_payload_floats(std::uint32_t layers, std::uint32_t heads,
                                     std::uint32_t tokens) {
  const std::uint64_t limit =
      std::min<std::uint64_t>(std::numeric_limits<std::size_t>::max() / sizeof(float),
                              std::numeric_limits<std::uint64_t>::max() / sizeof(float));
  // T (T + 1) / 2 fits in 64 bits for any 32-bit T.
  const std::uint64_t t = tokens;
  const std::uint64_t per_head = (t % 2 == 0) ? (t / 2) * (t + 1) : t * ((t + 1) / 2);
  const std::uint64_t stacks = static_cast<std::uint64_t>(layers) * heads;
  if (stacks != 0 && per_head > limit / stacks) return 0;
  return stacks * per_head;
}

void check_dimensions(std::uint32_t layers, std::uint32_t heads, std::uint32_t tokens,
                      const char* context) {
  if (tokens == 0) throw UsageError(std::string(context) + ": token count T must be positive");
  if (layers == 0 || heads == 0) {
    throw UsageError(std::string(context) + ": layer and head counts must be positive");
  }
  if (checked_payload_floats(layers, heads, tokens) == 0) {
    throw UsageError(std::string(context) + ": L*H*T(T+1)/2 overflows the addressable size");
  }
}

}  // namespace

std::string ValidationReport::describe(std::size_t max_items) const {
  std::ostringstream out;
  if (ok()) return "valid";
  if (size_mismatch) {
    out << "packed length " << actual_values << " != expected " << expected_values << '\n';
  }
  std::size_t listed = 0;
  for (const auto& v : non_finite_entries) {
    if (listed++ >= max_items) break;
    out << "non-finite entry at (l=" << v.layer << ", h=" << v.head << ", i=" << v.row
        << ", j=" << v.col << ")\n";
  }
  for (const auto& v : negative_entries) {
    if (listed++ >= max_items) break;
    out << "negative entry " << v.value << " at (l=" << v.layer << ", h=" << v.head
        << ", i=" << v.row << ", j=" << v.col << ")\n";
  }
  for (const auto& v : row_sums) {
    if (listed++ >= max_items) break;
    out << "row sum " << v.sum << " at (l=" << v.layer << ", h=" << v.head << ", i=" << v.row
        << ")\n";
  }
  const std::size_t total = non_finite_entries.size() + negative_entries.size() + row_sums.size();
  if (total > max_items) out << "... " << (total - max_items) << " more\n";
  return out.str();
}

ValidationReport validate_stack(const AttentionStack& stack, double row_tolerance) {
  ValidationReport report;
  report.expected_values = stack.expected_size();
  report.actual_values = stack.values.size();
  if (report.expected_values != report.actual_values || stack.num_tokens == 0) {
    report.size_mismatch = true;
    return report;
  }
  for (std::uint32_t l = 0; l < stack.num_layers; ++l) {
    for (std::uint32_t h = 0; h < stack.num_heads; ++h) {
      const HeadView head = stack.head(l, h);
      for (std::uint32_t i = 0; i < stack.num_tokens; ++i) {
        double sum = 0.0;
        const auto row = head.row(i);
        for (std::uint32_t j = 0; j <= i; ++j) {
          const float a = row[j];
          if (!std::isfinite(a)) {
            report.non_finite_entries.push_back({l, h, i, j, a});
          } else if (a < 0.0f) {
            report.negative_entries.push_back({l, h, i, j, a});
          }
          sum += a;
        }
        // NaN sums compare false against the tolerance, so test for the valid case.
        if (!(std::abs(sum - 1.0) <= row_tolerance)) {
          report.row_sums.push_back({l, h, i, sum});
        }
      }
    }
  }
  return report;
}

std::uint64_t write_stack(const AttentionStack& stack, std::ostream& sink,
                          const WriteOptions& options) {
  check_dimensions(stack.num_layers, stack.num_heads, stack.num_tokens, "write_stack");
  if (stack.values.size() != stack.expected_size()) {
    throw UsageError("write_stack: packed length " + std::to_string(stack.values.size()) +
                     " != L*H*T(T+1)/2 = " + std::to_string(stack.expected_size()));
  }
  if (stack.example_id.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw UsageError("write_stack: example_id too long");
  }
  if (options.validate) {
    const auto report = validate_stack(stack, options.row_tolerance);
    if (!report.ok()) {
      throw ValidationError("write_stack: '" + stack.example_id + "' is invalid:\n" +
                            report.describe());
    }
  }
  detail::ByteWriter out(sink);
  out.raw(kStackMagic, 4);
  out.uint<std::uint16_t>(kStackFormatVersion);
  out.uint<std::uint32_t>(stack.num_layers);
  out.uint<std::uint32_t>(stack.num_heads);
  out.uint<std::uint32_t>(stack.num_tokens);
  out.uint<std::uint32_t>(static_cast<std::uint32_t>(stack.example_id.size()));
  out.raw(stack.example_id.data(), stack.example_id.size());
  out.f32_array(stack.values);
  sink.flush();
  if (!sink) throw DataError("write_stack: flush failed");
  return out.count();
}

AttentionStack read_stack(std::istream& source) {
  detail::ByteReader in(source, "read_stack");
  char magic[4];
  in.raw(magic, 4, kFixedHeaderBytes);
  if (!std::equal(magic, magic + 4, kStackMagic)) {
    throw FormatError("read_stack: bad magic, not an ATNS stream");
  }
  const auto version = in.uint<std::uint16_t>(kFixedHeaderBytes);
  if (version != kStackFormatVersion) {
    throw FormatError("read_stack: unsupported format version " + std::to_string(version));
  }
  AttentionStack stack;
  stack.num_layers = in.uint<std::uint32_t>(kFixedHeaderBytes);
  stack.num_heads = in.uint<std::uint32_t>(kFixedHeaderBytes);
  stack.num_tokens = in.uint<std::uint32_t>(kFixedHeaderBytes);
  const auto id_length = in.uint<std::uint32_t>(kFixedHeaderBytes);
  if (stack.num_tokens == 0 || stack.num_layers == 0 || stack.num_heads == 0) {
    throw FormatError("read_stack: header declares an empty dimension");
  }
  const std::uint64_t floats =
      checked_payload_floats(stack.num_layers, stack.num_heads, stack.num_tokens);
  if (floats == 0) throw FormatError("read_stack: header dimensions overflow");
  const std::uint64_t expected_total = kFixedHeaderBytes + id_length + floats * sizeof(float);

  stack.example_id.resize(id_length);
  in.raw(stack.example_id.data(), id_length, expected_total);

  // Chunked so a corrupt header cannot force one huge allocation up front.
  constexpr std::uint64_t kChunkFloats = 1 << 18;
  std::vector<unsigned char> buffer;
  stack.values.clear();
  for (std::uint64_t done = 0; done < floats;) {
    const std::uint64_t n = std::min(kChunkFloats, floats - done);
    buffer.resize(n * sizeof(float));
    in.raw(buffer.data(), buffer.size(), expected_total);
    const std::size_t old = stack.values.size();
    stack.values.resize(old + n);
    detail::decode_f32(buffer, std::span<float>(stack.values).subspan(old, n));
    done += n;
  }

  const auto nan_at = std::find_if(stack.values.begin(), stack.values.end(),
                                   [](float v) { return std::isnan(v); });
  if (nan_at != stack.values.end()) {
    std::size_t offset = static_cast<std::size_t>(nan_at - stack.values.begin());
    const std::size_t per_head = stack.head_size();
    const std::size_t head_index = offset / per_head;
    std::size_t within = offset % per_head;
    std::size_t i = 0;
    while (packed_index(i + 1, 0) <= within) ++i;
    const std::size_t j = within - packed_index(i, 0);
    throw ValidationError("read_stack: '" + stack.example_id + "' NaN at (l=" +
                          std::to_string(head_index / stack.num_heads) +
                          ", h=" + std::to_string(head_index % stack.num_heads) +
                          ", i=" + std::to_string(i) + ", j=" + std::to_string(j) + ")");
  }
  return stack;
}

void write_stack_file(const AttentionStack& stack, const std::filesystem::path& path,
                      const WriteOptions& options) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_stack(stack, out, options);
}

AttentionStack read_stack_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return read_stack(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::filesystem::path> list_stack_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".atns") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace lapeig
