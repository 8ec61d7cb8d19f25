// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lapeig {

enum class Label { hallucination, non_hallucination, rejected };
enum class Split { train, test };

std::string_view to_string(Label label) noexcept;
std::string_view to_string(Split split) noexcept;
Label parse_label(std::string_view text);
Split parse_split(std::string_view text);

/// 1 for the hallucination class, 0 otherwise. Rejected records must be filtered first.
int binary_label(Label label);

struct ManifestRecord {
  std::string example_id;
  Label label = Label::non_hallucination;
  std::string dataset;
  double temperature = 0.0;
  std::string prompt_id;
  std::optional<Split> split;

  bool operator==(const ManifestRecord&) const = default;
};

struct ClassCounts {
  std::size_t hallucination = 0;
  std::size_t non_hallucination = 0;
  std::size_t rejected = 0;

  std::size_t total() const noexcept { return hallucination + non_hallucination + rejected; }
  std::size_t& operator[](Label label) noexcept;
  std::size_t operator[](Label label) const noexcept;
  bool operator==(const ClassCounts&) const = default;
};

/// Labeled example records. Ids are unique; insertion order is preserved.
class LabeledManifest {
 public:
  LabeledManifest() = default;
  explicit LabeledManifest(std::vector<ManifestRecord> records);

  /// Throws DataError on duplicate ids.
  void add(ManifestRecord record);

  const std::vector<ManifestRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  const ManifestRecord* find(std::string_view example_id) const;
  /// Throws DataError when the id has no record.
  const ManifestRecord& at(std::string_view example_id) const;

  ClassCounts counts() const noexcept;

  /// Records whose dataset / temperature match; nullopt keeps all.
  LabeledManifest select(const std::optional<std::string>& dataset,
                         const std::optional<double>& temperature) const;
  LabeledManifest subset(const std::vector<std::string>& ids) const;

  std::vector<std::string> datasets() const;
  std::vector<double> temperatures() const;

 private:
  std::vector<ManifestRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// One JSON object per line, fields in declaration order, UTF-8.
void write_manifest(const LabeledManifest& manifest, std::ostream& out);
LabeledManifest read_manifest(std::istream& in);

void write_manifest_file(const LabeledManifest& manifest, const std::filesystem::path& path);
LabeledManifest read_manifest_file(const std::filesystem::path& path);

}  // namespace lapeig
