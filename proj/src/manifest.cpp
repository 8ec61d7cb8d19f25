// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#include "lapeig/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_set>

#include "json.hpp"
#include "lapeig/error.hpp"

namespace lapeig {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Label label) noexcept {
  switch (label) {
    case Label::hallucination: return "hallucination";
    case Label::non_hallucination: return "non_hallucination";
    case Label::rejected: return "rejected";
  }
  return "?";
}

std::string_view to_string(Split split) noexcept {
  return split == Split::train ? "train" : "test";
}

Label parse_label(std::string_view text) {
  if (text == "hallucination") return Label::hallucination;
  if (text == "non_hallucination") return Label::non_hallucination;
  if (text == "rejected") return Label::rejected;
  throw DataError("unknown label '" + std::string(text) + "'");
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "test") return Split::test;
  throw DataError("unknown split '" + std::string(text) + "'");
}

int binary_label(Label label) {
  if (label == Label::rejected) throw DataError("rejected example has no binary label");
  return label == Label::hallucination ? 1 : 0;
}

std::size_t& ClassCounts::operator[](Label label) noexcept {
  switch (label) {
    case Label::hallucination: return hallucination;
    case Label::non_hallucination: return non_hallucination;
    default: return rejected;
  }
}

std::size_t ClassCounts::operator[](Label label) const noexcept {
  return const_cast<ClassCounts&>(*this)[label];
}

LabeledManifest::LabeledManifest(std::vector<ManifestRecord> records) {
  records_.reserve(records.size());
  for (auto& r : records) add(std::move(r));
}

void LabeledManifest::add(ManifestRecord record) {
  if (index_.contains(record.example_id)) {
    throw DataError("duplicate example_id '" + record.example_id + "' in manifest");
  }
  index_.emplace(record.example_id, records_.size());
  records_.push_back(std::move(record));
}

const ManifestRecord* LabeledManifest::find(std::string_view example_id) const {
  const auto it = index_.find(std::string(example_id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

const ManifestRecord& LabeledManifest::at(std::string_view example_id) const {
  const auto* r = find(example_id);
  if (r == nullptr) throw DataError("no manifest record for '" + std::string(example_id) + "'");
  return *r;
}

ClassCounts LabeledManifest::counts() const noexcept {
  ClassCounts c;
  for (const auto& r : records_) ++c[r.label];
  return c;
}

LabeledManifest LabeledManifest::select(const std::optional<std::string>& dataset,
                                        const std::optional<double>& temperature) const {
  LabeledManifest out;
  for (const auto& r : records_) {
    if (dataset && r.dataset != *dataset) continue;
    if (temperature && r.temperature != *temperature) continue;
    out.add(r);
  }
  return out;
}

LabeledManifest LabeledManifest::subset(const std::vector<std::string>& ids) const {
  const std::unordered_set<std::string> wanted(ids.begin(), ids.end());
  LabeledManifest out;
  for (const auto& r : records_) {
    if (wanted.contains(r.example_id)) out.add(r);
  }
  return out;
}

std::vector<std::string> LabeledManifest::datasets() const {
  std::vector<std::string> out;
  for (const auto& r : records_) {
    if (std::find(out.begin(), out.end(), r.dataset) == out.end()) out.push_back(r.dataset);
  }
  return out;
}

std::vector<double> LabeledManifest::temperatures() const {
  std::set<double> seen;
  for (const auto& r : records_) seen.insert(r.temperature);
  return {seen.begin(), seen.end()};
}

void write_manifest(const LabeledManifest& manifest, std::ostream& out) {
  for (const auto& r : manifest.records()) {
    ordered_json j;
    j["example_id"] = r.example_id;
    j["label"] = to_string(r.label);
    j["dataset"] = r.dataset;
    j["temperature"] = r.temperature;
    j["prompt_id"] = r.prompt_id;
    if (r.split) {
      j["split"] = to_string(*r.split);
    } else {
      j["split"] = nullptr;
    }
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("manifest write failure");
}

LabeledManifest read_manifest(std::istream& in) {
  LabeledManifest manifest;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = ordered_json::parse(line);
      ManifestRecord r;
      r.example_id = j.at("example_id").get<std::string>();
      r.label = parse_label(j.at("label").get<std::string>());
      r.dataset = j.value("dataset", std::string{});
      r.temperature = j.value("temperature", 0.0);
      r.prompt_id = j.value("prompt_id", std::string{});
      if (j.contains("split") && !j["split"].is_null()) {
        r.split = parse_split(j["split"].get<std::string>());
      }
      manifest.add(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("manifest line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return manifest;
}

void write_manifest_file(const LabeledManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_manifest(manifest, out);
}

LabeledManifest read_manifest_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  return read_manifest(in);
}

}  // namespace lapeig
