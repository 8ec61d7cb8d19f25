// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#include <sstream>

#include "doctest.h"
#include "lapeig/error.hpp"
#include "lapeig/manifest.hpp"

using namespace lapeig;

namespace {

ManifestRecord rec(std::string id, Label label, std::string dataset = "d", double t = 1.0,
                   std::string prompt = "p1") {
  ManifestRecord r;
  r.example_id = std::move(id);
  r.label = label;
  r.dataset = std::move(dataset);
  r.temperature = t;
  r.prompt_id = std::move(prompt);
  return r;
}

}  // namespace

TEST_CASE("labels and splits round-trip through their names") {
  for (Label l : {Label::hallucination, Label::non_hallucination, Label::rejected}) {
    CHECK(parse_label(to_string(l)) == l);
  }
  for (Split s : {Split::train, Split::test}) CHECK(parse_split(to_string(s)) == s);
  CHECK_THROWS_AS(parse_label("maybe"), DataError);
  CHECK_THROWS_AS(parse_split("validation"), DataError);
  CHECK(binary_label(Label::hallucination) == 1);
  CHECK(binary_label(Label::non_hallucination) == 0);
  CHECK_THROWS(binary_label(Label::rejected));
}

TEST_CASE("manifest rejects duplicate ids") {
  LabeledManifest m;
  m.add(rec("a", Label::hallucination));
  CHECK_THROWS_AS(m.add(rec("a", Label::non_hallucination)), DataError);
  CHECK(m.size() == 1);
}

TEST_CASE("manifest counts, lookup and selection") {
  LabeledManifest m;
  m.add(rec("a", Label::hallucination, "triviaqa", 0.1));
  m.add(rec("b", Label::non_hallucination, "triviaqa", 1.0));
  m.add(rec("c", Label::rejected, "gsm8k", 1.0));
  m.add(rec("d", Label::hallucination, "gsm8k", 0.1));
  const auto c = m.counts();
  CHECK(c.hallucination == 2);
  CHECK(c.non_hallucination == 1);
  CHECK(c.rejected == 1);
  CHECK(c.total() == 4);
  CHECK(m.find("zzz") == nullptr);
  CHECK(m.at("c").dataset == "gsm8k");
  CHECK_THROWS_AS(m.at("zzz"), DataError);
  CHECK(m.select(std::string("gsm8k"), std::nullopt).size() == 2);
  CHECK(m.select(std::nullopt, 0.1).size() == 2);
  CHECK(m.select(std::string("triviaqa"), 1.0).size() == 1);
  CHECK(m.datasets() == std::vector<std::string>{"triviaqa", "gsm8k"});
  CHECK(m.temperatures() == std::vector<double>{0.1, 1.0});
  const auto sub = m.subset({"d", "a"});
  REQUIRE(sub.size() == 2);
  CHECK(sub.records()[0].example_id == "a");  // manifest order kept
}

TEST_CASE("JSONL round trip keeps every field") {
  LabeledManifest m;
  auto a = rec("q-\xE2\x9C\x93", Label::hallucination, "nq", 0.1, "p3");
  a.split = Split::train;
  m.add(a);
  m.add(rec("q2", Label::rejected, "nq", 1.0, "p4"));
  std::stringstream ss;
  write_manifest(m, ss);
  const std::string text = ss.str();
  CHECK(text.find("\"example_id\":") < text.find("\"label\":"));
  CHECK(text.find("\"split\":null") != std::string::npos);
  const auto back = read_manifest(ss);
  REQUIRE(back.size() == 2);
  CHECK(back.records()[0] == m.records()[0]);
  CHECK(back.records()[1] == m.records()[1]);
}

TEST_CASE("malformed manifest lines are reported with their line number") {
  std::istringstream bad_json("{\"example_id\":\"a\",\"label\":\"hallucination\"}\n{oops\n");
  CHECK_THROWS_WITH_AS(read_manifest(bad_json), doctest::Contains("line 2"), FormatError);
  std::istringstream bad_label("{\"example_id\":\"a\",\"label\":\"wrong\"}\n");
  CHECK_THROWS_AS(read_manifest(bad_label), DataError);
  std::istringstream missing_id("{\"label\":\"hallucination\"}\n");
  CHECK_THROWS_AS(read_manifest(missing_id), FormatError);
  std::istringstream blank_lines("\n  \n{\"example_id\":\"a\",\"label\":\"rejected\"}\n\n");
  CHECK(read_manifest(blank_lines).size() == 1);
}
