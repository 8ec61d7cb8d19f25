// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace lapeig {

inline constexpr double kDefaultThreshold = 0.5;

/// Midrank AUROC: (R_pos - n_pos (n_pos + 1) / 2) / (n_pos n_neg); ties count 1/2.
/// Labels are 1 (positive) / 0. Throws DataError when a class is absent.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// Midranks (1-based, ties averaged) of `values`.
std::vector<double> midranks(std::span<const double> values);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  /// Set when nothing is predicted positive; precision is then reported as 0.
  bool precision_undefined = false;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

/// Predictions are scores >= threshold. Throws DataError if labels hold no positives.
PrecisionRecall precision_recall(std::span<const double> scores, std::span<const int> labels,
                                 double threshold = kDefaultThreshold);

struct RocPoint {
  double threshold = 0.0;  ///< scores >= threshold are predicted positive
  double fpr = 0.0;
  double tpr = 0.0;
};

/// ROC points at every distinct score, from (+inf, 0, 0) down to (min score, 1, 1).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels);
std::string roc_csv(const std::vector<RocPoint>& points);

struct EvalReport {
  double auroc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  bool precision_undefined = false;
  double threshold = kDefaultThreshold;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;

  // Configuration echo.
  std::string feature;
  std::string k;  // "-" when the kind has no k
  std::string layers;
  std::string train_dataset;
  std::string dataset;
  double temperature = 0.0;
  std::uint64_t seed = 0;
  std::string split;
};

/// Fills the metric fields of `report` from scores and labels.
EvalReport evaluate(std::span<const double> scores, std::span<const int> labels,
                    EvalReport report, double threshold = kDefaultThreshold);

/// Column order: configuration first, then metrics.
std::string eval_csv_header();
std::string eval_csv_row(const EvalReport& report);
std::string eval_json(const EvalReport& report);
EvalReport eval_from_json(const std::string& line);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace lapeig
