// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lapeig/feature_matrix.hpp"
#include "lapeig/spectral.hpp"

namespace lapeig {

inline constexpr std::size_t kDefaultPcaDims = 512;

/// Centered linear projection onto the leading principal directions. No whitening.
struct PcaTransform {
  Eigen::VectorXd mean;                ///< D column means of the fitting rows
  Eigen::MatrixXd components;          ///< C x D, orthonormal rows, descending variance
  Eigen::VectorXd explained_variance;  ///< C variances (unbiased, N - 1 denominator)

  std::size_t input_dims() const noexcept { return static_cast<std::size_t>(mean.size()); }
  std::size_t output_dims() const noexcept { return static_cast<std::size_t>(components.rows()); }
};

/// Fits on the rows of `X` (N x D). Keeps C = min(target_dims, D, N) directions;
/// each is signed so that its largest-magnitude coordinate (lowest index on ties)
/// is positive.
PcaTransform pca_fit(const Eigen::MatrixXd& X, std::size_t target_dims);

/// (X - mean) * components^T.
Eigen::MatrixXd pca_transform(const PcaTransform& pca, const Eigen::MatrixXd& X);

struct ClassWeights {
  double hallucination = 1.0;
  double non_hallucination = 1.0;

  double of(int label) const noexcept { return label == 1 ? hallucination : non_hallucination; }
};

/// w_c = N / (2 N_c). Throws DataError unless both classes are present.
ClassWeights balanced_class_weights(std::span<const int> labels);

/// Weighted L2 logistic loss over parameters theta = [w (C), b]:
///   C_inv * sum_i s_i * log(1 + exp(-y_i (w.z_i + b))) + 0.5 * |w|^2,  y_i in {-1, +1}.
/// The bias is not regularized.
class LogisticObjective {
 public:
  LogisticObjective(const Eigen::MatrixXd& Z, std::span<const int> labels, ClassWeights weights,
                    double inverse_regularization = 1.0);

  std::size_t parameters() const noexcept { return static_cast<std::size_t>(design_.cols()); }

  double value(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const;

 private:
  Eigen::MatrixXd design_;  // [Z, 1]
  Eigen::VectorXd signs_;   // +1 hallucination, -1 otherwise
  Eigen::VectorXd sample_weights_;
  double inverse_regularization_;
};

struct LogisticOptions {
  int max_iter = 2000;
  double tol = 1e-4;
  double inverse_regularization = 1.0;
  /// Starting point [w, b]; zeros when absent.
  std::optional<Eigen::VectorXd> initial;
};

struct LogisticModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double inverse_regularization = 1.0;
  ClassWeights class_weights;
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
  double gradient_max_norm = 0.0;
  /// Objective at the start point and after every accepted step.
  std::vector<double> objective_trace;

  Eigen::VectorXd decision_function(const Eigen::MatrixXd& Z) const;
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& Z) const;
};

/// Damped Newton with Armijo backtracking. Stops when the gradient max-norm is
/// at most `tol` or after `max_iter` steps. Labels are 1 (hallucination) / 0.
LogisticModel logistic_fit(const Eigen::MatrixXd& Z, std::span<const int> labels,
                           const LogisticOptions& options = {});

double sigmoid(double x) noexcept;

struct TrainingInfo {
  std::uint64_t seed = 0;
  std::string dataset;
};

/// Fitted PCA followed by logistic regression, with the feature spec it expects.
struct ProbeModel {
  PcaTransform pca;
  LogisticModel logistic;
  FeatureSpec spec;
  TrainingInfo info;

  /// Hallucination probability per row. Throws UsageError on spec or dimension mismatch.
  std::vector<double> predict(const FeatureMatrix& X) const;
  std::vector<double> predict(const Eigen::MatrixXd& X) const;
};

struct ProbeOptions {
  std::size_t pca_dims = kDefaultPcaDims;
  LogisticOptions logistic;
  TrainingInfo info;
};

ProbeModel probe_fit(const FeatureMatrix& train, std::span<const int> labels,
                     const ProbeOptions& options = {});

inline std::vector<double> probe_predict(const ProbeModel& model, const FeatureMatrix& X) {
  return model.predict(X);
}

Eigen::MatrixXd to_matrix(const FeatureMatrix& X);

/// Versioned text document; float arrays as hex of little-endian IEEE-754 doubles.
void write_probe_text(const ProbeModel& model, std::ostream& out);
ProbeModel read_probe_text(std::istream& in);

/// Compact variant in the FEAT container (32-bit floats, no training metadata).
void write_probe_binary(const ProbeModel& model, std::ostream& out);
ProbeModel read_probe_binary(std::istream& in);

void save_probe(const ProbeModel& model, const std::filesystem::path& path, bool binary = false);
/// Detects the variant from the leading bytes.
ProbeModel load_probe(const std::filesystem::path& path);

}  // namespace lapeig
