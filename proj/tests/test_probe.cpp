// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "doctest.h"
#include "lapeig/error.hpp"
#include "lapeig/metrics.hpp"
#include "lapeig/probe.hpp"

using namespace lapeig;

namespace {

Eigen::MatrixXd gaussian(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = z(gen);
  return X;
}

std::vector<int> alternating(std::size_t n) {
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % 2);
  return y;
}

FeatureMatrix as_features(const Eigen::MatrixXd& X, FeatureSpec spec = {FeatureKind::attn_logdet, std::nullopt, {}}) {
  FeatureMatrix m;
  m.spec = spec;
  m.rows = static_cast<std::uint32_t>(X.rows());
  m.cols = static_cast<std::uint32_t>(X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    m.row_ids.push_back("r" + std::to_string(i));
    for (Eigen::Index j = 0; j < X.cols(); ++j) m.data.push_back(static_cast<float>(X(i, j)));
  }
  return m;
}

// Two-class data whose class means differ by `shift` along the first axis.
std::pair<Eigen::MatrixXd, std::vector<int>> shifted(std::size_t n, std::size_t d, double shift,
                                                     std::uint64_t seed) {
  Eigen::MatrixXd X = gaussian(n, d, seed);
  auto y = alternating(n);
  for (std::size_t i = 0; i < n; ++i)
    if (y[i] == 1) X(i, 0) += shift;
  return {X, y};
}

}  // namespace

TEST_CASE("PCA of data with one non-constant column") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Constant(20, 4, 3.0);
  for (int i = 0; i < 20; ++i) X(i, 2) = i;
  const auto pca = pca_fit(X, 1);
  REQUIRE(pca.output_dims() == 1);
  CHECK(std::abs(pca.components(0, 2)) == doctest::Approx(1.0));
  CHECK(pca.components(0, 2) > 0.0);
  CHECK(pca.explained_variance[0] == doctest::Approx(35.0));  // var of 0..19, N-1 denominator
}

TEST_CASE("PCA recovers an elongated cluster axis") {
  Eigen::MatrixXd X = gaussian(2000, 3, 1);
  X.col(0) *= 0.1;
  X.col(1) *= 0.1;
  X.col(2) *= 5.0;
  Eigen::Vector3d axis(1.0, 2.0, 2.0);
  axis.normalize();
  // Rotate so the long axis points along `axis`.
  Eigen::Matrix3d R = Eigen::Quaterniond::FromTwoVectors(Eigen::Vector3d::UnitZ(), axis).toRotationMatrix();
  X = X * R.transpose();
  const auto pca = pca_fit(X, 3);
  const double cosine = std::abs(pca.components.row(0).dot(axis.transpose()));
  CHECK(std::acos(std::min(1.0, cosine)) < 1e-3);
}

TEST_CASE("PCA projections are centered and decorrelated") {
  const Eigen::MatrixXd X = gaussian(300, 6, 2) * gaussian(6, 6, 3);
  const auto pca = pca_fit(X, 6);
  const Eigen::MatrixXd Z = pca_transform(pca, X);
  CHECK(Z.colwise().mean().cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::MatrixXd cov = (Z.transpose() * Z) / 299.0;
  for (int i = 0; i < 6; ++i) {
    CHECK(cov(i, i) == doctest::Approx(pca.explained_variance[i]).epsilon(1e-8));
    for (int j = 0; j < 6; ++j)
      if (i != j) CHECK(std::abs(cov(i, j)) < 1e-8);
    if (i > 0) CHECK(pca.explained_variance[i - 1] >= pca.explained_variance[i]);
  }
  const Eigen::MatrixXd mean_row = pca.mean.transpose();
  CHECK(pca_transform(pca, mean_row).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("full-rank PCA is an isometry with an exact inverse") {
  const Eigen::MatrixXd X = gaussian(50, 5, 4);
  const auto pca = pca_fit(X, 5);
  const Eigen::MatrixXd I = pca.components * pca.components.transpose();
  CHECK((I - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::MatrixXd Z = pca_transform(pca, X);
  for (int a = 0; a < 5; ++a) {
    for (int b = 0; b < 5; ++b) {
      CHECK((X.row(a) - X.row(b)).norm() == doctest::Approx((Z.row(a) - Z.row(b)).norm()));
    }
  }
  const Eigen::MatrixXd back = (Z * pca.components).rowwise() + pca.mean.transpose();
  CHECK((back - X).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("PCA caps the output dimension and handles wide data") {
  CHECK(pca_fit(gaussian(10, 30, 5), 512).output_dims() == 10);
  CHECK(pca_fit(gaussian(40, 8, 5), 512).output_dims() == 8);
  CHECK(pca_fit(gaussian(40, 8, 5), 3).output_dims() == 3);
  const auto wide = pca_fit(gaussian(10, 30, 6), 512);
  const Eigen::MatrixXd I = wide.components * wide.components.transpose();
  CHECK((I - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK_THROWS_AS(pca_fit(gaussian(1, 3, 1), 2), DataError);
  CHECK_THROWS_AS(pca_fit(gaussian(5, 3, 1), 0), UsageError);
}

TEST_CASE("PCA is deterministic and applies the sign rule") {
  const Eigen::MatrixXd X = gaussian(100, 7, 8);
  const auto a = pca_fit(X, 7);
  const auto b = pca_fit(X, 7);
  CHECK(a.components == b.components);
  for (Eigen::Index i = 0; i < a.components.rows(); ++i) {
    Eigen::Index arg = 0;
    a.components.row(i).cwiseAbs().maxCoeff(&arg);
    CHECK(a.components(i, arg) > 0.0);
  }
  // Flipping the data flips no signs in the output basis.
  const auto flipped = pca_fit(-X, 7);
  CHECK((flipped.components - a.components).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("balanced class weights") {
  const std::vector<int> y{1, 0, 0, 0};
  const auto w = balanced_class_weights(y);
  CHECK(w.hallucination == doctest::Approx(2.0));
  CHECK(w.non_hallucination == doctest::Approx(4.0 / 6.0));
  // Weighted class totals are both N/2.
  CHECK(w.hallucination * 1 == doctest::Approx(w.non_hallucination * 3));
  CHECK_THROWS_AS(balanced_class_weights(std::vector<int>{1, 1}), DataError);
  CHECK_THROWS_AS(balanced_class_weights(std::vector<int>{1, 2}), DataError);
}

TEST_CASE("logistic gradient matches finite differences") {
  const auto [X, y] = shifted(60, 4, 1.0, 11);
  const ClassWeights w = balanced_class_weights(y);
  const LogisticObjective f(X, y, w, 1.0);
  std::mt19937_64 gen(12);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd theta(5);
    for (int j = 0; j < 5; ++j) theta[j] = z(gen);
    const Eigen::VectorXd g = f.gradient(theta);
    const Eigen::MatrixXd Hs = f.hessian(theta);
    for (int j = 0; j < 5; ++j) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(5);
      e[j] = 1e-6;
      const double fd = (f.value(theta + e) - f.value(theta - e)) / 2e-6;
      CHECK(g[j] == doctest::Approx(fd).epsilon(1e-5));
      const Eigen::VectorXd hd = (f.gradient(theta + e) - f.gradient(theta - e)) / 2e-6;
      CHECK((Hs.col(j) - hd).cwiseAbs().maxCoeff() < 1e-4 * (1.0 + Hs.col(j).cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("logistic fit converges to the same optimum from different starts") {
  const auto [X, y] = shifted(200, 5, 1.5, 21);
  const auto a = logistic_fit(X, y);
  LogisticOptions o;
  o.initial = Eigen::VectorXd::Constant(6, 3.0);
  const auto b = logistic_fit(X, y, o);
  CHECK(a.converged);
  CHECK(b.converged);
  CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(std::abs(a.bias - b.bias) < 1e-6);
  for (std::size_t i = 1; i < a.objective_trace.size(); ++i)
    CHECK(a.objective_trace[i] <= a.objective_trace[i - 1] + 1e-12);
  for (std::size_t i = 1; i < b.objective_trace.size(); ++i)
    CHECK(b.objective_trace[i] <= b.objective_trace[i - 1] + 1e-12);
  CHECK(a.gradient_max_norm <= 1e-4);
}

TEST_CASE("separable data is ranked perfectly") {
  const auto [X, y] = shifted(100, 3, 20.0, 31);
  const auto m = logistic_fit(X, y);
  const Eigen::VectorXd p = m.predict_proba(X);
  std::vector<double> scores(p.data(), p.data() + p.size());
  CHECK(auroc(scores, y) == 1.0);
  CHECK(m.weights[0] > 0.0);
}

TEST_CASE("no-signal data yields probabilities near one half") {
  const Eigen::MatrixXd X = gaussian(4000, 3, 41);
  const auto y = alternating(4000);
  const auto m = logistic_fit(X, y);
  const Eigen::VectorXd p = m.predict_proba(X);
  CHECK(std::abs(p.mean() - 0.5) < 1e-3);
  CHECK(m.weights.cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("imbalanced data: balanced weights keep the intercept unbiased") {
  // Pure noise, 1:3 imbalance. Balanced weighting makes the mean decision close to zero.
  const Eigen::MatrixXd X = gaussian(4000, 2, 51);
  std::vector<int> y(4000);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = (i % 4 == 0);
  const auto m = logistic_fit(X, y);
  CHECK(std::abs(m.bias) < 0.05);
}

TEST_CASE("sigmoid is stable at the extremes") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) == 0.0);
  CHECK(std::isfinite(sigmoid(-745.0)));
}

TEST_CASE("a zero-weight probe predicts one half everywhere") {
  ProbeModel m;
  m.spec = {FeatureKind::attn_logdet, std::nullopt, {}};
  m.pca.mean = Eigen::VectorXd::Zero(3);
  m.pca.components = Eigen::MatrixXd::Identity(3, 3);
  m.pca.explained_variance = Eigen::VectorXd::Ones(3);
  m.logistic.weights = Eigen::VectorXd::Zero(3);
  m.logistic.bias = 0.0;
  for (double p : m.predict(as_features(gaussian(10, 3, 1), m.spec))) CHECK(p == 0.5);
}

TEST_CASE("probe refuses features of a different kind or width") {
  const auto [X, y] = shifted(40, 4, 2.0, 61);
  const auto train = as_features(X);
  const auto model = probe_fit(train, y);
  auto other = train;
  other.spec = {FeatureKind::lap_eigvals, 1, LayerSelection::all()};
  CHECK_THROWS_WITH_AS(model.predict(other), doctest::Contains("lap_eigvals"), UsageError);
  CHECK_THROWS_AS(model.predict(as_features(gaussian(5, 3, 1))), UsageError);
  CHECK_THROWS_AS(probe_fit(train, std::vector<int>(3, 1)), UsageError);
}

TEST_CASE("probe fitted on train rows ignores test rows") {
  const auto [X, y] = shifted(200, 6, 1.0, 71);
  const Eigen::MatrixXd train_X = X.topRows(100);
  const std::vector<int> train_y(y.begin(), y.begin() + 100);
  Eigen::MatrixXd poisoned = X;
  poisoned.bottomRows(100) *= 1000.0;
  const auto a = probe_fit(as_features(train_X), train_y);
  const auto b = probe_fit(as_features(Eigen::MatrixXd(poisoned.topRows(100))), train_y);
  CHECK(a.pca.mean == b.pca.mean);
  CHECK(a.logistic.weights == b.logistic.weights);
}

TEST_CASE("probe text and binary formats reproduce predictions") {
  const auto [X, y] = shifted(120, 5, 1.0, 81);
  const auto train = as_features(X);
  ProbeOptions o;
  o.pca_dims = 4;
  o.info.seed = 77;
  o.info.dataset = "unit";
  const auto model = probe_fit(train, y, o);
  const auto expected = model.predict(train);

  std::stringstream text;
  write_probe_text(model, text);
  const auto from_text = read_probe_text(text);
  CHECK(from_text.predict(train) == expected);
  CHECK(from_text.spec == model.spec);
  CHECK(from_text.info.seed == 77);
  CHECK(from_text.info.dataset == "unit");

  std::stringstream bin(std::ios::in | std::ios::out | std::ios::binary);
  write_probe_binary(model, bin);
  const auto from_bin = read_probe_binary(bin);
  const auto got = from_bin.predict(train);
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-5));

  const auto dir = std::filesystem::temp_directory_path() / "lapeig_probe_io";
  std::filesystem::create_directories(dir);
  save_probe(model, dir / "p.model");
  save_probe(model, dir / "p.feat", true);
  CHECK(load_probe(dir / "p.model").predict(train) == expected);
  CHECK(load_probe(dir / "p.feat").predict(train).size() == expected.size());
  std::filesystem::remove_all(dir);

  std::istringstream junk("not a probe\n");
  CHECK_THROWS_AS(read_probe_text(junk), FormatError);
}
