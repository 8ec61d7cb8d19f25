// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#include "lapeig/probe.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "lapeig/error.hpp"

namespace lapeig {

namespace {

void require_finite(const Eigen::MatrixXd& X, const char* context) {
  if (!X.allFinite()) throw DataError(std::string(context) + ": non-finite input");
}

// Largest |v_j| positive; first index wins ties.
void apply_sign_rule(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < v.size(); ++j) {
    if (std::abs(v[j]) > std::abs(v[best])) best = j;
  }
  if (v.size() > 0 && v[best] < 0.0) v = -v;
}

double softplus(double x) noexcept {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

PcaTransform pca_fit(const Eigen::MatrixXd& X, std::size_t target_dims) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n < 2) throw DataError("pca_fit: need at least 2 training rows, got " + std::to_string(n));
  if (d < 1) throw DataError("pca_fit: no feature columns");
  if (target_dims == 0) throw UsageError("pca_fit: target_dims must be positive");
  require_finite(X, "pca_fit");

  const Eigen::Index c = std::min<Eigen::Index>({static_cast<Eigen::Index>(target_dims), d, n});
  PcaTransform pca;
  pca.mean = X.colwise().mean().transpose();
  const Eigen::MatrixXd centered = X.rowwise() - pca.mean.transpose();
  const double denom = static_cast<double>(n - 1);
  pca.components.resize(c, d);
  pca.explained_variance.resize(c);

  if (d <= n) {
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw NumericalError("pca_fit: eigendecomposition failed");
    for (Eigen::Index i = 0; i < c; ++i) {
      const Eigen::Index src = d - 1 - i;
      pca.explained_variance[i] = std::max(0.0, eig.eigenvalues()[src]);
      pca.components.row(i) = eig.eigenvectors().col(src).transpose();
    }
  } else {
    // Wide data: eigendecompose the N x N Gram matrix and map back.
    const Eigen::MatrixXd gram = (centered * centered.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) throw NumericalError("pca_fit: eigendecomposition failed");
    const double top = std::max(eig.eigenvalues()[n - 1], 0.0);
    const double floor = top * 1e-12;
    Eigen::MatrixXd basis(d, c);
    for (Eigen::Index i = 0; i < c; ++i) {
      const Eigen::Index src = n - 1 - i;
      const double lambda = eig.eigenvalues()[src];
      pca.explained_variance[i] = std::max(0.0, lambda);
      if (lambda > floor && lambda > 0.0) {
        basis.col(i) = centered.transpose() * eig.eigenvectors().col(src);
        basis.col(i).normalize();
      } else {
        basis.col(i) = Eigen::VectorXd::Unit(d, i);
      }
    }
    // Re-orthonormalize: null-space directions and rounding both need it.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, c);
    pca.components = q.transpose();
  }
  for (Eigen::Index i = 0; i < c; ++i) {
    Eigen::VectorXd row = pca.components.row(i).transpose();
    apply_sign_rule(row);
    pca.components.row(i) = row.transpose();
  }
  return pca;
}

Eigen::MatrixXd pca_transform(const PcaTransform& pca, const Eigen::MatrixXd& X) {
  if (static_cast<std::size_t>(X.cols()) != pca.input_dims()) {
    throw UsageError("pca_transform: input has " + std::to_string(X.cols()) +
                     " columns, transform expects " + std::to_string(pca.input_dims()));
  }
  return (X.rowwise() - pca.mean.transpose()) * pca.components.transpose();
}

ClassWeights balanced_class_weights(std::span<const int> labels) {
  std::size_t pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("labels must be 0 or 1");
    pos += (y == 1);
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw DataError("both classes must be present, got a single class");
  const double n = static_cast<double>(labels.size());
  return {n / (2.0 * static_cast<double>(pos)), n / (2.0 * static_cast<double>(neg))};
}

LogisticObjective::LogisticObjective(const Eigen::MatrixXd& Z, std::span<const int> labels,
                                     ClassWeights weights, double inverse_regularization)
    : inverse_regularization_(inverse_regularization) {
  if (static_cast<std::size_t>(Z.rows()) != labels.size()) {
    throw UsageError("logistic: feature rows and labels differ in length");
  }
  design_.resize(Z.rows(), Z.cols() + 1);
  design_.leftCols(Z.cols()) = Z;
  design_.col(Z.cols()).setOnes();
  signs_.resize(Z.rows());
  sample_weights_.resize(Z.rows());
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    signs_[i] = y == 1 ? 1.0 : -1.0;
    sample_weights_[i] = weights.of(y);
  }
}

double LogisticObjective::value(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd margin = design_ * theta;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < margin.size(); ++i) {
    loss += sample_weights_[i] * softplus(-signs_[i] * margin[i]);
  }
  const auto w = theta.head(theta.size() - 1);
  return inverse_regularization_ * loss + 0.5 * w.squaredNorm();
}

Eigen::VectorXd LogisticObjective::gradient(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd margin = design_ * theta;
  Eigen::VectorXd r(margin.size());
  for (Eigen::Index i = 0; i < margin.size(); ++i) {
    r[i] = -inverse_regularization_ * sample_weights_[i] * signs_[i] *
           sigmoid(-signs_[i] * margin[i]);
  }
  Eigen::VectorXd g = design_.transpose() * r;
  g.head(g.size() - 1) += theta.head(theta.size() - 1);
  return g;
}

Eigen::MatrixXd LogisticObjective::hessian(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd margin = design_ * theta;
  Eigen::VectorXd curvature(margin.size());
  for (Eigen::Index i = 0; i < margin.size(); ++i) {
    const double p = sigmoid(margin[i]);
    curvature[i] = inverse_regularization_ * sample_weights_[i] * p * (1.0 - p);
  }
  const Eigen::MatrixXd weighted = design_.array().colwise() * curvature.array();
  Eigen::MatrixXd h = design_.transpose() * weighted;
  const Eigen::Index m = h.rows() - 1;
  h.diagonal().head(m).array() += 1.0;
  return h;
}

Eigen::VectorXd LogisticModel::decision_function(const Eigen::MatrixXd& Z) const {
  if (Z.cols() != weights.size()) {
    throw UsageError("logistic: input has " + std::to_string(Z.cols()) + " columns, model has " +
                     std::to_string(weights.size()));
  }
  return (Z * weights).array() + bias;
}

Eigen::VectorXd LogisticModel::predict_proba(const Eigen::MatrixXd& Z) const {
  return decision_function(Z).unaryExpr([](double m) { return sigmoid(m); });
}

LogisticModel logistic_fit(const Eigen::MatrixXd& Z, std::span<const int> labels,
                           const LogisticOptions& options) {
  if (labels.size() < 2) throw DataError("logistic_fit: need at least 2 examples");
  require_finite(Z, "logistic_fit");
  const ClassWeights weights = balanced_class_weights(labels);
  const LogisticObjective objective(Z, labels, weights, options.inverse_regularization);
  const Eigen::Index p = Z.cols() + 1;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  if (options.initial) {
    if (options.initial->size() != p) throw UsageError("logistic_fit: bad initial point size");
    theta = *options.initial;
  }

  LogisticModel model;
  model.inverse_regularization = options.inverse_regularization;
  model.class_weights = weights;
  double f = objective.value(theta);
  model.objective_trace.push_back(f);
  Eigen::VectorXd g = objective.gradient(theta);

  constexpr double kArmijo = 1e-4;
  constexpr int kMaxHalvings = 60;
  int iter = 0;
  while (g.lpNorm<Eigen::Infinity>() > options.tol && iter < options.max_iter) {
    Eigen::VectorXd direction;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(objective.hessian(theta));
    if (ldlt.info() == Eigen::Success) direction = -ldlt.solve(g);
    if (direction.size() != p || !direction.allFinite() || direction.dot(g) >= 0.0) {
      direction = -g;
    }
    const double slope = direction.dot(g);
    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h < kMaxHalvings; ++h, step *= 0.5) {
      const Eigen::VectorXd candidate = theta + step * direction;
      const double fc = objective.value(candidate);
      if (std::isfinite(fc) && fc <= f + kArmijo * step * slope) {
        theta = candidate;
        f = fc;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // no further decrease representable
    ++iter;
    model.objective_trace.push_back(f);
    g = objective.gradient(theta);
  }

  model.weights = theta.head(p - 1);
  model.bias = theta[p - 1];
  model.iterations = iter;
  model.objective = f;
  model.gradient_max_norm = g.lpNorm<Eigen::Infinity>();
  model.converged = model.gradient_max_norm <= options.tol;
  if (!theta.allFinite()) throw NumericalError("logistic_fit: parameters diverged");
  return model;
}

Eigen::MatrixXd to_matrix(const FeatureMatrix& X) {
  Eigen::MatrixXd out(X.rows, X.cols);
  for (std::uint32_t i = 0; i < X.rows; ++i) {
    for (std::uint32_t j = 0; j < X.cols; ++j) out(i, j) = X.at(i, j);
  }
  return out;
}

std::vector<double> ProbeModel::predict(const Eigen::MatrixXd& X) const {
  const Eigen::VectorXd p = logistic.predict_proba(pca_transform(pca, X));
  return {p.data(), p.data() + p.size()};
}

std::vector<double> ProbeModel::predict(const FeatureMatrix& X) const {
  if (!(X.spec == spec)) {
    throw UsageError("probe expects features " + spec.tag() + " but got " + X.spec.tag());
  }
  if (X.cols != pca.input_dims()) {
    throw UsageError("probe expects " + std::to_string(pca.input_dims()) + " columns, got " +
                     std::to_string(X.cols));
  }
  return predict(to_matrix(X));
}

ProbeModel probe_fit(const FeatureMatrix& train, std::span<const int> labels,
                     const ProbeOptions& options) {
  if (train.rows != labels.size()) {
    throw UsageError("probe_fit: " + std::to_string(train.rows) + " rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  balanced_class_weights(labels);  // single-class check before the PCA work
  const Eigen::MatrixXd X = to_matrix(train);
  ProbeModel model;
  model.spec = train.spec;
  model.info = options.info;
  model.pca = pca_fit(X, options.pca_dims);
  model.logistic = logistic_fit(pca_transform(model.pca, X), labels, options.logistic);
  return model;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr const char* kProbeTextHeader = "lapeig-probe";
constexpr int kProbeTextVersion = 1;

std::string hex_doubles(const double* values, std::size_t n) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(n * 16);
  for (std::size_t i = 0; i < n; ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) {
      const auto byte = static_cast<unsigned>((bits >> (8 * b)) & 0xFF);
      out.push_back(kDigits[byte >> 4]);
      out.push_back(kDigits[byte & 0xF]);
    }
  }
  return out;
}

std::vector<double> parse_hex_doubles(const std::string& text) {
  if (text.size() % 16 != 0) throw FormatError("probe: hex array length not a multiple of 16");
  auto nibble = [](char c) -> unsigned {
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
    throw FormatError("probe: invalid hex digit");
  };
  std::vector<double> out(text.size() / 16);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      const std::size_t at = i * 16 + static_cast<std::size_t>(2 * b);
      const std::uint64_t byte = (nibble(text[at]) << 4) | nibble(text[at + 1]);
      bits |= byte << (8 * b);
    }
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

std::string hex_vector(const Eigen::VectorXd& v) {
  return hex_doubles(v.data(), static_cast<std::size_t>(v.size()));
}

std::string hex_scalar(double v) { return hex_doubles(&v, 1); }

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void write_probe_text(const ProbeModel& m, std::ostream& out) {
  const auto c = m.pca.output_dims();
  out << kProbeTextHeader << ' ' << kProbeTextVersion << '\n';
  out << "kind " << to_string(m.spec.kind) << '\n';
  out << "k " << (m.spec.k ? std::to_string(*m.spec.k) : std::string("-")) << '\n';
  out << "layers " << m.spec.layers.str() << '\n';
  out << "input_dims " << m.pca.input_dims() << '\n';
  out << "components " << c << '\n';
  out << "seed " << m.info.seed << '\n';
  out << "dataset " << (m.info.dataset.empty() ? std::string("-") : m.info.dataset) << '\n';
  out << "iterations " << m.logistic.iterations << '\n';
  out << "converged " << (m.logistic.converged ? 1 : 0) << '\n';
  out << "inverse_regularization " << hex_scalar(m.logistic.inverse_regularization) << '\n';
  out << "class_weights "
      << hex_scalar(m.logistic.class_weights.hallucination) +
             hex_scalar(m.logistic.class_weights.non_hallucination)
      << '\n';
  out << "objective " << hex_scalar(m.logistic.objective) << '\n';
  out << "bias " << hex_scalar(m.logistic.bias) << '\n';
  out << "weights " << hex_vector(m.logistic.weights) << '\n';
  out << "mean " << hex_vector(m.pca.mean) << '\n';
  out << "explained_variance " << hex_vector(m.pca.explained_variance) << '\n';
  for (std::size_t i = 0; i < c; ++i) {
    const Eigen::VectorXd row = m.pca.components.row(static_cast<Eigen::Index>(i)).transpose();
    out << "component " << hex_vector(row) << '\n';
  }
  out << "end\n";
  if (!out) throw DataError("probe: write failure");
}

ProbeModel read_probe_text(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("probe: empty document");
  {
    std::istringstream head(line);
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != kProbeTextHeader) throw FormatError("probe: not a probe document");
    if (version != kProbeTextVersion) {
      throw FormatError("probe: unsupported version " + std::to_string(version));
    }
  }
  std::map<std::string, std::string> fields;
  std::vector<std::vector<double>> components;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    const auto space = line.find(' ');
    if (space == std::string::npos) throw FormatError("probe: malformed line '" + line + "'");
    const std::string key = line.substr(0, space);
    const std::string value = line.substr(space + 1);
    if (key == "component") {
      components.push_back(parse_hex_doubles(value));
    } else {
      fields[key] = value;
    }
  }
  if (!ended) throw FormatError("probe: missing end marker");
  auto field = [&](const std::string& key) -> const std::string& {
    const auto it = fields.find(key);
    if (it == fields.end()) throw FormatError("probe: missing field '" + key + "'");
    return it->second;
  };
  auto scalar = [&](const std::string& key) {
    const auto v = parse_hex_doubles(field(key));
    if (v.size() != 1) throw FormatError("probe: field '" + key + "' must hold one value");
    return v[0];
  };

  ProbeModel m;
  m.spec.kind = parse_feature_kind(field("kind"));
  if (field("k") != "-") m.spec.k = static_cast<std::uint32_t>(std::stoul(field("k")));
  m.spec.layers = LayerSelection::parse(field("layers"));
  const std::size_t d = std::stoul(field("input_dims"));
  const std::size_t c = std::stoul(field("components"));
  m.info.seed = std::stoull(field("seed"));
  m.info.dataset = field("dataset") == "-" ? std::string{} : field("dataset");
  m.logistic.iterations = std::stoi(field("iterations"));
  m.logistic.converged = field("converged") == "1";
  m.logistic.inverse_regularization = scalar("inverse_regularization");
  const auto cw = parse_hex_doubles(field("class_weights"));
  if (cw.size() != 2) throw FormatError("probe: class_weights must hold two values");
  m.logistic.class_weights = {cw[0], cw[1]};
  m.logistic.objective = scalar("objective");
  m.logistic.bias = scalar("bias");
  m.logistic.weights = to_vector(parse_hex_doubles(field("weights")));
  m.pca.mean = to_vector(parse_hex_doubles(field("mean")));
  m.pca.explained_variance = to_vector(parse_hex_doubles(field("explained_variance")));
  if (components.size() != c || static_cast<std::size_t>(m.logistic.weights.size()) != c ||
      static_cast<std::size_t>(m.pca.mean.size()) != d) {
    throw FormatError("probe: array sizes disagree with declared dimensions");
  }
  m.pca.components.resize(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < c; ++i) {
    if (components[i].size() != d) throw FormatError("probe: component length mismatch");
    m.pca.components.row(static_cast<Eigen::Index>(i)) = to_vector(components[i]).transpose();
  }
  return m;
}

// Binary layout, (C + 2) x W floats with W = max(D + 1, 4):
//   row 0      : mean[0..D), bias
//   row 1 + c  : component c [0..D), logistic weight c
//   row C + 1  : D, class weight (hallucination), class weight (non), inverse regularization
void write_probe_binary(const ProbeModel& m, std::ostream& out) {
  const auto d = m.pca.input_dims();
  const auto c = m.pca.output_dims();
  const std::size_t width = std::max<std::size_t>(d + 1, 4);
  std::vector<float> data((c + 2) * width, 0.0f);
  for (std::size_t j = 0; j < d; ++j) data[j] = static_cast<float>(m.pca.mean[static_cast<Eigen::Index>(j)]);
  data[d] = static_cast<float>(m.logistic.bias);
  for (std::size_t i = 0; i < c; ++i) {
    float* row = data.data() + (i + 1) * width;
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = static_cast<float>(m.pca.components(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    row[d] = static_cast<float>(m.logistic.weights[static_cast<Eigen::Index>(i)]);
  }
  float* tail = data.data() + (c + 1) * width;
  tail[0] = static_cast<float>(d);
  tail[1] = static_cast<float>(m.logistic.class_weights.hallucination);
  tail[2] = static_cast<float>(m.logistic.class_weights.non_hallucination);
  tail[3] = static_cast<float>(m.logistic.inverse_regularization);

  FeatHeader h;
  h.rows = static_cast<std::uint32_t>(c + 2);
  h.cols = static_cast<std::uint32_t>(width);
  h.kind_tag = static_cast<std::uint16_t>(static_cast<std::uint16_t>(m.spec.kind) | kFeatProbePayloadBit);
  h.k = m.spec.k.value_or(0);
  h.layer_selection = m.spec.layers.is_all() ? -1 : static_cast<std::int32_t>(*m.spec.layers.layer);
  write_feat(out, h, data);
}

ProbeModel read_probe_binary(std::istream& in) {
  std::vector<float> data;
  const FeatHeader h = read_feat(in, data);
  if (!(h.kind_tag & kFeatProbePayloadBit)) throw FormatError("FEAT container holds no probe model");
  if (h.rows < 2 || h.cols < 4) throw FormatError("probe binary: container too small");
  const std::size_t width = h.cols;
  const std::size_t c = h.rows - 2;
  const float* tail = data.data() + (c + 1) * width;
  const auto d = static_cast<std::size_t>(tail[0]);
  if (d + 1 > width || d == 0) throw FormatError("probe binary: bad input dimension");

  ProbeModel m;
  const auto kind = static_cast<std::uint16_t>(h.kind_tag & ~kFeatProbePayloadBit);
  if (kind < 1 || kind > 4) throw FormatError("probe binary: unknown feature kind");
  m.spec.kind = static_cast<FeatureKind>(kind);
  if (h.k != 0) m.spec.k = h.k;
  if (h.layer_selection >= 0) m.spec.layers = LayerSelection::single(static_cast<std::uint32_t>(h.layer_selection));
  const auto ci = static_cast<Eigen::Index>(c);
  const auto di = static_cast<Eigen::Index>(d);
  m.pca.mean.resize(di);
  m.pca.components.resize(ci, di);
  m.pca.explained_variance = Eigen::VectorXd::Zero(ci);
  m.logistic.weights.resize(ci);
  for (std::size_t j = 0; j < d; ++j) m.pca.mean[static_cast<Eigen::Index>(j)] = data[j];
  m.logistic.bias = data[d];
  for (std::size_t i = 0; i < c; ++i) {
    const float* row = data.data() + (i + 1) * width;
    for (std::size_t j = 0; j < d; ++j) m.pca.components(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    m.logistic.weights[static_cast<Eigen::Index>(i)] = row[d];
  }
  m.logistic.class_weights = {tail[1], tail[2]};
  m.logistic.inverse_regularization = tail[3];
  m.logistic.converged = true;
  return m;
}

void save_probe(const ProbeModel& model, const std::filesystem::path& path, bool binary) {
  std::ofstream out(path, binary ? (std::ios::binary | std::ios::trunc) : std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  if (binary) {
    write_probe_binary(model, out);
  } else {
    write_probe_text(model, out);
  }
}

ProbeModel load_probe(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  in.clear();
  in.seekg(0);
  if (std::equal(magic, magic + 4, kFeatMagic)) return read_probe_binary(in);
  return read_probe_text(in);
}

}  // namespace lapeig
