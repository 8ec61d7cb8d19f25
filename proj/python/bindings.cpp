// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "lapeig/dataset.hpp"
#include "lapeig/error.hpp"
#include "lapeig/feature_matrix.hpp"
#include "lapeig/interchange.hpp"
#include "lapeig/manifest.hpp"
#include "lapeig/metrics.hpp"
#include "lapeig/probe.hpp"
#include "lapeig/rng.hpp"
#include "lapeig/spectral.hpp"
#include "lapeig/stats.hpp"
#include "lapeig/synthetic.hpp"

namespace py = pybind11;
using namespace lapeig;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

std::span<const double> as_span(const DoubleArray& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-d array");
  return {a.data(), static_cast<std::size_t>(a.size())};
}

std::span<const int> as_span(const IntArray& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-d array");
  return {a.data(), static_cast<std::size_t>(a.size())};
}

/// Lower triangle of a dense (L, H, T, T) array, row-major packed.
AttentionStack stack_from_dense(const std::string& id, const FloatArray& dense) {
  if (dense.ndim() != 4 || dense.shape(2) != dense.shape(3)) {
    throw py::value_error("expected an array of shape (L, H, T, T)");
  }
  const auto L = static_cast<std::uint32_t>(dense.shape(0));
  const auto H = static_cast<std::uint32_t>(dense.shape(1));
  const auto T = static_cast<std::uint32_t>(dense.shape(2));
  AttentionStack stack(id, L, H, T);
  auto view = dense.unchecked<4>();
  for (std::uint32_t l = 0; l < L; ++l) {
    for (std::uint32_t h = 0; h < H; ++h) {
      auto head = stack.mutable_head(l, h);
      std::size_t idx = 0;
      for (std::uint32_t i = 0; i < T; ++i) {
        for (std::uint32_t j = 0; j <= i; ++j) head[idx++] = view(l, h, i, j);
      }
    }
  }
  return stack;
}

py::array_t<float> stack_to_dense(const AttentionStack& stack) {
  const std::size_t L = stack.num_layers, H = stack.num_heads, T = stack.num_tokens;
  py::array_t<float> out({L, H, T, T});
  auto view = out.mutable_unchecked<4>();
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t h = 0; h < H; ++h) {
      const auto head = stack.head(static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(h));
      for (std::size_t i = 0; i < T; ++i) {
        for (std::size_t j = 0; j < T; ++j) {
          view(l, h, i, j) =
              j <= i ? head(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)) : 0.0f;
        }
      }
    }
  }
  return out;
}

AttentionStack single_head(const FloatArray& matrix) {
  if (matrix.ndim() != 2 || matrix.shape(0) != matrix.shape(1)) {
    throw py::value_error("expected a square (T, T) array");
  }
  const auto T = static_cast<std::uint32_t>(matrix.shape(0));
  AttentionStack stack("head", 1, 1, T);
  auto view = matrix.unchecked<2>();
  auto head = stack.mutable_head(0, 0);
  std::size_t idx = 0;
  for (std::uint32_t i = 0; i < T; ++i) {
    for (std::uint32_t j = 0; j <= i; ++j) head[idx++] = view(i, j);
  }
  return stack;
}

FeatureSpec make_spec(const std::string& kind, std::optional<std::uint32_t> k,
                      std::optional<std::uint32_t> layer) {
  FeatureSpec spec;
  spec.kind = parse_feature_kind(kind);
  if (uses_k(spec.kind)) {
    if (!k) throw UsageError("k is required for feature kind " + kind);
    spec.k = k;
  }
  if (layer) spec.layers = LayerSelection::single(*layer);
  return spec;
}

py::array_t<float> matrix_array(const FeatureMatrix& m) {
  py::array_t<float> out({static_cast<std::size_t>(m.rows), static_cast<std::size_t>(m.cols)});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

FeatureMatrix matrix_from_array(const FloatArray& X, const FeatureSpec& spec) {
  if (X.ndim() != 2) throw py::value_error("expected a 2-d feature array");
  FeatureMatrix m;
  m.spec = spec;
  m.rows = static_cast<std::uint32_t>(X.shape(0));
  m.cols = static_cast<std::uint32_t>(X.shape(1));
  m.data.assign(X.data(), X.data() + X.size());
  m.columns.assign(m.cols, ColumnInfo{});
  return m;
}

py::dict report_dict(const ValidationReport& r) {
  py::list rows;
  for (const auto& v : r.row_sums) rows.append(py::make_tuple(v.layer, v.head, v.row, v.sum));
  auto entries = [](const std::vector<EntryViolation>& list) {
    py::list out;
    for (const auto& v : list) out.append(py::make_tuple(v.layer, v.head, v.row, v.col, v.value));
    return out;
  };
  py::dict d;
  d["ok"] = r.ok();
  d["size_mismatch"] = r.size_mismatch;
  d["row_sums"] = rows;
  d["negative_entries"] = entries(r.negative_entries);
  d["non_finite_entries"] = entries(r.non_finite_entries);
  return d;
}

LabeledManifest manifest_from(const std::vector<std::string>& ids, const std::vector<int>& labels) {
  if (ids.size() != labels.size()) throw py::value_error("ids and labels differ in length");
  LabeledManifest m;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ManifestRecord r;
    r.example_id = ids[i];
    r.label = labels[i] == 1 ? Label::hallucination : Label::non_hallucination;
    m.add(r);
  }
  return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Attention-spectrum hallucination probe core";

  // Later registrations are tried first, so subclasses map before the base.
  auto& base_error = py::register_exception<Error>(m, "LapeigError");
  py::register_exception<UsageError>(m, "UsageError", base_error.ptr());
  py::register_exception<DataError>(m, "DataError", base_error.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base_error.ptr());

  py::class_<AttentionStack>(m, "AttentionStack")
      .def(py::init<std::string, std::uint32_t, std::uint32_t, std::uint32_t>(),
           py::arg("example_id"), py::arg("num_layers"), py::arg("num_heads"),
           py::arg("num_tokens"))
      .def_static("from_dense", &stack_from_dense, py::arg("example_id"), py::arg("attention"),
                  "Packs the lower triangle of an (L, H, T, T) array.")
      .def("dense", &stack_to_dense, "(L, H, T, T) float32 array, zeros above the diagonal.")
      .def_property_readonly("packed",
                             [](const AttentionStack& s) {
                               return py::array_t<float>(s.values.size(), s.values.data());
                             })
      .def_readwrite("example_id", &AttentionStack::example_id)
      .def_readonly("num_layers", &AttentionStack::num_layers)
      .def_readonly("num_heads", &AttentionStack::num_heads)
      .def_readonly("num_tokens", &AttentionStack::num_tokens)
      .def(py::self == py::self)
      .def("__repr__", [](const AttentionStack& s) {
        return "AttentionStack('" + s.example_id + "', L=" + std::to_string(s.num_layers) +
               ", H=" + std::to_string(s.num_heads) + ", T=" + std::to_string(s.num_tokens) + ")";
      });

  // Interchange.
  m.def("read_stack", &read_stack_file, py::arg("path"));
  m.def(
      "write_stack",
      [](const AttentionStack& s, const std::filesystem::path& path, bool validate,
         double tolerance) {
        WriteOptions options;
        options.validate = validate;
        options.row_tolerance = tolerance;
        write_stack_file(s, path, options);
      },
      py::arg("stack"), py::arg("path"), py::arg("validate") = false,
      py::arg("row_tolerance") = kIngestRowTolerance);
  m.def(
      "validate_stack",
      [](const AttentionStack& s, double tol) { return report_dict(validate_stack(s, tol)); },
      py::arg("stack"), py::arg("row_tolerance") = kIngestRowTolerance);
  m.def("list_stack_files", &list_stack_files, py::arg("directory"));

  // Spectral features.
  m.def(
      "laplacian_eigvals",
      [](const FloatArray& a) {
        const auto s = single_head(a);
        return laplacian_eigvals(s.head(0, 0));
      },
      py::arg("attention"), "Laplacian eigenvalues of one causal (T, T) attention head.");
  m.def(
      "attention_eigvals",
      [](const FloatArray& a) {
        const auto s = single_head(a);
        return attention_eigvals(s.head(0, 0));
      },
      py::arg("attention"));
  m.def(
      "attention_logdet",
      [](const FloatArray& a) {
        const auto s = single_head(a);
        return attention_logdet(s.head(0, 0));
      },
      py::arg("attention"));
  m.def(
      "compute_features",
      [](const AttentionStack& s, const std::string& kind, std::optional<std::uint32_t> k,
         std::optional<std::uint32_t> layer) {
        const auto v = compute_features(s, make_spec(kind, k, layer));
        return py::array_t<double>(v.values.size(), v.values.data());
      },
      py::arg("stack"), py::arg("kind"), py::arg("k") = py::none(), py::arg("layer") = py::none());
  m.def(
      "extract_features",
      [](const std::vector<AttentionStack>& stacks, const std::string& kind,
         std::optional<std::uint32_t> k, std::optional<std::uint32_t> layer, bool skip_short) {
        ExtractOptions options;
        options.skip_short = skip_short;
        const auto r = extract_features(stacks, make_spec(kind, k, layer), options);
        return py::make_tuple(matrix_array(r.matrix), r.matrix.row_ids, r.skipped);
      },
      py::arg("stacks"), py::arg("kind"), py::arg("k") = py::none(), py::arg("layer") = py::none(),
      py::arg("skip_short") = false,
      "Returns (features[N, D] float32, row ids sorted, skipped ids).");
  m.def(
      "read_feature_matrix",
      [](const std::filesystem::path& path) {
        const auto f = read_feature_matrix(path);
        py::list cols;
        for (const auto& c : f.columns) cols.append(py::make_tuple(c.layer, c.head, c.rank));
        return py::make_tuple(matrix_array(f), f.row_ids, cols, f.spec.tag());
      },
      py::arg("path"), "Returns (features, row ids, column provenance, spec tag).");

  // Metrics and statistics.
  m.def(
      "auroc", [](const DoubleArray& s, const IntArray& y) { return auroc(as_span(s), as_span(y)); },
      py::arg("scores"), py::arg("labels"));
  m.def(
      "precision_recall",
      [](const DoubleArray& s, const IntArray& y, double threshold) {
        const auto pr = precision_recall(as_span(s), as_span(y), threshold);
        py::dict d;
        d["precision"] = pr.precision;
        d["recall"] = pr.recall;
        d["precision_undefined"] = pr.precision_undefined;
        d["tp"] = pr.tp;
        d["fp"] = pr.fp;
        d["fn"] = pr.fn;
        d["tn"] = pr.tn;
        return d;
      },
      py::arg("scores"), py::arg("labels"), py::arg("threshold") = kDefaultThreshold);
  m.def(
      "roc_curve",
      [](const DoubleArray& s, const IntArray& y) {
        std::vector<std::tuple<double, double, double>> out;
        for (const auto& p : roc_curve(as_span(s), as_span(y))) out.emplace_back(p.threshold, p.fpr, p.tpr);
        return out;
      },
      py::arg("scores"), py::arg("labels"), "List of (threshold, fpr, tpr).");
  m.def(
      "mann_whitney_u",
      [](const DoubleArray& x, const DoubleArray& y, const std::string& alternative) {
        Alternative alt = Alternative::two_sided;
        if (alternative == "greater") {
          alt = Alternative::greater;
        } else if (alternative == "less") {
          alt = Alternative::less;
        } else if (alternative != "two-sided") {
          throw py::value_error("alternative must be 'two-sided', 'greater' or 'less'");
        }
        const auto r = mann_whitney_u(as_span(x), as_span(y), alt);
        return py::make_tuple(r.u1, r.u2, r.p);
      },
      py::arg("x"), py::arg("y"), py::arg("alternative") = "two-sided",
      "Returns (U1, U2, p) with the normal approximation.");
  m.def(
      "cohen_kappa",
      [](const IntArray& a, const IntArray& b) { return cohen_kappa(as_span(a), as_span(b)); },
      py::arg("a"), py::arg("b"));

  // Probe.
  m.def(
      "pca_fit",
      [](const Eigen::MatrixXd& X, std::size_t dims) {
        const auto p = pca_fit(X, dims);
        return py::make_tuple(p.mean, p.components, p.explained_variance);
      },
      py::arg("X"), py::arg("dims"), "Returns (mean, components[C, D], explained_variance).");

  py::class_<ProbeModel>(m, "Probe")
      .def_static(
          "fit",
          [](const FloatArray& X, const IntArray& y, std::size_t pca_dims, double C, int max_iter,
             const std::string& kind, std::optional<std::uint32_t> k) {
            ProbeOptions options;
            options.pca_dims = pca_dims;
            options.logistic.inverse_regularization = C;
            options.logistic.max_iter = max_iter;
            FeatureSpec spec;
            spec.kind = parse_feature_kind(kind);
            spec.k = k;
            return probe_fit(matrix_from_array(X, spec), as_span(y), options);
          },
          py::arg("X"), py::arg("labels"), py::arg("pca_dims") = kDefaultPcaDims,
          py::arg("C") = 1.0, py::arg("max_iter") = 2000, py::arg("kind") = "lap_eigvals",
          py::arg("k") = py::none())
      .def("predict_proba",
           [](const ProbeModel& p, const Eigen::MatrixXd& X) { return p.predict(X); },
           py::arg("X"))
      .def("save", &save_probe, py::arg("path"), py::arg("binary") = false)
      .def_static("load", &load_probe, py::arg("path"))
      .def_property_readonly("weights", [](const ProbeModel& p) { return p.logistic.weights; })
      .def_property_readonly("bias", [](const ProbeModel& p) { return p.logistic.bias; })
      .def_property_readonly("mean", [](const ProbeModel& p) { return p.pca.mean; })
      .def_property_readonly("components", [](const ProbeModel& p) { return p.pca.components; })
      .def_property_readonly("iterations", [](const ProbeModel& p) { return p.logistic.iterations; })
      .def_property_readonly("converged", [](const ProbeModel& p) { return p.logistic.converged; })
      .def_property_readonly("objective", [](const ProbeModel& p) { return p.logistic.objective; });

  // Dataset and synthetic data.
  m.def(
      "stratified_split",
      [](const std::vector<std::string>& ids, const std::vector<int>& labels, double train_fraction,
         std::uint64_t seed) {
        const auto plan = stratified_split(manifest_from(ids, labels), train_fraction, seed);
        return py::make_tuple(plan.train_ids, plan.test_ids);
      },
      py::arg("ids"), py::arg("labels"), py::arg("train_fraction") = kDefaultTrainFraction,
      py::arg("seed") = 42, "Returns (train ids, test ids).");
  m.def("gen_random_stack", &gen_random_stack, py::arg("seed"), py::arg("num_layers"),
        py::arg("num_heads"), py::arg("num_tokens"), py::arg("example_id") = "");
  m.def(
      "gen_planted_dataset",
      [](std::size_t n_per_class, std::uint64_t seed, double delta, std::uint32_t L,
         std::uint32_t H, std::uint32_t T, double base_concentration) {
        PlantedSpec spec;
        spec.delta = delta;
        spec.num_layers = L;
        spec.num_heads = H;
        spec.num_tokens = T;
        spec.base_concentration = base_concentration;
        auto d = gen_planted_dataset(spec, n_per_class, seed);
        std::vector<int> labels;
        for (const auto& s : d.stacks) labels.push_back(binary_label(d.manifest.at(s.example_id).label));
        return py::make_tuple(std::move(d.stacks), labels);
      },
      py::arg("n_per_class"), py::arg("seed"), py::arg("delta") = 0.1, py::arg("num_layers") = 4,
      py::arg("num_heads") = 4, py::arg("num_tokens") = 32, py::arg("base_concentration") = 1.0,
      "Returns (stacks, labels).");
  m.def("derive_seed", &derive_seed, py::arg("root"), py::arg("index"));
}
