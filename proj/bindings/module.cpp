// Python surface over the core toolkit: preprocessing, model training,
// attack generation, the two-layer detector, metrics, and the synthetic
// experiment harness.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nids/attacks.hpp"
#include "nids/checksum.hpp"
#include "nids/defense.hpp"
#include "nids/eval.hpp"
#include "nids/numerics.hpp"
#include "nids/preprocess.hpp"
#include "nids/synth.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace nids;

namespace {

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-D float array");
    Matrix m(static_cast<std::size_t>(arr.shape(0)), static_cast<std::size_t>(arr.shape(1)));
    std::copy(arr.data(), arr.data() + arr.size(), m.values().begin());
    return m;
}

py::array_t<double> from_matrix(const Matrix& m) {
    py::array_t<double> arr({m.rows(), m.cols()});
    std::copy(m.values().begin(), m.values().end(), arr.mutable_data());
    return arr;
}

std::vector<int> to_labels(const py::array_t<long, py::array::c_style | py::array::forcecast>& y) {
    std::vector<int> labels(static_cast<std::size_t>(y.size()));
    for (py::ssize_t i = 0; i < y.size(); ++i) {
        labels[static_cast<std::size_t>(i)] = static_cast<int>(y.data()[i]);
    }
    return labels;
}

LabeledDataset to_dataset(const py::array_t<double>& X, const py::array_t<long>& y) {
    LabeledDataset d;
    d.features = to_matrix(X);
    d.labels = to_labels(y);
    if (d.features.rows() != d.labels.size()) {
        throw std::invalid_argument("feature and label row counts differ");
    }
    return d;
}

ClassifierSpec spec_from(const std::string& algorithm, const py::dict& params) {
    ClassifierSpec spec = ClassifierSpec::defaults(algorithm_from_name(algorithm));
    for (const auto& item : params) {
        spec.params[py::cast<std::string>(item.first)] = py::cast<double>(item.second);
    }
    return spec;
}

py::dict metrics_dict(const MetricSet& m) {
    py::dict d;
    d["precision_malicious"] = m.precision_malicious;
    d["recall_malicious"] = m.recall_malicious;
    d["f1_malicious"] = m.f1_malicious;
    d["precision_benign"] = m.precision_benign;
    d["recall_benign"] = m.recall_benign;
    d["f1_benign"] = m.f1_benign;
    d["precision_macro"] = m.precision_macro;
    d["recall_macro"] = m.recall_macro;
    d["f1_macro"] = m.f1_macro;
    d["accuracy"] = m.accuracy;
    d["detection_rate"] = m.detection_rate;
    d["zero_denominator"] = m.zero_denominator;
    py::dict cm;
    cm["tp"] = m.cm.tp;
    cm["fp"] = m.cm.fp;
    cm["tn"] = m.cm.tn;
    cm["fn"] = m.cm.fn;
    d["confusion"] = cm;
    return d;
}

struct PyModel {
    ModelPtr model;

    std::string algorithm() const { return algorithm_name(model->algorithm()); }
    std::size_t input_dim() const { return model->input_dim(); }

    py::array_t<double> predict_proba(const py::array_t<double>& X) const {
        const Matrix m = to_matrix(X);
        const auto probs = predict_proba_batch(*model, m);
        py::array_t<double> out(static_cast<py::ssize_t>(probs.size()));
        std::copy(probs.begin(), probs.end(), out.mutable_data());
        return out;
    }

    py::array_t<long> predict(const py::array_t<double>& X) const {
        const Matrix m = to_matrix(X);
        const auto preds = predict_batch(*model, m);
        py::array_t<long> out(static_cast<py::ssize_t>(preds.size()));
        for (std::size_t i = 0; i < preds.size(); ++i) {
            out.mutable_data()[i] = preds[i];
        }
        return out;
    }
};

struct PyPipeline {
    FittedPipeline pipe;

    static PyPipeline fit_csv(const std::string& csv, const std::string& schema_path) {
        const FeatureSchema schema = FeatureSchema::load(schema_path);
        return {FittedPipeline::fit(load_dataset(csv, schema))};
    }

    py::tuple transform_csv(const std::string& csv) const {
        const LabeledDataset d = pipe.transform(load_dataset(csv, pipe.schema()));
        py::array_t<long> y(static_cast<py::ssize_t>(d.labels.size()));
        for (std::size_t i = 0; i < d.labels.size(); ++i) y.mutable_data()[i] = d.labels[i];
        return py::make_tuple(from_matrix(d.features), y);
    }

    std::vector<bool> mutable_mask() const { return mutable_mask_from_schema(pipe.schema()); }
    std::string checksum() const { return pipe.checksum(); }
    std::size_t feature_count() const { return pipe.feature_count(); }
};

HarnessConfig desk_config(std::uint64_t seed, std::size_t gan_epochs, std::size_t ae_epochs,
                          std::size_t rf_trees, std::size_t mlp_epochs) {
    HarnessConfig cfg;
    cfg.seed = seed;
    cfg.gan.epochs = gan_epochs;
    cfg.ae.epochs = ae_epochs;
    cfg.ae.bottleneck_outer = 32;
    cfg.ae.bottleneck_inner = 16;
    for (Algorithm a : kStackingBases) {
        ClassifierSpec s = ClassifierSpec::defaults(a);
        if (a == Algorithm::RF) s = s.with("trees", static_cast<double>(rf_trees));
        if (a == Algorithm::MLP) s = s.with("epochs", static_cast<double>(mlp_epochs));
        cfg.stacking.base_specs.push_back(s);
    }
    return cfg;
}

HarnessInputs synth_inputs(std::size_t train_rows, std::size_t test_rows, std::uint64_t seed,
                           FittedPipeline& pipe_storage) {
    SynthConfig sc;
    sc.rows = train_rows;
    sc.seed = seed;
    const RawDataset raw_train = synth_raw(sc);
    sc.rows = test_rows;
    sc.seed = seed + 0x7e57u;
    const RawDataset raw_test = synth_raw(sc);

    pipe_storage = FittedPipeline::fit(raw_train);
    HarnessInputs in;
    in.train = pipe_storage.transform(raw_train);
    in.test = pipe_storage.transform(raw_test);
    in.pipe = &pipe_storage;
    in.split_note = "synthetic";
    return in;
}

py::object report_to_py(const EvalReport& report) {
    const std::string dumped = report.to_json().dump();
    py::module_ json_mod = py::module_::import("json");
    return json_mod.attr("loads")(dumped);
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "adversarial robustness toolkit for flow-based intrusion detection";

    m.def("percentile",
          [](const std::vector<double>& values, double p) { return percentile(values, p); },
          py::arg("values"), py::arg("p"),
          "Linear-interpolation percentile, p in [0, 1].");

    m.def("bce", &bce_loss, py::arg("y"), py::arg("p"),
          "Binary cross entropy with epsilon-clamped probability.");

    m.def("majority_vote", &majority_vote, py::arg("c1"), py::arg("c2"), py::arg("c3"),
          py::arg("d"), "Majority over four binary votes; a 2-2 tie is malicious.");

    m.def("checksum", &fnv1a64_hex, py::arg("text"), "Stable 64-bit content checksum (hex).");

    m.def("synth_csv",
          [](const std::string& path, std::size_t rows, double malicious_fraction,
             double separation, double missing_rate, std::uint64_t seed) {
              SynthConfig cfg;
              cfg.rows = rows;
              cfg.malicious_fraction = malicious_fraction;
              cfg.separation = separation;
              cfg.missing_rate = missing_rate;
              cfg.seed = seed;
              synth_csv(cfg, path);
          },
          py::arg("path"), py::arg("rows") = 1000, py::arg("malicious_fraction") = 0.4,
          py::arg("separation") = 2.0, py::arg("missing_rate") = 0.0, py::arg("seed") = 1,
          "Write a schema-compatible synthetic flow CSV.");

    m.def("synth_schema_path",
          [](const std::string& path) { synth_schema().save(path); },
          py::arg("path"), "Write the synthetic dataset's schema file.");

    py::class_<PyPipeline>(m, "Pipeline")
        .def_static("fit", &PyPipeline::fit_csv, py::arg("train_csv"), py::arg("schema"))
        .def("transform", &PyPipeline::transform_csv, py::arg("csv"),
             "Returns (features, labels) as numpy arrays.")
        .def("mutable_mask", &PyPipeline::mutable_mask)
        .def("checksum", &PyPipeline::checksum)
        .def_property_readonly("feature_count", &PyPipeline::feature_count);

    py::class_<PyModel>(m, "Model")
        .def_property_readonly("algorithm", &PyModel::algorithm)
        .def_property_readonly("input_dim", &PyModel::input_dim)
        .def("predict_proba", &PyModel::predict_proba, py::arg("X"))
        .def("predict", &PyModel::predict, py::arg("X"));

    m.def("train_model",
          [](const std::string& algorithm, const py::array_t<double>& X,
             const py::array_t<long>& y, std::uint64_t seed, const py::dict& params) {
              RngStream rng(seed);
              return PyModel{train_classifier(spec_from(algorithm, params), to_dataset(X, y),
                                              rng)};
          },
          py::arg("algorithm"), py::arg("X"), py::arg("y"), py::arg("seed") = 1,
          py::arg("params") = py::dict(),
          "Train one classifier (DT, RF, BGG, GB, KNN, LDA, LR, MLP).");

    m.def("fgsm",
          [](const PyModel& model, const py::array_t<double>& X, double eps,
             const std::vector<bool>& mutable_mask) {
              const Matrix src = to_matrix(X);
              const MlpNetwork& net = mlp_network_of(*model.model);
              Matrix out(src.rows(), src.cols());
              for (std::size_t i = 0; i < src.rows(); ++i) {
                  const auto adv = fgsm_generate(net, src.row(i), 1, eps, mutable_mask);
                  for (std::size_t j = 0; j < src.cols(); ++j) out.at(i, j) = adv[j];
              }
              return from_matrix(out);
          },
          py::arg("model"), py::arg("X"), py::arg("eps"), py::arg("mutable_mask"),
          "Gradient-sign perturbation of malicious rows against an MLP model.");

    m.def("metrics",
          [](const py::array_t<long>& preds, const py::array_t<long>& labels) {
              return metrics_dict(compute_metrics(to_labels(preds), to_labels(labels)));
          },
          py::arg("preds"), py::arg("labels"),
          "Per-class and macro-averaged percentage metrics.");

    m.def("significance_test",
          [](const std::vector<double>& a, const std::vector<double>& b) {
              return significance_test(a, b);
          },
          py::arg("a"), py::arg("b"),
          "Two-sided paired sign-flip permutation test p-value.");

    m.def("run_experiment_synth",
          [](std::size_t train_rows, std::size_t test_rows, std::uint64_t seed,
             std::size_t gan_epochs, std::size_t ae_epochs, std::size_t rf_trees,
             std::size_t mlp_epochs) {
              FittedPipeline pipe;
              const HarnessInputs in = synth_inputs(train_rows, test_rows, seed, pipe);
              const HarnessConfig cfg =
                  desk_config(seed, gan_epochs, ae_epochs, rf_trees, mlp_epochs);
              return report_to_py(run_experiment(in, cfg));
          },
          py::arg("train_rows") = 600, py::arg("test_rows") = 200, py::arg("seed") = 1,
          py::arg("gan_epochs") = 20, py::arg("ae_epochs") = 15, py::arg("rf_trees") = 10,
          py::arg("mlp_epochs") = 5,
          "Four-condition experiment on synthetic data; returns the report as a dict.");

    m.def("run_ablation_synth",
          [](std::size_t train_rows, std::size_t test_rows, std::uint64_t seed,
             std::size_t gan_epochs, std::size_t ae_epochs, std::size_t rf_trees,
             std::size_t mlp_epochs) {
              FittedPipeline pipe;
              const HarnessInputs in = synth_inputs(train_rows, test_rows, seed, pipe);
              const HarnessConfig cfg =
                  desk_config(seed, gan_epochs, ae_epochs, rf_trees, mlp_epochs);
              return report_to_py(run_ablation(in, cfg));
          },
          py::arg("train_rows") = 600, py::arg("test_rows") = 200, py::arg("seed") = 1,
          py::arg("gan_epochs") = 20, py::arg("ae_epochs") = 15, py::arg("rf_trees") = 10,
          py::arg("mlp_epochs") = 5,
          "Component ablation on synthetic data; returns the report as a dict.");
}
