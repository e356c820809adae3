#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cvxattn/cvxattn.hpp"

namespace py = pybind11;
using namespace cvxattn;
using namespace py::literals;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Mat to_mat(const Array& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
    const auto rows = static_cast<std::size_t>(a.shape(0));
    const auto cols = static_cast<std::size_t>(a.shape(1));
    return Mat(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

std::vector<double> to_vec(const Array& a) {
    if (a.ndim() != 1) throw std::invalid_argument("expected a 1-D array");
    return std::vector<double>(a.data(), a.data() + a.shape(0));
}

Array from_mat(const Mat& m) {
    Array out({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

Array from_vec(const std::vector<double>& v) {
    Array out(v.size());
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::dict report_dict(const TrainReport& r) {
    py::list epochs;
    for (const auto& e : r.epochs)
        epochs.append(py::dict("epoch"_a = e.epoch, "loss"_a = e.loss, "train_accuracy"_a = e.train_accuracy,
                               "nuclear_norm"_a = e.nuclear_norm));
    return py::dict("epochs"_a = epochs, "final_nuclear_norm"_a = r.final_nuclear_norm,
                    "epochs_to_convergence"_a = r.epochs_to_convergence, "wall_seconds"_a = r.wall_seconds);
}

Precision precision_from_bits(int bits) {
    if (bits == 32) return Precision::f32;
    if (bits == 64) return Precision::f64;
    throw std::invalid_argument("precision must be 32 or 64");
}

}  // namespace

PYBIND11_MODULE(_cvxattn, m) {
    m.doc() = "Convexified attention gesture classifier";

    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

    m.def("simplex_project", [](const Array& s) { return from_vec(simplex_project(to_vec(s))); }, "s"_a);
    m.def("squared_distance_to_simplex", [](const Array& s) { return squared_distance_to_simplex(to_vec(s)); },
          "s"_a);
    m.def("softmax_ref", [](const Array& s) { return from_vec(softmax_ref(to_vec(s))); }, "s"_a);
    m.def("nuclear_ball_project", [](const Array& a, double r) { return from_mat(nuclear_ball_project(to_mat(a), r)); },
          "a"_a, "radius"_a);
    m.def("nuclear_norm", [](const Array& a) { return nuclear_norm(to_mat(a)); }, "a"_a);
    m.def("singular_values", [](const Array& a) { return from_vec(svd_thin(to_mat(a)).sigma); }, "a"_a);

    py::class_<SynthConfig>(m, "SynthConfig")
        .def(py::init<>())
        .def_property(
            "kind", [](const SynthConfig& c) { return std::string(to_string(c.kind)); },
            [](SynthConfig& c, const std::string& k) { c.kind = gesture_kind_from_string(k); })
        .def_readwrite("samples_per_class", &SynthConfig::samples_per_class)
        .def_readwrite("noise_stddev", &SynthConfig::noise_stddev)
        .def_readwrite("amplitude", &SynthConfig::amplitude)
        .def_readwrite("drift_rate", &SynthConfig::drift_rate)
        .def_readwrite("seed", &SynthConfig::seed)
        .def_readwrite("frames", &SynthConfig::frames)
        .def_readwrite("differential_channels", &SynthConfig::differential_channels)
        .def_readwrite("quantize_12bit", &SynthConfig::quantize_12bit);

    py::class_<Dataset>(m, "Dataset")
        .def("__len__", &Dataset::size)
        .def_readonly("class_names", &Dataset::class_names)
        .def_readonly("channels", &Dataset::channels)
        .def_readonly("frames", &Dataset::frames)
        .def_readonly("pipeline", &Dataset::pipeline)
        .def_property_readonly("labels",
                               [](const Dataset& d) {
                                   py::array_t<std::int64_t> out(d.size());
                                   for (std::size_t i = 0; i < d.size(); ++i)
                                       out.mutable_at(i) = static_cast<std::int64_t>(d.samples[i].label);
                                   return out;
                               })
        .def("sample", [](const Dataset& d, std::size_t i) { return from_mat(d.samples.at(i).x); }, "index"_a)
        .def("subset", &Dataset::subset, "indices"_a);

    m.def("synth_generate", &synth_generate, "config"_a);
    m.def("load_csv", &load_csv, "path"_a);
    m.def("save_csv", &save_csv, "data"_a, "path"_a);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("radius", &TrainConfig::radius)
        .def_readwrite("m", &TrainConfig::m)
        .def_readwrite("gamma", &TrainConfig::gamma)
        .def_readwrite("eta", &TrainConfig::eta)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("batches_per_epoch", &TrainConfig::batches_per_epoch)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("classes", &TrainConfig::classes)
        .def_property(
            "loss", [](const TrainConfig& c) { return std::string(to_string(c.loss)); },
            [](TrainConfig& c, const std::string& l) { c.loss = loss_kind_from_string(l); });
    m.def("preset", &preset, "name"_a);
    m.def("preset_names", &preset_names);

    py::class_<ModelBundle>(m, "Model")
        .def_readonly("classes", &ModelBundle::classes)
        .def_readonly("trained_epochs", &ModelBundle::trained_epochs)
        .def_property_readonly("weights", [](const ModelBundle& b) { return from_mat(b.weights.as_matrix()); })
        .def_property_readonly("param_count",
                               [](const ModelBundle& b) {
                                   const auto c = param_count(b);
                                   return py::dict("trainable"_a = c.trainable, "fixed"_a = c.fixed,
                                                   "total"_a = c.total());
                               })
        .def(
            "predict",
            [](const ModelBundle& b, const Array& x) {
                const auto p = predict(to_mat(x), b);
                return py::make_tuple(p.label, from_vec(p.scores));
            },
            "x"_a)
        .def(
            "to_bytes",
            [](const ModelBundle& b, int bits) {
                const auto bytes = serialize(b, precision_from_bits(bits));
                return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
            },
            "precision"_a = 64)
        .def_static(
            "from_bytes",
            [](const py::bytes& data) {
                const std::string s = data;
                return deserialize(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
            },
            "data"_a)
        .def(
            "save", [](const ModelBundle& b, const std::string& path, int bits) {
                save_bundle(b, path, precision_from_bits(bits));
            },
            "path"_a, "precision"_a = 64)
        .def_static("load", &load_bundle, "path"_a);

    m.def(
        "train",
        [](const Dataset& d, const TrainConfig& c) {
            py::gil_scoped_release release;
            TrainResult r = train(d, c);
            py::gil_scoped_acquire acquire;
            return py::make_tuple(std::move(r.bundle), report_dict(r.report));
        },
        "data"_a, "config"_a);

    m.def(
        "evaluate",
        [](const ModelBundle& b, const Dataset& d) {
            const Confusion c = evaluate(b, d);
            return py::dict("accuracy"_a = c.accuracy(), "macro_f1"_a = macro_f1(c));
        },
        "model"_a, "data"_a);

    m.def(
        "kfold_evaluate",
        [](const Dataset& d, const TrainConfig& c, std::size_t folds, std::size_t jobs) {
            KFoldReport r;
            {
                py::gil_scoped_release release;
                r = kfold_evaluate(d, c, folds, jobs);
            }
            py::list per_fold;
            for (const auto& f : r.folds) per_fold.append(f.accuracy);
            return py::dict("fold_accuracy"_a = per_fold, "mean_accuracy"_a = r.mean_accuracy,
                            "std_accuracy"_a = r.std_accuracy, "mean_f1"_a = r.mean_f1, "std_f1"_a = r.std_f1);
        },
        "data"_a, "config"_a, "folds"_a = 10, "jobs"_a = 1);

    m.def(
        "convexity_check",
        [](const ModelBundle& b, const Dataset& d, const std::string& loss, std::size_t trials, double noise,
           std::uint64_t seed) {
            RngStream rng(seed);
            const auto r = convexity_check(b, d, loss_kind_from_string(loss), trials, noise, rng);
            return py::dict("trials"_a = r.trials, "satisfied"_a = r.satisfied, "mean_violation"_a = r.mean_violation,
                            "max_violation"_a = r.max_violation, "passed"_a = r.passed());
        },
        "model"_a, "data"_a, "loss"_a = "hinge", "trials"_a = 100, "noise"_a = 0.1, "seed"_a = 0);

    m.def("softmax_counterexample", [] {
        const auto c = softmax_counterexample();
        return py::dict("at_midpoint"_a = c.at_midpoint, "interpolated"_a = c.interpolated,
                        "jensen_violated"_a = c.jensen_violated, "passed"_a = c.passed());
    });
}
