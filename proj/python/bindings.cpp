#include "slummap/cca.hpp"
#include "slummap/ccf.hpp"
#include "slummap/experiment.hpp"
#include "slummap/raster.hpp"
#include "slummap/synthetic.hpp"
#include "slummap/texture.hpp"

#include <nlohmann/json.hpp>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>

namespace py = pybind11;
using namespace slummap;

namespace {

template <typename T>
using CArray = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <typename T>
py::array_t<T> to_array(const std::vector<T>& data, std::vector<py::ssize_t> shape) {
    py::array_t<T> out(shape);
    std::copy(data.begin(), data.end(), out.mutable_data());
    return out;
}

template <typename T>
std::vector<T> to_vector(const CArray<T>& a) {
    return std::vector<T>(a.data(), a.data() + a.size());
}

DataMatrix to_matrix(const CArray<double>& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
    DataMatrix m(a.shape(0), a.shape(1));
    std::copy(a.data(), a.data() + a.size(), m.data());
    return m;
}

py::array_t<double> from_matrix(const Eigen::MatrixXd& m) {
    py::array_t<double> out({m.rows(), m.cols()});
    auto view = out.mutable_unchecked<2>();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) view(r, c) = m(r, c);
    return out;
}

BandStack stack_from_array(const CArray<std::uint16_t>& samples, std::vector<std::string> band_names) {
    if (samples.ndim() != 3) throw std::invalid_argument("samples must have shape (bands, height, width)");
    return BandStack(static_cast<std::size_t>(samples.shape(2)), static_cast<std::size_t>(samples.shape(1)),
                     std::move(band_names), to_vector(samples));
}

LabelMask mask_from_array(const CArray<std::uint8_t>& labels, std::optional<CArray<std::uint8_t>> valid) {
    if (labels.ndim() != 2) throw std::invalid_argument("labels must have shape (height, width)");
    const auto h = static_cast<std::size_t>(labels.shape(0));
    const auto w = static_cast<std::size_t>(labels.shape(1));
    if (valid) return LabelMask(w, h, to_vector(labels), to_vector(*valid));
    return LabelMask(w, h, to_vector(labels));
}

GlcmParams make_glcm(int levels, int window, const std::vector<int>& directions, std::vector<std::string> bands,
                     const std::vector<std::string>& measures) {
    GlcmParams p;
    p.levels = levels;
    p.window = window;
    p.directions.clear();
    for (int d : directions) p.directions.push_back(parse_direction(std::to_string(d)));
    p.bands = std::move(bands);
    p.measures.clear();
    for (const auto& m : measures) p.measures.push_back(parse_measure(m));
    return p;
}

py::dict features_dict(const FeatureRaster& f) {
    py::dict out;
    out["names"] = f.feature_names;
    out["values"] = to_array(f.values, {static_cast<py::ssize_t>(f.feature_count()), static_cast<py::ssize_t>(f.height),
                                        static_cast<py::ssize_t>(f.width)});
    std::vector<bool> valid(f.valid.begin(), f.valid.end());
    py::array_t<bool> v({static_cast<py::ssize_t>(f.height), static_cast<py::ssize_t>(f.width)});
    std::copy(valid.begin(), valid.end(), v.mutable_data());
    out["valid"] = v;
    return out;
}

py::object optional_value(const std::optional<double>& v) {
    return v ? py::object(py::float_(*v)) : py::object(py::none());
}

py::dict metrics_dict(const MetricsReport& r) {
    py::dict out;
    out["acc_slum"] = optional_value(r.slum.accuracy);
    out["acc_non"] = optional_value(r.non_slum.accuracy);
    out["iou_slum"] = optional_value(r.slum.iou);
    out["iou_non"] = optional_value(r.non_slum.iou);
    out["miou"] = optional_value(r.mean_iou);
    out["confusion"] = r.confusion.counts;
    return out;
}

py::array_t<std::uint8_t> map_array(const LabelMask& m) {
    std::vector<std::uint8_t> grey(m.pixel_count());
    for (std::size_t p = 0; p < grey.size(); ++p)
        grey[p] = !m.valid()[p] ? kMapInvalid : (m.labels()[p] ? kMapSlum : kMapNonSlum);
    return to_array(grey, {static_cast<py::ssize_t>(m.height()), static_cast<py::ssize_t>(m.width())});
}

}  // namespace

PYBIND11_MODULE(_slummap, m) {
    m.doc() = "Texture features and canonical correlation forests for slum mapping";

    py::register_exception<RasterError>(m, "RasterError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<ModelError>(m, "ModelError", PyExc_ValueError);
    py::register_exception<DegenerateData>(m, "DegenerateData", PyExc_ValueError);
    py::register_exception<CcaDegenerate>(m, "CcaDegenerate", PyExc_ValueError);

    py::class_<BandStack>(m, "BandStack")
        .def(py::init(&stack_from_array), py::arg("samples"), py::arg("band_names"))
        .def_property_readonly("width", &BandStack::width)
        .def_property_readonly("height", &BandStack::height)
        .def_property_readonly("band_names", &BandStack::band_names)
        .def_property_readonly("samples", [](const BandStack& s) {
            return to_array(s.samples(), {static_cast<py::ssize_t>(s.band_count()), static_cast<py::ssize_t>(s.height()),
                                          static_cast<py::ssize_t>(s.width())});
        });

    py::class_<LabelMask>(m, "LabelMask")
        .def(py::init(&mask_from_array), py::arg("labels"), py::arg("valid") = py::none())
        .def_property_readonly("width", &LabelMask::width)
        .def_property_readonly("height", &LabelMask::height)
        .def_property_readonly("slum_fraction", &LabelMask::slum_fraction)
        .def_property_readonly("labels", [](const LabelMask& l) {
            return to_array(l.labels(), {static_cast<py::ssize_t>(l.height()), static_cast<py::ssize_t>(l.width())});
        })
        .def_property_readonly("valid", [](const LabelMask& l) {
            return to_array(l.valid(), {static_cast<py::ssize_t>(l.height()), static_cast<py::ssize_t>(l.width())});
        });

    m.def("load_band_stack", &load_band_stack, py::arg("header_path"));
    m.def("save_band_stack", &save_band_stack, py::arg("stack"), py::arg("header_path"));
    m.def("load_label_mask", &load_label_mask, py::arg("header_path"));
    m.def("save_label_mask", &save_label_mask, py::arg("mask"), py::arg("header_path"));
    m.def("save_prediction_map", &save_prediction_map, py::arg("mask"), py::arg("path"));

    m.def(
        "quantize",
        [](const CArray<std::uint16_t>& band, int levels) {
            std::vector<py::ssize_t> shape(band.shape(), band.shape() + band.ndim());
            return to_array(quantize({band.data(), static_cast<std::size_t>(band.size())}, levels), shape);
        },
        py::arg("band"), py::arg("levels"));

    m.def(
        "cooccurrence",
        [](const CArray<std::uint8_t>& window, int levels, int direction) {
            if (window.ndim() != 2) throw std::invalid_argument("window must be 2-D");
            GreyImage g{static_cast<std::size_t>(window.shape(1)), static_cast<std::size_t>(window.shape(0)), levels,
                        to_vector(window)};
            const auto mat = cooccurrence(g, parse_direction(std::to_string(direction)));
            return to_array(mat.values(), {levels, levels});
        },
        py::arg("window"), py::arg("levels"), py::arg("direction"));

    m.def(
        "haralick",
        [](const CArray<double>& matrix) {
            if (matrix.ndim() != 2 || matrix.shape(0) != matrix.shape(1))
                throw std::invalid_argument("matrix must be square");
            const auto h = haralick(CooccurrenceMatrix(static_cast<int>(matrix.shape(0)), to_vector(matrix)));
            py::dict out;
            for (Measure measure : kAllMeasures) out[measure_name(measure)] = h.get(measure);
            return out;
        },
        py::arg("matrix"));

    m.def(
        "extract_texture",
        [](const BandStack& stack, int levels, int window, const std::vector<int>& directions,
           const std::vector<std::string>& bands, const std::vector<std::string>& measures, unsigned jobs) {
            const auto params = make_glcm(levels, window, directions, bands, measures);
            FeatureRaster f;
            {
                py::gil_scoped_release release;
                f = extract_texture(stack, params, jobs);
            }
            return features_dict(f);
        },
        py::arg("stack"), py::arg("levels") = 32, py::arg("window") = 19,
        py::arg("directions") = std::vector<int>{0, 45, 90, 135},
        py::arg("bands") = std::vector<std::string>{"B2", "B3", "B4", "B8"},
        py::arg("measures") = std::vector<std::string>{"second_moment", "contrast", "correlation", "homogeneity",
                                                       "entropy", "mean", "variance"},
        py::arg("jobs") = 1);

    m.def("extract_spectral", [](const BandStack& stack) { return features_dict(extract_spectral(stack)); },
          py::arg("stack"));

    m.def(
        "cca_fit",
        [](const CArray<double>& x, const CArray<std::uint8_t>& labels) {
            const auto y = to_vector(labels);
            const auto result = cca_fit(to_matrix(x), one_hot(y));
            return py::make_tuple(from_matrix(result.projections), result.correlations);
        },
        py::arg("x"), py::arg("labels"));

    py::class_<CcfModel>(m, "CcfModel")
        .def_property_readonly("n_trees", [](const CcfModel& model) { return model.trees.size(); })
        .def_property_readonly("n_features", [](const CcfModel& model) { return model.n_features; })
        .def_property_readonly("feature_names", [](const CcfModel& model) { return model.feature_names; })
        .def("to_json", &serialize_model)
        .def_static("from_json", [](const std::string& text) { return model_from_json(nlohmann::json::parse(text)); })
        .def("save", [](const CcfModel& model, const std::filesystem::path& p) { save_model(model, p); })
        .def_static("load", &load_model);

    m.def(
        "train_forest",
        [](const CArray<double>& x, const CArray<std::uint8_t>& labels, std::size_t n_trees, std::uint64_t seed,
           std::size_t lambda, unsigned jobs) {
            CcfParams params;
            params.n_trees = n_trees;
            params.seed = seed;
            params.lambda = lambda;
            const DataMatrix data = to_matrix(x);
            const auto y = to_vector(labels);
            py::gil_scoped_release release;
            return train_forest(data, y, params, {}, jobs);
        },
        py::arg("x"), py::arg("labels"), py::arg("n_trees") = 10, py::arg("seed") = 0, py::arg("lambda_") = 0,
        py::arg("jobs") = 1);

    m.def(
        "predict",
        [](const CcfModel& model, const CArray<double>& x, unsigned jobs) {
            const DataMatrix data = to_matrix(x);
            Predictions p;
            {
                py::gil_scoped_release release;
                p = predict(model, data, jobs);
            }
            py::array_t<double> proba({static_cast<py::ssize_t>(p.probabilities.size()), py::ssize_t{2}});
            auto view = proba.mutable_unchecked<2>();
            for (std::size_t i = 0; i < p.probabilities.size(); ++i) {
                view(i, 0) = p.probabilities[i][0];
                view(i, 1) = p.probabilities[i][1];
            }
            return py::make_tuple(to_array(p.labels, {static_cast<py::ssize_t>(p.labels.size())}), proba);
        },
        py::arg("model"), py::arg("x"), py::arg("jobs") = 1);

    m.def(
        "evaluate",
        [](const CArray<std::uint8_t>& predicted, const CArray<std::uint8_t>& truth) {
            return metrics_dict(evaluate(to_vector(predicted), to_vector(truth)));
        },
        py::arg("predicted"), py::arg("truth"));

    m.def("format_percent", &format_percent, py::arg("value"));

    m.def(
        "run_experiment",
        [](const BandStack& stack, const LabelMask& mask, const std::string& technique, std::uint64_t seed,
           int levels, int window, std::size_t n_trees, double train_fraction, unsigned jobs,
           const std::string& location) {
            ExperimentParams params;
            params.technique = parse_technique(technique);
            params.master_seed = seed;
            params.glcm.levels = levels;
            params.glcm.window = window;
            params.forest.n_trees = n_trees;
            params.train_fraction = train_fraction;
            params.jobs = jobs;
            ExperimentResult r;
            {
                py::gil_scoped_release release;
                r = run_experiment(stack, mask, params, location);
            }
            py::dict out;
            out["test"] = metrics_dict(r.test_report);
            out["full_image"] = metrics_dict(r.full_image_report);
            out["map"] = map_array(r.prediction_map);
            out["model"] = r.model.forest;
            out["csv"] = metrics_csv({r}, false);
            return out;
        },
        py::arg("stack"), py::arg("mask"), py::arg("technique") = "glcm", py::arg("seed") = 0, py::arg("levels") = 32,
        py::arg("window") = 19, py::arg("n_trees") = 10, py::arg("train_fraction") = 0.8, py::arg("jobs") = 1,
        py::arg("location") = "scene");

    m.def(
        "make_two_texture_scene",
        [](std::size_t width, std::size_t height, std::uint64_t seed) {
            TwoTextureSpec spec;
            spec.width = width;
            spec.height = height;
            spec.seed = seed;
            if (width != 200 || height != 200) spec.slum_areas = {{height / 8, width / 8, height / 2, width / 2}};
            return make_two_texture_scene(spec);
        },
        py::arg("width") = 200, py::arg("height") = 200, py::arg("seed") = 7);
}
