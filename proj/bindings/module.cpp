#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "halfface/axis.hpp"
#include "halfface/eigen.hpp"
#include "halfface/harness.hpp"
#include "halfface/image_io.hpp"
#include "halfface/quality.hpp"
#include "halfface/stitch.hpp"

namespace py = pybind11;
using namespace halfface;

namespace {

GrayImage image_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2)
        throw py::value_error("expected a 2-D array");
    GrayImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + img.size(), img.data.begin());
    return img;
}

py::array_t<double> array_from_image(const GrayImage& img) {
    py::array_t<double> out({img.height, img.width});
    std::copy(img.data.begin(), img.data.end(), out.mutable_data());
    return out;
}

} // namespace

PYBIND11_MODULE(_halfface, m) {
    m.doc() = "Half-face mirror stitching and Eigenfaces recognition";

    py::register_exception<Error>(m, "HalffaceError");

    py::class_<SymmetryAxis>(m, "SymmetryAxis")
        .def_readonly("column", &SymmetryAxis::column)
        .def_readonly("confidence", &SymmetryAxis::confidence)
        .def_property_readonly("method", [](const SymmetryAxis& a) {
            return a.method == AxisMethod::cascade ? "cascade" : "mirror_search";
        });

    py::class_<StitchParams>(m, "StitchParams")
        .def(py::init<>())
        .def_readwrite("search_radius", &StitchParams::search_radius)
        .def_readwrite("band_width", &StitchParams::band_width)
        .def_readwrite("blend_levels", &StitchParams::blend_levels)
        .def_readwrite("feather_width", &StitchParams::feather_width);

    py::class_<EigenModel>(m, "EigenModel")
        .def_property_readonly("k", &EigenModel::k)
        .def_property_readonly("d", [](const EigenModel& m_) { return m_.d; })
        .def_property_readonly("size", [](const EigenModel& m_) { return m_.gallery.size(); })
        .def_property_readonly("eigenvalues",
                               [](const EigenModel& m_) { return m_.eigenvalues; })
        .def_property_readonly("mean_face", [](const EigenModel& m_) {
            GrayImage img(m_.width, m_.height);
            img.data = m_.mean;
            return array_from_image(img);
        });

    py::class_<RecognitionResult>(m, "RecognitionResult")
        .def_readonly("label", &RecognitionResult::label)
        .def_readonly("distance", &RecognitionResult::distance)
        .def_readonly("runner_up_distance", &RecognitionResult::runner_up_distance)
        .def_readonly("nearest_label", &RecognitionResult::nearest_label)
        .def_property_readonly("metric", [](const RecognitionResult& r) {
            return std::string(to_string(r.metric));
        });

    m.def("load_image", [](const std::string& p) { return array_from_image(load_image(p)); });
    m.def("save_image",
          [](const py::array_t<double>& a, const std::string& p) {
              save_image(image_from_array(a), p);
          });
    m.def("hflip", [](const py::array_t<double>& a) { return array_from_image(hflip(image_from_array(a))); });
    m.def("photometric_normalize", [](const py::array_t<double>& a) {
        return array_from_image(photometric_normalize(image_from_array(a)));
    });

    m.def(
        "mirror_search_axis",
        [](const py::array_t<double>& a, int c_min, int c_max) {
            const GrayImage img = image_from_array(a);
            return (c_min < 0) ? mirror_search_axis(img) : mirror_search_axis(img, c_min, c_max);
        },
        py::arg("image"), py::arg("c_min") = -1, py::arg("c_max") = -1);

    m.def(
        "stitch_face",
        [](const py::array_t<double>& a, double axis_column, const StitchParams& params) {
            const GrayImage img = image_from_array(a);
            const SymmetryAxis axis{axis_column, AxisMethod::mirror_search, 1.0};
            const StitchOutcome outcome = stitch_face(img, axis, params);
            return py::make_tuple(array_from_image(outcome.image),
                                  py::make_tuple(outcome.offset.i, outcome.offset.j),
                                  outcome.peak_ncc);
        },
        py::arg("image"), py::arg("axis_column"), py::arg("params") = StitchParams{});

    m.def("mse", [](const py::array_t<double>& a, const py::array_t<double>& b) {
        return mse(image_from_array(a), image_from_array(b));
    });
    m.def("cr", [](const py::array_t<double>& a, const py::array_t<double>& b) {
        return cr(image_from_array(a), image_from_array(b));
    });

    m.def(
        "occlude",
        [](const py::array_t<double>& a, const std::string& mode) {
            return array_from_image(occlude(image_from_array(a), occlusion_from_string(mode)));
        },
        py::arg("image"), py::arg("mode"));

    m.def(
        "train",
        [](const std::vector<py::array_t<double>>& arrays, const std::vector<std::string>& labels,
           size_t k) {
            std::vector<GrayImage> images;
            images.reserve(arrays.size());
            for (const auto& a : arrays) images.push_back(image_from_array(a));
            return train(images, labels, k);
        },
        py::arg("images"), py::arg("labels"), py::arg("k"));

    m.def("project", [](const EigenModel& model, const py::array_t<double>& a) {
        return project(model, image_from_array(a));
    });
    m.def("reconstruct", [](const EigenModel& model, const std::vector<double>& coeffs) {
        return array_from_image(reconstruct(model, coeffs));
    });
    m.def(
        "classify",
        [](const EigenModel& model, const py::array_t<double>& a, const std::string& metric) {
            return classify(model, image_from_array(a), metric_from_string(metric));
        },
        py::arg("model"), py::arg("image"), py::arg("metric") = "sed");

    m.def("save_model", &save_model);
    m.def("load_model", &load_model);
}
