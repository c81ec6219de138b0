#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wirefit/eval.hpp"
#include "wirefit/io.hpp"

namespace py = pybind11;
using namespace wirefit;

PYBIND11_MODULE(_core, m) {
  m.doc() = "wireframe skeleton projection, fitting, and interpretation";

  py::register_exception<Error>(m, "Error");

  py::class_<SkeletonSpec>(m, "SkeletonSpec")
      .def_readonly("category", &SkeletonSpec::category)
      .def_readonly("keypoint_names", &SkeletonSpec::keypoint_names)
      .def_readonly("edges", &SkeletonSpec::edges);

  py::class_<BaseShapeSet>(m, "BaseShapeSet")
      .def_readonly("spec", &BaseShapeSet::spec)
      .def_readonly("bases", &BaseShapeSet::bases)
      .def_property_readonly("num_bases", &BaseShapeSet::num_bases)
      .def_property_readonly("num_keypoints", &BaseShapeSet::num_keypoints)
      .def("hash", &BaseShapeSet::hash);

  m.def("load_base_shapes", &load_base_shapes, py::arg("path"));
  m.def("parse_base_shapes", &parse_base_shapes, py::arg("json_text"));

  m.def(
      "compose_skeleton",
      [](const Eigen::VectorXd& alpha, const BaseShapeSet& bases) {
        return compose_skeleton(StructuralParams{alpha}, bases).coords;
      },
      py::arg("alpha"), py::arg("bases"),
      "3xN keypoints for full alpha (alpha[0] is the pinned mean weight)");

  m.def(
      "diagonal_length",
      [](const Eigen::Matrix3Xd& coords) { return diagonal_length(Shape3D{coords}); },
      py::arg("coords"));

  m.def("param_vector_size", &param_vector_size, py::arg("num_bases"));

  m.def(
      "project_skeleton",
      [](const Eigen::VectorXd& params, const BaseShapeSet& bases) {
        return project_skeleton(ParamVector(params), bases).coords;
      },
      py::arg("params"), py::arg("bases"),
      "2xN image of [alpha_free, azimuth, elevation, tilt, t, inv_f]");

  m.def(
      "projection_jacobian",
      [](const Eigen::VectorXd& params, const BaseShapeSet& bases) {
        return projection_jacobian(ParamVector(params), bases);
      },
      py::arg("params"), py::arg("bases"));

  py::class_<HeatmapStack>(m, "HeatmapStack")
      .def_readonly("channels", &HeatmapStack::channels)
      .def_readonly("height", &HeatmapStack::height)
      .def_readonly("width", &HeatmapStack::width)
      .def_readonly("data", &HeatmapStack::data)
      .def("at", py::overload_cast<int, int, int>(&HeatmapStack::at, py::const_),
           py::arg("channel"), py::arg("row"), py::arg("col"));

  m.def(
      "render_heatmaps",
      [](const Eigen::Matrix2Xd& coords, double sigma, int height, int width) {
        return render_heatmaps(Keypoints2D::all_visible(coords), sigma, height, width);
      },
      py::arg("coords"), py::arg("sigma") = 1.5, py::arg("height") = 30,
      py::arg("width") = 40);

  m.def(
      "argmax_keypoints",
      [](const HeatmapStack& h) { return argmax_keypoints(h).coords; }, py::arg("heatmaps"));

  m.def(
      "corrupt_salt_pepper",
      [](const HeatmapStack& h, double p, std::uint64_t seed) {
        Rng rng = make_rng(seed);
        return corrupt_salt_pepper(h, p, rng);
      },
      py::arg("heatmaps"), py::arg("p"), py::arg("seed") = 0);

  py::class_<Range>(m, "Range")
      .def(py::init<>())
      .def(py::init<double, double>(), py::arg("lo"), py::arg("hi"))
      .def_readwrite("lo", &Range::lo)
      .def_readwrite("hi", &Range::hi);

  py::class_<SamplerConfig>(m, "SamplerConfig")
      .def(py::init<>())
      .def_readwrite("alpha", &SamplerConfig::alpha)
      .def_readwrite("azimuth", &SamplerConfig::azimuth)
      .def_readwrite("elevation", &SamplerConfig::elevation)
      .def_readwrite("tilt", &SamplerConfig::tilt)
      .def_readwrite("t_x", &SamplerConfig::t_x)
      .def_readwrite("t_y", &SamplerConfig::t_y)
      .def_readwrite("t_z", &SamplerConfig::t_z)
      .def_readwrite("inv_f", &SamplerConfig::inv_f)
      .def_readwrite("perturbation_ratio", &SamplerConfig::perturbation_ratio)
      .def_readwrite("heatmap_sigma", &SamplerConfig::heatmap_sigma)
      .def_readwrite("noise_level", &SamplerConfig::noise_level)
      .def_readwrite("heatmap_height", &SamplerConfig::heatmap_height)
      .def_readwrite("heatmap_width", &SamplerConfig::heatmap_width)
      .def_readwrite("seed", &SamplerConfig::seed);

  py::class_<SynthSample>(m, "SynthSample")
      .def_property_readonly("s_true",
                             [](const SynthSample& s) { return s.s_true.values; })
      .def_property_readonly("y_true",
                             [](const SynthSample& s) { return s.y_true.coords; })
      .def_property_readonly("x_true",
                             [](const SynthSample& s) { return s.x_true.coords; })
      .def_readonly("heatmaps", &SynthSample::heatmaps);

  m.def("generate_dataset", &generate_dataset, py::arg("cfg"), py::arg("bases"),
        py::arg("count"), py::arg("threads") = 1);

  m.def(
      "fit_keypoints",
      [](const Eigen::Matrix2Xd& coords, const BaseShapeSet& bases, int restarts,
         int max_iters, std::uint64_t seed) {
        FitConfig cfg;
        cfg.restarts = restarts;
        cfg.max_iters = max_iters;
        cfg.seed = seed;
        const FitResult r = fit_keypoints(Keypoints2D::all_visible(coords), bases, cfg);
        py::dict out;
        out["params"] = r.s_hat.values;
        out["final_cost"] = r.final_cost;
        out["converged"] = r.converged;
        out["iterations"] = r.iterations;
        return out;
      },
      py::arg("coords"), py::arg("bases"), py::arg("restarts") = 8,
      py::arg("max_iters") = 500, py::arg("seed") = 0);

  m.def(
      "rmse_3d",
      [](const Eigen::Matrix3Xd& y_hat, const Eigen::Matrix3Xd& y_true) {
        return rmse_3d(Shape3D{y_hat}, Shape3D{y_true});
      },
      py::arg("y_hat"), py::arg("y_true"));

  m.def("azimuth_error", &azimuth_error, py::arg("az_hat_rad"), py::arg("az_true_rad"));
}
