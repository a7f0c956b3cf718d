#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mikado/bench.hpp"
#include "mikado/config.hpp"
#include "mikado/errors.hpp"
#include "mikado/scoring.hpp"
#include "mikado/simulator.hpp"
#include "mikado/wiener.hpp"

namespace py = pybind11;
using namespace mikado;

namespace {

py::array_t<double> image_to_array(const Image& img) {
    py::array_t<double> a({img.height, img.width});
    std::copy(img.values.begin(), img.values.end(), a.mutable_data());
    return a;
}

Image array_to_image(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw py::value_error("image must be a 2-D array");
    Image img;
    img.height = static_cast<std::size_t>(a.shape(0));
    img.width = static_cast<std::size_t>(a.shape(1));
    img.values.assign(a.data(), a.data() + a.size());
    return img;
}

Occupancy to_occupancy(const std::vector<bool>& v) { return Occupancy(v.begin(), v.end()); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Site occupancy detection in microtrap array images";

    py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);

    py::class_<BenchParams>(m, "Params")
        .def(py::init<>())
        .def_readwrite("rows", &BenchParams::rows)
        .def_readwrite("cols", &BenchParams::cols)
        .def_readwrite("a_over_rpsf", &BenchParams::a_over_rpsf)
        .def_readwrite("hwhm_px", &BenchParams::hwhm_px)
        .def_readwrite("mu", &BenchParams::mu)
        .def_readwrite("sigma_over_mu", &BenchParams::sigma_over_mu)
        .def_readwrite("p", &BenchParams::p)
        .def_readwrite("background", &BenchParams::background)
        .def_readwrite("read_noise_sd", &BenchParams::read_noise_sd)
        .def_readwrite("n_steps", &BenchParams::n_steps)
        .def_readwrite("t_final_over_mu", &BenchParams::t_final_over_mu)
        .def_readwrite("n_workers", &BenchParams::n_workers)
        .def_property(
            "optimized",
            [](const BenchParams& p) { return p.final_mode == FinalThresholdMode::optimized; },
            [](BenchParams& p, bool v) {
                p.final_mode = v ? FinalThresholdMode::optimized : FinalThresholdMode::schedule;
            })
        .def_property_readonly("sigma", &BenchParams::sigma)
        .def_property_readonly("n_sites", &BenchParams::n_sites);

    m.def(
        "params_from_config",
        [](const std::string& text) { return to_bench_params(parse_config(text)); },
        py::arg("json_text"), "Params from a JSON run configuration.");

    py::class_<Scenario>(m, "Scenario")
        .def(py::init(&make_scenario), py::arg("params"))
        .def_property_readonly("image_shape",
                               [](const Scenario& s) { return py::make_tuple(s.geom.image_height, s.geom.image_width); })
        .def_property_readonly("n_sites", [](const Scenario& s) { return s.geom.n_sites(); })
        .def("measurement_matrix",
             [](const Scenario& s) {
                 const auto d = s.M.to_dense();
                 py::array_t<double> a({s.M.n_pixels(), s.M.n_sites()});
                 std::copy(d.begin(), d.end(), a.mutable_data());
                 return a;
             },
             "Dense pixels x sites matrix (small instances only).");

    m.def(
        "simulate",
        [](const Scenario& s, const BenchParams& p, std::uint64_t seed) {
            const SimulatedImage sim = simulate_image(s.geom, s.M, p.p, p.mu, p.sigma(), s.noise, seed);
            return py::make_tuple(image_to_array(sim.image),
                                  std::vector<bool>(sim.truth.occupied.begin(), sim.truth.occupied.end()),
                                  sim.truth.brightness);
        },
        py::arg("scenario"), py::arg("params"), py::arg("seed"),
        "Returns (image, occupied, brightness).");

    m.def(
        "wiener_estimate",
        [](const Scenario& s, const py::array_t<double>& image, std::vector<double> p, double mu, double sigma) {
            const Estimate e = wiener_estimate(array_to_image(image), s.M, PriorModel::make(std::move(p), mu, sigma),
                                               s.noise, SolverSettings{});
            return e.xhat;
        },
        py::arg("scenario"), py::arg("image"), py::arg("p"), py::arg("mu"), py::arg("sigma"));

    m.def(
        "detect",
        [](const std::string& estimator, const Scenario& s, const BenchParams& p, const py::array_t<double>& image,
           std::optional<std::vector<bool>> truth) {
            Occupancy t;
            if (truth) t = to_occupancy(*truth);
            const Detection d =
                run_detection(parse_estimator(estimator), s, p, array_to_image(image), truth ? &t : nullptr);
            py::dict out;
            out["xhat"] = d.xhat;
            out["occupied"] = std::vector<bool>(d.occupancy.begin(), d.occupancy.end());
            out["threshold"] = d.threshold;
            return out;
        },
        py::arg("estimator"), py::arg("scenario"), py::arg("params"), py::arg("image"), py::arg("truth") = py::none());

    m.def(
        "detection_error_rate",
        [](const std::vector<bool>& pred, const std::vector<bool>& truth) {
            return detection_error_rate(to_occupancy(pred), to_occupancy(truth));
        },
        py::arg("pred"), py::arg("truth"));

    m.def(
        "optimal_threshold",
        [](const std::vector<double>& xhat, const std::vector<bool>& truth) {
            const ThresholdChoice c = optimal_threshold(xhat, to_occupancy(truth));
            return py::make_tuple(c.threshold, c.der);
        },
        py::arg("xhat"), py::arg("truth"));

    m.def(
        "run_der_study",
        [](const std::string& estimator, const BenchParams& p, std::size_t n_images, std::uint64_t seed) {
            const BenchRecord r = run_der_study(parse_estimator(estimator), p, n_images, seed);
            py::dict out;
            out["der_mean"] = r.der_mean;
            out["der_sd"] = r.der_sd;
            out["runtime_mean_s"] = r.runtime_mean_s;
            out["per_image_der"] = r.per_image_der;
            out["csv_row"] = to_csv_row(r);
            return out;
        },
        py::arg("estimator"), py::arg("params"), py::arg("n_images"), py::arg("seed"));
}
