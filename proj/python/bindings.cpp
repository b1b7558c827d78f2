#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "flight/baselines.hpp"
#include "flight/error.hpp"
#include "flight/estimator.hpp"
#include "flight/lattice.hpp"
#include "flight/synth.hpp"

namespace py = pybind11;
using namespace flight;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<CompensatedCorrespondence> to_corrs(const Array& p_hat, const Array& q) {
  if (p_hat.ndim() != 2 || p_hat.shape(1) != 3 || q.ndim() != 2 || q.shape(1) != 3 || p_hat.shape(0) != q.shape(0))
    throw py::value_error("p_hat and q must both have shape (N, 3)");
  const auto a = p_hat.unchecked<2>();
  const auto b = q.unchecked<2>();
  std::vector<CompensatedCorrespondence> out(static_cast<std::size_t>(a.shape(0)));
  for (py::ssize_t i = 0; i < a.shape(0); ++i)
    out[static_cast<std::size_t>(i)] = {{a(i, 0), a(i, 1), a(i, 2)}, {b(i, 0), b(i, 1), b(i, 2)}};
  return out;
}

py::tuple tuple_of(const UnitVector3& v) { return py::make_tuple(v.x(), v.y(), v.z()); }

UnitVector3 unit_of(const std::vector<double>& v) {
  if (v.size() != 3) throw py::value_error("expected 3 components");
  return UnitVector3(Vec3{v[0], v[1], v[2]});
}

py::dict heading_dict(const HeadingEstimate& e) {
  py::dict d;
  d["direction"] = tuple_of(e.direction);
  d["winning_bin"] = e.winning_bin;
  d["inlier_count"] = e.inlier_count;
  d["circles_used"] = e.circles_used;
  d["sign_ambiguous"] = e.sign_ambiguous;
  d["batches_consumed"] = e.batches_consumed;
  d["iterations"] = e.iterations;
  d["stage_timings"] = e.stage_timings;
  return d;
}

py::dict foe_dict(const FoeEstimate& e) {
  py::dict d;
  d["direction"] = tuple_of(e.direction);
  d["x_f"] = e.x_f;
  d["y_f"] = e.y_f;
  d["at_infinity"] = e.at_infinity;
  d["inlier_count"] = e.inlier_count;
  d["iterations"] = e.iterations;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "FLIGHT heading estimator and baselines";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(PyExc_ValueError, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  py::class_<FlightConfig>(m, "FlightConfig")
      .def(py::init<>())
      .def_readwrite("m_sparse", &FlightConfig::m_sparse)
      .def_readwrite("r_sparse", &FlightConfig::r_sparse)
      .def_readwrite("m_dense", &FlightConfig::m_dense)
      .def_readwrite("r_dense", &FlightConfig::r_dense)
      .def_readwrite("hierarchical", &FlightConfig::hierarchical)
      .def_readwrite("nlr", &FlightConfig::nlr)
      .def_readwrite("early_stop", &FlightConfig::early_stop)
      .def_readwrite("es_batch", &FlightConfig::es_batch)
      .def_readwrite("es_min_fraction", &FlightConfig::es_min_fraction)
      .def_readwrite("seed", &FlightConfig::seed)
      .def_readwrite("region_bound", &FlightConfig::region_bound)
      .def_readwrite("threads", &FlightConfig::threads);

  m.def(
      "estimate",
      [](const Array& p_hat, const Array& q, const FlightConfig& cfg) {
        const auto corrs = to_corrs(p_hat, q);
        py::gil_scoped_release release;
        HeadingEstimate e = flight::estimate(corrs, cfg);
        py::gil_scoped_acquire acquire;
        return heading_dict(e);
      },
      py::arg("p_hat"), py::arg("q"), py::arg("config") = FlightConfig{},
      "FLIGHT heading from rotation-compensated correspondences (two (N, 3) arrays).");

  m.def(
      "pn", [](const Array& p_hat, const Array& q, double focal) { return foe_dict(pn_estimate(to_corrs(p_hat, q), focal)); },
      py::arg("p_hat"), py::arg("q"), py::arg("focal") = 576.0);
  m.def(
      "pn_star",
      [](const Array& p_hat, const Array& q, double focal, std::uint64_t seed) {
        RansacConfig cfg = RansacConfig::pn_star();
        cfg.seed = seed;
        return foe_dict(pn_star_estimate(to_corrs(p_hat, q), focal, cfg));
      },
      py::arg("p_hat"), py::arg("q"), py::arg("focal") = 576.0, py::arg("seed") = 0);
  m.def(
      "two_point",
      [](const Array& p_hat, const Array& q, std::uint64_t seed) {
        RansacConfig cfg = RansacConfig::two_point();
        cfg.seed = seed;
        return heading_dict(two_point_estimate(to_corrs(p_hat, q), cfg));
      },
      py::arg("p_hat"), py::arg("q"), py::arg("seed") = 0);
  m.def(
      "foe_hough",
      [](const Array& p_hat, const Array& q, double focal, std::uint64_t seed) {
        return heading_dict(foe_randomized_hough(to_corrs(p_hat, q), focal, 0.02, 0, seed).estimate);
      },
      py::arg("p_hat"), py::arg("q"), py::arg("focal") = 576.0, py::arg("seed") = 0);

  m.def(
      "synthetic_scene",
      [](std::uint64_t seed, std::vector<double> heading, std::size_t n, double outliers, double noise,
         double noise_cap, double rotation_deg, double focal, double extent) {
        SyntheticScene s = gen_scene(derive_seed(seed, 1), unit_of(heading), n, focal, extent);
        s = inject_outliers(std::move(s), outliers, derive_seed(seed, 2));
        s = add_flow_noise(std::move(s), noise, noise_cap, derive_seed(seed, 3));
        s = perturb_rotation(std::move(s), rotation_deg, derive_seed(seed, 4));
        const auto corrs = s.correspondences();
        Array p_hat({static_cast<py::ssize_t>(n), py::ssize_t{3}});
        Array q({static_cast<py::ssize_t>(n), py::ssize_t{3}});
        auto a = p_hat.mutable_unchecked<2>();
        auto b = q.mutable_unchecked<2>();
        py::array_t<bool> mask(static_cast<py::ssize_t>(n));
        bool* mk = mask.mutable_data();
        for (std::size_t i = 0; i < n; ++i) {
          const auto k = static_cast<py::ssize_t>(i);
          a(k, 0) = corrs[i].p_hat.x, a(k, 1) = corrs[i].p_hat.y, a(k, 2) = corrs[i].p_hat.z;
          b(k, 0) = corrs[i].q.x, b(k, 1) = corrs[i].q.y, b(k, 2) = corrs[i].q.z;
          mk[i] = s.outlier_mask[i];
        }
        return py::make_tuple(p_hat, q, mask);
      },
      py::arg("seed"), py::arg("heading"), py::arg("n") = 500, py::arg("outliers") = 0.0, py::arg("noise") = 0.0,
      py::arg("noise_cap") = 2.0, py::arg("rotation_deg") = 0.0, py::arg("focal") = 576.0, py::arg("extent") = 0.5,
      "Returns (p_hat, q, outlier_mask) for a synthetic translational scene.");

  m.def(
      "fibonacci_lattice",
      [](std::size_t count) {
        const FibonacciLattice lat(count);
        Array out({static_cast<py::ssize_t>(count), py::ssize_t{3}});
        auto o = out.mutable_unchecked<2>();
        for (std::size_t j = 0; j < count; ++j) {
          const auto k = static_cast<py::ssize_t>(j);
          o(k, 0) = lat.xs()[j], o(k, 1) = lat.ys()[j], o(k, 2) = lat.zs()[j];
        }
        return out;
      },
      py::arg("count"));
  m.def("bin_radius", &bin_radius, py::arg("count"));
  m.def("maa", [](const std::vector<double>& errors, double threshold) { return maa(errors, threshold); },
        py::arg("errors_deg"), py::arg("threshold_deg"));
  m.def(
      "angular_error_deg",
      [](std::vector<double> a, std::vector<double> b) { return angular_error_deg(unit_of(a), unit_of(b)); },
      py::arg("estimate"), py::arg("truth"));
}
