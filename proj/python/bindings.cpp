#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "reciprosim/analysis.hpp"
#include "reciprosim/calibration.hpp"
#include "reciprosim/config.hpp"
#include "reciprosim/mechanics.hpp"
#include "reciprosim/piv.hpp"
#include "reciprosim/roundtrip.hpp"
#include "reciprosim/schedule.hpp"
#include "reciprosim/simulator.hpp"

namespace py = pybind11;
using namespace reciprosim;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

std::vector<double> to_vector(const py::array_t<double>& a) {
  const auto buf = a.request();
  const double* p = static_cast<const double*>(buf.ptr);
  return std::vector<double>(p, p + buf.size);
}

py::dict sim_result_to_dict(const SimResult& r) {
  py::dict d;
  d["t"] = to_array(r.t);
  py::list segs;
  for (int s = 0; s < 4; ++s) segs.append(to_array(r.segment_pos[s]));
  d["segment_pos"] = segs;
  py::list ux, uy;
  for (const auto& n : r.node_ux) ux.append(to_array(n));
  for (const auto& n : r.node_uy) uy.append(to_array(n));
  d["node_ux"] = ux;
  d["node_uy"] = uy;
  d["reaction_force"] = to_array(r.reaction_force);
  d["cut_depth"] = to_array(r.cut_depth);
  d["work"] = to_array(r.work);
  d["node_station"] = to_array(r.node_station);
  d["node_y"] = to_array(r.node_y);
  d["observation_node"] = observation_node(r.grid);
  py::dict energy;
  energy["input_friction"] = r.energy.input_friction;
  energy["input_cutting"] = r.energy.input_cutting;
  energy["input_radial"] = r.energy.input_radial;
  energy["dissipated_friction"] = r.energy.dissipated_friction;
  energy["dissipated_damper"] = r.energy.dissipated_damper;
  energy["dissipated_cutting"] = r.energy.dissipated_cutting;
  energy["stored_elastic"] = r.energy.stored_elastic;
  energy["closure_residual"] = r.energy.closure_residual();
  d["energy"] = energy;
  return d;
}

ImageFrame frame_from_array(const py::array_t<std::uint16_t>& a) {
  const auto buf = a.request();
  if (buf.ndim != 2) throw std::invalid_argument("frame must be 2-D");
  ImageFrame f;
  f.height = static_cast<int>(buf.shape[0]);
  f.width = static_cast<int>(buf.shape[1]);
  f.px.resize(static_cast<std::size_t>(buf.size));
  const auto* p = static_cast<const std::uint16_t*>(buf.ptr);
  std::copy(p, p + buf.size, f.px.begin());
  return f;
}

py::array_t<std::uint16_t> frame_to_array(const ImageFrame& f) {
  py::array_t<std::uint16_t> a({f.height, f.width});
  std::copy(f.px.begin(), f.px.end(), a.mutable_data());
  return a;
}

}  // namespace

PYBIND11_MODULE(_reciprosim, m) {
  m.doc() = "Reciprocating multi-part probe insertion workbench";

  py::class_<FrictionParams>(m, "FrictionParams")
      .def(py::init<>())
      .def_readwrite("f_breakaway", &FrictionParams::f_breakaway)
      .def_readwrite("f_coulomb", &FrictionParams::f_coulomb)
      .def_readwrite("v_breakaway", &FrictionParams::v_breakaway)
      .def_readwrite("f_viscous", &FrictionParams::f_viscous)
      .def_readwrite("extract_gain", &FrictionParams::extract_gain);

  py::class_<KelvinParams>(m, "KelvinParams")
      .def(py::init<>())
      .def_readwrite("k_parallel", &KelvinParams::k_parallel)
      .def_readwrite("k_series", &KelvinParams::k_series)
      .def_readwrite("c_damper", &KelvinParams::c_damper);

  py::class_<KelvinState>(m, "KelvinState")
      .def(py::init<>())
      .def_readwrite("x", &KelvinState::x)
      .def_readwrite("f_maxwell", &KelvinState::f_maxwell);

  py::class_<CuttingParams>(m, "CuttingParams")
      .def(py::init<>())
      .def_readwrite("f_cut", &CuttingParams::f_cut);

  py::class_<ForceBudget>(m, "ForceBudget")
      .def(py::init<>())
      .def_readwrite("f_cut", &ForceBudget::f_cut)
      .def_readwrite("f_insert", &ForceBudget::f_insert)
      .def_readwrite("f_extract", &ForceBudget::f_extract)
      .def_readwrite("f_drive", &ForceBudget::f_drive)
      .def_readwrite("n_stationary", &ForceBudget::n_stationary);

  py::class_<FeasibilityReport>(m, "FeasibilityReport")
      .def_readonly("eq1_holds", &FeasibilityReport::eq1_holds)
      .def_readonly("eq2_holds", &FeasibilityReport::eq2_holds)
      .def_readonly("margin", &FeasibilityReport::margin);

  m.def("friction_force", &friction_force, py::arg("params"),
        py::arg("v_rel"), py::arg("scale"));
  m.def(
      "kelvin_step",
      [](const KelvinParams& p, const KelvinState& s, double x_new, double dt) {
        const auto r = kelvin_step(p, s, x_new, dt);
        return py::make_tuple(r.force, r.state);
      },
      py::arg("params"), py::arg("state"), py::arg("x_new"), py::arg("dt"));
  m.def("cutting_force", &cutting_force, py::arg("params"), py::arg("tip_pos"),
        py::arg("cut_depth"), py::arg("v_tip"));
  m.def("feasible_reciprocal", &feasible_reciprocal, py::arg("budget"));

  m.def(
      "schedule_position",
      [](const std::string& config_text, double t) {
        const AppConfig cfg = parse_config(config_text);
        return cfg.sim.schedule.position(t);
      },
      py::arg("config_json"), py::arg("t"),
      "Commanded segment positions for the schedule in a config document");

  m.def(
      "simulate",
      [](const std::string& config_text) {
        const AppConfig cfg = parse_config(config_text);
        return sim_result_to_dict(simulate(cfg.sim));
      },
      py::arg("config_json"),
      "Run one insertion simulation from a JSON config string");

  m.def(
      "segment_phases",
      [](const py::array_t<double>& t, const py::array_t<double>& v,
         double plateau_slope_frac, double cycle_period, double t_stop) {
        AnalyzeOptions o;
        o.plateau_slope_frac = plateau_slope_frac;
        o.cycle_period = cycle_period;
        o.t_stop = t_stop;
        const auto ts = to_vector(t);
        const auto vs = to_vector(v);
        const auto seg = segment_phases(ts, vs, o);
        py::dict d;
        d["t1"] = seg.t1;
        d["t2"] = seg.t2;
        d["i1"] = seg.i1;
        d["i2"] = seg.i2;
        d["degenerate"] = seg.degenerate;
        return d;
      },
      py::arg("t"), py::arg("v"), py::arg("plateau_slope_frac") = 0.10,
      py::arg("cycle_period") = 0.0, py::arg("t_stop") = -1.0);

  m.def(
      "profile_stats",
      [](const py::array_t<double>& t, const py::array_t<double>& v,
         double plateau_slope_frac, double cycle_period, double t_stop) {
        AnalyzeOptions o;
        o.plateau_slope_frac = plateau_slope_frac;
        o.cycle_period = cycle_period;
        o.t_stop = t_stop;
        const auto ts = to_vector(t);
        const auto vs = to_vector(v);
        const auto seg = segment_phases(ts, vs, o);
        const auto st = profile_stats(ts, vs, seg, o);
        py::dict d;
        d["peak"] = st.peak;
        d["plateau_mean"] =
            st.plateau_mean ? py::cast(*st.plateau_mean) : py::none();
        d["relaxation_level"] = st.relaxation_level;
        d["oscillation_amp"] = st.oscillation_amp;
        return d;
      },
      py::arg("t"), py::arg("v"), py::arg("plateau_slope_frac") = 0.10,
      py::arg("cycle_period") = 0.0, py::arg("t_stop") = -1.0);

  m.def(
      "compare",
      [](double ref_peak, double ref_plateau, double ref_work, double test_peak,
         double test_plateau, double test_work) {
        const ReductionReport r = compare(RunStats{ref_peak, ref_plateau, ref_work},
                                          RunStats{test_peak, test_plateau, test_work});
        py::dict d;
        d["peak_reduction_pct"] = r.peak_reduction_pct;
        d["plateau_reduction_pct"] = r.plateau_reduction_pct;
        d["work_reduction_pct"] = r.work_reduction_pct;
        return d;
      },
      py::arg("ref_peak"), py::arg("ref_plateau"), py::arg("ref_work"),
      py::arg("test_peak"), py::arg("test_plateau"), py::arg("test_work"));

  py::class_<OpticsSpec>(m, "OpticsSpec")
      .def(py::init<>())
      .def_readwrite("fov_x_mm", &OpticsSpec::fov_x_mm)
      .def_readwrite("fov_y_mm", &OpticsSpec::fov_y_mm)
      .def_readwrite("resolution_um_per_px", &OpticsSpec::resolution_um_per_px)
      .def_readwrite("particle_diameter_px", &OpticsSpec::particle_diameter_px)
      .def_readwrite("particle_density_per_px2",
                     &OpticsSpec::particle_density_per_px2)
      .def_readwrite("noise_std", &OpticsSpec::noise_std)
      .def_readwrite("blob_peak", &OpticsSpec::blob_peak)
      .def_readwrite("seed", &OpticsSpec::seed)
      .def_readwrite("view_x0_mm", &OpticsSpec::view_x0_mm)
      .def_readwrite("view_y0_mm", &OpticsSpec::view_y0_mm)
      .def_property_readonly("width_px", &OpticsSpec::width_px)
      .def_property_readonly("height_px", &OpticsSpec::height_px);

  m.def(
      "seed_particles",
      [](const OpticsSpec& o) {
        const auto pts = seed_particles(o);
        py::array_t<double> a({static_cast<py::ssize_t>(pts.size()),
                               static_cast<py::ssize_t>(2)});
        auto* p = a.mutable_data();
        for (std::size_t i = 0; i < pts.size(); ++i) {
          p[2 * i] = pts[i].x_mm;
          p[2 * i + 1] = pts[i].y_mm;
        }
        return a;
      },
      py::arg("optics"));

  m.def(
      "synth_frame",
      [](const py::array_t<double>& particles, const OpticsSpec& o) {
        const auto buf = particles.request();
        if (buf.ndim != 2 || buf.shape[1] != 2)
          throw std::invalid_argument("particles must be an (n, 2) array");
        std::vector<Particle> pts(static_cast<std::size_t>(buf.shape[0]));
        const double* p = static_cast<const double*>(buf.ptr);
        for (std::size_t i = 0; i < pts.size(); ++i)
          pts[i] = {p[2 * i], p[2 * i + 1]};
        return frame_to_array(synth_frame(pts, o));
      },
      py::arg("particles"), py::arg("optics"));

  m.def(
      "compute_field",
      [](const py::array_t<std::uint16_t>& f0,
         const py::array_t<std::uint16_t>& f1, int window, double overlap,
         int search_radius, double res_mm_per_px) {
        PivOptions opts;
        opts.window = window;
        opts.overlap = overlap;
        opts.search_radius = search_radius;
        opts.res_mm_per_px = res_mm_per_px;
        const VectorField f =
            compute_field(frame_from_array(f0), frame_from_array(f1), opts);
        const py::ssize_t n = static_cast<py::ssize_t>(f.cells.size());
        py::array_t<double> cx(n), cy(n), dx(n), dy(n), quality(n);
        py::array_t<bool> valid(n);
        for (py::ssize_t i = 0; i < n; ++i) {
          const auto& c = f.cells[static_cast<std::size_t>(i)];
          cx.mutable_data()[i] = c.cx;
          cy.mutable_data()[i] = c.cy;
          dx.mutable_data()[i] = c.dx_px;
          dy.mutable_data()[i] = c.dy_px;
          quality.mutable_data()[i] = c.quality;
          valid.mutable_data()[i] = c.valid;
        }
        py::dict d;
        d["nx"] = f.nx;
        d["ny"] = f.ny;
        d["cx"] = cx;
        d["cy"] = cy;
        d["dx_px"] = dx;
        d["dy_px"] = dy;
        d["quality"] = quality;
        d["valid"] = valid;
        return d;
      },
      py::arg("frame0"), py::arg("frame1"), py::arg("window") = 32,
      py::arg("overlap") = 0.5, py::arg("search_radius") = 12,
      py::arg("res_mm_per_px") = 27.4e-3);

  m.def(
      "calibration_loss",
      [](const std::string& config_text) {
        const AppConfig cfg = parse_config(config_text);
        LossBreakdown bd;
        const double total = calibration_loss(cfg.bounds, cfg.targets, cfg.sim,
                                              cfg.calibration, &bd);
        py::dict d;
        d["total"] = total;
        d["failed"] = bd.failed;
        d["values"] = py::cast(std::vector<double>(bd.values.begin(),
                                                   bd.values.end()));
        return d;
      },
      py::arg("config_json"));

  m.attr("__version__") = "0.1.0";
}
