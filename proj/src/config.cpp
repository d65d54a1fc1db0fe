#include "reciprosim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace reciprosim {

void RoundtripOptions::validate() const {
  if (!(frame_dt > 0.0))
    throw std::invalid_argument("roundtrip: frame_dt must be positive");
  if (window < 16) throw std::invalid_argument("roundtrip: window must be >= 16");
  if (!(overlap >= 0.0 && overlap <= 0.75))
    throw std::invalid_argument("roundtrip: overlap must be in [0, 0.75]");
  if (search_radius < 1)
    throw std::invalid_argument("roundtrip: search_radius must be >= 1");
}

namespace {

using njson = nlohmann::ordered_json;

std::string join(const std::string& a, const std::string& b) {
  return a.empty() ? b : a + "." + b;
}

struct Ctx {
  std::vector<std::string>* defaulted;
};

void check_keys(const njson& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) throw ConfigError(join(path, it.key()), "unknown key");
  }
}

const njson* section(const njson& j, const std::string& path, const char* key,
                     Ctx& c) {
  if (!j.contains(key)) {
    c.defaulted->push_back(join(path, key));
    return nullptr;
  }
  const njson& v = j.at(key);
  if (!v.is_object()) throw ConfigError(join(path, key), "expected an object");
  return &v;
}

double number(const njson* j, const std::string& path, const char* key,
              double def, Ctx& c) {
  if (!j || !j->contains(key)) {
    c.defaulted->push_back(join(path, key));
    return def;
  }
  const njson& v = j->at(key);
  if (!v.is_number()) throw ConfigError(join(path, key), "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(join(path, key), "must be finite");
  return x;
}

long integer(const njson* j, const std::string& path, const char* key, long def,
             Ctx& c) {
  if (!j || !j->contains(key)) {
    c.defaulted->push_back(join(path, key));
    return def;
  }
  const njson& v = j->at(key);
  if (!v.is_number_integer())
    throw ConfigError(join(path, key), "expected an integer");
  return v.get<long>();
}

std::string text(const njson* j, const std::string& path, const char* key,
                 const std::string& def, Ctx& c) {
  if (!j || !j->contains(key)) {
    c.defaulted->push_back(join(path, key));
    return def;
  }
  const njson& v = j->at(key);
  if (!v.is_string()) throw ConfigError(join(path, key), "expected a string");
  return v.get<std::string>();
}

void require(bool ok, const std::string& path, const char* key,
             const std::string& what) {
  if (!ok) throw ConfigError(join(path, key), what);
}

}  // namespace

AppConfig parse_config(const std::string& textual) {
  njson j;
  try {
    j = njson::parse(textual);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("JSON syntax error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("", "top level must be an object");

  AppConfig cfg;
  Ctx c{&cfg.defaulted};
  const std::string root;

  check_keys(j, root,
             {"dt", "dt_max", "record_dt", "seed", "geometry", "friction",
              "kelvin", "cutting", "radial_push", "grid", "solver", "schedule",
              "analysis", "optics", "piv", "calibration"});

  cfg.sim.dt = number(&j, root, "dt", cfg.sim.dt, c);
  require(cfg.sim.dt > 0.0, root, "dt", "must be positive");
  cfg.sim.dt_max = number(&j, root, "dt_max", cfg.sim.dt_max, c);
  require(cfg.sim.dt_max > 0.0, root, "dt_max", "must be positive");
  require(cfg.sim.dt <= cfg.sim.dt_max + 1e-15, root, "dt",
          "must not exceed dt_max");
  cfg.sim.record_dt = number(&j, root, "record_dt", cfg.sim.record_dt, c);
  require(cfg.sim.record_dt > 0.0, root, "record_dt", "must be positive");
  {
    const double k = cfg.sim.record_dt / cfg.sim.dt;
    require(std::abs(k - std::round(k)) <= 1e-6 && std::round(k) >= 1.0, root,
            "record_dt", "must be an integer multiple of dt");
  }
  const long seed = integer(&j, root, "seed", static_cast<long>(cfg.seed), c);
  require(seed >= 0, root, "seed", "must be non-negative");
  cfg.seed = static_cast<std::uint64_t>(seed);

  {
    const std::string p = "geometry";
    const njson* s = section(j, root, "geometry", c);
    if (s) check_keys(*s, p, {"n_segments", "diameter", "length", "clearance"});
    auto& g = cfg.sim.geometry;
    g.n_segments = static_cast<int>(integer(s, p, "n_segments", g.n_segments, c));
    require(g.n_segments == 4, p, "n_segments", "must be 4");
    g.diameter = number(s, p, "diameter", g.diameter, c);
    require(g.diameter > 0.0, p, "diameter", "must be positive");
    g.length = number(s, p, "length", g.length, c);
    require(g.length > 0.0, p, "length", "must be positive");
    g.clearance = number(s, p, "clearance", g.clearance, c);
    require(g.clearance >= 0.0, p, "clearance", "must be >= 0");
  }

  {
    const std::string p = "friction";
    const njson* s = section(j, root, "friction", c);
    if (s)
      check_keys(*s, p,
                 {"f_breakaway", "f_coulomb", "v_breakaway", "f_viscous",
                  "extract_gain"});
    auto& f = cfg.sim.materials.friction;
    f.f_breakaway = number(s, p, "f_breakaway", f.f_breakaway, c);
    f.f_coulomb = number(s, p, "f_coulomb", f.f_coulomb, c);
    f.v_breakaway = number(s, p, "v_breakaway", f.v_breakaway, c);
    f.f_viscous = number(s, p, "f_viscous", f.f_viscous, c);
    f.extract_gain = number(s, p, "extract_gain", f.extract_gain, c);
    require(f.f_coulomb > 0.0, p, "f_coulomb", "must be positive");
    require(f.f_breakaway >= f.f_coulomb, p, "f_breakaway",
            "must be >= f_coulomb");
    require(f.v_breakaway > 0.0, p, "v_breakaway", "must be positive");
    require(f.f_viscous >= 0.0, p, "f_viscous", "must be >= 0");
    require(f.extract_gain >= 1.0, p, "extract_gain", "must be >= 1");
  }

  {
    const std::string p = "kelvin";
    const njson* s = section(j, root, "kelvin", c);
    if (s) check_keys(*s, p, {"k_parallel", "k_series", "c_damper"});
    auto& k = cfg.sim.materials.kelvin;
    k.k_parallel = number(s, p, "k_parallel", k.k_parallel, c);
    k.k_series = number(s, p, "k_series", k.k_series, c);
    k.c_damper = number(s, p, "c_damper", k.c_damper, c);
    require(k.k_parallel > 0.0, p, "k_parallel", "must be positive");
    require(k.k_series > 0.0, p, "k_series", "must be positive");
    require(k.c_damper > 0.0, p, "c_damper", "must be positive");
  }

  {
    const std::string p = "cutting";
    const njson* s = section(j, root, "cutting", c);
    if (s) check_keys(*s, p, {"f_cut"});
    auto& cut = cfg.sim.materials.cutting;
    cut.f_cut = number(s, p, "f_cut", cut.f_cut, c);
    require(cut.f_cut >= 0.0, p, "f_cut", "must be >= 0");
  }

  {
    const std::string p = "radial_push";
    const njson* s = section(j, root, "radial_push", c);
    if (s) check_keys(*s, p, {"p_static", "p_rate", "ramp_len"});
    auto& r = cfg.sim.materials.radial;
    r.p_static = number(s, p, "p_static", r.p_static, c);
    r.p_rate = number(s, p, "p_rate", r.p_rate, c);
    r.ramp_len = number(s, p, "ramp_len", r.ramp_len, c);
    require(r.p_static >= 0.0, p, "p_static", "must be >= 0");
    require(r.p_rate >= 0.0, p, "p_rate", "must be >= 0");
    require(r.ramp_len > 0.0, p, "ramp_len", "must be positive");
  }

  {
    const std::string p = "grid";
    const njson* s = section(j, root, "grid", c);
    if (s)
      check_keys(*s, p,
                 {"n_axial", "first_station", "axial_spacing", "n_radial",
                  "first_offset", "radial_spacing", "lambda_r"});
    auto& g = cfg.sim.grid;
    g.n_axial = static_cast<int>(integer(s, p, "n_axial", g.n_axial, c));
    require(g.n_axial >= 1, p, "n_axial", "must be >= 1");
    g.first_station = number(s, p, "first_station", g.first_station, c);
    require(g.first_station >= 0.0, p, "first_station", "must be >= 0");
    g.axial_spacing = number(s, p, "axial_spacing", g.axial_spacing, c);
    require(g.axial_spacing > 0.0, p, "axial_spacing", "must be positive");
    g.n_radial = static_cast<int>(integer(s, p, "n_radial", g.n_radial, c));
    require(g.n_radial >= 2 && g.n_radial % 2 == 0, p, "n_radial",
            "must be a positive even count");
    g.first_offset = number(s, p, "first_offset", g.first_offset, c);
    require(g.first_offset > 0.0, p, "first_offset", "must be positive");
    g.radial_spacing = number(s, p, "radial_spacing", g.radial_spacing, c);
    require(g.radial_spacing > 0.0, p, "radial_spacing", "must be positive");
    g.lambda_r = number(s, p, "lambda_r", g.lambda_r, c);
    require(g.lambda_r > 0.0, p, "lambda_r", "must be positive");
  }

  {
    const std::string p = "solver";
    const njson* s = section(j, root, "solver", c);
    if (s)
      check_keys(*s, p,
                 {"v_tolerance", "bracket_factor", "scan_points",
                  "stick_tol_frac"});
    auto& so = cfg.sim.solver;
    so.v_tolerance = number(s, p, "v_tolerance", so.v_tolerance, c);
    require(so.v_tolerance > 0.0, p, "v_tolerance", "must be positive");
    so.bracket_factor = number(s, p, "bracket_factor", so.bracket_factor, c);
    require(so.bracket_factor > 0.0, p, "bracket_factor", "must be positive");
    so.scan_points = static_cast<int>(integer(s, p, "scan_points", so.scan_points, c));
    require(so.scan_points >= 8, p, "scan_points", "must be >= 8");
    so.stick_tol_frac = number(s, p, "stick_tol_frac", so.stick_tol_frac, c);
    require(so.stick_tol_frac > 0.0, p, "stick_tol_frac", "must be positive");
  }

  {
    const std::string p = "schedule";
    const njson* s = section(j, root, "schedule", c);
    if (s)
      check_keys(*s, p,
                 {"type", "v_probe", "depth", "v_segment", "stroke", "cycles",
                  "segment_order", "hold_time"});
    auto& sch = cfg.sim.schedule;
    const std::string kind = text(
        s, p, "type",
        sch.kind == MotionSchedule::Kind::direct ? "direct" : "reciprocal", c);
    if (kind == "direct")
      sch.kind = MotionSchedule::Kind::direct;
    else if (kind == "reciprocal")
      sch.kind = MotionSchedule::Kind::reciprocal;
    else
      throw ConfigError(join(p, "type"), "must be 'direct' or 'reciprocal'");
    sch.v_probe = number(s, p, "v_probe", sch.v_probe, c);
    require(sch.v_probe > 0.0, p, "v_probe", "must be positive");
    sch.depth = number(s, p, "depth", sch.depth, c);
    require(sch.depth >= 0.0, p, "depth", "must be >= 0");
    sch.v_segment = number(s, p, "v_segment", sch.v_segment, c);
    require(sch.v_segment > 0.0, p, "v_segment", "must be positive");
    sch.stroke = number(s, p, "stroke", sch.stroke, c);
    require(sch.stroke > 0.0, p, "stroke", "must be positive");
    sch.cycles = static_cast<int>(integer(s, p, "cycles", sch.cycles, c));
    require(sch.cycles >= 0, p, "cycles", "must be >= 0");
    sch.hold_time = number(s, p, "hold_time", sch.hold_time, c);
    require(sch.hold_time >= 0.0, p, "hold_time", "must be >= 0");
    if (s && s->contains("segment_order")) {
      const njson& v = s->at("segment_order");
      if (!v.is_array() || v.size() != 4)
        throw ConfigError(join(p, "segment_order"),
                          "expected an array of 4 segment indices");
      std::array<bool, 4> seen{};
      for (int i = 0; i < 4; ++i) {
        if (!v[i].is_number_integer())
          throw ConfigError(join(p, "segment_order"), "expected integers");
        const long idx = v[i].get<long>();
        if (idx < 0 || idx > 3 || seen[idx])
          throw ConfigError(join(p, "segment_order"),
                            "must be a permutation of 0..3");
        seen[idx] = true;
        sch.segment_order[i] = static_cast<int>(idx);
      }
    } else {
      cfg.defaulted.push_back(join(p, "segment_order"));
    }
  }

  {
    const std::string p = "analysis";
    const njson* s = section(j, root, "analysis", c);
    if (s) check_keys(*s, p, {"plateau_slope_frac", "filter_frac"});
    auto& a = cfg.analysis;
    a.plateau_slope_frac =
        number(s, p, "plateau_slope_frac", a.plateau_slope_frac, c);
    require(a.plateau_slope_frac > 0.0 && a.plateau_slope_frac < 1.0, p,
            "plateau_slope_frac", "must be in (0, 1)");
    a.filter_frac = number(s, p, "filter_frac", a.filter_frac, c);
    require(a.filter_frac > 0.0 && a.filter_frac <= 0.5, p, "filter_frac",
            "must be in (0, 0.5]");
  }

  {
    const std::string p = "optics";
    const njson* s = section(j, root, "optics", c);
    if (s)
      check_keys(*s, p,
                 {"fov_x", "fov_y", "resolution_um", "particle_diameter_px",
                  "particle_density", "noise_std", "blob_peak", "seed",
                  "view_x0", "view_y0"});
    auto& o = cfg.optics;
    o.fov_x_mm = number(s, p, "fov_x", o.fov_x_mm, c);
    o.fov_y_mm = number(s, p, "fov_y", o.fov_y_mm, c);
    o.resolution_um_per_px = number(s, p, "resolution_um", o.resolution_um_per_px, c);
    o.particle_diameter_px =
        number(s, p, "particle_diameter_px", o.particle_diameter_px, c);
    o.particle_density_per_px2 =
        number(s, p, "particle_density", o.particle_density_per_px2, c);
    o.noise_std = number(s, p, "noise_std", o.noise_std, c);
    o.blob_peak = number(s, p, "blob_peak", o.blob_peak, c);
    const long os = integer(s, p, "seed", static_cast<long>(o.seed), c);
    require(os >= 0, p, "seed", "must be non-negative");
    o.seed = static_cast<std::uint64_t>(os);
    o.view_x0_mm = number(s, p, "view_x0", o.view_x0_mm, c);
    o.view_y0_mm = number(s, p, "view_y0", o.view_y0_mm, c);
    try {
      o.validate();
    } catch (const std::exception& e) {
      throw ConfigError(p, e.what());
    }
  }

  {
    const std::string p = "piv";
    const njson* s = section(j, root, "piv", c);
    if (s)
      check_keys(*s, p,
                 {"frame_dt", "window", "overlap", "search_radius",
                  "full_field"});
    auto& r = cfg.roundtrip;
    r.frame_dt = number(s, p, "frame_dt", r.frame_dt, c);
    require(r.frame_dt > 0.0, p, "frame_dt", "must be positive");
    r.window = static_cast<int>(integer(s, p, "window", r.window, c));
    require(r.window >= 16, p, "window", "must be >= 16");
    r.overlap = number(s, p, "overlap", r.overlap, c);
    require(r.overlap >= 0.0 && r.overlap <= 0.75, p, "overlap",
            "must be in [0, 0.75]");
    r.search_radius =
        static_cast<int>(integer(s, p, "search_radius", r.search_radius, c));
    require(r.search_radius >= 1, p, "search_radius", "must be >= 1");
    if (s && s->contains("full_field")) {
      const njson& v = s->at("full_field");
      if (!v.is_boolean())
        throw ConfigError(join(p, "full_field"), "expected a boolean");
      r.full_field = v.get<bool>();
    } else {
      cfg.defaulted.push_back(join(p, "full_field"));
    }
  }

  {
    const std::string p = "calibration";
    const njson* s = section(j, root, "calibration", c);
    if (s)
      check_keys(*s, p, {"budget", "sim_dt", "threads", "penalty", "targets",
                         "bounds"});
    auto& co = cfg.calibration;
    co.budget = static_cast<int>(integer(s, p, "budget", co.budget, c));
    require(co.budget >= 8, p, "budget", "must be >= 8");
    co.sim_dt = number(s, p, "sim_dt", co.sim_dt, c);
    require(co.sim_dt > 0.0, p, "sim_dt", "must be positive");
    co.threads = static_cast<int>(integer(s, p, "threads", co.threads, c));
    require(co.threads >= 1, p, "threads", "must be >= 1");
    co.penalty = number(s, p, "penalty", co.penalty, c);
    require(co.penalty > 0.0, p, "penalty", "must be positive");

    const std::string tp = join(p, "targets");
    const njson* ts = nullptr;
    if (s && s->contains("targets")) {
      ts = &s->at("targets");
      if (!ts->is_object()) throw ConfigError(tp, "expected an object");
      check_keys(*ts, tp,
                 {"direct_peak", "direct_work", "recip4_peak", "recip4_work",
                  "recip1_peak", "recip1_work", "plateau_direct",
                  "plateau_recip4", "plateau_recip1", "weight_direct",
                  "weight_recip4", "weight_recip1", "tol_peak", "tol_work",
                  "tol_plateau"});
    } else {
      cfg.defaulted.push_back(tp);
    }
    auto& t = cfg.targets;
    t.direct_peak = number(ts, tp, "direct_peak", t.direct_peak, c);
    t.direct_work = number(ts, tp, "direct_work", t.direct_work, c);
    t.recip4_peak = number(ts, tp, "recip4_peak", t.recip4_peak, c);
    t.recip4_work = number(ts, tp, "recip4_work", t.recip4_work, c);
    t.recip1_peak = number(ts, tp, "recip1_peak", t.recip1_peak, c);
    t.recip1_work = number(ts, tp, "recip1_work", t.recip1_work, c);
    t.plateau_direct = number(ts, tp, "plateau_direct", t.plateau_direct, c);
    t.plateau_recip4 = number(ts, tp, "plateau_recip4", t.plateau_recip4, c);
    t.plateau_recip1 = number(ts, tp, "plateau_recip1", t.plateau_recip1, c);
    t.weight_direct = number(ts, tp, "weight_direct", t.weight_direct, c);
    t.weight_recip4 = number(ts, tp, "weight_recip4", t.weight_recip4, c);
    t.weight_recip1 = number(ts, tp, "weight_recip1", t.weight_recip1, c);
    t.tol_peak = number(ts, tp, "tol_peak", t.tol_peak, c);
    t.tol_work = number(ts, tp, "tol_work", t.tol_work, c);
    t.tol_plateau = number(ts, tp, "tol_plateau", t.tol_plateau, c);
    try {
      t.validate();
    } catch (const std::exception& e) {
      throw ConfigError(tp, e.what());
    }

    cfg.bounds = ParameterVector::default_free(cfg.sim);
    const std::string bp = join(p, "bounds");
    if (s && s->contains("bounds")) {
      const njson& bs = s->at("bounds");
      if (!bs.is_object()) throw ConfigError(bp, "expected an object");
      for (auto it = bs.begin(); it != bs.end(); ++it) {
        const auto found = std::find(cfg.bounds.names.begin(),
                                     cfg.bounds.names.end(), it.key());
        if (found == cfg.bounds.names.end())
          throw ConfigError(join(bp, it.key()), "unknown parameter");
        const njson& v = it.value();
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() ||
            !v[1].is_number())
          throw ConfigError(join(bp, it.key()), "expected [lo, hi]");
        const std::size_t i = static_cast<std::size_t>(
            std::distance(cfg.bounds.names.begin(), found));
        cfg.bounds.lo[i] = v[0].get<double>();
        cfg.bounds.hi[i] = v[1].get<double>();
        if (!(cfg.bounds.lo[i] <= cfg.bounds.hi[i]))
          throw ConfigError(join(bp, it.key()), "lo must be <= hi");
        if (cfg.bounds.values[i] < cfg.bounds.lo[i] ||
            cfg.bounds.values[i] > cfg.bounds.hi[i])
          throw ConfigError(join(bp, it.key()),
                            "initial value (from materials) outside bounds");
      }
    } else {
      cfg.defaulted.push_back(bp);
    }
  }

  try {
    cfg.sim.validate();
    cfg.roundtrip.validate();
  } catch (const std::exception& e) {
    throw ConfigError("", e.what());
  }
  return cfg;
}

AppConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

njson config_to_json(const AppConfig& cfg) {
  njson j;
  j["dt"] = cfg.sim.dt;
  j["dt_max"] = cfg.sim.dt_max;
  j["record_dt"] = cfg.sim.record_dt;
  j["seed"] = cfg.seed;

  njson g;
  g["n_segments"] = cfg.sim.geometry.n_segments;
  g["diameter"] = cfg.sim.geometry.diameter;
  g["length"] = cfg.sim.geometry.length;
  g["clearance"] = cfg.sim.geometry.clearance;
  j["geometry"] = g;

  njson f;
  f["f_breakaway"] = cfg.sim.materials.friction.f_breakaway;
  f["f_coulomb"] = cfg.sim.materials.friction.f_coulomb;
  f["v_breakaway"] = cfg.sim.materials.friction.v_breakaway;
  f["f_viscous"] = cfg.sim.materials.friction.f_viscous;
  f["extract_gain"] = cfg.sim.materials.friction.extract_gain;
  j["friction"] = f;

  njson k;
  k["k_parallel"] = cfg.sim.materials.kelvin.k_parallel;
  k["k_series"] = cfg.sim.materials.kelvin.k_series;
  k["c_damper"] = cfg.sim.materials.kelvin.c_damper;
  j["kelvin"] = k;

  j["cutting"] = njson{{"f_cut", cfg.sim.materials.cutting.f_cut}};

  njson r;
  r["p_static"] = cfg.sim.materials.radial.p_static;
  r["p_rate"] = cfg.sim.materials.radial.p_rate;
  r["ramp_len"] = cfg.sim.materials.radial.ramp_len;
  j["radial_push"] = r;

  njson gr;
  gr["n_axial"] = cfg.sim.grid.n_axial;
  gr["first_station"] = cfg.sim.grid.first_station;
  gr["axial_spacing"] = cfg.sim.grid.axial_spacing;
  gr["n_radial"] = cfg.sim.grid.n_radial;
  gr["first_offset"] = cfg.sim.grid.first_offset;
  gr["radial_spacing"] = cfg.sim.grid.radial_spacing;
  gr["lambda_r"] = cfg.sim.grid.lambda_r;
  j["grid"] = gr;

  njson so;
  so["v_tolerance"] = cfg.sim.solver.v_tolerance;
  so["bracket_factor"] = cfg.sim.solver.bracket_factor;
  so["scan_points"] = cfg.sim.solver.scan_points;
  so["stick_tol_frac"] = cfg.sim.solver.stick_tol_frac;
  j["solver"] = so;

  njson sc;
  sc["type"] = cfg.sim.schedule.kind == MotionSchedule::Kind::direct
                   ? "direct"
                   : "reciprocal";
  sc["v_probe"] = cfg.sim.schedule.v_probe;
  sc["depth"] = cfg.sim.schedule.depth;
  sc["v_segment"] = cfg.sim.schedule.v_segment;
  sc["stroke"] = cfg.sim.schedule.stroke;
  sc["cycles"] = cfg.sim.schedule.cycles;
  sc["segment_order"] = cfg.sim.schedule.segment_order;
  sc["hold_time"] = cfg.sim.schedule.hold_time;
  j["schedule"] = sc;

  njson an;
  an["plateau_slope_frac"] = cfg.analysis.plateau_slope_frac;
  an["filter_frac"] = cfg.analysis.filter_frac;
  j["analysis"] = an;

  njson o;
  o["fov_x"] = cfg.optics.fov_x_mm;
  o["fov_y"] = cfg.optics.fov_y_mm;
  o["resolution_um"] = cfg.optics.resolution_um_per_px;
  o["particle_diameter_px"] = cfg.optics.particle_diameter_px;
  o["particle_density"] = cfg.optics.particle_density_per_px2;
  o["noise_std"] = cfg.optics.noise_std;
  o["blob_peak"] = cfg.optics.blob_peak;
  o["seed"] = cfg.optics.seed;
  o["view_x0"] = cfg.optics.view_x0_mm;
  o["view_y0"] = cfg.optics.view_y0_mm;
  j["optics"] = o;

  njson pv;
  pv["frame_dt"] = cfg.roundtrip.frame_dt;
  pv["window"] = cfg.roundtrip.window;
  pv["overlap"] = cfg.roundtrip.overlap;
  pv["search_radius"] = cfg.roundtrip.search_radius;
  pv["full_field"] = cfg.roundtrip.full_field;
  j["piv"] = pv;

  njson cal;
  cal["budget"] = cfg.calibration.budget;
  cal["sim_dt"] = cfg.calibration.sim_dt;
  cal["threads"] = cfg.calibration.threads;
  cal["penalty"] = cfg.calibration.penalty;
  njson tg;
  tg["direct_peak"] = cfg.targets.direct_peak;
  tg["direct_work"] = cfg.targets.direct_work;
  tg["recip4_peak"] = cfg.targets.recip4_peak;
  tg["recip4_work"] = cfg.targets.recip4_work;
  tg["recip1_peak"] = cfg.targets.recip1_peak;
  tg["recip1_work"] = cfg.targets.recip1_work;
  tg["plateau_direct"] = cfg.targets.plateau_direct;
  tg["plateau_recip4"] = cfg.targets.plateau_recip4;
  tg["plateau_recip1"] = cfg.targets.plateau_recip1;
  tg["weight_direct"] = cfg.targets.weight_direct;
  tg["weight_recip4"] = cfg.targets.weight_recip4;
  tg["weight_recip1"] = cfg.targets.weight_recip1;
  tg["tol_peak"] = cfg.targets.tol_peak;
  tg["tol_work"] = cfg.targets.tol_work;
  tg["tol_plateau"] = cfg.targets.tol_plateau;
  cal["targets"] = tg;
  njson bounds;
  for (std::size_t i = 0; i < cfg.bounds.size(); ++i)
    bounds[cfg.bounds.names[i]] = njson::array({cfg.bounds.lo[i], cfg.bounds.hi[i]});
  cal["bounds"] = bounds;
  j["calibration"] = cal;
  return j;
}

}  // namespace

std::string serialize_config(const AppConfig& cfg) {
  return config_to_json(cfg).dump(2) + "\n";
}

std::string parameter_fragment(const ParameterVector& p) {
  njson j;
  auto put = [&](const char* sec, const char* key, double v) {
    j[sec][key] = v;
  };
  for (std::size_t i = 0; i < p.size(); ++i) {
    const std::string& n = p.names[i];
    const double v = p.values[i];
    if (n == "f_breakaway" || n == "f_coulomb" || n == "v_breakaway" ||
        n == "f_viscous")
      put("friction", n.c_str(), v);
    else if (n == "f_cut")
      put("cutting", n.c_str(), v);
    else
      put("kelvin", n.c_str(), v);
  }
  return j.dump(2) + "\n";
}

std::string provenance_json(const AppConfig& cfg) {
  njson j;
  j["effective_config"] = config_to_json(cfg);
  j["defaulted_keys"] = cfg.defaulted;
  return j.dump(2) + "\n";
}

bool config_equal(const AppConfig& a, const AppConfig& b) {
  return config_to_json(a) == config_to_json(b);
}

}  // namespace reciprosim
