#include "reciprosim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace reciprosim {

void ProbeGeometry::validate() const {
  if (n_segments != 4)
    throw std::invalid_argument("geometry: n_segments must be 4");
  if (!(diameter > 0.0) || !(length > 0.0))
    throw std::invalid_argument("geometry: diameter and length must be positive");
  if (!(clearance >= 0.0))
    throw std::invalid_argument("geometry: clearance must be >= 0");
}

void NodeGridSpec::validate() const {
  if (n_axial < 1) throw std::invalid_argument("grid: n_axial must be >= 1");
  if (n_radial < 1 || n_radial % 2 != 0)
    throw std::invalid_argument("grid: n_radial must be a positive even count");
  if (!(first_station >= 0.0))
    throw std::invalid_argument("grid: first_station must be >= 0");
  if (!(axial_spacing > 0.0))
    throw std::invalid_argument("grid: axial_spacing must be positive");
  if (!(first_offset > 0.0))
    throw std::invalid_argument("grid: first_offset must be positive");
  if (!(radial_spacing > 0.0))
    throw std::invalid_argument("grid: radial_spacing must be positive");
  if (!(lambda_r > 0.0))
    throw std::invalid_argument("grid: lambda_r must be positive");
}

void RadialPushParams::validate() const {
  if (!(p_static >= 0.0) || !(p_rate >= 0.0))
    throw std::invalid_argument("radial: push magnitudes must be >= 0");
  if (!(ramp_len > 0.0))
    throw std::invalid_argument("radial: ramp_len must be positive");
}

void SolverOptions::validate() const {
  if (!(v_tolerance > 0.0))
    throw std::invalid_argument("solver: v_tolerance must be positive");
  if (!(bracket_factor > 0.0))
    throw std::invalid_argument("solver: bracket_factor must be positive");
  if (scan_points < 8)
    throw std::invalid_argument("solver: scan_points must be >= 8");
  if (!(stick_tol_frac > 0.0))
    throw std::invalid_argument("solver: stick_tol_frac must be positive");
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(dt_max > 0.0)) throw std::invalid_argument("dt_max must be positive");
  if (dt > dt_max + 1e-15) throw std::invalid_argument("dt exceeds dt_max");
  if (!(record_dt > 0.0))
    throw std::invalid_argument("record_dt must be positive");
  const double k = record_dt / dt;
  if (std::abs(k - std::round(k)) > 1e-6 || std::round(k) < 1.0)
    throw std::invalid_argument("record_dt must be an integer multiple of dt");
  geometry.validate();
  materials.friction.validate();
  materials.kelvin.validate();
  materials.cutting.validate();
  materials.radial.validate();
  grid.validate();
  solver.validate();
  schedule.validate();
}

World make_world(const SimConfig& cfg) {
  World w;
  w.nodes.resize(cfg.grid.node_count());
  const int half = cfg.grid.n_radial / 2;
  for (int a = 0; a < cfg.grid.n_axial; ++a) {
    for (int r = 0; r < cfg.grid.n_radial; ++r) {
      World::Node& n = w.nodes[cfg.grid.index(a, r)];
      n.station = cfg.grid.first_station + a * cfg.grid.axial_spacing;
      // Rows mirror across the probe: r < half below, r >= half above,
      // nearest rows adjacent to the shaft.
      const int tier = (r < half) ? (half - 1 - r) : (r - half);
      n.offset = cfg.grid.first_offset + tier * cfg.grid.radial_spacing;
      n.y = (r < half) ? -n.offset : n.offset;
      n.coupling = std::exp(-n.offset / cfg.grid.lambda_r);
    }
  }
  return w;
}

namespace {

struct NodeDrive {
  std::array<double, 4> v_seg;    // mm/s
  std::array<bool, 4> in_contact;
  double scale;      // contact_fraction * coupling, per segment
  double cut_share;  // N, this node's slice of the crack-front force
};

// Force balance residual for a candidate node velocity v:
//   sum_i friction(v_seg_i - v) + cut_share - kelvin_force(u + v*dt)
double node_residual(const FrictionParams& fp, const KelvinParams& kp,
                     const KelvinState& ks, const NodeDrive& d, double dt,
                     double v) {
  double drive = d.cut_share;
  for (int i = 0; i < 4; ++i) {
    if (!d.in_contact[i]) continue;
    drive += friction_force(fp, d.v_seg[i] - v, d.scale);
  }
  const double x_new = ks.x + v * dt;
  const double relax = 1.0 + kp.k_series * dt / kp.c_damper;
  const double f_m = (ks.f_maxwell + kp.k_series * (x_new - ks.x)) / relax;
  return drive - (kp.k_parallel * x_new + f_m);
}

template <typename F>
double bisect(F&& res, double lo, double hi, double r_lo, double tol) {
  // r_lo carries the sign at lo; converge to tol on the interval width.
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double r_mid = res(mid);
    if (r_mid == 0.0) return mid;
    if ((r_mid > 0.0) == (r_lo > 0.0)) {
      lo = mid;
      r_lo = r_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Deterministic root hunt for the quasi-static node velocity. Prefers the
/// root nearest the previous velocity (velocity continuity); falls back to
/// a structured scan of the admissible bracket.
template <typename F>
double solve_node_velocity(F&& res, double v_prev, double v_bracket,
                           double v_breakaway, double tol, int scan_points,
                           std::span<const double> centers, double t_now) {
  const double r_at_prev = res(v_prev);
  if (r_at_prev == 0.0) return v_prev;

  // Phase 1: expanding window around the previous velocity.
  double h = std::max(v_breakaway / 8.0, 1e-4);
  for (; h <= 2.0 * v_bracket; h *= 4.0) {
    const double lo = std::max(v_prev - h, -v_bracket);
    const double hi = std::min(v_prev + h, v_bracket);
    const double r_lo = res(lo);
    if (r_lo == 0.0) return lo;
    const double r_hi = res(hi);
    if (r_hi == 0.0) return hi;
    if ((r_lo > 0.0) != (r_hi > 0.0)) {
      // Narrow down against v_prev first so we keep the nearest crossing.
      double a = lo, ra = r_lo;
      if ((r_at_prev > 0.0) != (r_hi > 0.0)) {
        a = v_prev;
        ra = r_at_prev;
        return bisect(res, a, hi, ra, tol);
      }
      return bisect(res, a, v_prev, ra, tol);
    }
    if (lo == -v_bracket && hi == v_bracket) break;
  }

  // Phase 2: structured scan. Stick/slip roots hide in narrow pockets near
  // each contact velocity (the rising friction branch spans only about one
  // breakaway velocity); a uniform scan would step straight over them.
  // Relaxation jumps (elastic unloading against a nearly flat kinetic
  // branch) can put the root far outside the nominal bracket, so the scan
  // range expands geometrically before giving up.
  for (double range = v_bracket; range <= 4096.0 * v_bracket; range *= 4.0) {
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(scan_points) + 64 * (centers.size() + 1));
    const double fine = v_breakaway / 16.0;
    for (double c : centers) {
      const double lo = std::max(c - 2.0 * v_breakaway, -range);
      const double hi = std::min(c + 2.0 * v_breakaway, range);
      for (double v = lo; v <= hi; v += fine) grid.push_back(v);
    }
    const double coarse = 2.0 * range / scan_points;
    for (double v = -range; v <= range; v += coarse) grid.push_back(v);
    grid.push_back(range);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    double best_lo = 0.0, best_r_lo = 0.0, best_hi = 0.0;
    double best_dist = std::numeric_limits<double>::infinity();
    bool found = false;
    double prev_v = grid.front();
    double prev_r = res(prev_v);
    if (prev_r == 0.0) return prev_v;
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const double v = grid[i];
      const double r = res(v);
      if (r == 0.0) return v;
      if ((prev_r > 0.0) != (r > 0.0)) {
        found = true;
        const double mid = 0.5 * (prev_v + v);
        const double dist = std::abs(mid - v_prev);
        if (dist < best_dist) {
          best_dist = dist;
          best_lo = prev_v;
          best_r_lo = prev_r;
          best_hi = v;
        }
      }
      prev_v = v;
      prev_r = r;
    }
    if (found) return bisect(res, best_lo, best_hi, best_r_lo, tol);
  }
  throw SimError(t_now,
                 "node velocity bracket failure (pathological parameters?)");
}

}  // namespace

namespace {

// Advance to the absolute time t_end. Taking the end time (rather than
// accumulating t + dt) keeps segment positions bit-identical to
// schedule_position(t_end) at the recorded instants.
void step_to(World& w, const SimConfig& cfg, double t_end, double dt) {
  const double t = t_end - dt;
  if (dt > cfg.dt_max + 1e-15)
    throw SimError(t, "step dt exceeds dt_max");

  const auto pos_new = cfg.schedule.position(t_end);
  std::array<double, 4> v_seg;
  double v_mean = 0.0;
  for (int i = 0; i < 4; ++i) {
    v_seg[i] = (pos_new[i] - w.segment_pos[i]) / dt;
    v_mean += 0.25 * v_seg[i];
  }

  const double lead_old = *std::max_element(w.segment_pos.begin(),
                                            w.segment_pos.end());
  const double lead_new = *std::max_element(pos_new.begin(), pos_new.end());
  const double v_lead = (lead_new - lead_old) / dt;
  const double f_cut_active =
      cutting_force(cfg.materials.cutting, lead_new, w.cut_depth, v_lead);
  w.cut_depth = std::max(w.cut_depth, lead_new);

  double coupling_sum = 0.0;
  for (auto& n : w.nodes) {
    if (!n.engaged && lead_new >= n.station) n.engaged = true;
    if (n.engaged) coupling_sum += n.coupling;
  }

  const FrictionParams& fp = cfg.materials.friction;
  const KelvinParams& kp = cfg.materials.kelvin;
  const double frac = cfg.geometry.contact_fraction();
  const double v_bracket = cfg.solver.bracket_factor *
                           std::max(cfg.schedule.max_speed(), 1.0);
  const double stick_tol = cfg.solver.stick_tol_frac * fp.v_breakaway;

  double reaction = 0.0;
  double routed_cut_power = 0.0;

  for (auto& n : w.nodes) {
    if (!n.engaged) {
      n.contact.fill(Contact::disengaged);
      continue;
    }
    NodeDrive d;
    d.v_seg = v_seg;
    d.scale = frac * n.coupling;
    d.cut_share =
        coupling_sum > 0.0 ? f_cut_active * n.coupling / coupling_sum : 0.0;
    for (int i = 0; i < 4; ++i) d.in_contact[i] = pos_new[i] >= n.station;

    auto res = [&](double v) {
      return node_residual(fp, kp, n.kelvin_x, d, dt, v);
    };
    double centers[6] = {0.0, n.v_prev};
    std::size_t n_centers = 2;
    for (int i = 0; i < 4; ++i)
      if (d.in_contact[i]) centers[n_centers++] = v_seg[i];
    const double v_n = solve_node_velocity(
        res, n.v_prev, v_bracket, fp.v_breakaway, cfg.solver.v_tolerance,
        cfg.solver.scan_points, std::span<const double>(centers, n_centers), t);

    // Contact classification and friction energy accounting use the solved
    // velocity and the same forces that entered the balance.
    for (int i = 0; i < 4; ++i) {
      if (!d.in_contact[i]) {
        n.contact[i] = Contact::disengaged;
        continue;
      }
      const double v_rel = v_seg[i] - v_n;
      n.contact[i] =
          std::abs(v_rel) > stick_tol ? Contact::slip : Contact::stick;
      const double f = friction_force(fp, v_rel, d.scale);
      w.energy.input_friction += f * v_seg[i] * dt;
      w.energy.dissipated_friction += f * v_rel * dt;
    }

    const double x_new = n.kelvin_x.x + v_n * dt;
    const double dx = x_new - n.kelvin_x.x;
    const double f_m_old_x = n.kelvin_x.f_maxwell;
    const auto kx = kelvin_step(kp, n.kelvin_x, x_new, dt);
    n.kelvin_x = kx.state;
    // Damper losses plus the implicit-step transfer terms; stick-slip jumps
    // dissipate a finite 1/2 k dx^2 per event that the continuous damper
    // rate would otherwise miss, leaving an O(1) hole in the ledger.
    w.energy.dissipated_damper +=
        kx.state.f_maxwell * kx.state.f_maxwell / kp.c_damper * dt +
        0.5 * kp.k_parallel * dx * dx +
        (kx.state.f_maxwell - f_m_old_x) * (kx.state.f_maxwell - f_m_old_x) /
            (2.0 * kp.k_series);
    routed_cut_power += d.cut_share * v_n;
    n.v_prev = v_n;
    reaction += kx.force;

    // Radial cavity expansion: quasi-static balance of the prescribed push
    // against the node's own viscoelastic element (no friction in Y).
    const RadialPushParams& rp = cfg.materials.radial;
    const double ramp =
        std::clamp((w.cut_depth - n.station) / rp.ramp_len, 0.0, 1.0);
    const double push = f_cut_active > 0.0 ? rp.p_rate * v_lead : 0.0;
    const double q =
        (n.y < 0.0 ? -1.0 : 1.0) * n.coupling * (rp.p_static + push) * ramp;
    const double relax = 1.0 + kp.k_series * dt / kp.c_damper;
    const double u_y = n.kelvin_y.x;
    const double u_y_new = (q - (n.kelvin_y.f_maxwell - kp.k_series * u_y) / relax) /
                           (kp.k_parallel + kp.k_series / relax);
    const double f_m_old_y = n.kelvin_y.f_maxwell;
    const auto ky = kelvin_step(kp, n.kelvin_y, u_y_new, dt);
    n.kelvin_y = ky.state;
    w.energy.input_radial += q * (u_y_new - u_y);
    w.energy.dissipated_damper +=
        ky.state.f_maxwell * ky.state.f_maxwell / kp.c_damper * dt +
        0.5 * kp.k_parallel * (u_y_new - u_y) * (u_y_new - u_y) +
        (ky.state.f_maxwell - f_m_old_y) * (ky.state.f_maxwell - f_m_old_y) /
            (2.0 * kp.k_series);
  }

  w.energy.input_cutting += f_cut_active * v_lead * dt;
  w.energy.dissipated_cutting +=
      f_cut_active * v_lead * dt - routed_cut_power * dt;

  double stored = 0.0;
  for (const auto& n : w.nodes) {
    stored += 0.5 * kp.k_parallel * n.kelvin_x.x * n.kelvin_x.x +
              n.kelvin_x.f_maxwell * n.kelvin_x.f_maxwell / (2.0 * kp.k_series);
    stored += 0.5 * kp.k_parallel * n.kelvin_y.x * n.kelvin_y.x +
              n.kelvin_y.f_maxwell * n.kelvin_y.f_maxwell / (2.0 * kp.k_series);
  }
  w.energy.stored_elastic = stored;

  w.reaction_force = reaction + f_cut_active;
  w.work += w.reaction_force * v_mean * dt;
  w.segment_pos = pos_new;
}

}  // namespace

void step(World& w, const SimConfig& cfg, double t, double dt) {
  step_to(w, cfg, t + dt, dt);
}

SimResult simulate(const SimConfig& cfg) {
  cfg.validate();
  World w = make_world(cfg);

  const double total = cfg.schedule.motion_duration() + cfg.schedule.hold_time;
  const long steps = std::max(0L, std::lround(std::ceil(total / cfg.dt - 1e-9)));
  const long rec = std::lround(cfg.record_dt / cfg.dt);

  SimResult out;
  out.grid = cfg.grid;
  const std::size_t n_nodes = w.nodes.size();
  out.node_station.reserve(n_nodes);
  out.node_y.reserve(n_nodes);
  for (const auto& n : w.nodes) {
    out.node_station.push_back(n.station);
    out.node_y.push_back(n.y);
  }
  out.node_ux.resize(n_nodes);
  out.node_uy.resize(n_nodes);
  out.contact_log.resize(n_nodes);

  const std::size_t reserve = static_cast<std::size_t>(steps / std::max(rec, 1L)) + 2;
  out.t.reserve(reserve);

  auto record = [&](double t_now) {
    out.t.push_back(t_now);
    for (int i = 0; i < 4; ++i) out.segment_pos[i].push_back(w.segment_pos[i]);
    for (std::size_t n = 0; n < n_nodes; ++n) {
      out.node_ux[n].push_back(w.nodes[n].u_x());
      out.node_uy[n].push_back(w.nodes[n].u_y());
      out.contact_log[n].push_back(w.nodes[n].contact);
    }
    out.reaction_force.push_back(w.reaction_force);
    out.cut_depth.push_back(w.cut_depth);
    out.work.push_back(w.work);
  };

  record(0.0);
  for (long i = 1; i <= steps; ++i) {
    step_to(w, cfg, i * cfg.dt, cfg.dt);
    if (i % rec == 0 || i == steps) record(i * cfg.dt);
  }
  out.energy = w.energy;
  return out;
}

double work_transferred(const SimResult& r) {
  if (r.work.empty()) throw std::invalid_argument("work_transferred: empty result");
  return r.work.back();
}

}  // namespace reciprosim
