#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "reciprosim/mechanics.hpp"
#include "reciprosim/schedule.hpp"

namespace reciprosim {

struct ProbeGeometry {
  int n_segments = 4;
  double diameter = 6.0;    // mm
  double length = 130.0;    // mm
  double clearance = 0.15;  // mm, interlocking rail gap

  double contact_fraction() const { return 1.0 / n_segments; }
  void validate() const;
};

/// Tissue observation grid mirroring the tracked 5x6 matrix: n_axial
/// stations along the shaft, n_radial rows split symmetrically on both
/// sides of the probe, nearest rows at first_offset from the surface.
struct NodeGridSpec {
  int n_axial = 5;
  double first_station = 20.0;  // mm from the sample surface
  double axial_spacing = 6.6;   // mm
  int n_radial = 6;             // even: n_radial/2 rows per side
  double first_offset = 0.5;    // mm from the probe surface
  double radial_spacing = 4.0;  // mm between rows on one side
  double lambda_r = 5.0;        // mm, radial coupling decay length

  void validate() const;
  int node_count() const { return n_axial * n_radial; }
  /// Flat node index; axial-major, radial rows bottom to top.
  int index(int axial, int radial) const { return axial * n_radial + radial; }
};

/// Quasi-static radial (Y) cavity-expansion source: a static push once the
/// crack front has passed plus a rate boost while the lead tip cuts.
struct RadialPushParams {
  double p_static = 0.016;  // N at unit coupling
  double p_rate = 0.004;    // N per mm/s of crack advance
  double ramp_len = 3.0;    // mm of crack advance to open the cavity

  void validate() const;
};

struct SolverOptions {
  double v_tolerance = 1e-9;    // mm/s, node velocity bisection tolerance
  double bracket_factor = 10.0; // bracket = +/- factor * max segment speed
  int scan_points = 64;         // bracket subdivisions when hunting a sign change
  double stick_tol_frac = 1.0;  // stick/slip split at frac * v_breakaway

  void validate() const;
};

struct MaterialSet {
  FrictionParams friction;
  KelvinParams kelvin;
  CuttingParams cutting;
  RadialPushParams radial;
};

struct SimConfig {
  double dt = 1e-3;        // s
  double dt_max = 1e-3;    // s
  double record_dt = 1e-2; // s, output sampling period (multiple of dt)
  ProbeGeometry geometry;
  MaterialSet materials;
  NodeGridSpec grid;
  SolverOptions solver;
  MotionSchedule schedule;

  void validate() const;
};

enum class Contact : std::uint8_t { disengaged = 0, stick = 1, slip = 2 };

/// Running energy ledger, all terms cumulative in mJ (N*mm).
struct EnergyLedger {
  double input_friction = 0.0;   // sum over segments of friction force * segment velocity
  double input_cutting = 0.0;    // crack-front force * lead tip velocity
  double input_radial = 0.0;     // radial source force * radial node velocity
  double dissipated_friction = 0.0;  // friction force * slip velocity
  double dissipated_damper = 0.0;    // Maxwell damper losses, both axes
  double dissipated_cutting = 0.0;   // crack-front losses not forwarded to nodes
  double stored_elastic = 0.0;       // springs + Maxwell arms, current state

  double input_total() const {
    return input_friction + input_cutting + input_radial;
  }
  double dissipated_total() const {
    return dissipated_friction + dissipated_damper + dissipated_cutting;
  }
  /// input - (stored + dissipated); O(dt) discretisation remainder.
  double closure_residual() const {
    return input_total() - stored_elastic - dissipated_total();
  }
};

struct World {
  struct Node {
    double station = 0.0;   // mm, axial position
    double y = 0.0;         // mm, signed radial position of the row
    double offset = 0.0;    // mm, distance from the probe surface
    double coupling = 1.0;  // exp(-offset / lambda_r)
    KelvinState kelvin_x;
    KelvinState kelvin_y;
    double v_prev = 0.0;  // mm/s, last solved axial velocity
    bool engaged = false;
    std::array<Contact, 4> contact{Contact::disengaged, Contact::disengaged,
                                   Contact::disengaged, Contact::disengaged};

    double u_x() const { return kelvin_x.x; }
    double u_y() const { return kelvin_y.x; }
  };

  std::array<double, 4> segment_pos{0.0, 0.0, 0.0, 0.0};
  double cut_depth = 0.0;
  double reaction_force = 0.0;  // N, latest step
  double work = 0.0;            // mJ, cumulative reaction * mean velocity
  std::vector<Node> nodes;
  EnergyLedger energy;
};

struct SimError : std::runtime_error {
  double t;
  SimError(double t_, const std::string& what)
      : std::runtime_error(what), t(t_) {}
};

struct SimResult {
  std::vector<double> t;
  std::array<std::vector<double>, 4> segment_pos;
  std::vector<std::vector<double>> node_ux;  // [node][sample]
  std::vector<std::vector<double>> node_uy;
  std::vector<double> reaction_force;
  std::vector<double> cut_depth;
  std::vector<double> work;
  std::vector<std::vector<std::array<Contact, 4>>> contact_log;  // [node][sample]
  EnergyLedger energy;  // final totals

  // Grid geometry carried along for downstream consumers.
  NodeGridSpec grid;
  std::vector<double> node_station;  // mm, per node
  std::vector<double> node_y;        // mm, per node

  std::size_t samples() const { return t.size(); }
};

World make_world(const SimConfig& cfg);

/// Advance the world from t to t+dt under the schedule. Quasi-static: node
/// velocities are solved from the friction/viscoelastic balance each step.
void step(World& w, const SimConfig& cfg, double t, double dt);

SimResult simulate(const SimConfig& cfg);

/// Final cumulative transferred work (mJ).
double work_transferred(const SimResult& r);

}  // namespace reciprosim
