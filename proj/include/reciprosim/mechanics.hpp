#pragma once

#include <stdexcept>

namespace reciprosim {

// Unit system used throughout: mm, N, s. Energies come out in N*mm = mJ.

/// Velocity-dependent shaft friction: Stribeck peak + Coulomb level +
/// viscous drag, in the smooth (integrator-friendly) form.
struct FrictionParams {
  double f_breakaway = 0.025;  // N, static/breakaway peak per unit contact scale
  double f_coulomb = 0.010;    // N, kinetic level
  double v_breakaway = 0.25;   // mm/s, speed at which the breakaway peak occurs
  double f_viscous = 0.0042;   // N*s/mm
  double extract_gain = 1.0;   // grip multiplier when v_rel < 0 (>= 1)

  void validate() const;
};

/// Standard linear solid: spring k_parallel in parallel with a
/// k_series + c_damper Maxwell arm.
struct KelvinParams {
  double k_parallel = 0.0074;  // N/mm, equilibrium spring
  double k_series = 0.015;     // N/mm, Maxwell-arm spring
  double c_damper = 0.060;     // N*s/mm, Maxwell-arm damper

  void validate() const;
};

struct KelvinState {
  double x = 0.0;          // mm, element elongation
  double f_maxwell = 0.0;  // N, internal Maxwell-arm force
};

struct CuttingParams {
  double f_cut = 0.02;  // N, constant resistance at an advancing crack front

  void validate() const;
};

/// Per-segment force budget for the anchoring predicates.
struct ForceBudget {
  double f_cut = 0.0;      // N
  double f_insert = 0.0;   // N
  double f_extract = 0.0;  // N
  double f_drive = 0.0;    // N
  int n_stationary = 3;    // holding segments of a four-part probe

  void validate() const;
};

struct FeasibilityReport {
  bool eq1_holds = false;
  bool eq2_holds = false;
  double margin = 0.0;  // N, n_stationary*f_extract - (f_cut + f_insert)
};

/// Friction force exerted on the tissue by a sliding contact, for relative
/// velocity v_rel (contact surface minus tissue, mm/s) and contact scale in
/// [0,1] (fraction of circumference engaged, radial decay folded in).
///
/// f = scale * [sqrt(2e) (f_brk - f_coul) exp(-(v/v_St)^2) (v/v_St)
///              + f_coul tanh(v/v_Coul)] + f_viscous v
/// with v_St = v_breakaway*sqrt(2), v_Coul = v_breakaway/10.
/// Odd in v_rel at the default extract_gain of 1.
double friction_force(const FrictionParams& p, double v_rel, double scale);

struct KelvinStepResult {
  double force = 0.0;  // N, element force at the end of the step
  KelvinState state;
};

/// Implicit-Euler step of the standard linear solid driven to elongation
/// x_new over dt:
///   f_m' = (f_m + k_series*(x_new - x)) / (1 + k_series*dt/c_damper)
///   force = k_parallel*x_new + f_m'
KelvinStepResult kelvin_step(const KelvinParams& p, const KelvinState& s,
                             double x_new, double dt);

/// Crack-front resistance: f_cut while the tip advances into uncut material
/// (tip_pos >= cut_depth and v_tip > 0), zero inside the cut channel or when
/// retracting.
double cutting_force(const CuttingParams& p, double tip_pos, double cut_depth,
                     double v_tip);

/// Anchoring predicates for reciprocal insertion:
///   eq1: f_extract < f_cut + f_insert < f_drive
///   eq2: f_cut + f_insert < f_drive < n_stationary * f_extract
/// margin = n_stationary*f_extract - (f_cut + f_insert).
FeasibilityReport feasible_reciprocal(const ForceBudget& b);

}  // namespace reciprosim
