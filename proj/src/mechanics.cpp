#include "reciprosim/mechanics.hpp"

#include <cmath>
#include <numbers>

namespace reciprosim {

void FrictionParams::validate() const {
  if (!(f_coulomb > 0.0) || !(f_breakaway >= f_coulomb))
    throw std::invalid_argument("friction: need f_breakaway >= f_coulomb > 0");
  if (!(v_breakaway > 0.0))
    throw std::invalid_argument("friction: v_breakaway must be positive");
  if (!(f_viscous >= 0.0))
    throw std::invalid_argument("friction: f_viscous must be non-negative");
  if (!(extract_gain >= 1.0))
    throw std::invalid_argument("friction: extract_gain must be >= 1");
}

void KelvinParams::validate() const {
  if (!(k_parallel > 0.0) || !(k_series > 0.0) || !(c_damper > 0.0))
    throw std::invalid_argument("kelvin: all parameters must be positive");
}

void CuttingParams::validate() const {
  if (!(f_cut >= 0.0))
    throw std::invalid_argument("cutting: f_cut must be non-negative");
}

void ForceBudget::validate() const {
  if (!(f_cut >= 0.0) || !(f_insert >= 0.0) || !(f_extract >= 0.0) ||
      !(f_drive >= 0.0))
    throw std::invalid_argument("budget: forces must be non-negative");
  if (n_stationary < 1)
    throw std::invalid_argument("budget: n_stationary must be >= 1");
}

double friction_force(const FrictionParams& p, double v_rel, double scale) {
  if (!std::isfinite(v_rel))
    throw std::invalid_argument("friction_force: v_rel must be finite");
  if (!(scale >= 0.0 && scale <= 1.0))
    throw std::invalid_argument("friction_force: scale must be in [0,1]");
  const double v_st = p.v_breakaway * std::numbers::sqrt2;
  const double v_coul = p.v_breakaway / 10.0;
  const double r = v_rel / v_st;
  const double stribeck = std::sqrt(2.0 * std::numbers::e) *
                          (p.f_breakaway - p.f_coulomb) * std::exp(-r * r) * r;
  const double coulomb = p.f_coulomb * std::tanh(v_rel / v_coul);
  double f = scale * (stribeck + coulomb) + p.f_viscous * v_rel;
  if (v_rel < 0.0) f *= p.extract_gain;
  return f;
}

KelvinStepResult kelvin_step(const KelvinParams& p, const KelvinState& s,
                             double x_new, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("kelvin_step: dt must be > 0");
  if (!std::isfinite(x_new))
    throw std::invalid_argument("kelvin_step: x_new must be finite");
  const double relax = 1.0 + p.k_series * dt / p.c_damper;
  const double f_m = (s.f_maxwell + p.k_series * (x_new - s.x)) / relax;
  return {p.k_parallel * x_new + f_m, KelvinState{x_new, f_m}};
}

double cutting_force(const CuttingParams& p, double tip_pos, double cut_depth,
                     double v_tip) {
  if (!(cut_depth >= 0.0))
    throw std::invalid_argument("cutting_force: cut_depth must be >= 0");
  if (!std::isfinite(tip_pos) || !std::isfinite(v_tip))
    throw std::invalid_argument("cutting_force: inputs must be finite");
  return (tip_pos >= cut_depth && v_tip > 0.0) ? p.f_cut : 0.0;
}

FeasibilityReport feasible_reciprocal(const ForceBudget& b) {
  b.validate();
  FeasibilityReport r;
  const double need = b.f_cut + b.f_insert;
  const double hold = b.n_stationary * b.f_extract;
  r.eq1_holds = b.f_extract < need && need < b.f_drive;
  r.eq2_holds = need < b.f_drive && b.f_drive < hold;
  r.margin = hold - need;
  return r;
}

}  // namespace reciprosim
