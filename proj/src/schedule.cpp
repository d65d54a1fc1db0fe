#include "reciprosim/schedule.hpp"

#include <algorithm>
#include <cmath>

namespace reciprosim {

void MotionSchedule::validate() const {
  if (!(hold_time >= 0.0))
    throw std::invalid_argument("schedule: hold_time must be >= 0");
  if (kind == Kind::direct) {
    if (!(v_probe > 0.0))
      throw std::invalid_argument("schedule: v_probe must be positive");
    if (!(depth >= 0.0))
      throw std::invalid_argument("schedule: depth must be >= 0");
  } else {
    if (!(v_segment > 0.0))
      throw std::invalid_argument("schedule: v_segment must be positive");
    if (!(stroke > 0.0))
      throw std::invalid_argument("schedule: stroke must be positive");
    if (cycles < 0)
      throw std::invalid_argument("schedule: cycles must be >= 0");
    std::array<bool, 4> seen{};
    for (int s : segment_order) {
      if (s < 0 || s > 3 || seen[s])
        throw std::invalid_argument(
            "schedule: segment_order must be a permutation of 0..3");
      seen[s] = true;
    }
  }
}

double MotionSchedule::motion_duration() const {
  if (kind == Kind::direct) return depth / v_probe;
  return static_cast<double>(cycles) * 4.0 * stroke / v_segment;
}

double MotionSchedule::max_speed() const {
  return kind == Kind::direct ? v_probe : v_segment;
}

std::array<double, 4> MotionSchedule::position(double t) const {
  if (!(t >= 0.0)) throw std::invalid_argument("schedule: t must be >= 0");
  std::array<double, 4> pos{0.0, 0.0, 0.0, 0.0};
  if (kind == Kind::direct) {
    const double x = std::min(v_probe * t, depth);
    pos.fill(x);
    return pos;
  }
  const double stroke_time = stroke / v_segment;
  const double total = motion_duration();
  const double tc = std::min(t, total);
  // Completed full cycles advance every segment by `stroke`.
  double cycle_f = std::floor(tc / (4.0 * stroke_time));
  double rem = tc - cycle_f * 4.0 * stroke_time;
  // Guard the t == total boundary against floating roundoff.
  if (cycle_f >= static_cast<double>(cycles)) {
    cycle_f = static_cast<double>(cycles);
    rem = 0.0;
  }
  for (auto& p : pos) p = cycle_f * stroke;
  int j = static_cast<int>(std::floor(rem / stroke_time));
  j = std::clamp(j, 0, 3);
  for (int k = 0; k < j; ++k) pos[segment_order[k]] += stroke;
  const double frac = rem - j * stroke_time;
  pos[segment_order[j]] += std::min(v_segment * frac, stroke);
  return pos;
}

MotionSchedule MotionSchedule::direct(double v_probe, double depth,
                                      double hold_time) {
  MotionSchedule s;
  s.kind = Kind::direct;
  s.v_probe = v_probe;
  s.depth = depth;
  s.hold_time = hold_time;
  return s;
}

MotionSchedule MotionSchedule::reciprocal(double v_segment, double stroke,
                                          int cycles, double hold_time) {
  MotionSchedule s;
  s.kind = Kind::reciprocal;
  s.v_segment = v_segment;
  s.stroke = stroke;
  s.cycles = cycles;
  s.hold_time = hold_time;
  return s;
}

}  // namespace reciprosim
