#pragma once

#include <array>
#include <stdexcept>

namespace reciprosim {

/// Kinematic command generator for the four probe segments.
///
/// Direct: all four segments advance together at v_probe until depth.
/// Reciprocal: segments advance one at a time in segment_order, each by
/// `stroke` at v_segment, cyclically with no pauses; every segment has
/// advanced k*stroke after cycle k.
struct MotionSchedule {
  enum class Kind { direct, reciprocal };

  Kind kind = Kind::direct;

  // direct
  double v_probe = 1.0;  // mm/s
  double depth = 70.0;   // mm

  // reciprocal
  double v_segment = 4.0;  // mm/s
  double stroke = 5.0;     // mm
  int cycles = 14;
  std::array<int, 4> segment_order{0, 1, 2, 3};

  double hold_time = 30.0;  // s, post-insertion dwell

  void validate() const;

  /// Time at which all commanded motion has finished.
  double motion_duration() const;

  /// Commanded positions of the four segments at time t >= 0 (mm).
  std::array<double, 4> position(double t) const;

  /// Fastest commanded segment speed (mm/s), used for solver brackets.
  double max_speed() const;

  static MotionSchedule direct(double v_probe, double depth,
                               double hold_time = 30.0);
  static MotionSchedule reciprocal(double v_segment, double stroke, int cycles,
                                   double hold_time = 30.0);
};

inline std::array<double, 4> schedule_position(const MotionSchedule& s,
                                               double t) {
  return s.position(t);
}

}  // namespace reciprosim
