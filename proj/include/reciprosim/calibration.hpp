#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "reciprosim/analysis.hpp"
#include "reciprosim/simulator.hpp"

namespace reciprosim {

/// Measured summary statistics the material parameters are fitted against:
/// peak reaction force and transferred work per protocol, plus the plateau
/// displacement of the far-end near-surface tracked point.
struct CalibrationTargets {
  double direct_peak = 0.69;   // N
  double direct_work = 25.23;  // mJ
  double recip4_peak = 0.56;
  double recip4_work = 19.69;
  double recip1_peak = 0.37;
  double recip1_work = 12.92;
  double plateau_direct = 3.63;  // mm
  double plateau_recip4 = 2.92;
  double plateau_recip1 = 2.24;

  double weight_direct = 1.0;
  double weight_recip4 = 1.0;
  double weight_recip1 = 0.5;  // single-trial data gets half weight

  double tol_peak = 0.10;  // relative acceptance tolerances, for reporting
  double tol_work = 0.15;
  double tol_plateau = 0.15;

  void validate() const;
};

/// Bounded free parameters. The default free set covers the friction
/// levels, the cutting resistance and the viscoelastic element.
struct ParameterVector {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t size() const { return names.size(); }
  void validate() const;

  static ParameterVector default_free(const SimConfig& base);
};

/// Protocols evaluated by the loss: matched direct and reciprocal runs
/// reaching the same depth (depth = stroke * cycles).
struct ProtocolSet {
  MotionSchedule direct;
  MotionSchedule recip_fast;
  MotionSchedule recip_slow;

  static ProtocolSet matched(double stroke = 5.0, int cycles = 14,
                             double v_direct = 1.0, double v_fast = 4.0,
                             double v_slow = 1.0, double hold_time = 30.0);
};

struct CalibrationOptions {
  double sim_dt = 4e-3;    // coarser than production runs; fit-time speed
  int budget = 300;        // loss evaluations
  double penalty = 1e6;    // loss for invalid parameters / failed runs
  int threads = 1;         // parallel protocol evaluation
  ProtocolSet protocols = ProtocolSet::matched();
};

struct ProtocolStats {
  double peak_force = 0.0;  // N
  double work = 0.0;        // mJ
  double plateau = 0.0;     // mm at the observation node, NaN if undefined
};

/// Flat node index of the far-end row nearest the probe surface (the
/// tracked [5,3] point of a 5x6 grid).
int observation_node(const NodeGridSpec& grid);

ProtocolStats extract_protocol_stats(const SimResult& r,
                                     const MotionSchedule& schedule);

/// Overrides the named free parameters on a copy of the base config.
SimConfig with_parameters(const SimConfig& base, const ParameterVector& p);

struct LossBreakdown {
  std::array<double, 9> rel_err{};  // signed (value - target)/target
  std::array<double, 9> values{};
  double total = 0.0;
  bool failed = false;
  std::string diagnostic;
};

/// Weighted relative squared error over all nine targets. Deterministic;
/// simulation failures and invalid parameters yield the penalty value.
double calibration_loss(const ParameterVector& p, const CalibrationTargets& t,
                        const SimConfig& base, const CalibrationOptions& opts,
                        LossBreakdown* breakdown = nullptr);

struct FitResult {
  std::vector<double> best;     // parameter values
  double best_loss = 0.0;
  std::vector<double> history;  // best-so-far loss, one entry per evaluation
  std::size_t evaluations = 0;
};

/// Bounded Nelder-Mead simplex search with projection onto the box bounds.
/// Deterministic for a fixed objective and initial point; the best-so-far
/// history is non-increasing by construction.
FitResult fit_simplex(const std::function<double(const std::vector<double>&)>& f,
                      const std::vector<double>& init,
                      const std::vector<double>& lo,
                      const std::vector<double>& hi, std::size_t budget);

/// End-to-end calibration of the default free set.
FitResult fit(const ParameterVector& init, const CalibrationTargets& targets,
              const SimConfig& base, const CalibrationOptions& opts);

}  // namespace reciprosim
