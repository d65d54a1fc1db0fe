#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace reciprosim {

struct AnalyzeOptions {
  double plateau_slope_frac = 0.10;  // plateau onset at this fraction of peak slope
  double cycle_period = 0.0;         // s; filter window when > 0
  double t_stop = -1.0;              // s; motion stop when >= 0, else detected
  double filter_frac = 0.05;         // fallback filter window, fraction of trace
};

/// Deformation / cutting / relaxation split of a trace.
/// Indices partition [0, n): deform [i0,i1), cut [i1,i2), relax [i2,n).
struct PhaseSegmentation {
  std::size_t i0 = 0;
  std::size_t i1 = 0;
  std::size_t i2 = 0;
  std::size_t n = 0;
  double t1 = 0.0;
  double t2 = 0.0;
  bool degenerate = false;    // no detectable rise; cut phase empty
  double slope_frac = 0.0;    // threshold actually used
  int filter_window = 0;      // samples
};

struct PhaseStats {
  double peak = 0.0;                  // global max of the raw trace
  std::optional<double> plateau_mean; // mean over the cutting phase
  double relaxation_level = 0.0;      // mean of the trailing 10% of relax
  double oscillation_amp = 0.0;       // half mean peak-to-trough, detrended cut
};

struct ReductionReport {
  double peak_reduction_pct = 0.0;
  double plateau_reduction_pct = 0.0;
  double work_reduction_pct = 0.0;
};

/// Summary triple compared across runs.
struct RunStats {
  double peak = 0.0;     // N or mm
  double plateau = 0.0;  // N or mm
  double work = 0.0;     // mJ
};

/// Centered moving average; the window shrinks symmetrically at the edges.
std::vector<double> moving_average(std::span<const double> v, int window);

PhaseSegmentation segment_phases(std::span<const double> t,
                                 std::span<const double> v,
                                 const AnalyzeOptions& opts);

PhaseStats profile_stats(std::span<const double> t, std::span<const double> v,
                         const PhaseSegmentation& seg,
                         const AnalyzeOptions& opts);

/// Percentage reductions 100*(ref - test)/ref per component.
ReductionReport compare(const RunStats& ref, const RunStats& test);

}  // namespace reciprosim
