#include "reciprosim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace reciprosim {

std::vector<double> moving_average(std::span<const double> v, int window) {
  const std::size_t n = v.size();
  std::vector<double> out(n);
  if (window < 1) window = 1;
  const int h = window / 2;
  // Prefix sums keep this O(n) for the wide windows cycle filtering needs.
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + v[i];
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= static_cast<std::size_t>(h) ? i - h : 0;
    const std::size_t hi = std::min(n - 1, i + h);
    out[i] = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
  }
  return out;
}

namespace {

int filter_window_samples(std::span<const double> t,
                          const AnalyzeOptions& opts) {
  const std::size_t n = t.size();
  const double dt = n > 1 ? (t.back() - t.front()) / static_cast<double>(n - 1)
                          : 1.0;
  int w;
  if (opts.cycle_period > 0.0)
    w = static_cast<int>(std::lround(opts.cycle_period / dt));
  else
    w = static_cast<int>(std::lround(opts.filter_frac * static_cast<double>(n)));
  w = std::clamp(w, 3, static_cast<int>(n) / 2);
  if (w % 2 == 0) ++w;
  return w;
}

std::vector<double> central_slope(std::span<const double> t,
                                  std::span<const double> g) {
  const std::size_t n = g.size();
  std::vector<double> s(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double dt = t[i + 1] - t[i - 1];
    s[i] = dt > 0.0 ? (g[i + 1] - g[i - 1]) / dt : 0.0;
  }
  if (n >= 2) {
    s[0] = s[1];
    s[n - 1] = s[n - 2];
  }
  return s;
}

std::size_t index_at_time(std::span<const double> t, double when) {
  const auto it = std::lower_bound(t.begin(), t.end(), when - 1e-12);
  return static_cast<std::size_t>(std::distance(t.begin(), it));
}

}  // namespace

PhaseSegmentation segment_phases(std::span<const double> t,
                                 std::span<const double> v,
                                 const AnalyzeOptions& opts) {
  if (t.size() != v.size())
    throw std::invalid_argument("segment_phases: size mismatch");
  const std::size_t n = v.size();
  if (n < 10) throw std::invalid_argument("segment_phases: need >= 10 samples");

  PhaseSegmentation seg;
  seg.n = n;
  seg.slope_frac = opts.plateau_slope_frac;
  seg.filter_window = filter_window_samples(t, opts);

  const std::vector<double> g = moving_average(v, seg.filter_window);
  const std::vector<double> s = central_slope(t, g);

  // Peak positive slope over the searchable region.
  std::size_t search_end = opts.t_stop >= 0.0
                               ? std::min(index_at_time(t, opts.t_stop), n)
                               : n;
  if (search_end < 2) search_end = 2;
  std::size_t i_ps = 0;
  double peak_slope = 0.0;
  for (std::size_t i = 0; i < search_end; ++i) {
    if (s[i] > peak_slope) {
      peak_slope = s[i];
      i_ps = i;
    }
  }

  const double amplitude =
      *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
  if (peak_slope <= 0.0 || amplitude <= 0.0) {
    // Flat trace: no rise, empty cut phase.
    seg.degenerate = true;
    seg.i1 = seg.i2 = opts.t_stop >= 0.0 ? search_end : n;
    seg.i1 = std::min(seg.i1, n);
    seg.i2 = seg.i1;
    seg.t1 = seg.i1 < n ? t[seg.i1] : t.back();
    seg.t2 = seg.t1;
    return seg;
  }

  // Thresholds carry a relative epsilon so exact-tie samples (synthetic
  // corners) resolve the same way under amplitude scaling.
  const double thr = (opts.plateau_slope_frac + 1e-9) * peak_slope;

  // Motion stop: given, or detected as the onset of the filtered drop.
  std::size_t i2 = search_end;
  if (opts.t_stop < 0.0) {
    i2 = n - 1;
    for (std::size_t i = i_ps; i < n; ++i) {
      if (s[i] < -thr) {
        i2 = i;
        break;
      }
    }
  }

  // Plateau onset: filtered slope falls under the relative threshold. The
  // centered filter smears a corner across half a window, so the crossing
  // systematically lags the knee; undo that delay.
  std::size_t i1 = i2;
  for (std::size_t i = i_ps; i < i2; ++i) {
    if (s[i] < thr) {
      i1 = i;
      break;
    }
  }
  if (i1 < i2) {
    const std::size_t lag = static_cast<std::size_t>(seg.filter_window / 2);
    i1 = i1 > i_ps + lag ? i1 - lag : i_ps;
  }

  seg.i1 = i1;
  seg.i2 = i2;
  seg.t1 = i1 < n ? t[i1] : t.back();
  seg.t2 = i2 < n ? t[i2] : t.back();
  return seg;
}

PhaseStats profile_stats(std::span<const double> t, std::span<const double> v,
                         const PhaseSegmentation& seg,
                         const AnalyzeOptions& opts) {
  if (t.size() != v.size() || v.size() != seg.n)
    throw std::invalid_argument("profile_stats: size mismatch");
  const std::size_t n = v.size();

  PhaseStats st;
  st.peak = *std::max_element(v.begin(), v.end());

  if (seg.i1 < seg.i2) {
    const double sum = std::accumulate(v.begin() + seg.i1, v.begin() + seg.i2, 0.0);
    st.plateau_mean = sum / static_cast<double>(seg.i2 - seg.i1);
  }

  if (seg.i2 < n) {
    const std::size_t len = n - seg.i2;
    const std::size_t tail = std::max<std::size_t>(1, len / 10);
    const double sum = std::accumulate(v.end() - tail, v.end(), 0.0);
    st.relaxation_level = sum / static_cast<double>(tail);
  } else {
    st.relaxation_level = v.back();
  }

  // Oscillation amplitude: detrend with the same filter, chunk the cutting
  // phase by one cycle (or one filter window) and average the excursions.
  if (seg.i1 < seg.i2) {
    const std::vector<double> trend = moving_average(v, seg.filter_window);
    const double dt = n > 1 ? (t.back() - t.front()) / static_cast<double>(n - 1)
                            : 1.0;
    std::size_t chunk =
        opts.cycle_period > 0.0
            ? static_cast<std::size_t>(std::lround(opts.cycle_period / dt))
            : static_cast<std::size_t>(seg.filter_window);
    chunk = std::max<std::size_t>(2, chunk);
    double total = 0.0;
    std::size_t chunks = 0;
    for (std::size_t a = seg.i1; a + chunk <= seg.i2; a += chunk) {
      double lo = v[a] - trend[a], hi = lo;
      for (std::size_t i = a; i < a + chunk; ++i) {
        const double d = v[i] - trend[i];
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
      total += hi - lo;
      ++chunks;
    }
    if (chunks == 0) {
      // Cut phase shorter than one chunk: single excursion.
      double lo = v[seg.i1] - trend[seg.i1], hi = lo;
      for (std::size_t i = seg.i1; i < seg.i2; ++i) {
        const double d = v[i] - trend[i];
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
      total = hi - lo;
      chunks = 1;
    }
    st.oscillation_amp = 0.5 * total / static_cast<double>(chunks);
  }
  return st;
}

ReductionReport compare(const RunStats& ref, const RunStats& test) {
  auto pct = [](double r, double x, const char* what) {
    if (r == 0.0)
      throw std::domain_error(std::string("compare: zero reference ") + what);
    return 100.0 * (r - x) / r;
  };
  ReductionReport rep;
  rep.peak_reduction_pct = pct(ref.peak, test.peak, "peak");
  rep.plateau_reduction_pct = pct(ref.plateau, test.plateau, "plateau");
  rep.work_reduction_pct = pct(ref.work, test.work, "work");
  return rep;
}

}  // namespace reciprosim
