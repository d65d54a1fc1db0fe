#pragma once

#include <string>
#include <vector>

#include "reciprosim/config.hpp"
#include "reciprosim/piv.hpp"
#include "reciprosim/simulator.hpp"

namespace reciprosim {

/// Closed loop: simulate -> render synthetic particle frames from the node
/// displacement field -> recover the field pair by pair -> track the grid.
struct RoundtripResult {
  TrackSeries recovered;
  TrackSeries truth;  // node traces sampled at the frame times
  std::vector<double> frame_times;
  int observation_point = 0;  // flat index of the far-end near-surface point
  double rms_error_mm = 0.0;  // recovered vs truth X at the observation point
  double truth_peak_mm = 0.0;
};

/// Displacement field of one recorded sample, interpolated over the node
/// grid (clamped outside it).
BilinearField field_at_sample(const SimResult& r, std::size_t sample);

TrackGrid track_grid_from(const SimResult& r);

RoundtripResult piv_roundtrip(const AppConfig& cfg, int threads = 1,
                              const std::string& frames_dir = "");

}  // namespace reciprosim
