#include "reciprosim/roundtrip.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "reciprosim/calibration.hpp"
#include "reciprosim/rng.hpp"

namespace reciprosim {

BilinearField field_at_sample(const SimResult& r, std::size_t sample) {
  const int na = r.grid.n_axial;
  const int nr = r.grid.n_radial;
  std::vector<double> xs(na), ys(nr);
  for (int a = 0; a < na; ++a) xs[a] = r.node_station[r.grid.index(a, 0)];
  for (int rr = 0; rr < nr; ++rr) ys[rr] = r.node_y[r.grid.index(0, rr)];
  std::vector<double> ux(std::size_t(na) * nr), uy(std::size_t(na) * nr);
  for (int rr = 0; rr < nr; ++rr) {
    for (int a = 0; a < na; ++a) {
      const int node = r.grid.index(a, rr);
      ux[std::size_t(rr) * na + a] = r.node_ux[node][sample];
      uy[std::size_t(rr) * na + a] = r.node_uy[node][sample];
    }
  }
  return BilinearField(std::move(xs), std::move(ys), std::move(ux),
                       std::move(uy));
}

TrackGrid track_grid_from(const SimResult& r) {
  TrackGrid g;
  g.n_axial = r.grid.n_axial;
  g.n_radial = r.grid.n_radial;
  g.x_mm = r.node_station;
  g.y_mm = r.node_y;
  return g;
}

RoundtripResult piv_roundtrip(const AppConfig& cfg, int threads,
                              const std::string& frames_dir) {
  cfg.roundtrip.validate();
  const SimResult sim = simulate(cfg.sim);

  // Frame times must land on recorded samples.
  const double ratio = cfg.roundtrip.frame_dt / cfg.sim.record_dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-6 || std::round(ratio) < 1.0)
    throw std::invalid_argument(
        "piv: frame_dt must be an integer multiple of record_dt");
  const auto stride = static_cast<std::size_t>(std::lround(ratio));
  std::vector<std::size_t> frame_samples;
  for (std::size_t s = 0; s < sim.samples(); s += stride)
    frame_samples.push_back(s);
  if (frame_samples.size() < 2)
    throw std::invalid_argument("piv: run too short for one frame pair");

  RoundtripResult out;
  out.frame_times.reserve(frame_samples.size());
  for (std::size_t s : frame_samples) out.frame_times.push_back(sim.t[s]);

  const TrackGrid grid = track_grid_from(sim);
  out.observation_point = observation_node(sim.grid);

  // Ground-truth traces at the frame times.
  out.truth.n_axial = grid.n_axial;
  out.truth.n_radial = grid.n_radial;
  out.truth.t = out.frame_times;
  const std::size_t n_pts = grid.x_mm.size();
  out.truth.disp_x_mm.assign(n_pts, {});
  out.truth.disp_y_mm.assign(n_pts, {});
  out.truth.truncated_at.assign(n_pts, -1);
  for (std::size_t p = 0; p < n_pts; ++p) {
    for (std::size_t s : frame_samples) {
      out.truth.disp_x_mm[p].push_back(sim.node_ux[p][s]);
      out.truth.disp_y_mm[p].push_back(sim.node_uy[p][s]);
    }
  }

  const std::vector<Particle> particles = seed_particles(cfg.optics);

  auto render = [&](std::size_t frame_idx) {
    const BilinearField field = field_at_sample(sim, frame_samples[frame_idx]);
    const auto warped = warp_particles(particles, field);
    OpticsSpec opts = cfg.optics;
    opts.seed = Rng::mix(cfg.optics.seed, frame_idx + 1);
    return synth_frame(warped, opts);
  };

  PivOptions popts;
  popts.window = cfg.roundtrip.window;
  popts.overlap = cfg.roundtrip.overlap;
  popts.search_radius = cfg.roundtrip.search_radius;
  popts.res_mm_per_px = cfg.optics.res_mm();
  popts.threads = std::max(1, threads);

  TrackState tracker(grid, cfg.optics);

  ImageFrame prev = render(0);
  if (!frames_dir.empty()) {
    std::filesystem::create_directories(frames_dir);
    write_pgm16(frames_dir + "/frame_000000.pgm", prev);
  }
  char name[64];
  for (std::size_t k = 1; k < frame_samples.size(); ++k) {
    ImageFrame cur = render(k);
    if (!frames_dir.empty()) {
      std::snprintf(name, sizeof(name), "/frame_%06zu.pgm", k);
      write_pgm16(frames_dir + name, cur);
    }
    if (cfg.roundtrip.full_field) {
      popts.roi_points.reset();
    } else {
      std::vector<std::pair<double, double>> roi;
      roi.reserve(n_pts);
      for (std::size_t p = 0; p < n_pts; ++p)
        roi.emplace_back(tracker.x_px()[p], tracker.y_px()[p]);
      popts.roi_points = std::move(roi);
    }
    const VectorField field = compute_field(prev, cur, popts);
    tracker.advance(field);
    prev = std::move(cur);
  }
  out.recovered = tracker.series(out.frame_times);

  // Error metric at the observation point.
  const auto& rec = out.recovered.disp_x_mm[out.observation_point];
  const auto& tru = out.truth.disp_x_mm[out.observation_point];
  double sq = 0.0;
  double peak = 0.0;
  for (std::size_t k = 0; k < rec.size(); ++k) {
    const double e = rec[k] - tru[k];
    sq += e * e;
    peak = std::max(peak, std::abs(tru[k]));
  }
  out.rms_error_mm = std::sqrt(sq / static_cast<double>(rec.size()));
  out.truth_peak_mm = peak;
  return out;
}

}  // namespace reciprosim
