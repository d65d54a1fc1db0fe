#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace reciprosim {

/// Synthetic imaging geometry. World coordinates are mm: x axial (insertion
/// direction), y radial, view origin at (view_x0_mm, view_y0_mm) = bottom
/// left pixel corner. Row 0 of a frame is the bottom of the view.
struct OpticsSpec {
  double fov_x_mm = 39.42;             // view width
  double fov_y_mm = 27.58;             // view height
  double resolution_um_per_px = 27.4;  // square pixels
  double particle_diameter_px = 2.0;   // e^-2 blob diameter
  double particle_density_per_px2 = 0.02;
  double noise_std = 1.0;   // grey levels, additive Gaussian
  double blob_peak = 8000;  // grey levels, 16-bit range
  std::uint64_t seed = 7;
  double view_x0_mm = 18.5;
  double view_y0_mm = -13.0;

  void validate() const;
  double res_mm() const { return resolution_um_per_px * 1e-3; }
  int width_px() const;
  int height_px() const;
};

struct ImageFrame {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> px;  // row-major, row 0 = bottom

  std::uint16_t at(int x, int y) const { return px[std::size_t(y) * width + x]; }
  std::uint16_t& at(int x, int y) { return px[std::size_t(y) * width + x]; }
};

struct Particle {
  double x_mm = 0.0;
  double y_mm = 0.0;
};

/// Uniform random particle positions covering the view at the spec density.
std::vector<Particle> seed_particles(const OpticsSpec& opts);

/// Render particles as pixel-integrated Gaussian blobs plus additive noise.
/// Deterministic for a fixed opts.seed; out-of-view particles are clipped.
ImageFrame synth_frame(std::span<const Particle> particles,
                       const OpticsSpec& opts);

/// Displacement field on a rectangular node grid, bilinearly interpolated
/// and clamped to the hull outside it. Coordinates in mm.
class BilinearField {
 public:
  BilinearField() = default;
  BilinearField(std::vector<double> xs, std::vector<double> ys,
                std::vector<double> ux, std::vector<double> uy);

  /// (dx, dy) in mm at an arbitrary point.
  std::pair<double, double> sample(double x_mm, double y_mm) const;

 private:
  std::vector<double> xs_, ys_;  // ascending grid lines
  std::vector<double> ux_, uy_;  // [iy * nx + ix]
  double interp(const std::vector<double>& f, double x, double y) const;
};

std::vector<Particle> warp_particles(std::span<const Particle> particles,
                                     const BilinearField& field);

template <typename F>
std::vector<Particle> warp_particles(std::span<const Particle> particles,
                                     F&& field) {
  std::vector<Particle> out;
  out.reserve(particles.size());
  for (const auto& p : particles) {
    const auto [dx, dy] = field(p.x_mm, p.y_mm);
    out.push_back({p.x_mm + dx, p.y_mm + dy});
  }
  return out;
}

struct RectPx {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open [x0,x1) x [y0,y1)
};

struct PivOptions {
  int window = 32;
  double overlap = 0.5;
  int search_radius = 12;
  double res_mm_per_px = 27.4e-3;
  std::vector<RectPx> masks;  // windows intersecting these are invalid
  /// When set, only windows within roi_radius_px of one of these pixel
  /// points are correlated; the rest stay flagged invalid. Differential
  /// tracking uses this to skip windows no tracked point will sample.
  std::optional<std::vector<std::pair<double, double>>> roi_points;
  double roi_radius_px = 0.0;  // 0 = auto (two grid steps)
  int threads = 1;

  void validate() const;
  int step() const;
};

struct PivVector {
  double cx = 0.0, cy = 0.0;  // window center, px
  double dx_px = 0.0, dy_px = 0.0;
  double dx_mm = 0.0, dy_mm = 0.0;
  double quality = 0.0;  // (peak - second peak) / peak, in [0,1]
  bool valid = false;
};

struct VectorField {
  int nx = 0, ny = 0;
  int cx0 = 0, cy0 = 0;  // px center of cell (0,0)
  int step_px = 0;       // px between cell centers
  std::vector<PivVector> cells;  // [iy * nx + ix]

  const PivVector& at(int ix, int iy) const { return cells[std::size_t(iy) * nx + ix]; }
  PivVector& at(int ix, int iy) { return cells[std::size_t(iy) * nx + ix]; }

  /// Bilinear sample of (dx, dy) in px at a pixel position; empty when any
  /// of the four surrounding cells is invalid or out of range.
  std::optional<std::pair<double, double>> sample_px(double x_px,
                                                     double y_px) const;
};

/// Windowed normalized cross-correlation between two frames with 3-point
/// Gaussian sub-pixel peak refinement per axis.
VectorField compute_field(const ImageFrame& f0, const ImageFrame& f1,
                          const PivOptions& opts);

/// Tracked material-point grid (n_axial stations x n_radial rows), mm.
struct TrackGrid {
  int n_axial = 5;
  int n_radial = 6;
  std::vector<double> x_mm;  // per point, axial-major like the node grid
  std::vector<double> y_mm;

  int index(int axial, int radial) const { return axial * n_radial + radial; }
};

struct TrackSeries {
  int n_axial = 0;
  int n_radial = 0;
  std::vector<double> t;                          // per frame
  std::vector<std::vector<double>> disp_x_mm;     // [point][frame]
  std::vector<std::vector<double>> disp_y_mm;
  std::vector<int> truncated_at;  // frame index, -1 if never truncated
};

/// Incremental tracker: follows each grid point through successive vector
/// fields by sampling at its current position (differential tracking).
class TrackState {
 public:
  TrackState(const TrackGrid& grid, const OpticsSpec& optics);

  /// Consume the field for one frame pair.
  void advance(const VectorField& field);

  /// Current positions in pixels (for ROI selection).
  const std::vector<double>& x_px() const { return px_; }
  const std::vector<double>& y_px() const { return py_; }

  TrackSeries series(std::span<const double> frame_times) const;

 private:
  int n_axial_, n_radial_;
  double res_mm_;
  std::vector<double> px_, py_;
  std::vector<std::vector<double>> disp_x_mm_, disp_y_mm_;  // [point][frame]
  std::vector<int> truncated_at_;
  std::size_t frames_done_ = 0;
};

/// Accumulate per-pair displacements at each point's current position.
/// `fields` holds one VectorField per consecutive frame pair.
TrackSeries track_matrix(std::span<const VectorField> fields,
                         const TrackGrid& grid, const OpticsSpec& optics,
                         std::span<const double> frame_times);

/// 16-bit binary PGM (P5, maxval 65535, big-endian samples). The bottom
/// image row is written last so viewers show +y up.
void write_pgm16(const std::string& path, const ImageFrame& frame);
ImageFrame read_pgm16(const std::string& path);

}  // namespace reciprosim
