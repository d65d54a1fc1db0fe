#include "reciprosim/piv.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "reciprosim/rng.hpp"

namespace reciprosim {

void OpticsSpec::validate() const {
  if (!(fov_x_mm > 0.0) || !(fov_y_mm > 0.0))
    throw std::invalid_argument("optics: field of view must be positive");
  if (!(resolution_um_per_px > 0.0))
    throw std::invalid_argument("optics: resolution must be positive");
  if (!(particle_diameter_px > 0.0 && particle_diameter_px <= 20.0))
    throw std::invalid_argument("optics: particle diameter must be in (0, 20] px");
  if (!(particle_density_per_px2 > 0.0))
    throw std::invalid_argument("optics: particle density must be positive");
  if (!(noise_std >= 0.0))
    throw std::invalid_argument("optics: noise_std must be >= 0");
  if (!(blob_peak > 0.0))
    throw std::invalid_argument("optics: blob_peak must be positive");
}

int OpticsSpec::width_px() const {
  return static_cast<int>(std::lround(fov_x_mm / res_mm()));
}

int OpticsSpec::height_px() const {
  return static_cast<int>(std::lround(fov_y_mm / res_mm()));
}

std::vector<Particle> seed_particles(const OpticsSpec& opts) {
  opts.validate();
  const double w = opts.width_px();
  const double h = opts.height_px();
  const auto count =
      static_cast<std::size_t>(std::llround(opts.particle_density_per_px2 * w * h));
  Rng rng(Rng::mix(opts.seed, 0x5eedULL));
  std::vector<Particle> p;
  p.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = opts.view_x0_mm + rng.uniform() * opts.fov_x_mm;
    const double y = opts.view_y0_mm + rng.uniform() * opts.fov_y_mm;
    p.push_back({x, y});
  }
  return p;
}

namespace {

inline double gauss_cdf(double z) {
  return 0.5 * (1.0 + std::erf(z * 0.7071067811865475244));
}

}  // namespace

ImageFrame synth_frame(std::span<const Particle> particles,
                       const OpticsSpec& opts) {
  opts.validate();
  ImageFrame frame;
  frame.width = opts.width_px();
  frame.height = opts.height_px();
  frame.px.assign(std::size_t(frame.width) * frame.height, 0);

  std::vector<float> acc(frame.px.size(), 0.0f);
  const double res = opts.res_mm();
  const double sigma = opts.particle_diameter_px / 4.0;
  const double central =
      std::pow(gauss_cdf(0.5 / sigma) - gauss_cdf(-0.5 / sigma), 2.0);
  const double amp = opts.blob_peak / central;
  const int reach = static_cast<int>(std::ceil(3.0 * sigma)) + 1;

  double mass_x[64], mass_y[64];
  for (const auto& p : particles) {
    const double px = (p.x_mm - opts.view_x0_mm) / res;
    const double py = (p.y_mm - opts.view_y0_mm) / res;
    const int cx = static_cast<int>(std::floor(px));
    const int cy = static_cast<int>(std::floor(py));
    const int x0 = std::max(0, cx - reach);
    const int x1 = std::min(frame.width - 1, cx + reach);
    const int y0 = std::max(0, cy - reach);
    const int y1 = std::min(frame.height - 1, cy + reach);
    if (x0 > x1 || y0 > y1) continue;
    for (int x = x0; x <= x1; ++x)
      mass_x[x - x0] = gauss_cdf((x + 1 - px) / sigma) - gauss_cdf((x - px) / sigma);
    for (int y = y0; y <= y1; ++y)
      mass_y[y - y0] = gauss_cdf((y + 1 - py) / sigma) - gauss_cdf((y - py) / sigma);
    for (int y = y0; y <= y1; ++y) {
      float* row = acc.data() + std::size_t(y) * frame.width;
      const double ay = amp * mass_y[y - y0];
      for (int x = x0; x <= x1; ++x)
        row[x] += static_cast<float>(ay * mass_x[x - x0]);
    }
  }

  Rng rng(Rng::mix(opts.seed, 0x4015eULL));
  const bool noisy = opts.noise_std > 0.0;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    double v = acc[i];
    if (noisy) v += opts.noise_std * rng.normal();
    const long g = std::lround(v);
    frame.px[i] = static_cast<std::uint16_t>(std::clamp(g, 0L, 65535L));
  }
  return frame;
}

BilinearField::BilinearField(std::vector<double> xs, std::vector<double> ys,
                             std::vector<double> ux, std::vector<double> uy)
    : xs_(std::move(xs)), ys_(std::move(ys)), ux_(std::move(ux)), uy_(std::move(uy)) {
  if (xs_.empty() || ys_.empty() || ux_.size() != xs_.size() * ys_.size() ||
      uy_.size() != ux_.size())
    throw std::invalid_argument("BilinearField: inconsistent grid");
  if (!std::is_sorted(xs_.begin(), xs_.end()) ||
      !std::is_sorted(ys_.begin(), ys_.end()))
    throw std::invalid_argument("BilinearField: grid lines must ascend");
}

double BilinearField::interp(const std::vector<double>& f, double x,
                             double y) const {
  const std::size_t nx = xs_.size(), ny = ys_.size();
  auto locate = [](const std::vector<double>& g, double v, std::size_t& i0,
                   double& w) {
    if (g.size() == 1 || v <= g.front()) {
      i0 = 0;
      w = 0.0;
      return;
    }
    if (v >= g.back()) {
      i0 = g.size() - 2;
      w = 1.0;
      return;
    }
    const auto it = std::upper_bound(g.begin(), g.end(), v);
    i0 = static_cast<std::size_t>(std::distance(g.begin(), it)) - 1;
    w = (v - g[i0]) / (g[i0 + 1] - g[i0]);
  };
  std::size_t ix, iy;
  double wx, wy;
  locate(xs_, x, ix, wx);
  locate(ys_, y, iy, wy);
  const std::size_t ix1 = std::min(ix + 1, nx - 1);
  const std::size_t iy1 = std::min(iy + 1, ny - 1);
  const double f00 = f[iy * nx + ix], f10 = f[iy * nx + ix1];
  const double f01 = f[iy1 * nx + ix], f11 = f[iy1 * nx + ix1];
  return (1 - wy) * ((1 - wx) * f00 + wx * f10) +
         wy * ((1 - wx) * f01 + wx * f11);
}

std::pair<double, double> BilinearField::sample(double x_mm, double y_mm) const {
  return {interp(ux_, x_mm, y_mm), interp(uy_, x_mm, y_mm)};
}

std::vector<Particle> warp_particles(std::span<const Particle> particles,
                                     const BilinearField& field) {
  return warp_particles(particles,
                        [&](double x, double y) { return field.sample(x, y); });
}

void PivOptions::validate() const {
  if (window < 16) throw std::invalid_argument("piv: window must be >= 16 px");
  if (!(overlap >= 0.0 && overlap <= 0.75))
    throw std::invalid_argument("piv: overlap must be in [0, 0.75]");
  if (search_radius < 1)
    throw std::invalid_argument("piv: search_radius must be >= 1");
  if (!(res_mm_per_px > 0.0))
    throw std::invalid_argument("piv: res_mm_per_px must be positive");
}

int PivOptions::step() const {
  return std::max(1, static_cast<int>(std::lround(window * (1.0 - overlap))));
}

namespace {

struct Integrals {
  int w = 0, h = 0;
  std::vector<std::int64_t> s1, s2;  // (w+1)*(h+1) summed-area tables

  void build(const ImageFrame& f) {
    w = f.width;
    h = f.height;
    s1.assign(std::size_t(w + 1) * (h + 1), 0);
    s2.assign(std::size_t(w + 1) * (h + 1), 0);
    for (int y = 0; y < h; ++y) {
      std::int64_t row1 = 0, row2 = 0;
      const std::uint16_t* src = f.px.data() + std::size_t(y) * w;
      std::int64_t* d1 = s1.data() + std::size_t(y + 1) * (w + 1);
      std::int64_t* d2 = s2.data() + std::size_t(y + 1) * (w + 1);
      const std::int64_t* p1 = s1.data() + std::size_t(y) * (w + 1);
      const std::int64_t* p2 = s2.data() + std::size_t(y) * (w + 1);
      for (int x = 0; x < w; ++x) {
        const std::int64_t v = src[x];
        row1 += v;
        row2 += v * v;
        d1[x + 1] = p1[x + 1] + row1;
        d2[x + 1] = p2[x + 1] + row2;
      }
      d1[0] = 0;
      d2[0] = 0;
    }
  }

  std::int64_t sum(const std::vector<std::int64_t>& s, int x0, int y0,
                   int win) const {
    const int x1 = x0 + win, y1 = y0 + win;
    return s[std::size_t(y1) * (w + 1) + x1] - s[std::size_t(y0) * (w + 1) + x1] -
           s[std::size_t(y1) * (w + 1) + x0] + s[std::size_t(y0) * (w + 1) + x0];
  }
};

void correlate_cell(const ImageFrame& f0, const ImageFrame& f1,
                    const Integrals& integ, const PivOptions& opts, int cx,
                    int cy, PivVector& out) {
  const int win = opts.window;
  const int R = opts.search_radius;
  const int x0 = cx - win / 2;
  const int y0 = cy - win / 2;
  out.cx = cx;
  out.cy = cy;
  out.valid = false;

  // Template window from f0, mean-centred.
  static thread_local std::vector<float> a;
  a.resize(std::size_t(win) * win);
  double sum_a = 0.0;
  for (int y = 0; y < win; ++y) {
    const std::uint16_t* src = f0.px.data() + std::size_t(y0 + y) * f0.width + x0;
    for (int x = 0; x < win; ++x) sum_a += src[x];
  }
  const double mean_a = sum_a / (double(win) * win);
  double var_a = 0.0;
  for (int y = 0; y < win; ++y) {
    const std::uint16_t* src = f0.px.data() + std::size_t(y0 + y) * f0.width + x0;
    float* dst = a.data() + std::size_t(y) * win;
    for (int x = 0; x < win; ++x) {
      const double c = src[x] - mean_a;
      dst[x] = static_cast<float>(c);
      var_a += c * c;
    }
  }
  if (var_a < 1e-9) return;  // flat template
  const double norm_a = std::sqrt(var_a);
  const double npx = double(win) * win;

  const int span = 2 * R + 1;
  static thread_local std::vector<double> ncc;
  ncc.assign(std::size_t(span) * span, -2.0);

  int best_u = 0, best_v = 0;
  double best = -2.0;
  for (int v = -R; v <= R; ++v) {
    for (int u = -R; u <= R; ++u) {
      const int bx = x0 + u, by = y0 + v;
      double dot = 0.0;
      for (int y = 0; y < win; ++y) {
        const float* ar = a.data() + std::size_t(y) * win;
        const std::uint16_t* br =
            f1.px.data() + std::size_t(by + y) * f1.width + bx;
        double acc = 0.0;
        for (int x = 0; x < win; ++x) acc += double(ar[x]) * br[x];
        dot += acc;
      }
      const double sb = static_cast<double>(integ.sum(integ.s1, bx, by, win));
      const double sb2 = static_cast<double>(integ.sum(integ.s2, bx, by, win));
      const double var_b = sb2 - sb * sb / npx;
      double val = -2.0;
      if (var_b > 1e-9) val = dot / (norm_a * std::sqrt(var_b));
      ncc[std::size_t(v + R) * span + (u + R)] = val;
      if (val > best) {
        best = val;
        best_u = u;
        best_v = v;
      }
    }
  }

  if (best <= 0.0) return;
  if (std::abs(best_u) == R || std::abs(best_v) == R) return;  // peak on rim

  // Second peak outside the immediate neighbourhood of the first.
  double second = -2.0;
  for (int v = -R; v <= R; ++v) {
    for (int u = -R; u <= R; ++u) {
      if (std::abs(u - best_u) <= 1 && std::abs(v - best_v) <= 1) continue;
      second = std::max(second, ncc[std::size_t(v + R) * span + (u + R)]);
    }
  }

  auto at = [&](int u, int v) { return ncc[std::size_t(v + R) * span + (u + R)]; };
  // A perfect normalized match pins the displacement to the integer lag;
  // the 3-point fit on the neighbours would only report texture asymmetry.
  const bool exact_match = best >= 1.0 - 1e-9;
  auto refine = [&](double cm, double c0, double cp) {
    if (cm > 0.0 && c0 > 0.0 && cp > 0.0) {
      const double denom = std::log(cm) - 2.0 * std::log(c0) + std::log(cp);
      if (denom < 0.0) {
        const double d = 0.5 * (std::log(cm) - std::log(cp)) / denom;
        if (std::abs(d) < 1.0) return d;
      }
    }
    const double denom = cm - 2.0 * c0 + cp;
    if (denom < 0.0) {
      const double d = 0.5 * (cm - cp) / denom;
      if (std::abs(d) < 1.0) return d;
    }
    return 0.0;
  };

  const double du =
      exact_match ? 0.0
                  : refine(at(best_u - 1, best_v), best, at(best_u + 1, best_v));
  const double dv =
      exact_match ? 0.0
                  : refine(at(best_u, best_v - 1), best, at(best_u, best_v + 1));

  out.dx_px = best_u + du;
  out.dy_px = best_v + dv;
  out.dx_mm = out.dx_px * opts.res_mm_per_px;
  out.dy_mm = out.dy_px * opts.res_mm_per_px;
  out.quality = std::clamp((best - std::max(second, 0.0)) / best, 0.0, 1.0);
  out.valid = true;
}

}  // namespace

VectorField compute_field(const ImageFrame& f0, const ImageFrame& f1,
                          const PivOptions& opts) {
  opts.validate();
  if (f0.width != f1.width || f0.height != f1.height)
    throw std::invalid_argument("compute_field: frame sizes differ");

  VectorField field;
  const int win = opts.window;
  const int R = opts.search_radius;
  const int step = opts.step();
  field.step_px = step;
  field.cx0 = win / 2 + R;
  field.cy0 = win / 2 + R;
  const int last_cx = f0.width - (win - win / 2) - R;
  const int last_cy = f0.height - (win - win / 2) - R;
  field.nx = last_cx >= field.cx0 ? (last_cx - field.cx0) / step + 1 : 0;
  field.ny = last_cy >= field.cy0 ? (last_cy - field.cy0) / step + 1 : 0;
  field.cells.assign(std::size_t(field.nx) * field.ny, PivVector{});

  Integrals integ;
  integ.build(f1);

  const double roi_r = opts.roi_radius_px > 0.0 ? opts.roi_radius_px : 2.0 * step;
  auto wanted = [&](int cx, int cy) {
    for (const auto& m : opts.masks) {
      if (cx - win / 2 < m.x1 && cx + win / 2 > m.x0 && cy - win / 2 < m.y1 &&
          cy + win / 2 > m.y0)
        return false;
    }
    if (!opts.roi_points) return true;
    for (const auto& [px, py] : *opts.roi_points) {
      if (std::abs(px - cx) <= roi_r && std::abs(py - cy) <= roi_r) return true;
    }
    return false;
  };

  auto run_rows = [&](int iy_begin, int iy_end) {
    for (int iy = iy_begin; iy < iy_end; ++iy) {
      for (int ix = 0; ix < field.nx; ++ix) {
        const int cx = field.cx0 + ix * step;
        const int cy = field.cy0 + iy * step;
        PivVector& cell = field.at(ix, iy);
        cell.cx = cx;
        cell.cy = cy;
        if (!wanted(cx, cy)) continue;
        correlate_cell(f0, f1, integ, opts, cx, cy, cell);
      }
    }
  };

  const int n_threads = std::clamp(opts.threads, 1, std::max(1, field.ny));
  if (n_threads <= 1) {
    run_rows(0, field.ny);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (field.ny + n_threads - 1) / n_threads;
    for (int k = 0; k < n_threads; ++k) {
      const int b = k * chunk;
      const int e = std::min(field.ny, b + chunk);
      if (b < e) pool.emplace_back(run_rows, b, e);
    }
    for (auto& th : pool) th.join();
  }
  return field;
}

std::optional<std::pair<double, double>> VectorField::sample_px(
    double x_px, double y_px) const {
  if (nx < 2 || ny < 2) return std::nullopt;
  const double gx = (x_px - cx0) / step_px;
  const double gy = (y_px - cy0) / step_px;
  const int ix = static_cast<int>(std::floor(gx));
  const int iy = static_cast<int>(std::floor(gy));
  if (ix < 0 || iy < 0 || ix + 1 >= nx || iy + 1 >= ny) return std::nullopt;
  const PivVector& c00 = at(ix, iy);
  const PivVector& c10 = at(ix + 1, iy);
  const PivVector& c01 = at(ix, iy + 1);
  const PivVector& c11 = at(ix + 1, iy + 1);
  if (!c00.valid || !c10.valid || !c01.valid || !c11.valid) return std::nullopt;
  const double wx = gx - ix, wy = gy - iy;
  const double dx = (1 - wy) * ((1 - wx) * c00.dx_px + wx * c10.dx_px) +
                    wy * ((1 - wx) * c01.dx_px + wx * c11.dx_px);
  const double dy = (1 - wy) * ((1 - wx) * c00.dy_px + wx * c10.dy_px) +
                    wy * ((1 - wx) * c01.dy_px + wx * c11.dy_px);
  return std::make_pair(dx, dy);
}

TrackState::TrackState(const TrackGrid& grid, const OpticsSpec& optics)
    : n_axial_(grid.n_axial), n_radial_(grid.n_radial), res_mm_(optics.res_mm()) {
  const std::size_t n_pts = grid.x_mm.size();
  if (n_pts != grid.y_mm.size() ||
      n_pts != std::size_t(grid.n_axial) * grid.n_radial)
    throw std::invalid_argument("tracking: grid shape mismatch");
  px_.resize(n_pts);
  py_.resize(n_pts);
  for (std::size_t p = 0; p < n_pts; ++p) {
    px_[p] = (grid.x_mm[p] - optics.view_x0_mm) / res_mm_;
    py_[p] = (grid.y_mm[p] - optics.view_y0_mm) / res_mm_;
  }
  disp_x_mm_.assign(n_pts, {0.0});
  disp_y_mm_.assign(n_pts, {0.0});
  truncated_at_.assign(n_pts, -1);
}

void TrackState::advance(const VectorField& field) {
  for (std::size_t p = 0; p < px_.size(); ++p) {
    const double last_x = disp_x_mm_[p].back();
    const double last_y = disp_y_mm_[p].back();
    if (truncated_at_[p] >= 0) {
      disp_x_mm_[p].push_back(last_x);
      disp_y_mm_[p].push_back(last_y);
      continue;
    }
    const auto d = field.sample_px(px_[p], py_[p]);
    if (!d) {
      truncated_at_[p] = static_cast<int>(frames_done_);
      disp_x_mm_[p].push_back(last_x);
      disp_y_mm_[p].push_back(last_y);
      continue;
    }
    px_[p] += d->first;
    py_[p] += d->second;
    disp_x_mm_[p].push_back(last_x + d->first * res_mm_);
    disp_y_mm_[p].push_back(last_y + d->second * res_mm_);
  }
  ++frames_done_;
}

TrackSeries TrackState::series(std::span<const double> frame_times) const {
  if (frame_times.size() != frames_done_ + 1)
    throw std::invalid_argument("tracking: need one time per frame");
  TrackSeries ts;
  ts.n_axial = n_axial_;
  ts.n_radial = n_radial_;
  ts.t.assign(frame_times.begin(), frame_times.end());
  ts.disp_x_mm = disp_x_mm_;
  ts.disp_y_mm = disp_y_mm_;
  ts.truncated_at = truncated_at_;
  return ts;
}

TrackSeries track_matrix(std::span<const VectorField> fields,
                         const TrackGrid& grid, const OpticsSpec& optics,
                         std::span<const double> frame_times) {
  if (frame_times.size() != fields.size() + 1)
    throw std::invalid_argument("track_matrix: need one time per frame");
  TrackState state(grid, optics);
  for (const auto& f : fields) state.advance(f);
  return state.series(frame_times);
}

void write_pgm16(const std::string& path, const ImageFrame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pgm16: cannot open " + path);
  out << "P5\n" << frame.width << " " << frame.height << "\n65535\n";
  std::vector<unsigned char> row(std::size_t(frame.width) * 2);
  for (int y = frame.height - 1; y >= 0; --y) {
    const std::uint16_t* src = frame.px.data() + std::size_t(y) * frame.width;
    for (int x = 0; x < frame.width; ++x) {
      row[2 * x] = static_cast<unsigned char>(src[x] >> 8);
      row[2 * x + 1] = static_cast<unsigned char>(src[x] & 0xff);
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw std::runtime_error("write_pgm16: write failed on " + path);
}

ImageFrame read_pgm16(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_pgm16: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw std::runtime_error("read_pgm16: not a P5 file");
  auto next_token = [&]() {
    std::string tok;
    while (in >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return tok;
    }
    throw std::runtime_error("read_pgm16: truncated header");
  };
  ImageFrame f;
  f.width = std::stoi(next_token());
  f.height = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (maxval != 65535) throw std::runtime_error("read_pgm16: expect 16-bit maxval");
  in.get();  // single whitespace after maxval
  f.px.assign(std::size_t(f.width) * f.height, 0);
  std::vector<unsigned char> row(std::size_t(f.width) * 2);
  for (int y = f.height - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size()));
    if (!in) throw std::runtime_error("read_pgm16: truncated data");
    std::uint16_t* dst = f.px.data() + std::size_t(y) * f.width;
    for (int x = 0; x < f.width; ++x)
      dst[x] = static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1]);
  }
  return f;
}

}  // namespace reciprosim
