#include "reciprosim/csv.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace reciprosim {

std::string format_number(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void atomic_write(const std::string& path,
                  const std::function<void(std::ostream&)>& writer) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    writer(out);
    out.flush();
    if (!out) {
      fs::remove(tmp);
      throw std::runtime_error("write failed on " + tmp.string());
    }
  }
  fs::rename(tmp, target);
}

void write_text_file(const std::string& path, const std::string& content) {
  atomic_write(path, [&](std::ostream& out) { out << content; });
}

void write_run_csv(const std::string& path, const SimResult& r) {
  atomic_write(path, [&](std::ostream& out) {
    out << "t,seg0,seg1,seg2,seg3";
    const std::size_t n_nodes = r.node_ux.size();
    for (std::size_t n = 0; n < n_nodes; ++n)
      out << ",node_" << n << "_ux,node_" << n << "_uy";
    out << ",reaction_force,cut_depth,work\n";
    for (std::size_t i = 0; i < r.samples(); ++i) {
      out << format_number(r.t[i]);
      for (int s = 0; s < 4; ++s) out << ',' << format_number(r.segment_pos[s][i]);
      for (std::size_t n = 0; n < n_nodes; ++n) {
        out << ',' << format_number(r.node_ux[n][i]) << ','
            << format_number(r.node_uy[n][i]);
      }
      out << ',' << format_number(r.reaction_force[i]) << ','
          << format_number(r.cut_depth[i]) << ',' << format_number(r.work[i])
          << '\n';
    }
  });
}

void write_tracks_csv(const std::string& path, const TrackSeries& ts) {
  atomic_write(path, [&](std::ostream& out) {
    out << "t";
    for (int a = 1; a <= ts.n_axial; ++a)
      for (int r = 1; r <= ts.n_radial; ++r)
        out << ",p_" << a << "_" << r << "_x,p_" << a << "_" << r << "_y";
    out << "\n";
    for (std::size_t k = 0; k < ts.t.size(); ++k) {
      out << format_number(ts.t[k]);
      for (std::size_t p = 0; p < ts.disp_x_mm.size(); ++p)
        out << ',' << format_number(ts.disp_x_mm[p][k]) << ','
            << format_number(ts.disp_y_mm[p][k]);
      out << '\n';
    }
  });
}

void write_field_csv(const std::string& path, const VectorField& f) {
  atomic_write(path, [&](std::ostream& out) {
    out << "cx,cy,dx_px,dy_px,dx_mm,dy_mm,quality,valid\n";
    for (int iy = 0; iy < f.ny; ++iy) {
      for (int ix = 0; ix < f.nx; ++ix) {
        const PivVector& v = f.at(ix, iy);
        out << format_number(v.cx) << ',' << format_number(v.cy) << ','
            << format_number(v.dx_px) << ',' << format_number(v.dy_px) << ','
            << format_number(v.dx_mm) << ',' << format_number(v.dy_mm) << ','
            << format_number(v.quality) << ',' << (v.valid ? 1 : 0) << '\n';
      }
    }
  });
}

const std::vector<double>& CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return columns[i];
  throw std::out_of_range("CSV column not found: " + name);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) table.header.push_back(cell);
  table.columns.assign(table.header.size(), {});
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t col = 0;
    const char* p = line.c_str();
    const char* end = p + line.size();
    while (col < table.columns.size()) {
      double v = std::numeric_limits<double>::quiet_NaN();
      const auto res = std::from_chars(p, end, v);
      if (res.ec == std::errc{}) {
        p = res.ptr;
      } else {
        // Non-numeric cell (label or absent value) parses as NaN.
        v = std::numeric_limits<double>::quiet_NaN();
        while (p < end && *p != ',') ++p;
      }
      table.columns[col].push_back(v);
      ++col;
      if (p < end && *p == ',') ++p;
    }
  }
  return table;
}

void write_stats_csv(const std::string& path,
                     const std::vector<ChannelStats>& stats) {
  atomic_write(path, [&](std::ostream& out) {
    out << "channel,t1,t2,peak,plateau_mean,relaxation_level,oscillation_amp,"
           "degenerate\n";
    for (const auto& s : stats) {
      out << s.channel << ',' << format_number(s.seg.t1) << ','
          << format_number(s.seg.t2) << ',' << format_number(s.stats.peak) << ',';
      if (s.stats.plateau_mean)
        out << format_number(*s.stats.plateau_mean);
      // absent plateau stays an empty cell, not a zero
      out << ',' << format_number(s.stats.relaxation_level) << ','
          << format_number(s.stats.oscillation_amp) << ','
          << (s.seg.degenerate ? 1 : 0) << '\n';
    }
  });
}

}  // namespace reciprosim
