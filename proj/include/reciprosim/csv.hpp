#pragma once

#include <functional>
#include <string>
#include <vector>

#include "reciprosim/analysis.hpp"
#include "reciprosim/piv.hpp"
#include "reciprosim/simulator.hpp"

namespace reciprosim {

/// Shortest round-trippable decimal form; locale-free and deterministic.
std::string format_number(double v);

/// Writes through a temporary file and renames, so failed runs leave no
/// partial outputs behind.
void atomic_write(const std::string& path,
                  const std::function<void(std::ostream&)>& writer);

void write_text_file(const std::string& path, const std::string& content);

/// run CSV columns:
/// t,seg0,seg1,seg2,seg3,node_<i>_ux,node_<i>_uy,...,reaction_force,cut_depth,work
void write_run_csv(const std::string& path, const SimResult& r);

/// tracks CSV columns: t,p_<row>_<col>_x,p_<row>_<col>_y for the tracked
/// grid, rows/cols 1-based, axial-major.
void write_tracks_csv(const std::string& path, const TrackSeries& ts);

void write_field_csv(const std::string& path, const VectorField& f);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;  // column-major

  std::size_t rows() const { return columns.empty() ? 0 : columns[0].size(); }
  const std::vector<double>& column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

struct ChannelStats {
  std::string channel;
  PhaseSegmentation seg;
  PhaseStats stats;
};

void write_stats_csv(const std::string& path,
                     const std::vector<ChannelStats>& stats);

}  // namespace reciprosim
