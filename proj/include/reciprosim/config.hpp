#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reciprosim/analysis.hpp"
#include "reciprosim/calibration.hpp"
#include "reciprosim/piv.hpp"
#include "reciprosim/simulator.hpp"

namespace reciprosim {

struct ConfigError : std::runtime_error {
  std::string path;  // dotted key path, e.g. "schedule.stroke"
  ConfigError(std::string path_, const std::string& message)
      : std::runtime_error(path_.empty() ? message
                                         : path_ + ": " + message),
        path(std::move(path_)) {}
};

/// PIV round-trip driver settings (on top of OpticsSpec).
struct RoundtripOptions {
  double frame_dt = 0.2;  // s between synthetic frames
  int window = 32;
  double overlap = 0.5;
  int search_radius = 12;
  bool full_field = false;  // correlate every window, not just the tracked ROI

  void validate() const;
};

/// One hierarchical, schema-validated document covering every subcommand.
struct AppConfig {
  SimConfig sim;
  AnalyzeOptions analysis;
  OpticsSpec optics;
  RoundtripOptions roundtrip;
  CalibrationTargets targets;
  CalibrationOptions calibration;
  ParameterVector bounds;  // free parameters with bounds; values = initial
  std::uint64_t seed = 1;

  /// Dotted paths of keys that were absent and received defaults.
  std::vector<std::string> defaulted;
};

/// Strict parse: unknown keys, type mismatches and out-of-range values are
/// ConfigErrors carrying the offending path. Omitted keys get defaults and
/// are recorded in `defaulted`.
AppConfig parse_config(const std::string& text);

AppConfig load_config_file(const std::string& path);

/// Full round-trippable serialization (every key explicit).
std::string serialize_config(const AppConfig& cfg);

/// Fitted parameters as a mergeable config fragment.
std::string parameter_fragment(const ParameterVector& p);

/// Provenance block: effective config plus the defaulted key paths.
std::string provenance_json(const AppConfig& cfg);

bool config_equal(const AppConfig& a, const AppConfig& b);

}  // namespace reciprosim
