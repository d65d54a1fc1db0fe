#include "reciprosim/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "reciprosim/calibration.hpp"
#include "reciprosim/config.hpp"
#include "reciprosim/csv.hpp"
#include "reciprosim/roundtrip.hpp"

namespace reciprosim::cli {

namespace fs = std::filesystem;

namespace {

int env_threads() {
  if (const char* v = std::getenv("RECIPROSIM_THREADS")) {
    const int n = std::atoi(v);
    if (n >= 1) return std::min(n, 64);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw, 1u, 4u));
}

fs::path executable_dir() {
  std::error_code ec;
  const fs::path self = fs::read_symlink("/proc/self/exe", ec);
  if (!ec) return self.parent_path();
  return fs::current_path();
}

struct CommonArgs {
  std::string config_path;
  std::string preset;
  std::string out;
  long seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_out = true) {
  auto* cfg = cmd->add_option("--config", a.config_path, "Config JSON path");
  auto* preset = cmd->add_option("--preset", a.preset,
                                 "Named preset (see presets/)");
  cfg->excludes(preset);
  if (with_out) cmd->add_option("--out", a.out, "Output path");
  cmd->add_option("--seed", a.seed, "Seed override");
}

AppConfig load_effective(const CommonArgs& a) {
  AppConfig cfg;
  if (!a.preset.empty())
    cfg = load_config_file(resolve_preset(a.preset));
  else if (!a.config_path.empty())
    cfg = load_config_file(a.config_path);
  else
    cfg = parse_config("{}");
  if (a.seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(a.seed);
    cfg.optics.seed = static_cast<std::uint64_t>(a.seed);
  }
  return cfg;
}

void write_provenance(const std::string& out_path, const AppConfig& cfg) {
  write_text_file(out_path + ".provenance.json", provenance_json(cfg));
}

std::string channel_name(int node) {
  return "node_" + std::to_string(node) + "_ux";
}

int cmd_simulate(const CommonArgs& a) {
  AppConfig cfg = load_effective(a);
  const SimResult r = simulate(cfg.sim);
  const std::string out = a.out.empty() ? "run.csv" : a.out;
  write_run_csv(out, r);
  write_provenance(out, cfg);
  const double peak =
      *std::max_element(r.reaction_force.begin(), r.reaction_force.end());
  std::cout << "wrote " << out << " (" << r.samples() << " samples)\n"
            << "peak reaction force: " << format_number(peak) << " N\n"
            << "transferred work: " << format_number(work_transferred(r))
            << " mJ\n";
  return 0;
}

AnalyzeOptions analysis_options(const AppConfig& cfg) {
  AnalyzeOptions o = cfg.analysis;
  o.t_stop = cfg.sim.schedule.motion_duration();
  if (cfg.sim.schedule.kind == MotionSchedule::Kind::reciprocal)
    o.cycle_period = 4.0 * cfg.sim.schedule.stroke / cfg.sim.schedule.v_segment;
  return o;
}

int cmd_analyze(const CommonArgs& a, const std::string& in_path) {
  AppConfig cfg = load_effective(a);
  const CsvTable table = read_csv(in_path);
  const AnalyzeOptions opts = analysis_options(cfg);

  std::vector<ChannelStats> all;
  auto analyze_channel = [&](const std::string& name) {
    ChannelStats cs;
    cs.channel = name;
    cs.seg = segment_phases(table.column("t"), table.column(name), opts);
    cs.stats = profile_stats(table.column("t"), table.column(name), cs.seg, opts);
    all.push_back(cs);
  };
  analyze_channel("reaction_force");
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    const std::string& h = table.header[i];
    if (h.rfind("node_", 0) == 0 && h.size() > 3 &&
        h.compare(h.size() - 3, 3, "_ux") == 0)
      analyze_channel(h);
  }

  const std::string out = a.out.empty() ? "stats.csv" : a.out;
  write_stats_csv(out, all);
  write_provenance(out, cfg);
  const int obs = observation_node(cfg.sim.grid);
  std::cout << "wrote " << out << " (" << all.size() << " channels)\n";
  for (const auto& cs : all) {
    if (cs.channel == "reaction_force" || cs.channel == channel_name(obs)) {
      std::cout << cs.channel << ": peak " << format_number(cs.stats.peak);
      if (cs.stats.plateau_mean)
        std::cout << ", plateau " << format_number(*cs.stats.plateau_mean);
      std::cout << ", relaxation " << format_number(cs.stats.relaxation_level)
                << "\n";
    }
  }
  return 0;
}

int cmd_roundtrip(const CommonArgs& a, const std::string& truth_out,
                  const std::string& frames_dir) {
  AppConfig cfg = load_effective(a);
  const RoundtripResult r = piv_roundtrip(cfg, env_threads(), frames_dir);
  const std::string out = a.out.empty() ? "tracks.csv" : a.out;
  write_tracks_csv(out, r.recovered);
  write_provenance(out, cfg);
  if (!truth_out.empty()) write_tracks_csv(truth_out, r.truth);
  const int a5 = r.recovered.n_axial;
  const int r3 = r.recovered.n_radial / 2;
  std::cout << "wrote " << out << " (" << r.frame_times.size() << " frames)\n"
            << "observation point [" << a5 << "," << r3 << "]: rms error "
            << format_number(r.rms_error_mm) << " mm ("
            << format_number(100.0 * r.rms_error_mm /
                             std::max(r.truth_peak_mm, 1e-12))
            << "% of peak " << format_number(r.truth_peak_mm) << " mm)\n";
  return 0;
}

int cmd_calibrate(const CommonArgs& a, long budget_override,
                  const std::string& history_path) {
  AppConfig cfg = load_effective(a);
  CalibrationOptions opts = cfg.calibration;
  opts.threads = std::min(env_threads(), 3);
  if (budget_override > 0) opts.budget = static_cast<int>(budget_override);
  opts.protocols = ProtocolSet::matched(
      cfg.sim.schedule.stroke, cfg.sim.schedule.cycles, 1.0, 4.0, 1.0,
      cfg.sim.schedule.hold_time);

  const ParameterVector init = cfg.bounds;
  const FitResult fitres = fit(init, cfg.targets, cfg.sim, opts);

  ParameterVector fitted = init;
  fitted.values = fitres.best;

  const std::string out = a.out.empty() ? "fitted_params.json" : a.out;
  write_text_file(out, parameter_fragment(fitted));
  write_provenance(out, cfg);
  if (!history_path.empty()) {
    atomic_write(history_path, [&](std::ostream& os) {
      os << "evaluation,best_loss\n";
      for (std::size_t i = 0; i < fitres.history.size(); ++i)
        os << (i + 1) << ',' << format_number(fitres.history[i]) << '\n';
    });
  }

  LossBreakdown bd;
  calibration_loss(fitted, cfg.targets, cfg.sim, opts, &bd);
  std::cout << "wrote " << out << "\n"
            << "evaluations: " << fitres.evaluations
            << ", best loss: " << format_number(fitres.best_loss) << "\n";
  static const char* kStatNames[9] = {
      "direct_peak",    "direct_work",    "plateau_direct",
      "recip4_peak",    "recip4_work",    "plateau_recip4",
      "recip1_peak",    "recip1_work",    "plateau_recip1"};
  for (int i = 0; i < 9; ++i)
    std::cout << kStatNames[i] << ": " << format_number(bd.values[i]) << " ("
              << format_number(100.0 * bd.rel_err[i]) << "% off target)\n";
  return 0;
}

int cmd_compare(const CommonArgs& a) {
  AppConfig cfg = load_effective(a);
  const auto protocols = ProtocolSet::matched(
      cfg.sim.schedule.stroke, cfg.sim.schedule.cycles, 1.0, 4.0, 1.0,
      cfg.sim.schedule.hold_time);

  auto run_protocol = [&](const MotionSchedule& s) {
    SimConfig c = cfg.sim;
    c.schedule = s;
    const SimResult r = simulate(c);
    return extract_protocol_stats(r, s);
  };
  const ProtocolStats direct = run_protocol(protocols.direct);
  const ProtocolStats fast = run_protocol(protocols.recip_fast);
  const ProtocolStats slow = run_protocol(protocols.recip_slow);

  const ReductionReport rep =
      compare(RunStats{direct.peak_force, direct.plateau, direct.work},
              RunStats{fast.peak_force, fast.plateau, fast.work});

  std::ostringstream report;
  report << "direct:      peak " << format_number(direct.peak_force)
         << " N, plateau " << format_number(direct.plateau) << " mm, work "
         << format_number(direct.work) << " mJ\n"
         << "reciprocal (fast): peak " << format_number(fast.peak_force)
         << " N, plateau " << format_number(fast.plateau) << " mm, work "
         << format_number(fast.work) << " mJ\n"
         << "reciprocal (slow): peak " << format_number(slow.peak_force)
         << " N, plateau " << format_number(slow.plateau) << " mm, work "
         << format_number(slow.work) << " mJ\n"
         << "peak force reduction: " << format_number(rep.peak_reduction_pct)
         << "%\n"
         << "plateau displacement reduction: "
         << format_number(rep.plateau_reduction_pct) << "%\n"
         << "work reduction: " << format_number(rep.work_reduction_pct)
         << "%\n";
  std::cout << report.str();
  if (!a.out.empty()) {
    write_text_file(a.out, report.str());
    write_provenance(a.out, cfg);
  }
  return 0;
}

}  // namespace

std::string resolve_preset(const std::string& name) {
  std::vector<fs::path> candidates;
  candidates.emplace_back(name);
  const std::string file = name.size() > 5 && name.ends_with(".json")
                               ? name
                               : name + ".json";
  candidates.push_back(executable_dir() / "presets" / file);
  candidates.push_back(fs::path("presets") / file);
  for (const auto& c : candidates) {
    std::error_code ec;
    if (fs::is_regular_file(c, ec)) return c.string();
  }
  throw ConfigError("", "preset not found: " + name);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Reciprocating multi-part probe insertion workbench"};
  app.require_subcommand(1);

  CommonArgs sim_args, ana_args, piv_args, cal_args, cmp_args;
  std::string analyze_in, truth_out, frames_dir, history_path;
  long budget_override = -1;

  auto* sim = app.add_subcommand("simulate", "Run one insertion simulation");
  add_common(sim, sim_args);

  auto* ana = app.add_subcommand("analyze", "Phase statistics for a run CSV");
  add_common(ana, ana_args);
  ana->add_option("--in", analyze_in, "Input run CSV")->required();

  auto* piv = app.add_subcommand(
      "piv-roundtrip", "Simulate, render particle frames, recover the tracks");
  add_common(piv, piv_args);
  piv->add_option("--truth-out", truth_out, "Also write ground-truth tracks");
  piv->add_option("--frames-dir", frames_dir, "Dump frames as 16-bit PGM");

  auto* cal = app.add_subcommand("calibrate",
                                 "Fit material parameters to the targets");
  add_common(cal, cal_args);
  cal->add_option("--budget", budget_override, "Loss evaluation budget");
  cal->add_option("--history", history_path, "Write best-loss history CSV");

  auto* cmp = app.add_subcommand(
      "compare", "Direct vs reciprocal protocols, reduction report");
  add_common(cmp, cmp_args);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (ana->parsed()) return cmd_analyze(ana_args, analyze_in);
    if (piv->parsed()) return cmd_roundtrip(piv_args, truth_out, frames_dir);
    if (cal->parsed()) return cmd_calibrate(cal_args, budget_override, history_path);
    if (cmp->parsed()) return cmd_compare(cmp_args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SimError& e) {
    std::cerr << "simulation failed at t=" << e.t << " s: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace reciprosim::cli
