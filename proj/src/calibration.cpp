#include "reciprosim/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace reciprosim {

void CalibrationTargets::validate() const {
  const double all[] = {direct_peak,    direct_work,    recip4_peak,
                        recip4_work,    recip1_peak,    recip1_work,
                        plateau_direct, plateau_recip4, plateau_recip1};
  for (double v : all)
    if (!(v > 0.0))
      throw std::invalid_argument("calibration: targets must be positive");
  if (!(weight_direct >= 0.0) || !(weight_recip4 >= 0.0) ||
      !(weight_recip1 >= 0.0))
    throw std::invalid_argument("calibration: weights must be >= 0");
}

void ParameterVector::validate() const {
  if (names.size() != values.size() || names.size() != lo.size() ||
      names.size() != hi.size())
    throw std::invalid_argument("parameters: inconsistent sizes");
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!(lo[i] <= hi[i]))
      throw std::invalid_argument("parameters: bounds inverted for " + names[i]);
    if (values[i] < lo[i] || values[i] > hi[i])
      throw std::invalid_argument("parameters: " + names[i] + " out of bounds");
  }
}

ParameterVector ParameterVector::default_free(const SimConfig& base) {
  ParameterVector p;
  auto add = [&](const std::string& name, double v, double lo, double hi) {
    p.names.push_back(name);
    p.values.push_back(v);
    p.lo.push_back(lo);
    p.hi.push_back(hi);
  };
  add("f_breakaway", base.materials.friction.f_breakaway, 1e-3, 1.0);
  add("f_coulomb", base.materials.friction.f_coulomb, 1e-4, 0.5);
  add("f_cut", base.materials.cutting.f_cut, 0.0, 0.5);
  add("k_parallel", base.materials.kelvin.k_parallel, 1e-4, 1.0);
  add("k_series", base.materials.kelvin.k_series, 1e-4, 1.0);
  add("c_damper", base.materials.kelvin.c_damper, 1e-4, 10.0);
  return p;
}

ProtocolSet ProtocolSet::matched(double stroke, int cycles, double v_direct,
                                 double v_fast, double v_slow,
                                 double hold_time) {
  ProtocolSet s{
      MotionSchedule::direct(v_direct, stroke * cycles, hold_time),
      MotionSchedule::reciprocal(v_fast, stroke, cycles, hold_time),
      MotionSchedule::reciprocal(v_slow, stroke, cycles, hold_time)};
  return s;
}

int observation_node(const NodeGridSpec& grid) {
  return grid.index(grid.n_axial - 1, grid.n_radial / 2 - 1);
}

ProtocolStats extract_protocol_stats(const SimResult& r,
                                     const MotionSchedule& schedule) {
  ProtocolStats st;
  st.peak_force =
      *std::max_element(r.reaction_force.begin(), r.reaction_force.end());
  st.work = work_transferred(r);

  AnalyzeOptions aopts;
  aopts.t_stop = schedule.motion_duration();
  if (schedule.kind == MotionSchedule::Kind::reciprocal)
    aopts.cycle_period = 4.0 * schedule.stroke / schedule.v_segment;
  const int node = observation_node(r.grid);
  const auto& ux = r.node_ux.at(node);
  const auto seg = segment_phases(r.t, ux, aopts);
  const auto stats = profile_stats(r.t, ux, seg, aopts);
  st.plateau = stats.plateau_mean ? *stats.plateau_mean
                                  : std::numeric_limits<double>::quiet_NaN();
  return st;
}

SimConfig with_parameters(const SimConfig& base, const ParameterVector& p) {
  SimConfig cfg = base;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const std::string& n = p.names[i];
    const double v = p.values[i];
    if (n == "f_breakaway")
      cfg.materials.friction.f_breakaway = v;
    else if (n == "f_coulomb")
      cfg.materials.friction.f_coulomb = v;
    else if (n == "v_breakaway")
      cfg.materials.friction.v_breakaway = v;
    else if (n == "f_viscous")
      cfg.materials.friction.f_viscous = v;
    else if (n == "f_cut")
      cfg.materials.cutting.f_cut = v;
    else if (n == "k_parallel")
      cfg.materials.kelvin.k_parallel = v;
    else if (n == "k_series")
      cfg.materials.kelvin.k_series = v;
    else if (n == "c_damper")
      cfg.materials.kelvin.c_damper = v;
    else
      throw std::invalid_argument("unknown calibration parameter: " + n);
  }
  return cfg;
}

double calibration_loss(const ParameterVector& p, const CalibrationTargets& t,
                        const SimConfig& base, const CalibrationOptions& opts,
                        LossBreakdown* breakdown) {
  t.validate();
  LossBreakdown local;
  LossBreakdown& bd = breakdown ? *breakdown : local;
  bd = LossBreakdown{};

  SimConfig cfg;
  try {
    p.validate();
    cfg = with_parameters(base, p);
    cfg.dt = opts.sim_dt;
    cfg.dt_max = std::max(base.dt_max, opts.sim_dt);
    cfg.record_dt = std::max(cfg.record_dt, opts.sim_dt);
    const double k = cfg.record_dt / cfg.dt;
    if (std::abs(k - std::round(k)) > 1e-6)
      cfg.record_dt = std::round(k) * cfg.dt;
    cfg.validate();
  } catch (const std::exception& e) {
    bd.failed = true;
    bd.diagnostic = e.what();
    bd.total = opts.penalty;
    return opts.penalty;
  }

  const std::array<const MotionSchedule*, 3> protocols = {
      &opts.protocols.direct, &opts.protocols.recip_fast,
      &opts.protocols.recip_slow};

  std::array<ProtocolStats, 3> stats;
  try {
    auto run_one = [&](int i) {
      SimConfig c = cfg;
      c.schedule = *protocols[i];
      return extract_protocol_stats(simulate(c), c.schedule);
    };
    if (opts.threads > 1) {
      std::array<std::future<ProtocolStats>, 3> fut;
      for (int i = 0; i < 3; ++i)
        fut[i] = std::async(std::launch::async, run_one, i);
      for (int i = 0; i < 3; ++i) stats[i] = fut[i].get();  // fixed order
    } else {
      for (int i = 0; i < 3; ++i) stats[i] = run_one(i);
    }
  } catch (const std::exception& e) {
    bd.failed = true;
    bd.diagnostic = e.what();
    bd.total = opts.penalty;
    return opts.penalty;
  }

  const std::array<double, 9> targets = {
      t.direct_peak,    t.direct_work,    t.plateau_direct,
      t.recip4_peak,    t.recip4_work,    t.plateau_recip4,
      t.recip1_peak,    t.recip1_work,    t.plateau_recip1};
  const std::array<double, 9> values = {
      stats[0].peak_force, stats[0].work, stats[0].plateau,
      stats[1].peak_force, stats[1].work, stats[1].plateau,
      stats[2].peak_force, stats[2].work, stats[2].plateau};
  const std::array<double, 9> weights = {
      t.weight_direct, t.weight_direct, t.weight_direct,
      t.weight_recip4, t.weight_recip4, t.weight_recip4,
      t.weight_recip1, t.weight_recip1, t.weight_recip1};

  double total = 0.0;
  for (int i = 0; i < 9; ++i) {
    if (!std::isfinite(values[i])) {
      bd.failed = true;
      bd.diagnostic = "undefined statistic (empty plateau?)";
      bd.total = opts.penalty;
      return opts.penalty;
    }
    bd.values[i] = values[i];
    bd.rel_err[i] = (values[i] - targets[i]) / targets[i];
    total += weights[i] * bd.rel_err[i] * bd.rel_err[i];
  }
  bd.total = total;
  return total;
}

FitResult fit_simplex(const std::function<double(const std::vector<double>&)>& f,
                      const std::vector<double>& init,
                      const std::vector<double>& lo,
                      const std::vector<double>& hi, std::size_t budget) {
  const std::size_t n = init.size();
  if (lo.size() != n || hi.size() != n)
    throw std::invalid_argument("fit: bound sizes mismatch");
  if (budget < n + 2) throw std::invalid_argument("fit: budget < dimension + 2");

  auto clamp_point = [&](std::vector<double> x) {
    for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
    return x;
  };

  FitResult result;
  result.best_loss = std::numeric_limits<double>::infinity();
  auto eval = [&](const std::vector<double>& x) {
    const double v = f(x);
    ++result.evaluations;
    if (v < result.best_loss) {
      result.best_loss = v;
      result.best = x;
    }
    result.history.push_back(result.best_loss);
    return v;
  };

  std::vector<std::vector<double>> xs;
  std::vector<double> fs;
  xs.push_back(clamp_point(init));
  fs.push_back(eval(xs[0]));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x = xs[0];
    const double step = 0.15 * (hi[i] - lo[i]);
    double xi = x[i] + step;
    if (xi > hi[i]) xi = x[i] - step;
    x[i] = std::clamp(xi, lo[i], hi[i]);
    xs.push_back(x);
    fs.push_back(eval(x));
  }

  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
  std::vector<std::size_t> order(n + 1);

  while (result.evaluations + 2 <= budget) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    const std::size_t best = order[0];
    const std::size_t second_worst = order[n - 1];
    const std::size_t worst = order[n];

    std::vector<double> centroid(n, 0.0);
    for (std::size_t k = 0; k <= n; ++k) {
      if (k == worst) continue;
      for (std::size_t i = 0; i < n; ++i) centroid[i] += xs[k][i];
    }
    for (auto& c : centroid) c /= static_cast<double>(n);

    auto blend = [&](double coef) {
      std::vector<double> x(n);
      for (std::size_t i = 0; i < n; ++i)
        x[i] = centroid[i] + coef * (centroid[i] - xs[worst][i]);
      return clamp_point(std::move(x));
    };

    const auto xr = blend(alpha);
    const double fr = eval(xr);

    if (fr < fs[best]) {
      if (result.evaluations + 1 <= budget) {
        const auto xe = blend(gamma);
        const double fe = eval(xe);
        if (fe < fr) {
          xs[worst] = xe;
          fs[worst] = fe;
        } else {
          xs[worst] = xr;
          fs[worst] = fr;
        }
      } else {
        xs[worst] = xr;
        fs[worst] = fr;
      }
      continue;
    }
    if (fr < fs[second_worst]) {
      xs[worst] = xr;
      fs[worst] = fr;
      continue;
    }

    bool shrink = false;
    if (result.evaluations + 1 <= budget) {
      const bool outside = fr < fs[worst];
      const auto xc = blend(outside ? rho : -rho);
      const double fc = eval(xc);
      if ((outside && fc <= fr) || (!outside && fc < fs[worst])) {
        xs[worst] = xc;
        fs[worst] = fc;
      } else {
        shrink = true;
      }
    } else {
      break;
    }

    if (shrink) {
      if (result.evaluations + n > budget) break;
      for (std::size_t k = 0; k <= n; ++k) {
        if (k == best) continue;
        for (std::size_t i = 0; i < n; ++i)
          xs[k][i] = xs[best][i] + sigma * (xs[k][i] - xs[best][i]);
        xs[k] = clamp_point(std::move(xs[k]));
        fs[k] = eval(xs[k]);
      }
    }
  }
  return result;
}

FitResult fit(const ParameterVector& init, const CalibrationTargets& targets,
              const SimConfig& base, const CalibrationOptions& opts) {
  init.validate();
  auto objective = [&](const std::vector<double>& x) {
    ParameterVector p = init;
    p.values = x;
    return calibration_loss(p, targets, base, opts);
  };
  return fit_simplex(objective, init.values, init.lo, init.hi,
                     static_cast<std::size_t>(opts.budget));
}

}  // namespace reciprosim
