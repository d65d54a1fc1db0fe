#include <doctest.h>

#include <cmath>

#include "reciprosim/calibration.hpp"

using namespace reciprosim;

namespace {

SimConfig tiny_config() {
  SimConfig cfg;
  cfg.dt = 4e-3;
  cfg.dt_max = 4e-3;
  cfg.record_dt = 2e-2;
  cfg.grid.n_axial = 2;
  cfg.grid.first_station = 1.0;
  cfg.grid.axial_spacing = 2.0;
  cfg.grid.n_radial = 2;
  return cfg;
}

CalibrationOptions tiny_options() {
  CalibrationOptions o;
  o.sim_dt = 4e-3;
  // Long enough past the last station for a defined plateau.
  o.protocols = ProtocolSet::matched(2.5, 4, 1.0, 4.0, 1.0, 4.0);
  o.threads = 1;
  return o;
}

}  // namespace

TEST_CASE("fit_simplex: converges on a quadratic bowl") {
  const std::vector<double> a{0.3, -0.6};
  auto f = [&](const std::vector<double>& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      s += (x[i] - a[i]) * (x[i] - a[i]);
    return s;
  };
  const auto r = fit_simplex(f, {2.0, 2.0}, {-5.0, -5.0}, {5.0, 5.0}, 200);
  CHECK(r.best_loss < 1e-8);
  CHECK(std::abs(r.best[0] - a[0]) < 1e-4);
  CHECK(std::abs(r.best[1] - a[1]) < 1e-4);
  CHECK(r.evaluations <= 200);
}

TEST_CASE("fit_simplex: minimal budget returns the best of the simplex") {
  int calls = 0;
  auto f = [&](const std::vector<double>& x) {
    ++calls;
    return x[0] * x[0] + x[1] * x[1];
  };
  const auto r = fit_simplex(f, {1.0, 1.0}, {-5.0, -5.0}, {5.0, 5.0}, 4);
  CHECK(calls == 3);  // initial simplex only (n+1 points)
  CHECK(r.evaluations == 3);
  CHECK(r.history.size() == 3);
}

TEST_CASE("fit_simplex: history is the non-increasing best-so-far") {
  auto f = [](const std::vector<double>& x) {
    return std::sin(5.0 * x[0]) + x[0] * x[0];
  };
  const auto r = fit_simplex(f, {3.0}, {-4.0}, {4.0}, 60);
  for (std::size_t i = 1; i < r.history.size(); ++i)
    CHECK(r.history[i] <= r.history[i - 1]);
  CHECK(r.history.size() == r.evaluations);
}

TEST_CASE("fit_simplex: bounds are respected") {
  auto f = [](const std::vector<double>& x) { return -x[0] - 10.0 * x[1]; };
  const auto r = fit_simplex(f, {0.5, 0.5}, {0.0, 0.0}, {1.0, 2.0}, 100);
  CHECK(r.best[0] <= 1.0 + 1e-12);
  CHECK(r.best[1] <= 2.0 + 1e-12);
  CHECK(r.best[0] == doctest::Approx(1.0));
  CHECK(r.best[1] == doctest::Approx(2.0));
}

TEST_CASE("fit_simplex: deterministic replay") {
  auto f = [](const std::vector<double>& x) {
    return std::cos(3.0 * x[0]) * std::sin(2.0 * x[1]) + 0.1 * x[0] * x[0] +
           0.2 * x[1] * x[1];
  };
  const auto a = fit_simplex(f, {1.0, -1.0}, {-3.0, -3.0}, {3.0, 3.0}, 120);
  const auto b = fit_simplex(f, {1.0, -1.0}, {-3.0, -3.0}, {3.0, 3.0}, 120);
  CHECK(a.history == b.history);
  CHECK(a.best == b.best);
}

TEST_CASE("loss: zero when every target is hit exactly") {
  const SimConfig base = tiny_config();
  const CalibrationOptions opts = tiny_options();
  const ParameterVector p = ParameterVector::default_free(base);
  CalibrationTargets t;
  LossBreakdown bd;
  calibration_loss(p, t, base, opts, &bd);
  REQUIRE_FALSE(bd.failed);
  // Retarget onto the achieved values: the loss must collapse to zero.
  t.direct_peak = bd.values[0];
  t.direct_work = bd.values[1];
  t.plateau_direct = bd.values[2];
  t.recip4_peak = bd.values[3];
  t.recip4_work = bd.values[4];
  t.plateau_recip4 = bd.values[5];
  t.recip1_peak = bd.values[6];
  t.recip1_work = bd.values[7];
  t.plateau_recip1 = bd.values[8];
  CHECK(calibration_loss(p, t, base, opts) == doctest::Approx(0.0));
}

TEST_CASE("loss: one stat off by ten percent scores 0.01") {
  const SimConfig base = tiny_config();
  const CalibrationOptions opts = tiny_options();
  const ParameterVector p = ParameterVector::default_free(base);
  CalibrationTargets t;
  LossBreakdown bd;
  calibration_loss(p, t, base, opts, &bd);
  REQUIRE_FALSE(bd.failed);
  t.direct_peak = bd.values[0] / 1.1;  // achieved value is 10% above target
  t.direct_work = bd.values[1];
  t.plateau_direct = bd.values[2];
  t.recip4_peak = bd.values[3];
  t.recip4_work = bd.values[4];
  t.plateau_recip4 = bd.values[5];
  t.recip1_peak = bd.values[6];
  t.recip1_work = bd.values[7];
  t.plateau_recip1 = bd.values[8];
  CHECK(calibration_loss(p, t, base, opts) ==
        doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("loss: default parameters give a positive finite value") {
  const SimConfig base = tiny_config();
  const CalibrationOptions opts = tiny_options();
  const ParameterVector p = ParameterVector::default_free(base);
  const double l = calibration_loss(p, CalibrationTargets{}, base, opts);
  CHECK(l > 0.0);
  CHECK(std::isfinite(l));
  CHECK(l < opts.penalty);
}

TEST_CASE("loss: invalid parameters earn the penalty with a diagnostic") {
  const SimConfig base = tiny_config();
  const CalibrationOptions opts = tiny_options();
  ParameterVector p = ParameterVector::default_free(base);
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p.names[i] == "f_coulomb") p.values[i] = 0.9;  // above f_breakaway
  LossBreakdown bd;
  const double l = calibration_loss(p, CalibrationTargets{}, base, opts, &bd);
  CHECK(l == opts.penalty);
  CHECK(bd.failed);
  CHECK_FALSE(bd.diagnostic.empty());
}

TEST_CASE("loss: threaded evaluation matches single-threaded") {
  const SimConfig base = tiny_config();
  CalibrationOptions opts = tiny_options();
  const ParameterVector p = ParameterVector::default_free(base);
  const double a = calibration_loss(p, CalibrationTargets{}, base, opts);
  opts.threads = 3;
  const double b = calibration_loss(p, CalibrationTargets{}, base, opts);
  CHECK(a == b);
}

TEST_CASE("fit: real protocols improve from the start point") {
  const SimConfig base = tiny_config();
  CalibrationOptions opts = tiny_options();
  opts.budget = 40;
  ParameterVector init = ParameterVector::default_free(base);
  // Start deliberately detuned.
  for (std::size_t i = 0; i < init.size(); ++i)
    if (init.names[i] == "k_parallel") init.values[i] *= 3.0;
  CalibrationTargets t;
  const double initial = calibration_loss(init, t, base, opts);
  const auto r = fit(init, t, base, opts);
  CHECK(r.best_loss <= initial);
  CHECK(r.evaluations <= 40);
  for (std::size_t i = 1; i < r.history.size(); ++i)
    CHECK(r.history[i] <= r.history[i - 1]);
}

TEST_CASE("with_parameters: unknown names are rejected") {
  ParameterVector p;
  p.names = {"bogus"};
  p.values = {1.0};
  p.lo = {0.0};
  p.hi = {2.0};
  CHECK_THROWS_AS(with_parameters(SimConfig{}, p), std::invalid_argument);
}
