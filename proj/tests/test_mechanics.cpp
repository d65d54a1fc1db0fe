#include <doctest.h>

#include <cmath>
#include <vector>

#include "reciprosim/mechanics.hpp"
#include "reciprosim/rng.hpp"

using namespace reciprosim;

namespace {

FrictionParams friction(double brk, double coul, double v_brk, double visc) {
  FrictionParams p;
  p.f_breakaway = brk;
  p.f_coulomb = coul;
  p.v_breakaway = v_brk;
  p.f_viscous = visc;
  return p;
}

// Dense scan of the velocity-strength curve; the independent check for the
// breakaway-peak property.
double scan_peak(const FrictionParams& p, double v_max, int n) {
  double best = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double v = v_max * i / n;
    best = std::max(best, friction_force(p, v, 1.0));
  }
  return best;
}

}  // namespace

TEST_CASE("friction: zero at zero velocity") {
  const auto p = friction(2.0, 1.0, 0.01, 0.5);
  CHECK(friction_force(p, 0.0, 1.0) == 0.0);
}

TEST_CASE("friction: closed-form value at the Stribeck velocity") {
  // sqrt(2e)*e^-1*(f_brk-f_coul) + f_coul*tanh(10*sqrt(2)), evaluated with
  // high-precision arithmetic: 0.857763... + 0.999999... = 1.857763...
  const auto p = friction(2.0, 1.0, 0.01, 0.0);
  const double v = 0.01 * std::sqrt(2.0);
  CHECK(friction_force(p, v, 1.0) == doctest::Approx(1.8578).epsilon(1e-4));
}

TEST_CASE("friction: peak of the velocity-strength curve is the breakaway") {
  for (const auto& p : {friction(2.0, 1.0, 0.01, 0.0),
                        friction(0.06, 0.02, 0.25, 0.0),
                        friction(1.0, 0.9, 0.5, 0.0)}) {
    const double peak = scan_peak(p, 10.0 * p.v_breakaway, 20000);
    CHECK(peak == doctest::Approx(p.f_breakaway).epsilon(0.01));
  }
}

TEST_CASE("friction: odd in relative velocity") {
  const auto p = friction(1.5, 0.7, 0.3, 0.2);
  Rng rng(42);
  for (int i = 0; i < 200; ++i) {
    const double v = rng.uniform(-20.0, 20.0);
    const double s = rng.uniform(0.0, 1.0);
    CHECK(friction_force(p, -v, s) ==
          doctest::Approx(-friction_force(p, v, s)).epsilon(1e-12));
  }
}

TEST_CASE("friction: monotone past the Stribeck dip") {
  // The curve decays from the peak toward the Coulomb level and then climbs
  // through the viscous term; beyond the dip it must not decrease.
  const auto p = friction(1.5, 0.7, 0.3, 0.1);
  std::vector<double> fs;
  for (int i = 0; i <= 4000; ++i)
    fs.push_back(friction_force(p, p.v_breakaway + i * 0.01, 1.0));
  std::size_t dip = 0;
  for (std::size_t i = 1; i < fs.size(); ++i)
    if (fs[i] < fs[dip]) dip = i;
  bool monotone = true;
  for (std::size_t i = dip + 1; i < fs.size(); ++i)
    monotone = monotone && fs[i] >= fs[i - 1] - 1e-12;
  CHECK(monotone);
}

TEST_CASE("friction: extraction gain scales only the pulling direction") {
  auto p = friction(1.0, 0.5, 0.2, 0.1);
  p.extract_gain = 1.5;
  CHECK(friction_force(p, 1.0, 0.5) ==
        doctest::Approx(-friction_force(p, -1.0, 0.5) / 1.5).epsilon(1e-12));
}

TEST_CASE("friction: rejects bad inputs") {
  const auto p = friction(1.0, 0.5, 0.2, 0.1);
  CHECK_THROWS_AS(friction_force(p, std::nan(""), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(friction_force(p, 1.0, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(friction_force(p, 1.0, 1.1), std::invalid_argument);
}

TEST_CASE("kelvin: zero input stays at rest") {
  KelvinParams p;
  const auto r = kelvin_step(p, KelvinState{}, 0.0, 1e-3);
  CHECK(r.force == 0.0);
  CHECK(r.state.x == 0.0);
  CHECK(r.state.f_maxwell == 0.0);
}

TEST_CASE("kelvin: step response matches the analytic relaxation") {
  KelvinParams p;
  p.k_parallel = 1.0;
  p.k_series = 1.0;
  p.c_damper = 1.0;
  const double x0 = 1.0;

  auto relax_error = [&](double dt) {
    KelvinState s;
    auto r = kelvin_step(p, s, x0, dt);
    s = r.state;
    // Instantaneous response approaches (k_parallel + k_series)*x0.
    double worst = 0.0;
    const int steps = static_cast<int>(std::lround(1.0 / dt));
    for (int i = 1; i < steps; ++i) {
      r = kelvin_step(p, s, x0, dt);
      s = r.state;
      const double t = (i + 1) * dt;
      const double analytic = p.k_parallel * x0 +
                              p.k_series * x0 * std::exp(-p.k_series * t / p.c_damper);
      worst = std::max(worst, std::abs(r.force - analytic) / analytic);
    }
    return worst;
  };

  const double err_1ms = relax_error(1e-3);
  CHECK(err_1ms < 1e-3);
  // After 1 s of holding: k_p*x0 + k_s*x0*e^-1 = 1.3679 within 1e-3.
  {
    KelvinState s;
    double force = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const auto r = kelvin_step(p, s, x0, 1e-3);
      s = r.state;
      force = r.force;
    }
    CHECK(force == doctest::Approx(1.0 + std::exp(-1.0)).epsilon(1e-3));
  }
  // First-order convergence: halving dt roughly halves the error.
  const double err_05ms = relax_error(5e-4);
  CHECK(err_1ms / err_05ms == doctest::Approx(2.0).epsilon(0.25));
}

TEST_CASE("kelvin: dissipative over a closed displacement cycle") {
  KelvinParams p;
  p.k_parallel = 0.3;
  p.k_series = 0.8;
  p.c_damper = 0.4;
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    KelvinState s;
    const double dt = 1e-3;
    double work = 0.0;
    const int n = 2000;
    const double amp = rng.uniform(0.1, 2.0);
    const double cycles = 1.0 + trial % 3;
    double x_prev = 0.0;
    for (int i = 1; i <= n; ++i) {
      const double x =
          amp * std::sin(2.0 * 3.141592653589793 * cycles * i / n);
      const auto r = kelvin_step(p, s, x, dt);
      s = r.state;
      work += r.force * (x - x_prev);
      x_prev = x;
    }
    // Return exactly to rest position; net input must be non-negative.
    CHECK(x_prev == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(work > -1e-9);
  }
}

TEST_CASE("kelvin: rejects bad steps") {
  KelvinParams p;
  CHECK_THROWS_AS(kelvin_step(p, KelvinState{}, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(kelvin_step(p, KelvinState{}, std::nan(""), 1e-3),
                  std::invalid_argument);
}

TEST_CASE("cutting: active only at an advancing crack front") {
  CuttingParams p;
  p.f_cut = 0.1;
  CHECK(cutting_force(p, 10.0, 10.0, 4.0) == doctest::Approx(0.1));
  CHECK(cutting_force(p, 8.0, 10.0, 4.0) == 0.0);
  CHECK(cutting_force(p, 10.0, 10.0, -4.0) == 0.0);
  CHECK_THROWS_AS(cutting_force(p, 1.0, -1.0, 1.0), std::invalid_argument);
}

TEST_CASE("feasibility: anchoring inequalities") {
  {
    const FeasibilityReport r =
        feasible_reciprocal({0.1, 0.1, 0.1, 0.25, 3});
    CHECK(r.eq2_holds);
    CHECK(r.margin == doctest::Approx(0.1));
  }
  {
    const FeasibilityReport r =
        feasible_reciprocal({0.2, 0.2, 0.1, 0.35, 3});
    CHECK_FALSE(r.eq2_holds);  // 0.4 > 0.3
  }
  {
    const FeasibilityReport r = feasible_reciprocal({0.0, 0.0, 0.0, 0.0, 3});
    CHECK_FALSE(r.eq1_holds);
    CHECK_FALSE(r.eq2_holds);
    CHECK(r.margin == 0.0);
  }
}

TEST_CASE("feasibility: scale invariance") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    ForceBudget b;
    b.f_cut = rng.uniform(0.0, 1.0);
    b.f_insert = rng.uniform(0.0, 1.0);
    b.f_extract = rng.uniform(0.0, 1.0);
    b.f_drive = rng.uniform(0.0, 2.0);
    const double lambda = rng.uniform(0.01, 100.0);
    ForceBudget s = b;
    s.f_cut *= lambda;
    s.f_insert *= lambda;
    s.f_extract *= lambda;
    s.f_drive *= lambda;
    const auto r0 = feasible_reciprocal(b);
    const auto r1 = feasible_reciprocal(s);
    CHECK(r0.eq1_holds == r1.eq1_holds);
    CHECK(r0.eq2_holds == r1.eq2_holds);
  }
}
