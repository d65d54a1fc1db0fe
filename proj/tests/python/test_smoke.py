"""Smoke tests for the compiled module (run with PYTHONPATH pointing at the
build directory, or after `pip install`)."""

import json
import math

import numpy as np
import pytest

rs = pytest.importorskip("_reciprosim")


SMALL_CONFIG = {
    "record_dt": 0.01,
    "grid": {"n_axial": 2, "first_station": 1.0, "axial_spacing": 2.0, "n_radial": 2},
    "schedule": {"type": "direct", "v_probe": 2.0, "depth": 6.0, "hold_time": 2.0},
}


def test_friction_basics():
    p = rs.FrictionParams()
    assert rs.friction_force(p, 0.0, 1.0) == 0.0
    f = rs.friction_force(p, 1.0, 0.5)
    assert rs.friction_force(p, -1.0, 0.5) == pytest.approx(-f)


def test_friction_closed_form():
    p = rs.FrictionParams()
    p.f_breakaway = 2.0
    p.f_coulomb = 1.0
    p.v_breakaway = 0.01
    p.f_viscous = 0.0
    v = 0.01 * math.sqrt(2.0)
    assert rs.friction_force(p, v, 1.0) == pytest.approx(1.8578, abs=2e-4)


def test_kelvin_step_response():
    p = rs.KelvinParams()
    p.k_parallel = 1.0
    p.k_series = 1.0
    p.c_damper = 1.0
    s = rs.KelvinState()
    force = 0.0
    for _ in range(1000):
        force, s = rs.kelvin_step(p, s, 1.0, 1e-3)
    assert force == pytest.approx(1.0 + math.exp(-1.0), abs=1e-3)


def test_feasibility_arithmetic():
    b = rs.ForceBudget()
    b.f_cut, b.f_insert, b.f_extract, b.f_drive = 0.1, 0.1, 0.1, 0.25
    rep = rs.feasible_reciprocal(b)
    assert rep.eq2_holds
    assert rep.margin == pytest.approx(0.1)


def test_schedule_position():
    cfg = json.dumps(
        {"schedule": {"type": "reciprocal", "v_segment": 4.0, "stroke": 5.0,
                      "cycles": 14, "hold_time": 0.0}}
    )
    assert list(rs.schedule_position(cfg, 5.0)) == pytest.approx([5.0] * 4)
    assert list(rs.schedule_position(cfg, 0.625)) == pytest.approx(
        [2.5, 0.0, 0.0, 0.0]
    )


def test_simulate_deterministic():
    cfg = json.dumps(SMALL_CONFIG)
    a = rs.simulate(cfg)
    b = rs.simulate(cfg)
    assert np.array_equal(a["reaction_force"], b["reaction_force"])
    assert np.array_equal(a["work"], b["work"])
    assert a["reaction_force"].max() > 0.0
    assert np.all(np.diff(a["cut_depth"]) >= 0.0)


def test_compare_published_numbers():
    rep = rs.compare(0.69, 3.63, 25.23, 0.56, 2.92, 19.69)
    assert rep["peak_reduction_pct"] == pytest.approx(18.84, abs=0.01)
    assert rep["plateau_reduction_pct"] == pytest.approx(19.56, abs=0.01)


def test_piv_integer_shift():
    o = rs.OpticsSpec()
    o.fov_x_mm = 192 * o.resolution_um_per_px * 1e-3
    o.fov_y_mm = 160 * o.resolution_um_per_px * 1e-3
    o.view_x0_mm = 0.0
    o.view_y0_mm = 0.0
    o.seed = 5
    particles = rs.seed_particles(o)
    f0 = rs.synth_frame(particles, o)
    f1 = np.zeros_like(f0)
    f1[2:, 3:] = f0[:-2, :-3]
    field = rs.compute_field(f0, f1, search_radius=8)
    valid = field["valid"]
    assert valid.sum() > 10
    nx = field["nx"]
    inner = np.zeros_like(valid)
    for i in range(len(valid)):
        ix, iy = i % nx, i // nx
        inner[i] = 0 < ix < nx - 1 and 0 < iy < field["ny"] - 1
    sel = valid & inner
    assert np.allclose(field["dx_px"][sel], 3.0, atol=0.02)
    assert np.allclose(field["dy_px"][sel], 2.0, atol=0.02)


def test_profile_stats_trapezoid():
    t = np.arange(101, dtype=float)
    v = np.piecewise(
        t,
        [t <= 20, (t > 20) & (t <= 60), (t > 60) & (t <= 90), t > 90],
        [lambda x: 0.15 * x, 3.0, lambda x: 3.0 - 0.05 * (x - 60), 1.5],
    )
    st = rs.profile_stats(t, v, t_stop=60.0)
    assert st["peak"] == pytest.approx(3.0)
    assert st["plateau_mean"] == pytest.approx(3.0, abs=0.05)
    assert st["relaxation_level"] == pytest.approx(1.5, abs=0.02)
