import math

import numpy as np
import pytest

from resotrap.errors import ValidationError
from resotrap.model import SpectrumSpec, build_model
from resotrap.sweep import (
    NO_TRANSITION,
    SweepOptions,
    axis_counts,
    default_alpha_grid,
    detect_collisions,
    estimate_critical,
    hinge_fit,
    max_slope,
    run_sweep,
)


def test_default_grid_layout():
    g = default_alpha_grid(1 / math.pi, 0.01, 2.0)
    assert np.all(np.diff(g) > 0)
    assert g[0] == pytest.approx(0.01) and g[-1] == pytest.approx(2.0)
    inside = g[(g >= 0.8 / math.pi) & (g <= 1.25 / math.pi)]
    np.testing.assert_allclose(np.diff(inside), 0.005, atol=1e-9)
    with pytest.raises(ValidationError):
        default_alpha_grid(start=1.0, end=0.5)


def test_hinge_fit_recovers_breakpoint():
    x = np.linspace(0, 1, 201)
    y = np.where(x < 0.437, 0.1 * x, 0.0437 + 2.0 * (x - 0.437))
    bp, rms = hinge_fit(x, y, 0.2, 0.8)
    assert bp == pytest.approx(0.437, abs=1e-6)
    assert rms < 1e-10


def test_ideal_sweep_order_parameter(ideal_sweep):
    r = ideal_sweep
    assert r.broad_label == 0
    assert not r.warnings
    om = r.omega
    assert np.all(om >= 0)
    assert np.all(np.diff(om) >= -1e-12)
    assert np.all(r.B >= 1 - 1e-12)
    # N^p of the broad state rises from ~1/M to near 1
    assert r.npc_broad[0] == pytest.approx(1 / 101, rel=0.05)
    assert r.npc_broad[-1] > 0.95
    assert r.slope_below.slope == pytest.approx(1 / 101, rel=0.2)


def test_ideal_sweep_slope_above_matches_dense_route(ideal_sweep):
    # asymptotic slope is 1; over a finite window the trapped states' remainder
    # (decaying like 1/alpha) pushes it a few percent higher
    r = ideal_sweep
    sel = r.alpha >= r.options.above_frac * r.critical.alpha_crit
    m = r.model
    dense = []
    for a in r.alpha[sel][::8]:
        lam = np.linalg.eigvals(m.dense(a))
        dense.append(-lam.imag.min() / m.M)
    slope_dense = np.polyfit(r.alpha[sel][::8], dense, 1)[0]
    assert r.slope_above.slope == pytest.approx(slope_dense, rel=0.01)
    assert 1.0 < r.slope_above.slope < 1.1


def test_ideal_change_point(ideal_sweep):
    est = ideal_sweep.critical
    assert est.verdict != NO_TRANSITION
    step = 0.005
    assert abs(est.change_point - 1 / math.pi) <= step
    assert est.hinge_rms < 5e-3


def test_no_transition_verdict_for_diluted_spectrum():
    r = run_sweep(build_model(SpectrumSpec("power", 50, p=2, r=0)), np.linspace(0.01, 2, 200))
    assert r.critical.verdict == NO_TRANSITION
    assert r.critical.alpha_crit is None
    assert r.slope_above is None


def test_disturbed_collisions_and_three_centre_states():
    m = build_model(SpectrumSpec("disturbed", 50, D=-0.5))
    r = run_sweep(m, np.round(np.arange(0.01, 1.0 + 1e-9, 0.005), 10))
    col = r.collisions
    assert col.alpha_c1 is not None and col.alpha_c2 is not None
    assert 1 / math.pi < col.alpha_c1 < col.alpha_c2
    inside = (r.alpha > col.alpha_c1) & (r.alpha < col.alpha_c2)
    assert np.all(axis_counts(r)[inside] == 3)
    assert np.all(axis_counts(r)[r.alpha < col.alpha_c1] == 1)


def test_ideal_fence_has_no_collisions(ideal_sweep):
    col = detect_collisions(ideal_sweep)
    assert col.alpha_c1 is None and col.alpha_c2 is None
    assert np.all(axis_counts(ideal_sweep) == 1)


def test_options_validation():
    with pytest.raises(ValidationError):
        SweepOptions(below_frac=2.0, above_frac=1.0)
    with pytest.raises(ValidationError):
        SweepOptions(hinge_factor=1.0)


def test_max_slope():
    assert max_slope(np.array([0.0, 1.0, 2.0]), np.array([0.0, 3.0, 4.0])) == 3.0


def test_estimate_critical_is_repeatable(ideal_sweep):
    assert estimate_critical(ideal_sweep) == ideal_sweep.critical
