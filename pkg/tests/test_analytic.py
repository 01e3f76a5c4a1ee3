import math

import numpy as np
import pytest

from resotrap.analytic import (
    Marker,
    compensated_broad_width,
    complex_coupling_width,
    diluted_alpha_of_mu,
    disturbed_alpha_of_mu,
    disturbed_mu_of_alpha,
    envelope_arcosh,
    finite_n_estimates,
    ideal_width,
    power_law_critical,
    predict,
    singularity_fit,
)
from resotrap.errors import NoSolutionError, OutOfDomainError, ValidationError

# reference values below were evaluated independently at 30 digits with mpmath


def test_ideal_width_values():
    assert ideal_width(0.1) == pytest.approx(0.20699913527783, rel=1e-12)
    assert ideal_width(0.99 / math.pi) == pytest.approx(1.6849112562941, rel=1e-12)
    assert ideal_width(1.0) == pytest.approx(0.20993511974246, rel=1e-12)
    assert ideal_width(1 / math.pi) is Marker.DIVERGENT


def test_ideal_width_monotone_and_log_divergence():
    below = np.linspace(0, 1 / math.pi, 200, endpoint=False)
    w = [ideal_width(a) for a in below]
    assert np.all(np.diff(w) > 0)
    above = np.linspace(1 / math.pi, 5, 200)[1:]
    w = [ideal_width(a) for a in above]
    assert np.all(np.diff(w) < 0)
    for eps in (1e-3, 1e-6):
        for a in ((1 - eps) / math.pi, (1 + eps) / math.pi):
            assert ideal_width(a) / (-math.log(eps) / math.pi) == pytest.approx(1, abs=0.12)


def test_finite_n_estimates():
    env, broad, tr = finite_n_estimates(1000, 1.0)
    assert env == pytest.approx(1.2815928181571, rel=1e-12)
    env, broad, tr = finite_n_estimates(50, 2.0)
    assert broad == pytest.approx(1.0742799618093, rel=1e-12)
    assert tr == pytest.approx(32.149298504563, rel=1e-12)
    assert finite_n_estimates(50, 0.0)[0] is Marker.DIVERGENT
    with pytest.raises(ValidationError):
        finite_n_estimates(50, 51.0)


def test_envelope_arcosh_vs_log_form():
    # where sin(2 pi E) = -1 the exact form reduces to the logarithm
    exact = envelope_arcosh(1000, 2.75)
    approx = finite_n_estimates(1000, 2.75)[0]
    assert exact == pytest.approx(approx, rel=0.01)


def test_disturbed_relation():
    assert disturbed_alpha_of_mu(1.0, -0.5) == pytest.approx(0.37688232535644, rel=1e-12)
    assert disturbed_alpha_of_mu(1e6, 0.7) == pytest.approx(1 / math.pi, rel=1e-6)
    for mu in (0.01, 0.3, 2.0, 9.0):
        assert disturbed_alpha_of_mu(mu, 0.0) == pytest.approx(math.tanh(math.pi * mu) / math.pi, rel=1e-12)
    with pytest.raises(NoSolutionError):
        disturbed_alpha_of_mu(0.1, -2.0)


def test_disturbed_inverse_round_trip():
    for D, alpha, branch in ((0.5, 0.25, "outer"), (-0.5, 0.35, "outer"), (-0.5, 0.35, "inner")):
        mu = disturbed_mu_of_alpha(alpha, D, branch)
        assert disturbed_alpha_of_mu(mu, D) == pytest.approx(alpha, rel=1e-12)
    with pytest.raises(NoSolutionError):
        disturbed_mu_of_alpha(0.5, 0.5)


@pytest.mark.parametrize("D", [0.5, -0.5])
def test_algebraic_singularity_exponent(D):
    s, c = singularity_fit(D)
    assert s == pytest.approx(1.0, abs=0.05)
    assert c == pytest.approx(abs(D), rel=0.05)


def test_diluted_relation():
    assert diluted_alpha_of_mu(1e-6) == pytest.approx(1e-6, rel=1e-5)
    assert diluted_alpha_of_mu(10.0) == pytest.approx(1.4235226457360, rel=1e-12)
    mus = np.geomspace(1e-3, 1e3, 400)
    assert np.all(np.diff([diluted_alpha_of_mu(m) for m in mus]) > 0)
    assert math.isfinite(diluted_alpha_of_mu(1e8))


def test_power_law_critical():
    assert power_law_critical(0, 2) == pytest.approx(1 / math.pi)
    assert power_law_critical(1, 4) == pytest.approx(2 / math.pi)
    assert power_law_critical(2, 4) is Marker.ZERO
    assert power_law_critical(0, 4) is Marker.INFINITE


def test_compensated_broad_width():
    assert compensated_broad_width(50, 0, 1.0) == pytest.approx(183.04877217125, rel=1e-12)
    assert compensated_broad_width(50, 1, 0.75) == pytest.approx(1210.1471347759, rel=1e-12)
    big = compensated_broad_width(50, 1, 1e4)
    assert big == pytest.approx(4 * 50**2 * 1e4 / 2, rel=1e-6)
    with pytest.raises(OutOfDomainError):
        compensated_broad_width(50, 1, 0.6)


def test_complex_coupling_width():
    a = 1 / math.pi
    assert complex_coupling_width(a, 0.1) == pytest.approx(0.59307168532983, rel=1e-12)
    assert complex_coupling_width(a, 0.01) == pytest.approx(1.3221672232998, rel=1e-12)
    assert complex_coupling_width(0.1, 0.0) == pytest.approx(ideal_width(0.1), rel=1e-14)
    assert complex_coupling_width(a, 0.0) is Marker.DIVERGENT
    assert complex_coupling_width(a, 0.2) < complex_coupling_width(a, 0.1) < complex_coupling_width(a, 0.01)


def test_predict_dispatch():
    p = predict("ideal_width", alpha=0.1)
    assert p.value == pytest.approx(0.20699913527783)
    assert p.as_json()["name"] == "ideal_width"
    assert predict("power_law_critical", r=2, t=4).as_json()["value"] == "zero"
    with pytest.raises(ValidationError):
        predict("nope")
    with pytest.raises(ValidationError):
        predict("ideal_width")
