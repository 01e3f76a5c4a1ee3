import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resotrap.errors import ConstructionError, ValidationError
from resotrap.model import (
    CouplingParam,
    Family,
    ModelInstance,
    SpectrumSpec,
    build_model,
    random_model,
    unfold_goe,
)


def test_ideal_fence():
    m = build_model(SpectrumSpec("ideal", 2))
    assert m.energies.tolist() == [-2, -1, 0, 1, 2]
    assert m.couplings.tolist() == [1, 1, 1, 1, 1]
    assert m.labels.tolist() == [-2, -1, 0, 1, 2]


def test_disturbed_fence():
    m = build_model(SpectrumSpec("disturbed", 1, D=-0.5))
    assert m.energies.tolist() == [-1, 0, 1]
    assert m.couplings.tolist() == [1, 0.5, 1]


def test_power_law_with_offset():
    m = build_model(SpectrumSpec("power", 2, p=2, r=1, offset=1))
    assert m.energies.tolist() == [-4, -1, 0, 1, 4]
    np.testing.assert_allclose(m.v2, [3, 2, 1, 2, 3], rtol=1e-15)


def test_power_law_offset_defaults():
    # r = 0 keeps unit couplings, r > 0 switches the offset on
    assert build_model(SpectrumSpec("power", 3, p=2, r=0)).v2.tolist() == [1] * 7
    np.testing.assert_allclose(build_model(SpectrumSpec("power", 1, p=2, r=1)).v2, [2, 1, 2])
    np.testing.assert_allclose(build_model(SpectrumSpec("power", 1, p=2, r=1, offset=0)).v2, [1, 0, 1])


def test_bounded_power_law():
    m = build_model(SpectrumSpec("bounded", 3, p=2, r=1))
    assert m.M == 4
    assert m.energies.tolist() == [0, 1, 4, 9]
    np.testing.assert_allclose(m.v2, [1, 2, 3, 4])


@pytest.mark.parametrize("spec", [
    SpectrumSpec("ideal", 7),
    SpectrumSpec("disturbed", 7, D=0.3),
    SpectrumSpec("power", 7, p=1.7, r=0.4),
    SpectrumSpec("power", 9, p=2, r=1),
])
def test_mirror_symmetry_is_exact(spec):
    m = build_model(spec)
    assert np.array_equal(m.energies, -m.energies[::-1])
    assert np.array_equal(m.couplings, m.couplings[::-1])


def test_goe_is_reproducible_and_unfolded():
    a = build_model(SpectrumSpec("goe", 50, seed=123))
    b = build_model(SpectrumSpec("goe", 50, seed=123))
    c = build_model(SpectrumSpec("goe", 50, seed=124))
    assert a.energies.tobytes() == b.energies.tobytes()
    assert a.couplings.tobytes() == b.couplings.tobytes()
    assert not np.array_equal(a.energies, c.energies)
    assert abs(a.mean_spacing - 1.0) < 0.01
    assert abs(a.energies.mean()) < 1e-12
    assert np.all(a.couplings >= 0)


def test_goe_coupling_statistics():
    m = build_model(SpectrumSpec("goe", 2000, seed=5, mean_v=1.0, var_v=0.01))
    assert abs(m.couplings.mean() - 1.0) < 0.01
    assert abs(m.couplings.var() - 0.01) < 0.002


def test_unfold_uniform_fixed_point():
    np.testing.assert_allclose(unfold_goe([-1.0, 0.0, 1.0]), [-1.0, 0.0, 1.0], atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=101, max_value=400), st.integers(min_value=0, max_value=2**32))
def test_unfold_mean_spacing(M, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((M, M))
    raw = np.linalg.eigvalsh((a + a.T) / 2)
    x = unfold_goe(raw)
    assert np.all(np.diff(x) > 0)
    assert abs(np.diff(x).mean() - 1.0) < 0.01


def test_unfold_needs_three_levels():
    with pytest.raises(ValidationError):
        unfold_goe([0.0, 1.0])


def test_validation():
    with pytest.raises(ValidationError):
        SpectrumSpec("goe", 5, var_v=-0.1)
    with pytest.raises(ValidationError):
        SpectrumSpec("power", 5, p=0)
    with pytest.raises(ValidationError):
        SpectrumSpec("ideal", -1)
    with pytest.raises(ValueError):
        SpectrumSpec("nonsense", 3)
    with pytest.raises(ConstructionError):
        ModelInstance(np.array([0.0, 0.0]), np.array([1.0, 1.0]), np.array([0, 1]))


def test_instance_is_read_only():
    m = build_model(SpectrumSpec("ideal", 2))
    with pytest.raises(ValueError):
        m.energies[0] = 5.0


def test_coupling_param():
    k = CouplingParam(0.3, 0.4)
    assert k.kappa == complex(0.3, 0.4)
    assert abs(k.phi - np.arctan2(0.4, 0.3)) < 1e-15
    p = CouplingParam.polar(0.5, np.pi / 4)
    assert abs(p.kappa - 0.5 * np.exp(1j * np.pi / 4)) < 1e-15
    with pytest.raises(ValidationError):
        CouplingParam(-0.1)


def test_random_model_deterministic():
    a = random_model(11, 42)
    b = random_model(11, 42)
    assert a.energies.tobytes() == b.energies.tobytes()
    assert Family("goe") is Family.GOE
