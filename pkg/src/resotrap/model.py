"""Model spectra and coupling vectors for the one-channel effective Hamiltonian

    H = diag(E) - i * kappa * v v^T,   kappa = alpha + i*beta.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError, ValidationError


class Family(str, enum.Enum):
    IDEAL = "ideal"
    DISTURBED = "disturbed"
    POWER_LAW = "power"
    BOUNDED_POWER_LAW = "bounded"
    GOE = "goe"


@dataclass(frozen=True)
class SpectrumSpec:
    family: Family
    N: int
    D: float = 0.0
    p: float = 1.0
    r: float = 0.0
    # None: offset 1 when r > 0, else 0 (so r = 0 means v_k = 1)
    offset: float | None = None
    seed: int = 0
    mean_v: float = 1.0
    var_v: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if int(self.N) != self.N or self.N < 0:
            raise ValidationError(f"N must be a nonnegative integer, got {self.N!r}")
        if not self.p > 0:
            raise ValidationError(f"level exponent p must be positive, got {self.p}")
        if self.r < 0:
            raise ValidationError(f"coupling exponent r must be >= 0, got {self.r}")
        if self.var_v < 0:
            raise ValidationError(f"coupling variance must be >= 0, got {self.var_v}")
        if self.family is Family.DISTURBED and 1.0 + self.D < 0:
            raise ValidationError(f"v_0 = 1 + D must be >= 0, got D = {self.D}")
        if self.family is Family.GOE and 2 * self.N + 1 < 3:
            raise ValidationError("GOE family needs N >= 1")

    @property
    def coupling_offset(self) -> float:
        if self.offset is None:
            return 1.0 if self.r > 0 else 0.0
        return float(self.offset)


@dataclass(frozen=True)
class CouplingParam:
    alpha: float
    beta: float = 0.0

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValidationError(f"alpha must be >= 0, got {self.alpha}")

    @classmethod
    def polar(cls, magnitude: float, phi: float) -> "CouplingParam":
        """kappa = magnitude * exp(i*phi), the ray parametrization used for sweeps."""
        return cls(magnitude * math.cos(phi), magnitude * math.sin(phi))

    @property
    def kappa(self) -> complex:
        return complex(self.alpha, self.beta)

    @property
    def phi(self) -> float:
        return math.atan2(self.beta, self.alpha)


def as_kappa(kappa) -> complex:
    if isinstance(kappa, CouplingParam):
        return kappa.kappa
    return complex(kappa)


@dataclass(frozen=True, eq=False)
class ModelInstance:
    energies: np.ndarray
    couplings: np.ndarray
    labels: np.ndarray
    label: str = ""
    spec: SpectrumSpec | None = field(default=None, repr=False)

    def __post_init__(self):
        E = np.asarray(self.energies, dtype=float)
        v = np.asarray(self.couplings, dtype=float)
        lab = np.asarray(self.labels, dtype=int)
        if E.ndim != 1 or E.shape != v.shape or E.shape != lab.shape:
            raise ValidationError("energies, couplings and labels must be 1-D of equal length")
        if E.size == 0:
            raise ValidationError("model needs at least one level")
        if not np.all(np.isfinite(E)) or not np.all(np.isfinite(v)):
            raise ValidationError("energies and couplings must be finite")
        if np.any(np.diff(E) <= 0):
            raise ConstructionError("energies must be strictly increasing (no degeneracy)")
        if np.any(v < 0):
            raise ValidationError("couplings must be nonnegative")
        for arr in (E, v, lab):
            arr.setflags(write=False)
        object.__setattr__(self, "energies", E)
        object.__setattr__(self, "couplings", v)
        object.__setattr__(self, "labels", lab)

    @property
    def M(self) -> int:
        return self.energies.size

    @property
    def v2(self) -> np.ndarray:
        return self.couplings**2

    @property
    def mean_spacing(self) -> float:
        if self.M < 2:
            return 1.0
        return float((self.energies[-1] - self.energies[0]) / (self.M - 1))

    def index_of(self, label: int) -> int:
        hits = np.nonzero(self.labels == label)[0]
        if hits.size == 0:
            raise KeyError(label)
        return int(hits[0])

    def dense(self, kappa) -> np.ndarray:
        k = as_kappa(kappa)
        return np.diag(self.energies).astype(complex) - 1j * k * np.outer(self.couplings, self.couplings)


def from_arrays(energies, couplings, label="custom") -> ModelInstance:
    """Model from explicit arrays; labels centred like the symmetric families."""
    E = np.asarray(energies, dtype=float)
    order = np.argsort(E, kind="stable")
    M = E.size
    labels = np.arange(M) - (M - 1) // 2
    return ModelInstance(E[order], np.abs(np.asarray(couplings, dtype=float))[order], labels, label)


def _semicircle_cdf(x):
    x = np.clip(x, -1.0, 1.0)
    return 0.5 + (x * np.sqrt(1.0 - x * x) + np.arcsin(x)) / np.pi


def unfold_goe(raw_eigenvalues) -> np.ndarray:
    """Map sorted GOE eigenvalues to unit mean spacing, centre of mass at 0.

    Uses the integrated semicircle density with radius and centre taken
    from the extremal eigenvalues.
    """
    e = np.asarray(raw_eigenvalues, dtype=float)
    if e.ndim != 1 or e.size < 3:
        raise ValidationError("unfolding needs at least 3 levels")
    if np.any(np.diff(e) < 0):
        raise ValidationError("raw eigenvalues must be sorted ascending")
    centre = 0.5 * (e[-1] + e[0])
    radius = 0.5 * (e[-1] - e[0])
    if radius <= 0:
        raise ValidationError("degenerate input spectrum")
    x = e.size * _semicircle_cdf((e - centre) / radius)
    x = (x - x.mean()) * (e.size - 1) / (x[-1] - x[0])
    return x


def sample_goe(M: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((M, M))
    h = (a + a.T) / 2.0
    return np.linalg.eigvalsh(h)


def build_model(spec: SpectrumSpec) -> ModelInstance:
    N = int(spec.N)
    fam = spec.family
    if fam is Family.BOUNDED_POWER_LAW:
        k = np.arange(N + 1)
        E = k.astype(float) ** spec.p
        v2 = k.astype(float) ** spec.r + 1.0
        return ModelInstance(E, np.sqrt(v2), k, f"bounded p={spec.p:g} r={spec.r:g}", spec)

    k = np.arange(-N, N + 1)
    ak = np.abs(k).astype(float)
    if fam is Family.IDEAL:
        E = k.astype(float)
        v = np.ones(k.size)
        name = "ideal picket fence"
    elif fam is Family.DISTURBED:
        E = k.astype(float)
        v = np.ones(k.size)
        v[N] = 1.0 + spec.D
        name = f"disturbed picket fence D={spec.D:g}"
    elif fam is Family.POWER_LAW:
        mag = ak**spec.p
        E = np.sign(k) * mag
        v = np.sqrt(ak**spec.r + spec.coupling_offset)
        name = f"power law p={spec.p:g} r={spec.r:g} offset={spec.coupling_offset:g}"
    elif fam is Family.GOE:
        M = 2 * N + 1
        rng = np.random.default_rng(np.uint64(spec.seed & 0xFFFFFFFFFFFFFFFF))
        E = unfold_goe(sample_goe(M, rng))
        v = np.abs(rng.normal(spec.mean_v, math.sqrt(spec.var_v), M))
        name = f"unfolded GOE seed={spec.seed}"
    else:  # pragma: no cover
        raise ValidationError(f"unknown family {fam}")
    return ModelInstance(E, v, k, name, spec)


def random_model(M: int, seed: int, spacing=(0.2, 1.8), coupling=(0.2, 1.5)) -> ModelInstance:
    """Levels with uniform random spacings and uniform random couplings."""
    if M < 1:
        raise ValidationError("M must be >= 1")
    rng = np.random.default_rng(seed)
    E = np.cumsum(rng.uniform(*spacing, M))
    E -= E.mean()
    v = rng.uniform(*coupling, M)
    return ModelInstance(E, v, np.arange(M) - (M - 1) // 2, f"random M={M} seed={seed}")
