"""Closed-form predictions for infinite and large finite spectra.

Functions return plain floats, or a ``Marker`` where the formula itself
diverges or degenerates, so callers can tell a true singularity from an
overflow.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import NoSolutionError, OutOfDomainError, ValidationError

INV_PI = 1.0 / math.pi


class Marker(str, enum.Enum):
    DIVERGENT = "divergent"
    ZERO = "zero"
    INFINITE = "infinite"


@dataclass(frozen=True)
class AnalyticPrediction:
    name: str
    inputs: dict = field(default_factory=dict)
    value: object = None

    def as_json(self):
        v = self.value
        if isinstance(v, Marker):
            v = v.value
        elif isinstance(v, tuple):
            v = list(v)
        return {"name": self.name, "inputs": dict(self.inputs), "value": v}


def ideal_width(alpha: float):
    """Width of the centre state of the infinite equidistant spectrum."""
    if alpha < 0:
        raise ValidationError("alpha must be >= 0")
    x = math.pi * alpha
    if x == 1.0:
        return Marker.DIVERGENT
    return INV_PI * math.log(abs((1.0 + x) / (1.0 - x)))


def finite_n_estimates(N: int, energy: float):
    """(width envelope Gamma/2 at energy, centre Gamma_0/2, total sum Gamma/2), all at alpha = 1/pi."""
    if N < 1:
        raise ValidationError("N must be >= 1")
    if abs(energy) > N:
        raise ValidationError("energy must satisfy |energy| <= N")
    if energy == 0:
        env = Marker.DIVERGENT
    else:
        env = math.log(N * math.pi / abs(energy)) / (2 * math.pi)
    broad = (1.0 + math.log(2 * math.pi * N)) / (2 * math.pi)
    trace = (2 * N + 1) / math.pi
    return env, broad, trace


def envelope_arcosh(N: int, energy: float):
    """Unapproximated width bound Gamma/2 at alpha = 1/pi.

    pi*Gamma = arcosh(cos(2 pi E) - (N pi / (2E)) sin(2 pi E)); returns the
    ZERO marker where the argument drops below 1 (no admissible width).
    """
    if energy == 0:
        return Marker.DIVERGENT
    arg = math.cos(2 * math.pi * energy) - N * math.pi / (2 * energy) * math.sin(2 * math.pi * energy)
    if arg < 1.0:
        return Marker.ZERO
    return math.acosh(arg) / (2 * math.pi)


# ---------------------------------------------------------------- disturbed fence


def disturbed_alpha_of_mu(mu: float, D: float):
    """Coupling at which the centre state sits at lambda = -i*mu, centre coupling 1 + D."""
    if not mu > 0:
        raise ValidationError("mu must be > 0")
    x = math.pi * mu
    den = D / x + 1.0 / math.tanh(x)
    if not den > 0:
        raise NoSolutionError(f"no real coupling for mu={mu}, D={D}")
    return INV_PI / den


def _alpha_peak(D: float):
    """Location and value of the maximum of alpha(mu) when it is not at infinity."""
    mus = np.geomspace(1e-6, 1e4, 2001)
    vals = np.array([disturbed_alpha_of_mu(m, D) if (D / (math.pi * m) + 1 / math.tanh(math.pi * m)) > 0 else -1.0 for m in mus])
    i = int(np.argmax(vals))
    return float(mus[i]), float(vals[i])


def disturbed_mu_of_alpha(alpha: float, D: float, branch: str = "outer"):
    """Invert alpha(mu) on one monotone branch.

    ``outer`` is the branch reaching mu -> inf (alpha -> 1/pi), ``inner`` the
    branch starting at small mu.
    """
    if branch not in ("outer", "inner"):
        raise ValidationError("branch must be 'outer' or 'inner'")
    if not alpha > 0:
        raise ValidationError("alpha must be > 0")

    def g(m):
        return disturbed_alpha_of_mu(m, D) - alpha

    if D >= 0:
        # monotone increasing towards 1/pi
        if alpha >= INV_PI:
            raise NoSolutionError("alpha >= 1/pi has no centre solution for D >= 0")
        lo = _lower_valid_mu(D)
        hi = 1.0
        while g(hi) < 0:
            hi *= 2.0
            if hi > 1e300:
                raise NoSolutionError("root not bracketed")
        return brentq(g, lo, hi, xtol=1e-300, rtol=1e-14, maxiter=500)
    m_pk, a_pk = _alpha_peak(D)
    if alpha > a_pk:
        raise NoSolutionError(f"alpha={alpha} exceeds the branch maximum {a_pk}")
    if branch == "inner":
        lo = _lower_valid_mu(D)
        if g(lo) > 0:
            raise NoSolutionError("inner branch does not reach this alpha")
        return brentq(g, lo, m_pk, xtol=1e-300, rtol=1e-14, maxiter=500)
    if alpha <= INV_PI:
        raise NoSolutionError("outer branch lies above 1/pi for D < 0")
    hi = max(m_pk, 1.0)
    while g(hi) > 0:
        hi *= 2.0
        if hi > 1e300:
            raise NoSolutionError("root not bracketed")
    return brentq(g, m_pk, hi, xtol=1e-300, rtol=1e-14, maxiter=500)


def _lower_valid_mu(D: float):
    m = 1e-12
    # D/(pi mu) + coth(pi mu) ~ (1 + D)/(pi mu) near 0
    if 1.0 + D <= 0:
        while D / (math.pi * m) + 1 / math.tanh(math.pi * m) <= 0:
            m *= 1.5
    return m


def singularity_fit(D: float, eps_lo: float = 1e-4, eps_hi: float = 1e-2, n: int = 21):
    """Fit pi*mu = c * eps^(-s), eps = |1 - pi*alpha|, on the branch mu -> inf.

    Returns (s, c).  Least squares on log-log over a geometric eps grid.
    """
    if D == 0:
        raise ValidationError("D = 0 has an exponential, not algebraic, singularity")
    eps = np.geomspace(eps_lo, eps_hi, n)
    sign = 1.0 if D > 0 else -1.0
    # D > 0 approaches 1/pi from below, D < 0 from above
    alphas = (1.0 - sign * eps) / math.pi
    pm = np.array([math.pi * disturbed_mu_of_alpha(a, D, "outer") for a in alphas])
    slope, icept = np.polyfit(np.log(eps), np.log(pm), 1)
    return float(-slope), float(math.exp(icept))


# ---------------------------------------------------------------- power-law spectra


def diluted_alpha_of_mu(mu: float) -> float:
    """Centre-state relation for E_k = sign(k) k^2 with unit couplings (N -> inf)."""
    if not mu > 0:
        raise ValidationError("mu must be > 0")
    y = math.sqrt(2.0 * mu)
    x = math.pi * y
    e = math.exp(-x)
    # (cosh x - cos x) / (sinh x + sin x), scaled by e^-x to stay finite
    num = 1.0 + e * e - 2.0 * e * math.cos(x)
    den = 1.0 - e * e + 2.0 * e * math.sin(x)
    return y / math.pi * num / den


def power_law_critical(r: float, t: float):
    """Critical coupling for E^2 ~ x^t, v^2 ~ x^r: (r+1)/pi when 2(r+1) = t."""
    if r < 0 or not t > 0:
        raise ValidationError("need r >= 0 and t > 0")
    lhs = 2.0 * (r + 1.0)
    if math.isclose(lhs, t, rel_tol=1e-12):
        return (r + 1.0) / math.pi
    return Marker.ZERO if lhs > t else Marker.INFINITE


def compensated_broad_width(N: int, r: float, alpha: float) -> float:
    """Broad-state width 2 N^(r+1) / tan((r+1)/(2 alpha)) above the critical coupling."""
    a_c = (r + 1.0) / math.pi
    if not alpha > a_c:
        raise OutOfDomainError(f"alpha={alpha} must exceed the critical value {a_c}")
    return 2.0 * N ** (r + 1.0) / math.tan((r + 1.0) / (2.0 * alpha))


def complex_coupling_width(alpha: float, beta: float):
    """Centre width of the equidistant spectrum for kappa = alpha + i*beta."""
    pa = math.pi * alpha
    pb2 = (math.pi * beta) ** 2
    den = (pa - 1.0) ** 2 + pb2
    if den == 0:
        return Marker.DIVERGENT
    return math.log(((pa + 1.0) ** 2 + pb2) / den) / (2 * math.pi)


def predict(name: str, **inputs) -> AnalyticPrediction:
    """Evaluate a named formula; used by the command line front end."""
    table = {
        "ideal_width": lambda a: ideal_width(a["alpha"]),
        "finite_n_estimates": lambda a: finite_n_estimates(int(a["N"]), a["energy"]),
        "envelope_arcosh": lambda a: envelope_arcosh(int(a["N"]), a["energy"]),
        "disturbed_alpha_of_mu": lambda a: disturbed_alpha_of_mu(a["mu"], a["D"]),
        "singularity_fit": lambda a: singularity_fit(a["D"]),
        "diluted_alpha_of_mu": lambda a: diluted_alpha_of_mu(a["mu"]),
        "power_law_critical": lambda a: power_law_critical(a["r"], a["t"]),
        "compensated_broad_width": lambda a: compensated_broad_width(int(a["N"]), a["r"], a["alpha"]),
        "complex_coupling_width": lambda a: complex_coupling_width(a["alpha"], a["beta"]),
    }
    if name not in table:
        raise ValidationError(f"unknown formula {name!r}; choose from {sorted(table)}")
    try:
        value = table[name](inputs)
    except KeyError as exc:
        raise ValidationError(f"formula {name} needs input {exc.args[0]!r}") from None
    return AnalyticPrediction(name, inputs, value)
