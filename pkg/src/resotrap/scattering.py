"""One-channel S-matrix, its pole residues and averaged cross sections."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigens import eigenvector
from .errors import PoleHitError, ValidationError
from .model import ModelInstance, as_kappa

POLE_TOL = 1e-12


def _k_function(model: ModelInstance, energies: np.ndarray) -> np.ndarray:
    w = model.v2
    mask = w > 0
    E0 = model.energies[mask]
    d = energies[:, None] - E0[None, :]
    if np.any(np.abs(d) < POLE_TOL):
        bad = energies[np.any(np.abs(d) < POLE_TOL, axis=1)][0]
        raise PoleHitError(f"energy {bad} lies on a coupled bare level")
    return (w[mask][None, :] / d).sum(axis=1)


def s_matrix(model: ModelInstance, kappa, energies) -> np.ndarray:
    """S(E) = (1 - i kappa K)/(1 + i kappa K), K(E) = sum v^2/(E - E_k), vectorized."""
    k = as_kappa(kappa)
    e = np.atleast_1d(np.asarray(energies, dtype=float))
    out = np.empty(e.size, dtype=complex)
    chunk = max(1, 2_000_000 // model.M)
    for lo in range(0, e.size, chunk):
        K = _k_function(model, e[lo:lo + chunk])
        out[lo:lo + chunk] = (1.0 - 1j * k * K) / (1.0 + 1j * k * K)
    return out


def s_matrix_element(model: ModelInstance, kappa, energy: float) -> complex:
    return complex(s_matrix(model, kappa, [energy])[0])


@dataclass(frozen=True, eq=False)
class Residues:
    lambdas: np.ndarray
    gamma2: np.ndarray  # residue of S at each pole, divided by i
    ratio: np.ndarray  # Gamma * <Phi|Phi> / |gamma2|, diagnostic only

    def pole_sum(self, energies) -> np.ndarray:
        """1 + i * sum_k gamma2_k / (E - lambda_k): the pole expansion of S."""
        e = np.atleast_1d(np.asarray(energies, dtype=float))
        return 1.0 + 1j * (self.gamma2[None, :] / (e[:, None] - self.lambdas[None, :])).sum(axis=1)


def residues(model: ModelInstance, kappa, lambdas) -> Residues:
    """Residues from the bilinear-normalized eigenvectors, one per eigenvalue.

    S - 1 = -2i kappa sum_k (v.a_k)^2/(E - lambda_k), so the residue divided
    by i is -2 kappa (v.a_k)^2.  Raises SelfOrthogonalError at an exceptional point.
    """
    k = as_kappa(kappa)
    lam = np.asarray(lambdas, dtype=complex)
    g2 = np.empty(lam.size, dtype=complex)
    ratio = np.empty(lam.size)
    for i, l in enumerate(lam):
        sol = eigenvector(model, k, l)
        g2[i] = -2.0 * k * np.sum(sol.coeffs * model.couplings) ** 2
        ratio[i] = -2.0 * l.imag * sol.norm_sq / abs(g2[i]) if g2[i] != 0 else np.nan
    return Residues(lam, g2, ratio)


@dataclass(frozen=True, eq=False)
class CrossSectionProfile:
    energy: np.ndarray
    raw: np.ndarray
    averaged: np.ndarray
    window: float


def moving_average(x: np.ndarray, y: np.ndarray, window: float) -> np.ndarray:
    """Mean of y over points with |x_j - x_i| <= window/2 (x sorted)."""
    if window <= 0:
        return y.copy()
    c = np.concatenate([[0.0], np.cumsum(y)])
    lo = np.searchsorted(x, x - 0.5 * window, side="left")
    hi = np.searchsorted(x, x + 0.5 * window, side="right")
    return (c[hi] - c[lo]) / (hi - lo)


def cross_section(model: ModelInstance, kappa, energy_grid=None, window: float = 1.0) -> CrossSectionProfile:
    if window < 0:
        raise ValidationError("averaging window must be >= 0")
    e = default_energy_grid(model) if energy_grid is None else np.asarray(energy_grid, dtype=float)
    if e.ndim != 1 or e.size == 0 or np.any(np.diff(e) <= 0):
        raise ValidationError("energy grid must be strictly increasing")
    raw = np.abs(1.0 - s_matrix(model, kappa, e)) ** 2
    return CrossSectionProfile(e, raw, moving_average(e, raw, window), float(window))


def default_energy_grid(model: ModelInstance, per_spacing: int = 20, margin: float | None = None) -> np.ndarray:
    """Points at half-step offsets inside every gap between bare levels.

    Each gap gets ceil(gap/h) points with h = mean spacing / per_spacing, and
    the same spacing extends ``margin`` (default one mean spacing) beyond the ends.
    """
    if per_spacing < 1:
        raise ValidationError("per_spacing must be >= 1")
    E = model.energies
    h = model.mean_spacing / per_spacing
    margin = model.mean_spacing if margin is None else float(margin)
    parts = []
    n_edge = max(1, int(np.ceil(margin / h)))
    parts.append(E[0] - (np.arange(n_edge, 0, -1) - 0.5) * h)
    for a, b in zip(E[:-1], E[1:]):
        n = max(1, int(np.ceil((b - a) / h)))
        parts.append(a + (np.arange(n) + 0.5) * (b - a) / n)
    parts.append(E[-1] + (np.arange(n_edge) + 0.5) * h)
    return np.concatenate(parts)
