"""Closed-form right eigenvectors, bilinear normalization and collectivity.

For an eigenvalue lam of diag(E) - i*kappa*v v^T the right eigenvector has
components u_j = v_j / (E_j - lam).  Left eigenvectors are transposes of the
right ones, so the natural normalization is the bilinear sum a.a = 1 and the
ordinary norm <a|a> = sum |a_j|^2 is >= 1, diverging at exceptional points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import NotEigenvalueError, OracleFailure, SelfOrthogonalError, ValidationError
from .model import ModelInstance, as_kappa

SELF_ORTHOGONAL_TOL = 1e-12
# accepted |F(lam)| for an eigenvalue handed in by the caller
EIGEN_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class EigenSolution:
    lam: complex
    coeffs: np.ndarray
    norm_sq: float
    npc: float

    @property
    def gamma_half(self) -> float:
        return -self.lam.imag


def _decoupled(model: ModelInstance, lam: complex):
    """Index of an uncoupled level sitting exactly at lam, or None."""
    hit = np.nonzero((model.energies == lam.real) & (model.v2 == 0))[0]
    if hit.size and lam.imag == 0:
        return int(hit[0])
    return None


def eigenvector(model: ModelInstance, kappa, lam: complex) -> EigenSolution:
    k = as_kappa(kappa)
    lam = complex(lam)
    M = model.M
    j0 = _decoupled(model, lam)
    if j0 is not None or k == 0:
        if j0 is None:
            hit = np.nonzero(model.energies == lam.real)[0]
            if lam.imag != 0 or hit.size == 0:
                raise NotEigenvalueError(f"{lam} is not a bare level and kappa = 0")
            j0 = int(hit[0])
        a = np.zeros(M, dtype=complex)
        a[j0] = 1.0
        return EigenSolution(lam, a, 1.0, 1.0 / M)

    d = model.energies - lam
    v = model.couplings
    if np.any((d == 0) & (v != 0)):
        raise NotEigenvalueError(f"{lam} coincides with a coupled bare level")
    u = np.where(v != 0, v / np.where(d == 0, 1.0, d), 0.0)
    # residual of (H - lam) u relative to the scale of its terms
    f = 1.0 - 1j * k * np.sum(v * u)
    scale = abs(k) * np.sum(np.abs(v * u))
    if abs(f) > EIGEN_RESIDUAL_TOL * max(1.0, scale):
        raise NotEigenvalueError(f"|F({lam})| = {abs(f):.3g} is not an eigenvalue residual")
    return _normalize(lam, u)


def _normalize(lam, u) -> EigenSolution:
    s = np.sum(u * u)
    n1 = np.sum(np.abs(u) ** 2)
    if abs(s) < SELF_ORTHOGONAL_TOL * n1:
        raise SelfOrthogonalError(f"eigenvector at {lam} is self-orthogonal (exceptional point)")
    a = u / np.sqrt(s)
    norm_sq = float(n1 / abs(s))
    # principal components: b_j = a_j / sqrt(sum |a|^2), npc = 1 / (M sum |b|^4)
    p = np.abs(u) ** 2 / n1
    npc = float(1.0 / (u.size * np.sum(p * p)))
    return EigenSolution(complex(lam), a, norm_sq, npc)


def state_metrics(model: ModelInstance, lambdas) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``(norm_sq, npc)`` for many eigenvalues of one kappa.

    Self-orthogonal states give ``inf`` norm instead of raising; decoupled
    levels (v = 0, lam = E) give norm 1 and npc 1/M.
    """
    lam = np.asarray(lambdas, dtype=complex)
    E = model.energies
    v = model.couplings
    M = model.M
    norm = np.empty(lam.size)
    npc = np.empty(lam.size)
    # chunks keep the temporary (chunk x M) array small for big models
    chunk = max(1, 2_000_000 // max(M, 1))
    for lo in range(0, lam.size, chunk):
        ll = lam[lo:lo + chunk]
        d = E[None, :] - ll[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(v[None, :] != 0, v[None, :] / d, 0.0)
        single = ~np.all(np.isfinite(u), axis=1)
        u[single] = 0.0
        s = np.abs(np.sum(u * u, axis=1))
        a2 = np.abs(u) ** 2
        n1 = a2.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            nrm = np.where(s >= SELF_ORTHOGONAL_TOL * n1, n1 / s, np.inf)
            p = a2 / n1[:, None]
            q = 1.0 / (M * np.sum(p * p, axis=1))
        # decoupled states: lam equals an uncoupled E exactly
        dec = (n1 == 0) | single
        nrm[dec] = 1.0
        q[dec] = 1.0 / M
        norm[lo:lo + chunk] = nrm
        npc[lo:lo + chunk] = q
    return norm, npc


@dataclass(frozen=True)
class Observables:
    B: float
    norms: np.ndarray
    npc: np.ndarray
    partial: float | None = None


def observables(solutions, subset=None) -> Observables:
    """B = mean <Phi|Phi> over all states; ``partial`` = mean over ``subset`` indices."""
    sols = list(solutions)
    if not sols:
        raise ValidationError("no eigen solutions given")
    norms = np.array([s.norm_sq for s in sols])
    npc = np.array([s.npc for s in sols])
    part = None
    if subset is not None:
        idx = np.asarray(list(subset), dtype=int)
        if idx.size == 0:
            raise ValidationError("empty subset")
        part = float(norms[idx].mean())
    return Observables(float(norms.mean()), norms, npc, part)


def dense_oracle(model: ModelInstance, kappa) -> list[tuple[complex, np.ndarray]]:
    """Eigenpairs of the dense matrix from LAPACK (independent of the secular path)."""
    if model.M > 2000:
        raise ValidationError("dense oracle limited to M <= 2000")
    H = model.dense(kappa)
    try:
        vals, vecs = np.linalg.eig(H)
    except np.linalg.LinAlgError as exc:
        raise OracleFailure(f"dense eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise OracleFailure("dense eigensolver returned non-finite values")
    order = np.lexsort((vals.imag, vals.real))
    out = []
    for i in order:
        x = vecs[:, i]
        s = np.sum(x * x)
        if s != 0:
            x = x / np.sqrt(s)
        out.append((complex(vals[i]), x))
    return out


def match_multisets(a, b) -> tuple[float, np.ndarray]:
    """Largest pair distance of the minimum-cost one-to-one matching of a and b."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValidationError("multisets differ in size")
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    dev = np.empty(a.size)
    dev[r] = cost[r, c]
    return float(dev.max(initial=0.0)), dev
