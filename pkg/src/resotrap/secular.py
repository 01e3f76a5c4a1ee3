"""Secular equation, characteristic polynomial and eigenvalue continuation.

For one decay channel the eigenvalues of ``diag(E) - i*kappa*v v^T`` are
the zeros of

    F(lam) = 1 - i*kappa * sum_k v_k^2 / (E_k - lam),

which equals P(lam) / prod_k (E_k - lam) with P the characteristic
polynomial.  All M zeros are followed along a ray kappa = alpha*exp(i*phi)
by predictor-corrector continuation in alpha.
"""
from __future__ import annotations

import cmath
import logging
import math
import os
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .errors import (
    CollisionSuspectedError,
    DivergedError,
    LostRootError,
    PoleHitError,
    ValidationError,
)
from .model import ModelInstance, as_kappa

log = logging.getLogger(__name__)

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the bundled TBB is often too old; the portable layer avoids a warning
    numba.config.THREADING_LAYER = "workqueue"

# corrector budget before a step is halved
MAX_CORRECTOR_ITER = 8
# largest root displacement per step, as a fraction of its distance to the nearest other root
MAX_MOVE_FRACTION = 0.25
COLLISION_TOL = 1e-6
RESIDUAL_TOL = 1e-10
# relative step size below which a stagnating corrector counts as converged
NOISE_FLOOR = 1e-9


@dataclass(frozen=True)
class SecularEval:
    value: complex
    derivative: complex


def _coupled(model: ModelInstance):
    w = model.v2
    mask = w > 0
    return model.energies[mask], w[mask], mask


def secular_value(model: ModelInstance, kappa, lam: complex) -> SecularEval:
    k = as_kappa(kappa)
    E, w, _ = _coupled(model)
    d = E - lam
    if np.any(d == 0):
        raise PoleHitError(f"lambda = {lam} coincides with a coupled bare level")
    inv = 1.0 / d
    s1 = np.sum(w * inv)
    s2 = np.sum(w * inv * inv)
    return SecularEval(complex(1.0 - 1j * k * s1), complex(-1j * k * s2))


def charpoly_logeval(model: ModelInstance, kappa, lam: complex) -> tuple[float, float]:
    """log|P(lam)| and arg P(lam), accumulated in the log domain.

    Returns ``(-inf, 0.0)`` when lam is an exact root.
    """
    k = as_kappa(kappa)
    E = model.energies
    w = model.v2
    d = E - lam
    hit = np.nonzero(d == 0)[0]
    if hit.size:
        j = int(hit[0])
        rest = np.delete(d, j)
        term = -1j * k * w[j]
        if term == 0:
            return -math.inf, 0.0
        logs = np.log(rest.astype(complex))
        total = np.sum(logs) + cmath.log(term)
    else:
        mask = w > 0
        f = 1.0 - 1j * k * np.sum(w[mask] / d[mask])
        if f == 0:
            return -math.inf, 0.0
        total = np.sum(np.log(d.astype(complex))) + cmath.log(f)
    phase = math.remainder(total.imag, 2 * math.pi)
    return float(total.real), float(phase)


def refine_root(model: ModelInstance, kappa, lam0: complex, tol: float = 1e-12, max_iter: int = 100) -> complex:
    """Newton iteration on F from the seed ``lam0``."""
    k = as_kappa(kappa)
    E, w, _ = _coupled(model)
    if k == 0 or E.size == 0:
        raise DivergedError("secular function has no zeros for kappa = 0", last=lam0)
    lam = complex(lam0)
    for _ in range(max_iter):
        d = E - lam
        if np.any(d == 0):
            raise PoleHitError(f"iterate {lam} hit a bare level")
        inv = 1.0 / d
        f = 1.0 - 1j * k * np.sum(w * inv)
        s2 = np.sum(w * inv * inv)
        # derivative small against its own term magnitudes: near-double root
        if abs(s2) <= 1e-7 * np.sum(w * np.abs(inv) ** 2):
            raise CollisionSuspectedError(f"dF/dlambda vanishes near {lam}: coalescing roots")
        step = f / (-1j * k * s2)
        lam -= step
        if abs(step) <= tol * max(1.0, abs(lam)):
            return lam
    raise DivergedError(f"Newton did not converge from {lam0}", last=lam)


# ---------------------------------------------------------------- continuation


@dataclass(frozen=True)
class CollisionEvent:
    alpha: float
    labels: tuple
    kind: str
    position: complex


@dataclass(eq=False)
class TrajectorySet:
    model: ModelInstance
    alpha: np.ndarray
    phi: float
    lambdas: np.ndarray  # (n_alpha, M); columns follow model.labels
    collisions: list = field(default_factory=list)
    substeps: int = 0

    @property
    def labels(self) -> np.ndarray:
        return self.model.labels

    @property
    def gamma_half(self) -> np.ndarray:
        return -self.lambdas.imag

    def kappa(self, i: int) -> complex:
        return self.alpha[i] * cmath.exp(1j * self.phi)

    def state(self, label: int) -> np.ndarray:
        return self.lambdas[:, self.model.index_of(label)]


@numba.njit(cache=True, parallel=True)
def _aberth_sweep(E, w, kappa, lam, active, step, fval):
    """Aberth-Ehrlich update direction for each active root, fused over the O(M^2) sums."""
    n = lam.size
    m = E.size
    for a in numba.prange(active.size):
        i = active[a]
        li = lam[i]
        s1 = 0j
        s2 = 0j
        sinv = 0j
        xr = li.real
        xi = li.imag
        for k in range(m):
            dr = E[k] - xr
            q = 1.0 / (dr * dr + xi * xi)
            inv = complex(dr * q, xi * q)
            t = w[k] * inv
            s1 += t
            s2 += t * inv
            sinv += inv
        rr = 0.0
        ri = 0.0
        for j in range(n):
            if j != i:
                dr = xr - lam[j].real
                di = xi - lam[j].imag
                q = 1.0 / (dr * dr + di * di)
                rr += dr * q
                ri -= di * q
        rep = complex(rr, ri)
        f = 1.0 - 1j * kappa * s1
        fval[i] = f
        if f == 0:
            step[i] = 0.0
        else:
            step[i] = 1.0 / ((-1j * kappa * s2) / f - sinv - rep)


def _aberth(E, w, kappa, lam, max_iter, tol=1e-14):
    """Simultaneous Newton with deflation of the other roots (Aberth-Ehrlich).

    P = F * prod(E - lam) is a polynomial whose zeros are exactly the roots,
    so P'/P = F'/F + sum_k 1/(lam - E_k); subtracting sum_{j!=i} 1/(lam_i - lam_j)
    keeps every iterate attached to its own root even when two roots are close.
    """
    lam = np.array(lam, dtype=complex)
    step = np.zeros_like(lam)
    fval = np.empty_like(lam)
    kappa = complex(kappa)
    active = np.arange(lam.size)
    last = np.full(lam.size, np.inf)
    for it in range(1, max_iter + 1):
        _aberth_sweep(E, w, kappa, lam, active, step, fval)
        st = step[active]
        if not np.all(np.isfinite(st)):
            return lam, it, False
        lam[active] -= st
        rel = np.abs(st) / np.maximum(1.0, np.abs(lam[active]))
        # done: tiny step, or the rounding floor is reached and steps stop contracting
        done = (rel <= tol) | ((rel <= NOISE_FLOOR) & (rel > 0.25 * last[active]))
        last[active] = rel
        active = active[~done]
        if active.size == 0:
            return lam, it, True
    return lam, max_iter, False


@numba.njit(cache=True, parallel=True)
def _moments(E, w, lam):
    """S1 = sum w/(E - lam) and S2 = sum w/(E - lam)^2 for every lam."""
    n = lam.size
    s1 = np.empty(n, dtype=np.complex128)
    s2 = np.empty(n, dtype=np.complex128)
    for i in numba.prange(n):
        a = 0j
        b = 0j
        xr = lam[i].real
        xi = lam[i].imag
        for k in range(E.size):
            dr = E[k] - xr
            q = 1.0 / (dr * dr + xi * xi)
            inv = complex(dr * q, xi * q)
            t = w[k] * inv
            a += t
            b += t * inv
        s1[i] = a
        s2[i] = b
    return s1, s2


def _residual(E, w, kappa, lam):
    s1, _ = _moments(E, w, np.asarray(lam, dtype=complex))
    return np.abs(1.0 - 1j * kappa * s1)


def _neighbours(lam):
    """Nearest and second-nearest distances and nearest index for each root."""
    lam = np.asarray(lam, dtype=complex)
    n = lam.size
    if n < 2:
        return np.full(n, np.inf), np.full(n, np.inf), np.zeros(n, dtype=int)
    pts = np.column_stack([lam.real, lam.imag])
    k = min(3, n)
    dist, idx = cKDTree(pts).query(pts, k=k)
    nn2 = dist[:, 2] if k == 3 else np.full(n, np.inf)
    return dist[:, 1], nn2, idx[:, 1]


def _close_pairs(lam, ratio=0.5, near=None):
    nn, nn2, idx = _neighbours(lam) if near is None else near
    pairs = []
    for i in range(lam.size):
        j = idx[i]
        if i < j and idx[j] == i and nn[i] < ratio * min(nn2[i], nn2[j]):
            pairs.append((i, int(j)))
    return pairs


class _Tracker:
    def __init__(self, model: ModelInstance, phi: float):
        self.model = model
        self.E, self.w, self.mask = _coupled(model)
        self.eiphi = cmath.exp(1j * phi)
        self.sumE = float(np.sum(self.E))
        self.sumw = float(np.sum(self.w))
        self.labels = model.labels[self.mask]
        self.events: list[CollisionEvent] = []
        self.substeps = 0
        self.sym = bool(np.array_equal(self.E, -self.E[::-1]) and np.array_equal(self.w, self.w[::-1]))
        self.scale = max(model.mean_spacing, 1e-300)

    def kappa(self, a):
        return a * self.eiphi

    def trace_ok(self, lam, a):
        target = self.sumE - 1j * self.kappa(a) * self.sumw
        size = np.sum(np.abs(self.E)) + abs(self.kappa(a)) * self.sumw
        return abs(np.sum(lam) - target) <= 1e-10 * max(size, 1e-300)

    def start(self, a):
        lam0 = self.E - 1j * self.kappa(a) * self.w
        lam, _, ok = _aberth(self.E, self.w, self.kappa(a), lam0, 100)
        if not ok or not self.trace_ok(lam, a):
            raise LostRootError("could not seed trajectories at small coupling", a, self.labels)
        return lam

    def _pair_seeds(self, lam, prev, a0, a1, pairs):
        """Predict close pairs through their symmetric functions s = x+y, p = x*y.

        Both are analytic through an exceptional point, while the individual
        roots have a square-root branch there.
        """
        out = {}
        crossing = {}
        ap, lp = prev
        t = (a1 - a0) / (a0 - ap)
        for i, j in pairs:
            s0, p0 = lam[i] + lam[j], lam[i] * lam[j]
            sp, pp = lp[i] + lp[j], lp[i] * lp[j]
            s1 = s0 + t * (s0 - sp)
            p1 = p0 + t * (p0 - pp)
            disc = cmath.sqrt(s1 * s1 - 4 * p1)
            z1, z2 = 0.5 * (s1 + disc), 0.5 * (s1 - disc)
            d_old = lam[i] - lam[j]
            rot = (z1 - z2) / d_old if d_old != 0 else 1.0
            if abs(rot.imag) > abs(rot.real):
                # pair turns by ~90 degrees: passing a coalescence
                zi, zj = self._broad_rule(lam, i, j, z1, z2)
                crossing[(i, j)] = True
            elif abs(z1 - lam[i]) + abs(z2 - lam[j]) <= abs(z2 - lam[i]) + abs(z1 - lam[j]):
                zi, zj = z1, z2
            else:
                zi, zj = z2, z1
            out[i], out[j] = zi, zj
        return out, crossing

    def _broad_rule(self, lam, i, j, z1, z2):
        """The label with the larger width keeps the root heading to larger width."""
        gi, gj = -lam[i].imag, -lam[j].imag
        tie = abs(gi - gj) <= 1e-9 * max(abs(gi), abs(gj), 1e-300)
        if tie:
            i_broad = lam[i].real >= lam[j].real
        else:
            i_broad = gi > gj
        hi, lo = (z1, z2) if -z1.imag >= -z2.imag else (z2, z1)
        if tie and abs(hi.imag - lo.imag) <= 1e-12 * max(abs(hi), 1.0):
            hi, lo = (z1, z2) if z1.real >= z2.real else (z2, z1)
        return (hi, lo) if i_broad else (lo, hi)

    def try_step(self, lam, a0, a1, prev, loose):
        h = a1 - a0
        k1 = self.kappa(a1)
        s1, s2 = _moments(self.E, self.w, lam)
        with np.errstate(divide="ignore", invalid="ignore"):
            vel = -s1 / (a0 * s2)
        pred = lam + h * vel
        near = _neighbours(lam)
        pairs = _close_pairs(lam, near=near)
        paired = np.zeros(lam.size, dtype=bool)
        crossing = {}
        if pairs and prev is not None and prev[0] < a0:
            seeds, crossing = self._pair_seeds(lam, prev, a0, a1, pairs)
            for idx, z in seeds.items():
                pred[idx] = z
                paired[idx] = True
        if not np.all(np.isfinite(pred)):
            return None
        budget = 60 if loose else MAX_CORRECTOR_ITER
        new, _, ok = _aberth(self.E, self.w, k1, pred, budget)
        if ok and not self.trace_ok(new, a1):
            # re-seed the broadest root from the trace remainder
            b = int(np.argmax(-new.imag))
            target = self.sumE - 1j * k1 * self.sumw
            pred2 = new.copy()
            pred2[b] = target - (np.sum(new) - new[b])
            new, _, ok = _aberth(self.E, self.w, k1, pred2, budget)
            ok = ok and self.trace_ok(new, a1)
        if not ok or not np.all(np.isfinite(new)):
            return None
        if not loose:
            nn, nn2, _ = near
            limit = np.where(paired, nn2, nn)
            limit = np.minimum(limit, 1e300)
            if np.any(np.abs(new - lam) > MAX_MOVE_FRACTION * limit):
                return None
        if np.min(_neighbours(new)[0], initial=np.inf) == 0.0:
            return None
        for (i, j) in pairs:
            self._log_pair(lam, new, a0, a1, i, j, crossing.get((i, j), False))
        return new

    def _log_pair(self, lam, new, a0, a1, i, j, crossed):
        d0 = lam[i] - lam[j]
        d1 = new[i] - new[j]
        near = abs(d1) <= COLLISION_TOL * self.scale
        if not crossed and not near:
            return
        q0, q1 = d0 * d0, d1 * d1
        dq = q1 - q0
        t = 1.0 if dq == 0 else min(max(-(q0 * dq.conjugate()).real / abs(dq) ** 2, 0.0), 1.0)
        a_star = a0 + t * (a1 - a0)
        on0 = abs(lam[i].real) < COLLISION_TOL and abs(lam[j].real) < COLLISION_TOL
        on1 = abs(new[i].real) < COLLISION_TOL and abs(new[j].real) < COLLISION_TOL
        if on1 and not on0:
            kind = "merge"
        elif on0 and not on1:
            kind = "split"
        else:
            kind = "crossing"
        labs = tuple(sorted((int(self.labels[i]), int(self.labels[j]))))
        if self.events and self.events[-1].labels == labs and abs(self.events[-1].alpha - a_star) <= 2 * (a1 - a0):
            return
        pos = 0.5 * (new[i] + new[j])
        self.events.append(CollisionEvent(float(a_star), labs, kind, complex(pos)))
        log.debug("collision %s at alpha=%.6g labels=%s", kind, a_star, labs)

    def advance(self, lam, a0, a1, prev):
        a = a0
        h = a1 - a0
        while a < a1:
            h = min(h, a1 - a)
            h_min = 1e-12 * max(a, 1.0)
            loose = h <= 64 * h_min
            new = self.try_step(lam, a, a + h if a + h < a1 else a1, prev, loose)
            if new is None:
                if loose:
                    raise LostRootError(
                        f"continuation stalled at alpha={a:.12g}", a, self.labels.tolist()
                    )
                h *= 0.5
                continue
            self.substeps += 1
            a_next = a + h if a + h < a1 else a1
            prev = (a, lam)
            lam, a = new, a_next
            h *= 2.0
        return lam, prev

    def polish(self, lam, a):
        k = self.kappa(a)
        res = _residual(self.E, self.w, k, lam)
        if np.all(res <= RESIDUAL_TOL):
            return lam
        new, _, ok = _aberth(self.E, self.w, k, lam, 20, tol=1e-16)
        if ok or np.all(_residual(self.E, self.w, k, new) <= RESIDUAL_TOL):
            return new
        return lam


def track_trajectories(model: ModelInstance, alpha_grid, phi: float = 0.0) -> TrajectorySet:
    """Follow all eigenvalues along kappa = alpha*exp(i*phi) over ``alpha_grid``."""
    grid = np.asarray(alpha_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValidationError("alpha grid must be a non-empty 1-D sequence")
    if grid[0] <= 0 or np.any(np.diff(grid) <= 0):
        raise ValidationError("alpha grid must be positive and strictly increasing")
    M = model.M
    out = np.empty((grid.size, M), dtype=complex)
    out[:] = model.energies  # decoupled levels stay at E_k exactly
    tr = _Tracker(model, phi)
    m = tr.E.size
    if m == 0:
        return TrajectorySet(model, grid, phi, out)
    if m == 1:
        for i, a in enumerate(grid):
            out[i, tr.mask] = tr.E - 1j * tr.kappa(a) * tr.w
        return TrajectorySet(model, grid, phi, out)

    spacing = float(np.min(np.diff(tr.E)))
    a_init = min(grid[0], 0.1 * spacing / float(np.max(tr.w)))
    lam = tr.start(a_init)
    prev = None
    if a_init < grid[0]:
        lam, prev = tr.advance(lam, a_init, grid[0], prev)
    lam = tr.polish(lam, grid[0])
    out[0, tr.mask] = lam
    for i in range(1, grid.size):
        lam, prev = tr.advance(lam, grid[i - 1], grid[i], prev)
        lam = tr.polish(lam, grid[i])
        out[i, tr.mask] = lam
    return TrajectorySet(model, grid, phi, out, tr.events, tr.substeps)


# ---------------------------------------------------------------- strong coupling


def trapped_asymptotes(model: ModelInstance) -> list[tuple[float, float]]:
    """Strong-coupling limits: positions of the M-1 trapped states and g_k.

    Positions are the real zeros of sum_j v_j^2 / (E_j - x) between adjacent
    coupled levels; for alpha -> inf a trapped eigenvalue behaves as
    x_k - i*g_k/alpha.  g_k is evaluated in the log domain as

        g_k = -prod_j (E_j - x_k) / (sum_j v_j^2 * prod_{j!=k} (x_j - x_k)),

    the leading coefficient sum_j v_j^2 of the width polynomial included.
    """
    E, w, _ = _coupled(model)
    if E.size < 2:
        raise ValidationError("need at least two coupled levels")

    def f(x):
        return float(np.sum(w / (E - x)))

    xs = []
    for lo, hi in zip(E[:-1], E[1:]):
        gap = hi - lo
        # sign change guaranteed: f -> -inf at lo+, +inf at hi-
        a_min = np.nextafter(lo, hi)
        b_max = np.nextafter(hi, lo)
        a = lo + gap * 1e-9
        while f(a) > 0 and a > a_min:
            a = max(lo + (a - lo) * 1e-3, a_min)
        b = hi - gap * 1e-9
        while f(b) < 0 and b < b_max:
            b = min(hi - (hi - b) * 1e-3, b_max)
        xs.append(brentq(f, a, b, xtol=1e-12 * max(1.0, abs(lo), abs(hi)), rtol=1e-15, maxiter=500))
    xs = np.array(xs)
    logc = math.log(float(np.sum(w)))
    result = []
    for k, x in enumerate(xs):
        num = E - x
        den = np.delete(xs, k) - x
        log_mag = np.sum(np.log(np.abs(num))) - np.sum(np.log(np.abs(den))) - logc
        sign = (-1) ** (int(np.sum(num < 0)) + int(np.sum(den < 0)) + 1)
        result.append((float(x), float(sign * math.exp(log_mag))))
    return result
