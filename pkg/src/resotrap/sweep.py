"""Coupling sweeps, order parameter and critical-coupling estimators."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .eigens import state_metrics
from .errors import ValidationError
from .model import Family, ModelInstance
from .secular import TrajectorySet, track_trajectories

log = logging.getLogger(__name__)

NO_TRANSITION = "no-transition"
TRANSITION = "transition"


@dataclass(frozen=True)
class SweepOptions:
    # slope windows, as multiples of the estimated critical coupling
    below_frac: float = 0.5
    above_frac: float = 3.0
    # half-width (multiplicative) of the change-point fit window
    hinge_factor: float = 1.25
    # |Re lambda| below this (times the mean spacing) counts as the spectrum centre
    axis_tol: float = 1e-6
    observables: bool = True

    def __post_init__(self):
        if not 0 < self.below_frac < self.above_frac:
            raise ValidationError("need 0 < below_frac < above_frac")
        if not self.hinge_factor > 1:
            raise ValidationError("hinge_factor must exceed 1")


@dataclass(frozen=True)
class Fit:
    slope: float
    intercept: float
    rms: float
    n: int


@dataclass(frozen=True)
class CriticalEstimate:
    alpha_crit: float | None  # change-point of the order parameter
    confidence: float | None  # |change-point - B peak|
    b_peak: float | None
    change_point: float | None
    verdict: str
    hinge_rms: float | None = None


@dataclass(frozen=True)
class CollisionEstimate:
    alpha_c1: float | None
    alpha_c2: float | None
    axis_counts: np.ndarray = field(repr=False, default=None)


@dataclass(eq=False)
class SweepResult:
    trajectories: TrajectorySet
    B: np.ndarray
    norms: np.ndarray  # (n_alpha, M)
    npc: np.ndarray  # (n_alpha, M)
    broad_index: int
    warnings: list = field(default_factory=list)
    critical: CriticalEstimate | None = None
    slope_below: Fit | None = None
    slope_above: Fit | None = None
    collisions: CollisionEstimate | None = None
    options: SweepOptions = field(default_factory=SweepOptions)

    @property
    def alpha(self) -> np.ndarray:
        return self.trajectories.alpha

    @property
    def model(self) -> ModelInstance:
        return self.trajectories.model

    @property
    def broad_label(self) -> int:
        return int(self.model.labels[self.broad_index])

    @property
    def gamma0_half(self) -> np.ndarray:
        return self.trajectories.gamma_half[:, self.broad_index]

    @property
    def omega(self) -> np.ndarray:
        """Order parameter Gamma_0 / (2M)."""
        return self.gamma0_half / self.model.M

    @property
    def npc_broad(self) -> np.ndarray:
        return self.npc[:, self.broad_index]


def default_alpha_grid(guess: float = 1 / math.pi, start: float = 0.01, end: float = 2.0,
                       step: float = 0.005, n_outer: int = 40) -> np.ndarray:
    """Geometric below 0.8*guess, uniform ``step`` up to 1.25*guess, geometric above."""
    if not 0 < start < end:
        raise ValidationError("need 0 < start < end")
    lo, hi = 0.8 * guess, 1.25 * guess
    parts = []
    if start < lo:
        parts.append(np.geomspace(start, lo, n_outer, endpoint=False))
    a = max(start, lo)
    b = min(end, hi)
    if a < b:
        n = int(round((b - a) / step))
        parts.append(a + step * np.arange(n + 1))
    if end > hi:
        parts.append(np.geomspace(max(hi, start), end, n_outer + 1)[1:])
    grid = np.unique(np.round(np.concatenate(parts), 12))
    return grid[(grid >= start) & (grid <= end)]


def run_sweep(model: ModelInstance, alpha_grid, phi: float = 0.0, options: SweepOptions | None = None) -> SweepResult:
    opts = options or SweepOptions()
    ts = track_trajectories(model, alpha_grid, phi)
    G, M = ts.lambdas.shape
    if opts.observables:
        norms = np.empty((G, M))
        npc = np.empty((G, M))
        for i in range(G):
            norms[i], npc[i] = state_metrics(model, ts.lambdas[i])
        with np.errstate(invalid="ignore"):
            B = norms.mean(axis=1)
    else:
        norms = npc = np.full((G, M), np.nan)
        B = np.full(G, np.nan)
    widths = ts.gamma_half[-1]
    order = np.argsort(widths)[::-1]
    broad = int(order[0])
    warnings = []
    if M > 1 and widths[order[1]] >= 0.99 * widths[broad]:
        warnings.append(
            f"ambiguous broad state: labels {model.labels[order[0]]} and {model.labels[order[1]]} within 1% in width"
        )
    res = SweepResult(ts, B, norms, npc, broad, warnings, options=opts)
    if G >= 5:
        res.critical = estimate_critical(res)
        a_hat = res.critical.alpha_crit
        if a_hat is not None:
            res.slope_below = _window_fit(res.alpha, res.omega, None, opts.below_frac * a_hat)
            res.slope_above = _window_fit(res.alpha, res.omega, opts.above_frac * a_hat, None)
    if model.spec is not None and model.spec.family is Family.DISTURBED:
        res.collisions = detect_collisions(res)
    return res


def _window_fit(x, y, lo, hi) -> Fit | None:
    sel = np.ones(x.size, dtype=bool)
    if lo is not None:
        sel &= x >= lo
    if hi is not None:
        sel &= x <= hi
    if sel.sum() < 2:
        return None
    xs, ys = x[sel], y[sel]
    slope, icept = np.polyfit(xs, ys, 1)
    rms = float(np.sqrt(np.mean((ys - (slope * xs + icept)) ** 2)))
    return Fit(float(slope), float(icept), rms, int(sel.sum()))


def _second_difference(x, y):
    """Second derivative on a non-uniform grid at interior points."""
    h0 = x[1:-1] - x[:-2]
    h1 = x[2:] - x[1:-1]
    return 2.0 * (h0 * y[2:] - (h0 + h1) * y[1:-1] + h1 * y[:-2]) / (h0 * h1 * (h0 + h1))


def hinge_fit(x, y, lo: float, hi: float):
    """Continuous two-segment linear fit, breakpoint optimized in (lo, hi).

    Returns (breakpoint, rms residual).
    """
    sel = (x >= lo) & (x <= hi)
    xs, ys = x[sel], y[sel]
    if xs.size < 4:
        return None, None

    def sse(b):
        A = np.column_stack([np.ones_like(xs), xs, np.maximum(xs - b, 0.0)])
        coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
        r = ys - A @ coef
        return float(r @ r)

    # scan the data points first, then polish between neighbours
    cands = xs[1:-1]
    vals = np.array([sse(b) for b in cands])
    j = int(np.argmin(vals))
    a = xs[max(j, 0)]
    b = xs[min(j + 2, xs.size - 1)]
    opt = minimize_scalar(sse, bounds=(a, b), method="bounded", options={"xatol": 1e-10})
    bp = float(opt.x) if opt.fun <= vals[j] else float(cands[j])
    return bp, math.sqrt(min(opt.fun, vals[j]) / xs.size)


def _b_peak(alpha, B):
    """Sub-grid location of an interior maximum of B, or None."""
    if not np.all(np.isfinite(B)):
        return None
    i = int(np.argmax(B))
    if i == 0 or i == B.size - 1:
        return None
    if not (B[i] > B[0] and B[i] > B[-1]):
        return None
    x0, x1, x2 = alpha[i - 1:i + 2]
    y0, y1, y2 = B[i - 1:i + 2]
    # vertex of the parabola through three points
    d = (x0 - x1) * (x0 - x2) * (x1 - x2)
    A = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / d
    Bc = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / d
    if A >= 0:
        return float(x1)
    return float(min(max(-Bc / (2 * A), x0), x2))


def estimate_critical(sweep: SweepResult) -> CriticalEstimate:
    """B-peak and order-parameter change-point estimates of the critical coupling.

    No interior maximum of B gives the no-transition verdict.  Otherwise the
    change-point is located coarsely by the largest second difference of the
    order parameter and refined by a continuous two-segment fit around it.
    """
    a = sweep.alpha
    peak = _b_peak(a, sweep.B)
    if peak is None:
        return CriticalEstimate(None, None, None, None, NO_TRANSITION)
    om = sweep.omega
    d2 = _second_difference(a, om)
    c0 = float(a[1 + int(np.argmax(d2))])
    f = sweep.options.hinge_factor
    cp, rms = hinge_fit(a, om, c0 / f, c0 * f)
    if cp is None:
        cp = c0
    return CriticalEstimate(cp, abs(cp - peak), peak, cp, TRANSITION, rms)


def max_slope(alpha, y) -> float:
    """Largest forward-difference slope of y(alpha)."""
    return float(np.max(np.diff(y) / np.diff(alpha)))


def axis_counts(sweep: SweepResult) -> np.ndarray:
    tol = sweep.options.axis_tol * sweep.model.mean_spacing
    return np.sum(np.abs(sweep.trajectories.lambdas.real) < tol, axis=1)


def detect_collisions(sweep: SweepResult) -> CollisionEstimate:
    """First merge onto the spectrum centre and the later split away from it.

    Uses the tracker's logged exceptional-point events; each event is
    cross-checked by a change in the number of states sitting at E = 0.
    """
    tol = sweep.options.axis_tol * sweep.model.mean_spacing
    counts = axis_counts(sweep)
    a = sweep.alpha
    c1 = c2 = None
    for ev in sweep.trajectories.collisions:
        if abs(ev.position.real) >= tol:
            continue
        if c1 is None and ev.kind == "merge":
            c1 = ev.alpha
        elif c1 is not None and ev.kind == "split" and ev.alpha > c1:
            c2 = ev.alpha
            break
    # a merge must raise the centre count, a split lower it
    if c1 is not None:
        after = counts[a > c1]
        before = counts[a < c1]
        if after.size and before.size and after[0] <= before[-1]:
            log.warning("merge event at %.4g without a change in the centre count", c1)
    return CollisionEstimate(c1, c2, counts)
