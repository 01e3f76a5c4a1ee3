"""Minimal self-contained SVG line plots (fixed 800x600 viewBox)."""
from __future__ import annotations

import math
from html import escape

import numpy as np

WIDTH, HEIGHT = 800, 600
LEFT, RIGHT, TOP, BOTTOM = 80, 30, 50, 70
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * abs(hi):
        out.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return out


def line_plot(series, title="", xlabel="", ylabel="", logy=False, markers=False) -> str:
    """series: list of (x, y, label, colour_index); NaN/inf points are skipped."""
    xs = np.concatenate([np.asarray(s[0], dtype=float) for s in series]) if series else np.array([0.0, 1.0])
    ys = np.concatenate([np.asarray(s[1], dtype=float) for s in series]) if series else np.array([0.0, 1.0])
    if logy:
        ys = np.where(ys > 0, ys, np.nan)
        ys = np.log10(ys)
    ok = np.isfinite(xs) & np.isfinite(ys)
    if not ok.any():
        xs, ys, ok = np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.array([True, True])
    x0, x1 = float(xs[ok].min()), float(xs[ok].max())
    y0, y1 = float(ys[ok].min()), float(ys[ok].max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.03 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{WIDTH / 2}" y="30" text-anchor="middle" font-family="sans-serif" font-size="18">{escape(title)}</text>',
        f'<text x="{LEFT + pw / 2}" y="{HEIGHT - 20}" text-anchor="middle" font-family="sans-serif" font-size="14">{escape(xlabel)}</text>',
        f'<text x="20" y="{TOP + ph / 2}" text-anchor="middle" font-family="sans-serif" font-size="14" '
        f'transform="rotate(-90 20 {TOP + ph / 2})">{escape(ylabel + (" (log10)" if logy else ""))}</text>',
    ]
    for t in _ticks(x0, x1):
        X = _fmt(px(t))
        out.append(f'<line x1="{X}" y1="{TOP + ph}" x2="{X}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X}" y="{TOP + ph + 20}" text-anchor="middle" font-family="sans-serif" font-size="12">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        Y = _fmt(py(t))
        out.append(f'<line x1="{LEFT - 5}" y1="{Y}" x2="{LEFT}" y2="{Y}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{Y}" text-anchor="end" dominant-baseline="middle" font-family="sans-serif" font-size="12">{t:.4g}</text>')
    legend_y = TOP + 15
    for n, s in enumerate(series):
        x = np.asarray(s[0], dtype=float)
        y = np.asarray(s[1], dtype=float)
        if logy:
            with np.errstate(divide="ignore", invalid="ignore"):
                y = np.log10(np.where(y > 0, y, np.nan))
        colour = PALETTE[(s[3] if len(s) > 3 else n) % len(PALETTE)]
        good = np.isfinite(x) & np.isfinite(y)
        if markers:
            for a, b in zip(x[good], y[good]):
                out.append(f'<circle cx="{_fmt(px(a))}" cy="{_fmt(py(b))}" r="1.5" fill="{colour}"/>')
        else:
            # break the polyline at gaps
            seg = []
            for a, b, g in zip(x, y, good):
                if g:
                    seg.append(f"{_fmt(px(a))},{_fmt(py(b))}")
                elif seg:
                    out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1" points="{" ".join(seg)}"/>')
                    seg = []
            if seg:
                out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1" points="{" ".join(seg)}"/>')
        label = s[2] if len(s) > 2 else ""
        if label:
            out.append(f'<text x="{LEFT + pw - 10}" y="{legend_y}" text-anchor="end" font-family="sans-serif" font-size="12" fill="{colour}">{escape(label)}</text>')
            legend_y += 16
    out.append("</svg>")
    return "\n".join(out) + "\n"
