"""Config-file driven command line front end.

Usage: ``resotrap CONFIG [--out DIR]``.  The config is ``key = value`` lines
with ``#`` comments; see README for the keys.  Exit status 0 on success,
1 on invalid input, 2 on numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import Marker, predict
from .eigens import dense_oracle, match_multisets, state_metrics
from .errors import NumericalError, ResotrapError, ValidationError
from .model import SpectrumSpec, build_model, from_arrays, random_model
from .scattering import cross_section, default_energy_grid
from .secular import track_trajectories
from .svgplot import line_plot
from .sweep import default_alpha_grid, detect_collisions, max_slope, run_sweep

log = logging.getLogger("resotrap")

COMMANDS = ("model", "sweep", "analytic", "scatter", "oracle-check")
FAMILIES = ("ideal", "disturbed", "power", "bounded", "goe", "random", "custom")


def _float(s):
    return float(s)


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError(f"{s!r} is not an integer")
    return int(v)


def _bool(s):
    t = s.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{s!r} is not a boolean")


def _str(s):
    return s


def _floats(s):
    return [float(x) for x in s.replace(",", " ").split()]


def _choice(options):
    def conv(s):
        if s not in options:
            raise ValueError(f"{s!r} not in {', '.join(options)}")
        return s
    return conv


# key -> (converter, default); None default with no entry in REQUIRED means optional
KEYS = {
    "command": (_choice(COMMANDS), "sweep"),
    "family": (_choice(FAMILIES), None),
    "N": (_int, None),
    "D": (_float, 0.0),
    "p": (_float, 1.0),
    "r": (_float, 0.0),
    "offset": (_float, None),
    "seed": (_int, 0),
    "mean_v": (_float, 1.0),
    "var_v": (_float, 0.01),
    "energies": (_floats, None),
    "couplings": (_floats, None),
    "alpha_start": (_float, None),
    "alpha_end": (_float, None),
    "alpha_steps": (_int, None),
    "alpha_grid": (_choice(("linear", "adaptive")), "linear"),
    "alpha_guess": (_float, 1 / math.pi),
    "alpha": (_float, None),
    "beta": (_float, 0.0),
    "phi": (_float, 0.0),
    "energy_min": (_float, None),
    "energy_max": (_float, None),
    "points_per_spacing": (_int, 20),
    "window": (_float, 1.0),
    "formula": (_str, None),
    "mu": (_float, None),
    "t": (_float, None),
    "energy": (_float, None),
    "output_dir": (_str, "."),
    "svg": (_bool, True),
}

REQUIRED = {
    "model": ("family",),
    "sweep": ("family", "alpha_start", "alpha_end", "alpha_steps"),
    "scatter": ("family", "alpha"),
    "oracle-check": ("family", "alpha"),
    "analytic": ("formula",),
}


@dataclass
class RunConfig:
    values: dict
    lines: dict = field(default_factory=dict)  # key -> line number

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None

    @property
    def command(self):
        return self.values["command"]

    def echo(self) -> dict:
        return {k: self.values[k] for k in sorted(self.lines)}


def parse_config(text: str) -> RunConfig:
    values = {}
    lines = {}
    n_lines = 0
    for n, raw in enumerate(text.splitlines(), start=1):
        n_lines = n
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"line {n}: expected 'key = value', got {raw.strip()!r}")
        key, val = (x.strip() for x in line.split("=", 1))
        if key not in KEYS:
            raise ValidationError(f"line {n}: unknown key {key!r}")
        if key in lines:
            raise ValidationError(f"line {n}: duplicate key {key!r} (first on line {lines[key]})")
        conv = KEYS[key][0]
        try:
            values[key] = conv(val)
        except ValueError as exc:
            raise ValidationError(f"line {n}: bad value for {key}: {exc}") from None
        lines[key] = n
    for key, (_, default) in KEYS.items():
        values.setdefault(key, default)
    cfg = RunConfig(values, lines)
    _validate(cfg, n_lines)
    return cfg


def _where(cfg, key):
    return f"line {cfg.lines[key]}" if key in cfg.lines else "default"


def _validate(cfg: RunConfig, n_lines: int):
    v = cfg.values
    for key in REQUIRED[v["command"]]:
        if v[key] is None:
            raise ValidationError(f"line {n_lines + 1}: missing required key {key!r} for command {v['command']}")
    fam = v["family"]
    if fam is not None and fam != "custom" and v["N"] is None:
        raise ValidationError(f"line {n_lines + 1}: missing required key 'N' for family {fam}")
    if fam == "custom":
        if v["energies"] is None or v["couplings"] is None:
            raise ValidationError(f"line {n_lines + 1}: family custom needs 'energies' and 'couplings'")
        if len(v["energies"]) != len(v["couplings"]):
            raise ValidationError(
                f"{_where(cfg, 'couplings')}: 'couplings' has {len(v['couplings'])} entries but "
                f"'energies' ({_where(cfg, 'energies')}) has {len(v['energies'])}"
            )
    if v["N"] is not None and v["N"] < 0:
        raise ValidationError(f"{_where(cfg, 'N')}: N must be >= 0")
    if v["alpha_start"] is not None and v["alpha_end"] is not None and not v["alpha_start"] < v["alpha_end"]:
        raise ValidationError(
            f"alpha_start = {v['alpha_start']} ({_where(cfg, 'alpha_start')}) must be smaller than "
            f"alpha_end = {v['alpha_end']} ({_where(cfg, 'alpha_end')})"
        )
    if v["alpha_start"] is not None and not v["alpha_start"] > 0:
        raise ValidationError(f"{_where(cfg, 'alpha_start')}: alpha_start must be > 0")
    if v["alpha_steps"] is not None and v["alpha_steps"] < 2:
        raise ValidationError(f"{_where(cfg, 'alpha_steps')}: alpha_steps must be >= 2")
    if v["alpha"] is not None and v["alpha"] < 0:
        raise ValidationError(f"{_where(cfg, 'alpha')}: alpha must be >= 0")
    if v["var_v"] < 0:
        raise ValidationError(f"{_where(cfg, 'var_v')}: var_v must be >= 0")
    if v["window"] < 0:
        raise ValidationError(f"{_where(cfg, 'window')}: window must be >= 0")
    if v["points_per_spacing"] < 1:
        raise ValidationError(f"{_where(cfg, 'points_per_spacing')}: points_per_spacing must be >= 1")
    if v["energy_min"] is not None and v["energy_max"] is not None and not v["energy_min"] < v["energy_max"]:
        raise ValidationError(
            f"energy_min ({_where(cfg, 'energy_min')}) must be smaller than energy_max ({_where(cfg, 'energy_max')})"
        )


# ---------------------------------------------------------------- helpers


def make_model(cfg: RunConfig):
    fam = cfg.family
    if fam == "custom":
        return from_arrays(cfg.energies, cfg.couplings)
    if fam == "random":
        return random_model(2 * cfg.N + 1, cfg.seed)
    spec = SpectrumSpec(fam, cfg.N, D=cfg.D, p=cfg.p, r=cfg.r, offset=cfg.offset,
                        seed=cfg.seed, mean_v=cfg.mean_v, var_v=cfg.var_v)
    return build_model(spec)


def _num(x):
    """JSON-safe number: NaN/inf become null, markers their names."""
    if x is None:
        return None
    if isinstance(x, Marker):
        return x.value
    if isinstance(x, (list, tuple)):
        return [_num(y) for y in x]
    if isinstance(x, complex):
        return [_num(x.real), _num(x.imag)]
    if isinstance(x, (np.integer, int)) and not isinstance(x, bool):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else None
    return x


def _g(x) -> str:
    return f"{x:.15g}"


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _kappa(cfg, alpha):
    # phi is given in degrees; beta adds an explicit imaginary part
    return alpha * complex(math.cos(math.radians(cfg.phi)), math.sin(math.radians(cfg.phi))) + 1j * cfg.beta


def _provenance(cfg, model=None):
    out = {"version": __version__, "command": cfg.command, "seed": cfg.seed, "config": {k: _num(v) for k, v in cfg.echo().items()}}
    if model is not None:
        out["model"] = model.label
        out["M"] = model.M
    return out


# ---------------------------------------------------------------- commands


def _cmd_model(cfg):
    m = make_model(cfg)
    rows = ["state,energy,coupling,coupling_sq"]
    for lab, e, v in zip(m.labels, m.energies, m.couplings):
        rows.append(f"{lab},{_g(e)},{_g(v)},{_g(v * v)}")
    files = {"model.csv": "\n".join(rows) + "\n"}
    files["summary.json"] = _json({"provenance": _provenance(cfg, m), "mean_spacing": m.mean_spacing})
    return files


def _grid(cfg):
    if cfg.alpha_grid == "adaptive":
        return default_alpha_grid(cfg.alpha_guess, cfg.alpha_start, cfg.alpha_end)
    return np.linspace(cfg.alpha_start, cfg.alpha_end, cfg.alpha_steps)


def _trajectory_csv(sweep) -> str:
    ts = sweep.trajectories
    lab = ts.labels
    rows = ["alpha,state,re_lambda,im_lambda,gamma_half,npc,norm_sq"]
    for i, a in enumerate(ts.alpha):
        lam = ts.lambdas[i]
        for j in range(lab.size):
            rows.append(
                f"{_g(a)},{lab[j]},{_g(lam[j].real)},{_g(lam[j].imag)},{_g(-lam[j].imag)},"
                f"{_g(sweep.npc[i, j])},{_g(sweep.norms[i, j])}"
            )
    return "\n".join(rows) + "\n"


def _cmd_sweep(cfg):
    m = make_model(cfg)
    grid = _grid(cfg)
    phi = math.radians(cfg.phi)
    res = run_sweep(m, grid, phi)
    crit = res.critical
    est = {
        "alphaCritHat": _num(crit.alpha_crit) if crit else None,
        "bPeakAlpha": _num(crit.b_peak) if crit else None,
        "confidence": _num(crit.confidence) if crit else None,
        "verdict": crit.verdict if crit else None,
        "hingeRms": _num(crit.hinge_rms) if crit else None,
        "slopeBelow": None if res.slope_below is None else {"slope": res.slope_below.slope, "rms": res.slope_below.rms, "n": res.slope_below.n},
        "slopeAbove": None if res.slope_above is None else {"slope": res.slope_above.slope, "rms": res.slope_above.rms, "n": res.slope_above.n},
        "bMax": _num(float(np.nanmax(res.B))) if np.any(np.isfinite(res.B)) else None,
        "broadLabel": res.broad_label,
        "npcBroadMaxSlope": _num(max_slope(res.alpha, res.npc_broad)),
    }
    if cfg.family == "disturbed":
        col = res.collisions or detect_collisions(res)
        est["alphaC1Hat"] = _num(col.alpha_c1)
        est["alphaC2Hat"] = _num(col.alpha_c2)
    summary = {
        "provenance": _provenance(cfg, m),
        "estimates": est,
        "collisionEvents": [
            {"alpha": e.alpha, "labels": list(e.labels), "kind": e.kind, "position": _num(e.position)}
            for e in res.trajectories.collisions
        ],
        "warnings": list(res.warnings),
        "gridPoints": int(grid.size),
    }
    files = {"trajectories.csv": _trajectory_csv(res), "summary.json": _json(summary)}
    if cfg.svg:
        files.update(_sweep_plots(res))
    return files


def _sweep_plots(res):
    ts = res.trajectories
    a = ts.alpha
    G = ts.gamma_half
    M = ts.model.M
    pick = range(M) if M <= 60 else np.linspace(0, M - 1, 60).astype(int)
    cloud = [(ts.lambdas[:, j].real, -ts.lambdas[:, j].imag, "", 0) for j in pick]
    cloud.append((ts.lambdas[:, res.broad_index].real, G[:, res.broad_index], "broad state", 1))
    widths = [(a, G[:, j], "", 0) for j in pick]
    widths.append((a, G[:, res.broad_index], "broad state", 1))
    npc = [(a, res.npc[:, j], "", 0) for j in pick]
    npc.append((a, res.npc_broad, "broad state", 1))
    return {
        "plot_eigenvalues.svg": line_plot(cloud, "Eigenvalue trajectories", "Re lambda", "Gamma/2", logy=True),
        "plot_widths.svg": line_plot(widths, "Widths versus coupling", "alpha", "Gamma/2", logy=True),
        "plot_npc.svg": line_plot(npc, "Principal components", "alpha", "N^p"),
        "plot_B.svg": line_plot([(a, res.B, "B", 0)], "Mean bi-orthogonality norm", "alpha", "B"),
    }


def _cmd_scatter(cfg):
    m = make_model(cfg)
    kappa = _kappa(cfg, cfg.alpha)
    grid = default_energy_grid(m, cfg.points_per_spacing)
    if cfg.energy_min is not None:
        grid = grid[grid >= cfg.energy_min]
    if cfg.energy_max is not None:
        grid = grid[grid <= cfg.energy_max]
    if grid.size == 0:
        raise ValidationError("energy window contains no grid points")
    prof = cross_section(m, kappa, grid, cfg.window)
    summary = {"provenance": _provenance(cfg, m), "window": cfg.window, "points": int(grid.size)}
    if cfg.alpha > 0:
        ts = track_trajectories(m, [abs(kappa)], math.atan2(kappa.imag, kappa.real))
        g = ts.gamma_half[-1]
        b = int(np.argmax(g))
        summary["gamma0_half"] = float(g[b])
        summary["broad_position"] = float(ts.lambdas[-1, b].real)
    mx = float(prof.averaged.max())
    summary["averaged_max"] = mx
    summary["support_fraction"] = float(np.mean(prof.averaged > 0.1 * mx)) if mx > 0 else 0.0
    rows = ["energy,raw,averaged"] + [f"{_g(e)},{_g(r)},{_g(s)}" for e, r, s in zip(prof.energy, prof.raw, prof.averaged)]
    files = {"cross_section.csv": "\n".join(rows) + "\n", "summary.json": _json(summary)}
    if cfg.svg:
        files["plot_cross_section.svg"] = line_plot(
            [(prof.energy, prof.raw, "raw", 7), (prof.energy, prof.averaged, f"window {cfg.window:g}", 1)],
            "Cross section |1 - S|^2", "E", "|1-S|^2",
        )
    return files


def _cmd_oracle(cfg):
    m = make_model(cfg)
    kappa = _kappa(cfg, cfg.alpha)
    ts = track_trajectories(m, [abs(kappa)], math.atan2(kappa.imag, kappa.real))
    lam = ts.lambdas[-1]
    ref = np.array([p[0] for p in dense_oracle(m, kappa)])
    worst, dev = match_multisets(lam, ref)
    norms, npc = state_metrics(m, lam)
    rows = ["state,re_lambda,im_lambda,deviation,npc,norm_sq"]
    for j in range(m.M):
        rows.append(f"{m.labels[j]},{_g(lam[j].real)},{_g(lam[j].imag)},{_g(dev[j])},{_g(npc[j])},{_g(norms[j])}")
    summary = {"provenance": _provenance(cfg, m), "max_deviation": worst}
    return {"oracle.csv": "\n".join(rows) + "\n", "summary.json": _json(summary)}


def _cmd_analytic(cfg):
    inputs = {k: cfg.values[k] for k in ("alpha", "beta", "mu", "D", "N", "r", "t", "energy") if k in cfg.lines}
    pred = predict(cfg.formula, **inputs)
    out = pred.as_json()
    out["value"] = _num(out["value"])
    return {"summary.json": _json({"provenance": _provenance(cfg), "prediction": out})}


HANDLERS = {
    "model": _cmd_model,
    "sweep": _cmd_sweep,
    "scatter": _cmd_scatter,
    "oracle-check": _cmd_oracle,
    "analytic": _cmd_analytic,
}


def _apply_threads():
    raw = os.environ.get("RT_THREADS")
    if raw is None:
        return
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"RT_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValidationError("RT_THREADS must be >= 1")
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def execute(cfg: RunConfig, out_dir=None) -> int:
    """Run one command and write its files; returns the exit status."""
    target = Path(out_dir if out_dir is not None else cfg.output_dir)
    written = []
    try:
        _apply_threads()
        files = HANDLERS[cfg.command](cfg)
        target.mkdir(parents=True, exist_ok=True)
        for name in sorted(files):
            path = target / name
            written.append(path)
            path.write_text(files[name], encoding="utf-8")
    except ValidationError as exc:
        _cleanup(written)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        _cleanup(written)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (OSError, ResotrapError) as exc:
        _cleanup(written)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _cleanup(paths):
    for p in paths:
        try:
            p.unlink()
        except FileNotFoundError:
            pass


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="resotrap", description="Resonance trapping experiments from a config file.")
    ap.add_argument("config", help="path to a key = value config file")
    ap.add_argument("--out", help="output directory (overrides output_dir)")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        text = Path(args.config).read_text(encoding="utf-8")
        cfg = parse_config(text)
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return execute(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
