"""Command-line front end.

Every command writes files named after itself (``orbit.csv``,
``hopf.json``, ...) into the output directory.  Each file opens with a
header that echoes the resolved configuration and the package version.

Exit codes: 0 success, 2 configuration error, 3 inconclusive result
(escaped orbit, no curve found, under-resolved geometry), 4 a checked
property failed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .chaos import horseshoe_witness, lyapunov, splatter_stats
from .equilibria import fixed_points, hopf_coefficients, interior_fixed_point, mu_h
from .invariant_curve import (
    CurveNotFoundError,
    attracting_set,
    cascade_scan,
    count_loops,
    detect_cycle,
    picard_solve,
    rotation_number,
    winding_number,
)
from .mapcore import EscapeError, Params, Point, orbit

EXIT_OK, EXIT_CONFIG, EXIT_INCONCLUSIVE, EXIT_FAILED = 0, 2, 3, 4
OUT_DIR_ENV = "FLIPFLOP_OUT_DIR"
FORMATS = ("csv", "json", "svg")
SVG_SIZE = 800
SVG_MAX_POINTS = 20_000

COMMANDS = ("orbit", "fixed-points", "hopf", "curve", "rotation", "cascade", "lyapunov", "horseshoe", "sweep", "figure")

DEFAULTS: dict[str, Any] = {
    "lam": 0.99,
    "mu": 4.5,
    "nu": None,
    "x0": None,
    "y0": None,
    "iters": 10_000,
    "transient": 10_000,
    "grid": 512,
    "tol": 1e-12,
    "seed": 0,
    "formats": ["csv", "json"],
    "fold": False,
    "mu_from": 4.5,
    "mu_to": 5.0,
    "nu_from": 1e-4,
    "nu_to": 1e-2,
    "steps": 20,
    "max_period": 64,
    "resolution": 1000,
    "figure": None,
}

# per-command overrides of the global defaults
COMMAND_DEFAULTS: dict[str, dict[str, Any]] = {
    "orbit": {"x0": 0.564, "y0": 0.342, "transient": 0},
    "curve": {"mu": 4.5449, "formats": ["csv", "json"]},
    "rotation": {"mu": 4.5449, "iters": 100_000},
    "cascade": {"iters": 5000, "steps": 10},
    "lyapunov": {"iters": 100_000, "transient": 1000},
    "horseshoe": {"mu": 5.0},
    "sweep": {"iters": 500, "transient": 5000, "steps": 200, "fold": True},
    "figure": {"formats": ["csv", "json", "svg"]},
}

CONFIG_KEYS = set(DEFAULTS) | {"command", "out_dir"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    lam: float
    mu: float
    nu: float | None
    x0: float | None
    y0: float | None
    iters: int
    transient: int
    grid: int
    tol: float
    seed: int
    out_dir: str
    formats: list[str]
    fold: bool = False
    mu_from: float = 4.5
    mu_to: float = 5.0
    nu_from: float = 1e-4
    nu_to: float = 1e-2
    steps: int = 20
    max_period: int = 64
    resolution: int = 1000
    figure: str | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def params(self) -> Params:
        return Params(self.lam, self.mu)

    def seed_point(self, default: Point) -> Point:
        return Point(default.x if self.x0 is None else self.x0, default.y if self.y0 is None else self.y0)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


@dataclass(frozen=True)
class FigureRecipe:
    figure_id: str
    lam: float
    mu: float
    seeds: tuple[tuple[float, float], ...]
    transient: int
    samples: int
    fold: bool = False
    note: str = ""


FIGURES = {
    "fig2": FigureRecipe("fig2", 0.99, 4.5, ((0.564, 0.342),), 0, 20_000),
    "fig3": FigureRecipe("fig3", 0.99, 4.5449, ((0.555, 0.340), (0.558, 0.34)), 10_000, 10_000),
    "fig4": FigureRecipe("fig4", 0.99, 4.55, ((0.555, 0.338), (0.43, 0.38)), 10_000, 10_000),
    "fig6": FigureRecipe(
        "fig6",
        0.99,
        5.0,
        ((1 - 1e-7, 4e-7), (1 - 3e-7, 5e-7), (1 - 1e-7, 6e-7)),
        0,
        20_000,
        fold=True,
        note=(
            "mu=5 used: the reference fixed point (0.5569, 0.3569) and eigenvalues "
            "-0.5144 +/- 0.9596i for this figure belong to mu=5, not mu=4.55; "
            "orbits are folded into y <= x"
        ),
    ),
}


# ---------------------------------------------------------------------------
# configuration


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--nu", type=float, help="mu - mu_h(lambda); overrides --mu")
    p.add_argument("--x0", type=float)
    p.add_argument("--y0", type=float)
    p.add_argument("-n", "--iters", type=int)
    p.add_argument("--transient", type=int)
    p.add_argument("--grid", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int, help="random generator seed")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--format", dest="formats", action="append", choices=FORMATS)
    p.add_argument("--config", dest="config_path", help="JSON file of defaults")
    p.add_argument("--fold", action=argparse.BooleanOptionalAction, default=None, help="fold iterates into y <= x")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flipflop", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()
    helps = {
        "orbit": "iterate one seed",
        "fixed-points": "list fixed points with spectra",
        "hopf": "Hopf parameter and the interior point there",
        "curve": "solve for the invariant curve",
        "rotation": "rotation number about p*",
        "cascade": "count attracting loops over a nu grid",
        "lyapunov": "Lyapunov exponents along an orbit",
        "horseshoe": "horseshoe geometry at lambda=0.99, mu=5",
        "sweep": "bifurcation diagram over a mu interval",
        "figure": "reproduce a figure scenario",
    }
    subs = {name: sub.add_parser(name, parents=[common], help=h) for name, h in helps.items()}
    subs["sweep"].add_argument("--mu-from", dest="mu_from", type=float)
    subs["sweep"].add_argument("--mu-to", dest="mu_to", type=float)
    subs["cascade"].add_argument("--nu-from", dest="nu_from", type=float)
    subs["cascade"].add_argument("--nu-to", dest="nu_to", type=float)
    for name in ("sweep", "cascade"):
        subs[name].add_argument("--steps", type=int)
    subs["rotation"].add_argument("--max-period", dest="max_period", type=int)
    subs["horseshoe"].add_argument("--resolution", type=int)
    subs["figure"].add_argument("figure", choices=sorted(FIGURES))
    return parser


def _load_config_file(path: str) -> dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    data = {("lam" if k == "lambda" else k.replace("-", "_")): v for k, v in data.items()}
    if "format" in data:
        fmt = data.pop("format")
        data["formats"] = [fmt] if isinstance(fmt, str) else fmt
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return data


def resolve_config(args: argparse.Namespace, env: dict[str, str] | None = None) -> RunConfig:
    """Merge built-in defaults, the config file and flags (flags win)."""
    env = os.environ if env is None else env
    merged = dict(DEFAULTS)
    merged.update(COMMAND_DEFAULTS.get(args.command, {}))
    merged["out_dir"] = env.get(OUT_DIR_ENV, ".")
    explicit: set[str] = set()
    if getattr(args, "config_path", None):
        from_file = _load_config_file(args.config_path)
        merged.update(from_file)
        explicit |= set(from_file)
    for key, value in vars(args).items():
        if key in CONFIG_KEYS and value is not None:
            merged[key] = value
            explicit.add(key)
    merged["command"] = args.command

    if args.command == "figure":
        r = FIGURES[merged["figure"]]
        merged.update(lam=r.lam, mu=r.mu, fold=r.fold)
        if "iters" not in explicit:
            merged["iters"] = r.samples
    if not merged["formats"]:
        raise ConfigError("no output format selected")
    bad = set(merged["formats"]) - set(FORMATS)
    if bad:
        raise ConfigError(f"unknown formats {sorted(bad)}")
    merged["formats"] = sorted(set(merged["formats"]), key=FORMATS.index)

    notes = []
    try:
        lam = float(merged["lam"])
        if merged["nu"] is not None:
            if not 0 < lam < 1:
                raise ConfigError("--nu needs 0 < lambda < 1")
            merged["mu"] = mu_h(lam) + float(merged["nu"])
            notes.append(f"mu = mu_h + nu = {merged['mu']!r}")
        Params(lam, float(merged["mu"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    for key in ("iters", "grid", "steps", "max_period", "resolution"):
        if int(merged[key]) < 1:
            raise ConfigError(f"{key} must be positive")
    if int(merged["transient"]) < 0:
        raise ConfigError("transient must be nonnegative")
    if not float(merged["tol"]) > 0:
        raise ConfigError("tol must be positive")
    fields = {k: merged[k] for k in RunConfig.__dataclass_fields__ if k in merged}
    return RunConfig(**fields, notes=notes)


# ---------------------------------------------------------------------------
# writers


def _num(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, Point):
        return {"x": v.x, "y": v.y}
    return v


def _header_lines(cfg: RunConfig) -> list[str]:
    lines = [f"flipflop {__version__}", "config: " + json.dumps(_jsonable(cfg.to_dict()), sort_keys=True)]
    return lines + [f"note: {n}" for n in cfg.notes]


class Writer:
    def __init__(self, cfg: RunConfig, stem: str):
        self.cfg = cfg
        self.stem = stem
        self.dir = Path(cfg.out_dir)
        self.written: list[Path] = []

    def wants(self, fmt: str) -> bool:
        return fmt in self.cfg.formats

    def _path(self, ext: str, suffix: str = "") -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        p = self.dir / f"{self.stem}{suffix}.{ext}"
        self.written.append(p)
        return p

    def csv(self, columns: Sequence[str], rows: Iterable[Sequence], suffix: str = "") -> None:
        if not self.wants("csv"):
            return
        with open(self._path("csv", suffix), "w", encoding="utf-8", newline="\n") as fh:
            for line in _header_lines(self.cfg):
                fh.write(f"# {line}\n")
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_num(v) for v in row) + "\n")

    def json(self, result: dict[str, Any], force: bool = False) -> None:
        if not (self.wants("json") or force):
            return
        doc = {"version": __version__, "config": self.cfg.to_dict(), "result": result}
        with open(self._path("json"), "w", encoding="utf-8", newline="\n") as fh:
            json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def svg(self, scatters=(), polylines=(), bounds=None, labels=("x", "y")) -> None:
        if not self.wants("svg"):
            return
        text = render_svg(scatters, polylines, bounds, labels, _header_lines(self.cfg))
        with open(self._path("svg"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _bounds(arrays: Sequence[np.ndarray]) -> tuple[float, float, float, float]:
    # the unit square, widened with a 5% margin when data leave it
    x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    pts = [a for a in arrays if len(a)]
    if pts:
        allp = np.vstack(pts)
        allp = allp[np.all(np.isfinite(allp), axis=1)]
        if len(allp):
            lo, hi = allp.min(axis=0), allp.max(axis=0)
            if lo[0] < 0 or hi[0] > 1 or lo[1] < 0 or hi[1] > 1:
                x0, x1 = min(x0, lo[0]), max(x1, hi[0])
                y0, y1 = min(y0, lo[1]), max(y1, hi[1])
                mx, my = 0.05 * (x1 - x0), 0.05 * (y1 - y0)
                x0, x1, y0, y1 = x0 - mx, x1 + mx, y0 - my, y1 + my
    return x0, x1, y0, y1


def render_svg(scatters, polylines, bounds, labels, header: Sequence[str]) -> str:
    """Static SVG 1.1 scatter/polyline plot on an 800 x 800 canvas."""
    scatters = [(np.asarray(p, dtype=float).reshape(-1, 2), c) for p, c in scatters]
    polylines = [(np.asarray(p, dtype=float).reshape(-1, 2), c) for p, c in polylines]
    x0, x1, y0, y1 = bounds or _bounds([p for p, _ in scatters] + [p for p, _ in polylines])
    pad = 40
    span = SVG_SIZE - 2 * pad

    def tx(p):
        sx = pad + (p[:, 0] - x0) / (x1 - x0) * span
        sy = SVG_SIZE - pad - (p[:, 1] - y0) / (y1 - y0) * span
        return sx, sy

    comment = "\n".join(header).replace("--", "- -")
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f"<!--\n{comment}\n-->",
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_SIZE}" height="{SVG_SIZE}" '
        f'viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">',
        f'<rect x="0" y="0" width="{SVG_SIZE}" height="{SVG_SIZE}" fill="white"/>',
        f'<rect x="{pad}" y="{pad}" width="{span}" height="{span}" fill="none" stroke="black"/>',
        f'<text x="{SVG_SIZE // 2}" y="{SVG_SIZE - 10}" text-anchor="middle" font-size="14">'
        f"{labels[0]} [{x0:.4g}, {x1:.4g}]</text>",
        f'<text x="14" y="{SVG_SIZE // 2}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 14 {SVG_SIZE // 2})">{labels[1]} [{y0:.4g}, {y1:.4g}]</text>',
    ]
    for pts, color in polylines:
        pts = pts[np.all(np.isfinite(pts), axis=1)]
        if len(pts) < 2:
            continue
        sx, sy = tx(pts)
        coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(sx, sy))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
    for pts, color in scatters:
        pts = pts[np.all(np.isfinite(pts), axis=1)]
        stride = max(1, math.ceil(len(pts) / SVG_MAX_POINTS))
        sx, sy = tx(pts[::stride])
        out.append(f'<g fill="{color}">')
        out.extend(f'<rect x="{a:.2f}" y="{b:.2f}" width="1" height="1"/>' for a, b in zip(sx, sy))
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


COLORS = ("#1f4e9c", "#c0392b", "#27864a", "#8e44ad")


# ---------------------------------------------------------------------------
# commands; each returns an exit code


def _default_seed(cfg: RunConfig, params: Params | None = None) -> Point:
    """(x0, y0) if given, else p* + (0.01, 0)."""
    try:
        c = interior_fixed_point(params or cfg.params).location
        return cfg.seed_point(Point(c.x + 0.01, c.y))
    except ValueError:
        return cfg.seed_point(Point(0.5, 0.25))


def cmd_orbit(cfg: RunConfig) -> int:
    w = Writer(cfg, "orbit")
    p0 = cfg.seed_point(Point(0.564, 0.342))
    orb = orbit(cfg.params, p0, cfg.iters, fold=cfg.fold)
    if orb.escaped:
        cfg.notes.append(f"orbit escaped at step {orb.escape_step}; output truncated")
    w.csv(("n", "x", "y"), ((k, x, y) for k, (x, y) in enumerate(orb.points)))
    last = orb.points[-1]
    w.json({"length": len(orb), "escaped": orb.escaped, "escape_step": orb.escape_step, "last": list(last)})
    w.svg(scatters=[(orb.points, COLORS[0])])
    return EXIT_INCONCLUSIVE if orb.escaped else EXIT_OK


def _fixed_point_record(fp) -> dict[str, Any]:
    return {
        "family": fp.family,
        "x": fp.location.x,
        "y": fp.location.y,
        "eigenvalues": [{"re": e.real, "im": e.imag} for e in fp.eigenvalues],
        "moduli": list(fp.moduli),
        "classification": fp.classification,
    }


def cmd_fixed_points(cfg: RunConfig) -> int:
    w = Writer(cfg, "fixed-points")
    fps = fixed_points(cfg.params)
    w.json({"fixed_points": [_fixed_point_record(f) for f in fps]}, force=not w.wants("csv"))
    w.csv(
        ("family", "x", "y", "ev1_re", "ev1_im", "ev2_re", "ev2_im", "classification"),
        (
            (f.family, f.location.x, f.location.y, f.eigenvalues[0].real, f.eigenvalues[0].imag,
             f.eigenvalues[1].real, f.eigenvalues[1].imag, f.classification)
            for f in fps
        ),
    )
    return EXIT_OK


def cmd_hopf(cfg: RunConfig) -> int:
    if not 0 < cfg.lam < 1:
        raise ConfigError("hopf needs 0 < lambda < 1")
    w = Writer(cfg, "hopf")
    m = mu_h(cfg.lam)
    h = hopf_coefficients(Params(cfg.lam, m))
    res = {
        "lambda": cfg.lam,
        "mu_h": m,
        "x_star": h.location.x,
        "y_star": h.location.y,
        "a": h.a,
        "b": h.b,
        "sigma": {"re": h.sigma.real, "im": h.sigma.imag} if h.sigma is not None else None,
        "sigma_modulus": abs(h.sigma) if h.sigma is not None else None,
        "sigma_argument_turns": math.atan2(h.sigma.imag, h.sigma.real) / (2 * math.pi) if h.sigma else None,
    }
    w.json(res, force=True)
    w.csv(("lambda", "mu_h", "x_star", "y_star", "b"), [(cfg.lam, m, h.location.x, h.location.y, h.b)])
    return EXIT_OK


def cmd_curve(cfg: RunConfig) -> int:
    w = Writer(cfg, "curve")
    try:
        curve = picard_solve(cfg.params, M=cfg.grid, tol=cfg.tol)
    except CurveNotFoundError as exc:
        cfg.notes.append(str(exc))
        w.json({"found": False, "reason": str(exc)}, force=True)
        return EXIT_INCONCLUSIVE
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    pts = curve.points()
    w.csv(("theta", "rho", "x", "y"), zip(curve.thetas, curve.rhos, pts[:, 0], pts[:, 1]))
    w.json({
        "found": True,
        "nu": curve.nu,
        "center": curve.center,
        "grid": curve.size,
        "residual": curve.residual,
        "max_radius": curve.max_radius,
        "min_radius": float(curve.rhos.min()),
        "winding_number": winding_number(curve.offsets()),
        "converged": curve.converged,
        "iterations": curve.iterations,
        "step_history": curve.history,
    })
    c = curve.center
    w.svg(
        scatters=[(np.array([[c.x, c.y]]), COLORS[1])],
        polylines=[(np.vstack([pts, pts[:1]]), COLORS[0])],
        bounds=(c.x - 2 * curve.max_radius, c.x + 2 * curve.max_radius, c.y - 2 * curve.max_radius, c.y + 2 * curve.max_radius),
    )
    return EXIT_OK


def cmd_rotation(cfg: RunConfig) -> int:
    w = Writer(cfg, "rotation")
    seed = _default_seed(cfg)
    est = rotation_number(cfg.params, None, seed, cfg.iters, cfg.transient)
    tail = attracting_set(cfg.params, seed, cfg.transient + cfg.iters - 3 * cfg.max_period, 3 * cfg.max_period)
    period = detect_cycle(tail, cfg.max_period, cfg.tol if cfg.tol > 1e-12 else 1e-9)
    res = {"value": est.value, "stderr": est.stderr, "n_iterates": est.n_iterates, "period": period, "seed": seed}
    w.json(res, force=True)
    w.csv(("value", "stderr", "n_iterates", "period"), [(est.value, est.stderr, est.n_iterates, period if period else "")])
    return EXIT_OK


def cmd_cascade(cfg: RunConfig) -> int:
    w = Writer(cfg, "cascade")
    rep = cascade_scan(cfg.lam, (cfg.nu_from, cfg.nu_to), cfg.steps, cfg.transient, cfg.iters)
    w.csv(
        ("nu", "status", "multiplicity", "n_clusters"),
        ((r.nu, r.status, r.multiplicity if r.multiplicity is not None else "", r.n_clusters) for r in rep.records),
    )
    w.json({
        "lambda": rep.lam,
        "nu_breaks": rep.nu_breaks,
        "cycle_multiplicities": rep.cycle_multiplicities,
        "notes": rep.notes,
        "records": [asdict(r) for r in rep.records],
    })
    if all(r.status in ("inconclusive", "escaped") for r in rep.records):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_lyapunov(cfg: RunConfig) -> int:
    w = Writer(cfg, "lyapunov")
    seed = _default_seed(cfg)
    try:
        res = lyapunov(cfg.params, seed, cfg.iters, cfg.transient, fold=cfg.fold)
    except EscapeError as exc:
        cfg.notes.append(str(exc))
        w.json({"escaped": True, "escape_step": exc.step}, force=True)
        return EXIT_INCONCLUSIVE
    w.json({"exponents": list(res.exponents), "n": res.n, "seed": res.seed, "transient": res.transient, "fold": res.fold}, force=True)
    w.csv(("lambda1", "lambda2", "n", "transient"), [(*res.exponents, res.n, res.transient)])
    return EXIT_OK


def cmd_horseshoe(cfg: RunConfig) -> int:
    if (cfg.lam, cfg.mu) != (0.99, 5.0):
        raise ConfigError("horseshoe is defined at lambda=0.99, mu=5")
    w = Writer(cfg, "horseshoe")
    wit = horseshoe_witness(cfg.params, resolution=cfg.resolution, grid=cfg.grid)
    cfg.notes.extend(wit.notes)
    w.json({
        "ellipse": asdict(wit.ellipse),
        "key_points": [asdict(k) for k in wit.key_points],
        "containment": [{"point": p, "normalized_radius": r, "inside": ok} for p, r, ok in wit.containment],
        "diagonal_above": wit.diagonal_above,
        "diagonal_below": wit.diagonal_below,
        "diagonal_crossing": wit.diagonal_crossing,
        "components": [{"pixels": n, "x_min": a, "x_max": b} for n, a, b in wit.components],
        "component_count": wit.component_count,
        "left_right_split": wit.left_right_split,
        "forward_sample_components": wit.forward_components,
        "inconclusive": wit.inconclusive,
        "passed": wit.passed,
    }, force=True)
    w.csv(
        ("check", "input_x", "input_y", "expected_x", "expected_y", "observed_x", "observed_y", "pass"),
        ((f"key_point_{i + 1}", *k.input, *k.expected, *k.observed, k.passed) for i, k in enumerate(wit.key_points)),
    )
    stride = max(1, len(wit.image1) // 20_000)
    w.svg(scatters=[
        (wit.ellipse.sample(200), COLORS[2]),
        (wit.image1[::stride], COLORS[0]),
        (wit.image2[::stride], COLORS[1]),
    ])
    if wit.inconclusive:
        return EXIT_INCONCLUSIVE
    return EXIT_OK if wit.passed else EXIT_FAILED


def cmd_sweep(cfg: RunConfig) -> int:
    if not cfg.mu_from < cfg.mu_to and cfg.steps > 1:
        raise ConfigError("need mu_from < mu_to")
    w = Writer(cfg, "sweep")
    rows = []
    summary = []
    diagram = []
    for mu in np.linspace(cfg.mu_from, cfg.mu_to, cfg.steps):
        p = Params(cfg.lam, float(mu))
        seed = _default_seed(cfg, p)
        try:
            cloud = attracting_set(p, seed, cfg.transient, cfg.iters, fold=cfg.fold)
        except EscapeError as exc:
            summary.append({"mu": float(mu), "status": "escaped", "loops": None, "note": str(exc)})
            continue
        spread = float(np.ptp(cloud, axis=0).max())
        if spread < 1e-9:
            status, loops = "fixed-point", 0
        else:
            lc = count_loops(cloud)
            status, loops = lc.status, lc.multiplicity
        summary.append({"mu": float(mu), "status": status, "loops": loops})
        for x, y in cloud:
            rows.append((float(mu), x, y, status, "" if loops is None else loops))
        diagram.append(np.column_stack([np.full(len(cloud), mu), cloud[:, 0]]))
    w.csv(("mu", "x", "y", "status", "loops"), rows)
    w.json({"steps": summary})
    if diagram:
        w.svg(scatters=[(np.vstack(diagram), COLORS[0])], bounds=(cfg.mu_from, cfg.mu_to, 0.0, 1.0), labels=("mu", "x"))
    return EXIT_OK


def cmd_figure(cfg: RunConfig) -> int:
    r = FIGURES[cfg.figure]
    if r.note:
        cfg.notes.append(r.note)
    w = Writer(cfg, r.figure_id)
    n = cfg.iters
    clouds = []
    escaped = []
    for k, s in enumerate(r.seeds):
        try:
            if r.transient:
                pts = attracting_set(cfg.params, Point(*s), r.transient, n, fold=r.fold)
            else:
                orb = orbit(cfg.params, Point(*s), n, fold=r.fold)
                if orb.escaped:
                    escaped.append(k)
                pts = orb.points
        except EscapeError:
            escaped.append(k)
            pts = np.empty((0, 2))
        clouds.append(pts)
    w.csv(("seed", "n", "x", "y"), ((k, i, x, y) for k, c in enumerate(clouds) for i, (x, y) in enumerate(c)))
    result: dict[str, Any] = {"figure": r.figure_id, "lambda": r.lam, "mu": r.mu, "seeds": r.seeds, "escaped_seeds": escaped}
    fp = interior_fixed_point(cfg.params)
    result["interior_fixed_point"] = _fixed_point_record(fp)
    if r.figure_id == "fig6":
        h = splatter_stats(cfg.params, [Point(*s) for s in r.seeds], n, fold=True)
        targets = [(0.85, 0.0), (0.7, 0.6), (0.4, 0.4), (0.35, 0.0)]
        result["accumulation"] = [{"point": t, "distance": d, "pass": ok} for t, d, ok in h.accumulation_check(targets)]
    else:
        lc = [count_loops(c) for c in clouds if len(c)]
        result["clusters"] = [asdict(x) for x in lc]
    w.json(result)
    w.svg(scatters=[(c, COLORS[k % len(COLORS)]) for k, c in enumerate(clouds)])
    return EXIT_INCONCLUSIVE if escaped else EXIT_OK


HANDLERS: dict[str, Callable[[RunConfig], int]] = {
    "orbit": cmd_orbit,
    "fixed-points": cmd_fixed_points,
    "hopf": cmd_hopf,
    "curve": cmd_curve,
    "rotation": cmd_rotation,
    "cascade": cmd_cascade,
    "lyapunov": cmd_lyapunov,
    "horseshoe": cmd_horseshoe,
    "sweep": cmd_sweep,
    "figure": cmd_figure,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        return HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"flipflop: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EscapeError as exc:
        print(f"flipflop: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
