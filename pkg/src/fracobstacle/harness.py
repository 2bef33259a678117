"""Configuration-driven experiment runner.

A configuration is a flat text file of ``key = value`` lines; ``#`` starts a
comment. Values are resolved in the order: field defaults, preset, file,
command-line overrides. ``python3 -m fracobstacle validate-config`` prints
the resolved result. The keys are the fields of :class:`ExperimentConfig`;
see ``SCHEMA`` for one-line descriptions.

Outputs of a solve preset, written to ``out``:

``field_u.csv``   x, t, u, phi, gap for every node (17 significant digits)
``boundary.csv``  t, G_left, G_right of the tracked contact interval
``report.json``   regularity report at the analysed boundary point
``price.csv``     (option presets) x, S, tau, price, payoff
``checks.json``   (``u0-validation``) closed-form checks

Exit codes: 0 when every hard invariant holds, 2 when only soft audits
fail, 1 on errors or hard failures.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy import interpolate

from . import closed_forms as cf
from .freeboundary import (
    EPS_REG, FreeBoundaryTrajectory, RegularityReport, blowup_rescale, contact_mask, default_radii,
    edge_interval_endpoint, fit_expansion, gap_field, growth_exponent, lipschitz_and_c1beta_audit,
    local_field, monotonicity_cone_audit, principal_interval, time_regularity_audit,
)
from .grid import FracParams, ObstacleSpec, ParabolicCylinder, SpaceGrid, SpaceTimeField, TimeGrid, cylinder_indices
from .options import OptionSpec
from .solver import SolverConfig, residual_complementarity, semiconvexity_audit, solve_lcp, solve_penalized

log = logging.getLogger(__name__)

MAX_NX = 8192
MAX_NT = 4096
AUDIT_NAMES = ("monotonicity", "semiconvexity", "time_regularity", "blowup")


class ConfigError(ValueError):
    def __init__(self, name: str, message: str):
        super().__init__(f"{name}: {message}")
        self.field = name


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str = "benchmark"
    s: float = 0.75
    x_min: float = -4.5
    x_max: float = 4.5
    n_x: int = 1024
    n_t: int = 256
    t_final: float = 1.0
    scheme: str = "lcp"
    # solver
    eps_pen: float = 1e-3
    newton_tol: float = 1e-11
    newton_max_iter: int = 60
    relaxation: float = 1.0
    tol_c: float = 1e-8
    max_iter: int = 20000
    far_field: str = "zero"
    pen_operator: str = "spectral"
    active_set: bool = True
    # obstacle
    obstacle: str = "benchmark"
    obstacle_file: str | None = None
    slope: float = 0.6
    bump_height: float = 3.0
    bump_width: float = 1.5
    strike: float = 1.0
    strike_high: float | None = None
    smoothing_nodes: float = 4.0
    coordinate: str = "log"
    # analysis
    point_side: str = "right"
    t0_fraction: float = 0.5
    radii_count: int = 5
    radii_min_nodes: float = 8.0
    fit_radius: float = 0.4
    beta_window_start: float = 0.1
    beta_window_end: float = 1.0
    eps_reg: float = EPS_REG
    max_residual: float = 0.1
    audits: str = "monotonicity,semiconvexity,time_regularity,blowup"
    synthetic_controls: bool = False
    consistency_n_t: int = 2
    consistency_t_final: float = 1e-4
    # bookkeeping
    out: str = "out"
    seed: int = 0
    workers: int = 1
    sweep_axis: str | None = None
    sweep_values: str | None = None
    csv_time_stride: int = 1

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def audit_list(self) -> tuple[str, ...]:
        return tuple(a.strip() for a in self.audits.split(",") if a.strip())


SCHEMA = {
    "preset": "u0-validation | benchmark | dichotomy-sweep | s-sweep | american-put",
    "s": "fractional exponent in (1/2, 1)",
    "x_min": "left end of the space window",
    "x_max": "right end of the space window",
    "n_x": f"space nodes (16 .. {MAX_NX})",
    "n_t": f"time steps (2 .. {MAX_NT})",
    "t_final": "final time T (time to expiry for option presets)",
    "scheme": "lcp | penalized | both",
    "eps_pen": "penalty width of the penalized scheme",
    "newton_tol": "Newton stopping tolerance (penalized scheme)",
    "newton_max_iter": "Newton iteration cap per step",
    "relaxation": "projected SOR relaxation omega in (0, 2)",
    "tol_c": "complementarity tolerance of the LCP scheme",
    "max_iter": "projected SOR sweep cap per step",
    "far_field": "zero | periodic",
    "pen_operator": "spectral | quadrature (matrix of the penalized scheme)",
    "active_set": "warm-start projected SOR with an active-set predictor",
    "obstacle": "benchmark | tabulated | put | call-spread",
    "obstacle_file": "two-column text file x, phi (tabulated obstacle)",
    "slope": "benchmark obstacle: slope of the concave hull -slope sqrt(1 + x^2)",
    "bump_height": "benchmark obstacle: height of the Gaussian bump",
    "bump_width": "benchmark obstacle: width of the Gaussian bump",
    "strike": "option strike K",
    "strike_high": "upper strike of the call spread",
    "smoothing_nodes": "payoff smoothing width in grid steps",
    "coordinate": "log | price (option presets)",
    "point_side": "left | right end of the tracked contact interval",
    "t0_fraction": "analysis time as a fraction of t_final",
    "radii_count": "number of dyadic radii in the growth ladder",
    "radii_min_nodes": "smallest radius in grid steps",
    "fit_radius": "largest radius of the expansion fit (then halved twice)",
    "beta_window_start": "start of the trajectory window for Lip_t and beta, fraction of t_final",
    "beta_window_end": "end of that window, fraction of t_final",
    "eps_reg": "classification margin for the growth exponent",
    "max_residual": "largest log-fit residual for a resolved class",
    "audits": "comma list of " + ", ".join(AUDIT_NAMES),
    "synthetic_controls": "also fit exact power profiles at a seeded node",
    "consistency_n_t": "time steps of the short-expiry consistency solve (option presets)",
    "consistency_t_final": "expiry of the short-expiry consistency solve",
    "out": "output directory",
    "seed": "random seed for synthetic controls",
    "workers": "parallel sweep instances",
    "sweep_axis": "numeric field varied by the sweep subcommand",
    "sweep_values": "comma list of sweep values",
    "csv_time_stride": "write every k-th time level to field_u.csv",
}

PRESETS = {
    "u0-validation": {"obstacle": "benchmark", "n_x": 256, "n_t": 2},
    "benchmark": {"n_x": 1024, "n_t": 256, "scheme": "both", "t0_fraction": 0.5},
    "dichotomy-sweep": {
        "n_x": 2048, "n_t": 128, "scheme": "lcp", "t0_fraction": 0.25,
        "synthetic_controls": True, "sweep_axis": "s", "sweep_values": "0.75,0.9",
    },
    # a wider, taller bump on a flatter hull: the flanks lift off for every
    # s in [0.6, 0.9], at the price of losing contact at the window edges
    "s-sweep": {
        "n_x": 2048, "n_t": 128, "scheme": "lcp", "t0_fraction": 0.375, "slope": 0.2,
        "bump_height": 5.0, "bump_width": 1.5, "sweep_axis": "s", "sweep_values": "0.6,0.75,0.9",
    },
    "american-put": {
        "obstacle": "put", "x_min": -3.0, "x_max": 3.0, "n_x": 1024, "n_t": 256,
        "scheme": "lcp", "t0_fraction": 0.5, "fit_radius": 0.2, "beta_window_start": 0.1,
    },
}

_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
NUMERIC_FIELDS = {k for k, t in _FIELD_TYPES.items() if t in ("float", "int", "float | None")}


def _coerce(name: str, raw):
    kind = _FIELD_TYPES[name]
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if kind.endswith("| None") and text.lower() in ("", "none", "null"):
        return None
    try:
        if kind.startswith("float"):
            return float(text)
        if kind == "int":
            val = float(text)
            if val != int(val):
                raise ValueError
            return int(val)
        if kind == "bool":
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
    except ValueError:
        raise ConfigError(name, f"cannot parse {text!r} as {kind}") from None
    return text


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` pairs; rejects unknown keys and duplicates."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", "expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(key, "unknown configuration key")
        if key in out:
            raise ConfigError(key, "given twice")
        out[key] = value
    return out


def resolve_config(file_values: dict | None = None, overrides: dict | None = None, preset: str | None = None) -> ExperimentConfig:
    """Defaults, then the preset, then file values, then overrides; validated."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    if preset is not None:
        merged["preset"] = preset
    name = str(merged.get("preset", ExperimentConfig.preset)).strip()
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    values = dict(PRESETS[name])
    for k, v in merged.items():
        if k not in _FIELD_TYPES:
            raise ConfigError(k, "unknown configuration key")
        values[k] = v
    values["preset"] = name
    cfg = ExperimentConfig(**{k: _coerce(k, v) for k, v in values.items()})
    validate_config(cfg)
    return cfg


def load_config(path: str | os.PathLike | None = None, overrides: dict | None = None, preset: str | None = None) -> ExperimentConfig:
    file_values = parse_config_text(Path(path).read_text()) if path is not None else {}
    return resolve_config(file_values, overrides, preset)


def _choice(cfg, name, options):
    if getattr(cfg, name) not in options:
        raise ConfigError(name, f"must be one of {', '.join(options)}, got {getattr(cfg, name)!r}")


def validate_config(cfg: ExperimentConfig) -> None:
    """Raise :class:`ConfigError` naming the first offending field."""
    _choice(cfg, "preset", tuple(PRESETS))
    if not 0.5 < cfg.s < 1.0:
        raise ConfigError("s", f"must lie in (1/2, 1), got {cfg.s}")
    if not cfg.x_min < cfg.x_max:
        raise ConfigError("x_max", "must exceed x_min")
    if not 16 <= cfg.n_x <= MAX_NX:
        raise ConfigError("n_x", f"must lie in [16, {MAX_NX}], got {cfg.n_x}")
    if not 2 <= cfg.n_t <= MAX_NT:
        raise ConfigError("n_t", f"must lie in [2, {MAX_NT}], got {cfg.n_t}")
    if not cfg.t_final > 0:
        raise ConfigError("t_final", "must be positive")
    _choice(cfg, "scheme", ("lcp", "penalized", "both"))
    if not 0.0 < cfg.relaxation < 2.0:
        raise ConfigError("relaxation", f"omega must lie in (0, 2), got {cfg.relaxation}")
    for name in ("eps_pen", "newton_tol", "tol_c", "fit_radius", "radii_min_nodes", "smoothing_nodes", "max_residual", "consistency_t_final"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(name, "must be positive")
    for name in ("newton_max_iter", "max_iter", "workers", "csv_time_stride"):
        if getattr(cfg, name) < 1:
            raise ConfigError(name, "must be at least 1")
    _choice(cfg, "far_field", ("zero", "periodic"))
    _choice(cfg, "pen_operator", ("spectral", "quadrature"))
    _choice(cfg, "obstacle", ("benchmark", "tabulated", "put", "call-spread"))
    _choice(cfg, "coordinate", ("log", "price"))
    _choice(cfg, "point_side", ("left", "right"))
    if cfg.obstacle == "tabulated":
        if not cfg.obstacle_file:
            raise ConfigError("obstacle_file", "required for a tabulated obstacle")
        if not Path(cfg.obstacle_file).is_file():
            raise ConfigError("obstacle_file", f"no such file {cfg.obstacle_file!r}")
    if cfg.obstacle == "benchmark" and not (cfg.slope >= 0 and cfg.bump_width > 0):
        raise ConfigError("bump_width", "benchmark obstacle needs slope >= 0 and bump_width > 0")
    if cfg.obstacle in ("put", "call-spread"):
        if not cfg.strike > 0:
            raise ConfigError("strike", "must be positive")
        if cfg.obstacle == "call-spread" and not (cfg.strike_high is not None and cfg.strike_high > cfg.strike):
            raise ConfigError("strike_high", "call spread needs strike_high above strike")
    if not 0.0 < cfg.t0_fraction <= 1.0:
        raise ConfigError("t0_fraction", "must lie in (0, 1]")
    if cfg.radii_count < 2:
        raise ConfigError("radii_count", "need at least two radii")
    if not 0.0 <= cfg.beta_window_start < cfg.beta_window_end <= 1.0:
        raise ConfigError("beta_window_start", "need 0 <= beta_window_start < beta_window_end <= 1")
    if not 0.0 < cfg.eps_reg < 0.5:
        raise ConfigError("eps_reg", "must lie in (0, 1/2)")
    if cfg.consistency_n_t < 2:
        raise ConfigError("consistency_n_t", "must be at least 2")
    unknown = set(cfg.audit_list) - set(AUDIT_NAMES)
    if unknown:
        raise ConfigError("audits", f"unknown audits {sorted(unknown)}")
    if cfg.sweep_axis is not None and cfg.sweep_axis not in NUMERIC_FIELDS:
        raise ConfigError("sweep_axis", f"{cfg.sweep_axis!r} is not a numeric field")
    if cfg.sweep_values:
        try:
            [float(v) for v in cfg.sweep_values.split(",") if v.strip()]
        except ValueError:
            raise ConfigError("sweep_values", "must be a comma list of numbers") from None


def solver_config(cfg: ExperimentConfig) -> SolverConfig:
    return SolverConfig(
        eps_pen=cfg.eps_pen, newton_tol=cfg.newton_tol, newton_max_iter=cfg.newton_max_iter,
        relaxation=cfg.relaxation, tol_c=cfg.tol_c, max_iter=cfg.max_iter, far_field=cfg.far_field,
        pen_operator=cfg.pen_operator, active_set=cfg.active_set,
    )


# obstacles ---------------------------------------------------------------------

def benchmark_obstacle(slope: float = 0.6, height: float = 3.0, width: float = 1.5, window=(-13.5, 13.5)) -> ObstacleSpec:
    """``-slope sqrt(1 + x^2) + height exp(-(x / width)^2)`` with exact derivatives.

    Concave hull plus a bump: the solution lifts off the flanks of the bump
    first, so the central contact interval shrinks while the outer contact
    reaches the window edges.
    """
    def hull(x, k):
        q = 1.0 + x * x
        return -slope * [np.sqrt(q), x / np.sqrt(q), q**-1.5, -3 * x * q**-2.5, (12 * x * x - 3) * q**-3.5][k]

    def bump(x, k):
        z = x / width
        g = np.exp(-z * z)
        herm = [1.0, -2 * z, 4 * z * z - 2, -8 * z**3 + 12 * z, 16 * z**4 - 48 * z * z + 12][k]
        return height * herm * g / width**k

    def d(k):
        return lambda x: hull(np.asarray(x, dtype=float), k) + bump(np.asarray(x, dtype=float), k)

    return ObstacleSpec(d(0), derivatives=[d(1), d(2), d(3), d(4)], window=window, name="benchmark")


def tabulated_obstacle(path: str, window) -> ObstacleSpec:
    """Quintic spline through tabulated ``x, phi`` samples, continued affinely outside the table."""
    data = np.loadtxt(path, delimiter="," if Path(path).read_text().count(",") else None, ndmin=2,
                      comments="#", skiprows=_header_rows(path))
    if data.shape[1] < 2 or data.shape[0] < 6:
        raise ValueError("tabulated obstacle needs at least 6 rows of x, phi")
    order = np.argsort(data[:, 0])
    x, y = data[order, 0], data[order, 1]
    if np.any(np.diff(x) <= 0):
        raise ValueError("tabulated obstacle has repeated x values")
    spl = interpolate.make_interp_spline(x, y, k=5)
    ders = [spl] + [spl.derivative(k) for k in range(1, 5)]
    lo, hi = x[0], x[-1]

    def d(k):
        def f(z):
            z = np.asarray(z, dtype=float)
            inside = ders[k](np.clip(z, lo, hi))
            if k == 0:
                left = ders[0](lo) + ders[1](lo) * (z - lo)
                right = ders[0](hi) + ders[1](hi) * (z - hi)
            elif k == 1:
                left, right = ders[1](lo), ders[1](hi)
            else:
                left = right = 0.0
            return np.where(z < lo, left, np.where(z > hi, right, inside))
        return f

    return ObstacleSpec(d(0), derivatives=[d(1), d(2), d(3), d(4)], window=(max(window[0], lo), min(window[1], hi)), name=f"tabulated {Path(path).name}")


def _header_rows(path) -> int:
    with open(path) as fh:
        first = fh.readline()
    try:
        [float(t) for t in first.replace(",", " ").split()]
        return 0
    except ValueError:
        return 1


def option_spec(cfg: ExperimentConfig, h: float) -> OptionSpec:
    return OptionSpec(
        payoff="put" if cfg.obstacle == "put" else "call-spread", strike=cfg.strike,
        smoothing=cfg.smoothing_nodes * h, expiry=cfg.t_final, strike_high=cfg.strike_high,
        coordinate=cfg.coordinate,
    )


def build_problem(cfg: ExperimentConfig):
    sg = SpaceGrid(cfg.x_min, cfg.x_max, cfg.n_x)
    tg = TimeGrid(cfg.t_final, cfg.n_t)
    width = cfg.x_max - cfg.x_min
    window = (cfg.x_min - width, cfg.x_max + width)
    if cfg.obstacle == "benchmark":
        obs = benchmark_obstacle(cfg.slope, cfg.bump_height, cfg.bump_width, window)
    elif cfg.obstacle == "tabulated":
        obs = tabulated_obstacle(cfg.obstacle_file, window)
    else:
        obs = option_spec(cfg, sg.h).obstacle(window)
    return obs, FracParams(cfg.s), sg, tg


# serialization ----------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n")


def write_csv(path: Path, columns: dict) -> None:
    data = np.column_stack([np.asarray(c, dtype=float).ravel() for c in columns.values()])
    np.savetxt(path, data, delimiter=",", fmt="%.17g", header=",".join(columns), comments="")


def write_field(path: Path, u: SpaceTimeField, phi: np.ndarray, stride: int = 1) -> None:
    cols = np.arange(0, u.tg.n_t + 1, stride)
    if cols[-1] != u.tg.n_t:
        cols = np.append(cols, u.tg.n_t)
    X, T = np.meshgrid(u.x, u.t[cols], indexing="ij")
    U = u.values[:, cols]
    P = np.broadcast_to(phi[:, None], U.shape)
    # row order: time-major, so each time slice is contiguous
    write_csv(path, {"x": X.T, "t": T.T, "u": U.T, "phi": P.T, "gap": (U - P).T})


# analysis -----------------------------------------------------------------------

@dataclass
class Outcome:
    status: int
    summary: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    hard_failures: list = field(default_factory=list)
    soft_failures: list = field(default_factory=list)


def _longest_finite_run(t, G):
    ok = np.isfinite(G)
    best, start = (0, 0), None
    for i, flag in enumerate(np.append(ok, False)):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            if i - start > best[1] - best[0]:
                best = (start, i)
            start = None
    return t[best[0]:best[1]], G[best[0]:best[1]]


def boundary_series(mask, option: str | None):
    """``G_left``, ``G_right`` per time level.

    For option presets the exercise region is the contact run attached to
    the grid edge on the in-the-money side, reported as ``G_right`` (put)
    or ``G_left`` (call spread); otherwise the longest interior interval.
    """
    nt = mask.t.size
    GL, GR = np.full(nt, np.nan), np.full(nt, np.nan)
    for j in range(nt):
        if option == "put":
            GR[j] = edge_interval_endpoint(mask, j, "left")
        elif option == "call-spread":
            GL[j] = edge_interval_endpoint(mask, j, "right")
        else:
            GL[j], GR[j] = principal_interval(mask, j)
    return GL, GR


def _fit_ladder(h, count, min_nodes, x0, t0, s, sg, tg):
    """Largest dyadic ladder (down to two radii) whose cylinders fit the domain."""
    for c in range(count, 1, -1):
        radii = default_radii(h, c, min_nodes)
        r0 = radii[0]
        if x0 - r0 >= sg.x_min and x0 + r0 <= sg.x_max and t0 + r0 ** (2 * s) <= tg.t_final + 1e-12:
            return radii
    return None


def synthetic_controls(sg: SpaceGrid, tg: TimeGrid, s: float, t0: float, radii, seed: int, eps_reg: float, max_residual: float) -> dict:
    """Growth fits of exact power profiles ``(x - x0)_+^mu`` at a seeded grid node."""
    rng = np.random.default_rng(seed)
    r0 = float(np.max(radii))
    lo = int(np.searchsorted(sg.x, sg.x_min + r0 + sg.h))
    hi = int(np.searchsorted(sg.x, sg.x_max - r0 - sg.h))
    i0 = int(rng.integers(lo, hi))
    x0 = float(sg.x[i0])
    X = np.broadcast_to(sg.x[:, None], (sg.n_x, tg.n_t + 1))
    out = {"x0": x0, "t0": t0, "seed": seed, "fits": []}
    for target in (1.0 + s, 2.0):
        v = SpaceTimeField(np.maximum(X - x0, 0.0) ** target, sg, tg)
        g = growth_exponent(v, None, x0, t0, radii, s, eps_reg, max_residual, require_decade=False)
        out["fits"].append({"target": target, "mu_hat": g.mu, "class": g.cls, "error": abs(g.mu - target), "passed": abs(g.mu - target) <= 0.02})
    out["passed"] = all(f["passed"] for f in out["fits"])
    return out


def analyse_point(cfg: ExperimentConfig, u: SpaceTimeField, obs: ObstacleSpec, traj: FreeBoundaryTrajectory | None, provenance: dict):
    """Growth exponent, expansion fit, graph regularity and audits at ``(G(t0), t0)``."""
    s, sg, tg = cfg.s, u.sg, u.tg
    audits = {"provenance": provenance}
    soft = []
    if traj is None or traj.t.size == 0:
        audits["note"] = "no tracked free boundary"
        return RegularityReport((np.nan, np.nan), np.nan, "unresolved", np.nan, 1, np.nan, np.nan, np.nan, np.nan, audits, cfg.eps_reg), ["no free boundary"]
    j0 = int(round(cfg.t0_fraction * tg.n_t))
    t0 = float(tg.t[j0])
    t0 = min(max(t0, traj.t[0]), traj.t[-1])
    x0 = traj.at(t0)
    gap = gap_field(u, obs)

    radii = _fit_ladder(sg.h, cfg.radii_count, cfg.radii_min_nodes, x0, t0, s, sg, tg)
    mu, cls = np.nan, "unresolved"
    if radii is None:
        audits["growth"] = {"error": "no radius ladder fits the domain"}
    else:
        try:
            g = growth_exponent(u, obs, x0, t0, radii, s, cfg.eps_reg, cfg.max_residual, require_decade=False)
            mu, cls = g.mu, g.cls
            audits["growth"] = {"radii": g.radii, "sups": g.sups, "band": g.band, "residual": g.residual,
                                "clipped": g.clipped, "decade": bool(g.radii[0] / g.radii[-1] >= 10 - 1e-9)}
        except ValueError as exc:
            audits["growth"] = {"error": str(exc)}
        if cfg.synthetic_controls:
            audits["synthetic_controls"] = synthetic_controls(sg, tg, s, t0, radii, cfg.seed, cfg.eps_reg, cfg.max_residual)
            if not audits["synthetic_controls"]["passed"]:
                soft.append("synthetic controls")

    fits = []
    for k in range(3):
        r = cfg.fit_radius / 2**k
        try:
            f = fit_expansion(gap, x0, t0, r, s)
            fits.append({"r": r, "c0": f.c0, "e": f.e, "a": f.a, "residual": f.residual, "shift": f.shift, "status": f.status})
        except ValueError as exc:
            fits.append({"r": r, "error": str(exc), "c0": np.nan, "e": 1, "a": np.nan, "residual": np.nan, "status": "unresolved"})
    audits["expansion"] = fits
    res = [f["residual"] for f in fits]
    audits["expansion_residual_decreasing"] = bool(all(np.isfinite(res)) and np.all(np.diff(res) < 0))
    best = fits[-1]
    if best["status"] != "ok":
        soft.append("expansion fit")

    tw = (cfg.beta_window_start * tg.t_final, cfg.beta_window_end * tg.t_final)
    t_run, G_run = _longest_finite_run(traj.t, traj.G)
    lip, beta = np.nan, np.nan
    try:
        gr = lipschitz_and_c1beta_audit(FreeBoundaryTrajectory(traj.side, t_run, G_run), t_window=tw)
        lip, beta = gr.lip_t, gr.beta_hat
        audits["graph"] = {"status": gr.status, "taus": gr.taus, "second_differences": gr.second_differences, "window": tw}
        if not gr.passed:
            soft.append("graph regularity")
    except ValueError as exc:
        audits["graph"] = {"error": str(exc)}
        soft.append("graph regularity")

    wanted = cfg.audit_list
    r_loc = cfg.fit_radius
    if "monotonicity" in wanted:
        try:
            xs, ts = cylinder_indices(ParabolicCylinder(x0, t0, r_loc, s), sg, tg)
            e = best["e"] if best.get("e") in (1, -1) else 1
            mono = monotonicity_cone_audit(local_field(gap, xs, ts), e)
            audits["monotonicity"] = mono
            if mono["status"] == "fail":
                soft.append("monotonicity")
        except ValueError as exc:
            audits["monotonicity"] = {"error": str(exc)}
    if "time_regularity" in wanted:
        try:
            tr = time_regularity_audit(u, x0, t0, r_loc, s, obs=obs)
            audits["time_regularity"] = tr
            if not tr["passed"]:
                soft.append("time regularity")
        except ValueError as exc:
            audits["time_regularity"] = {"error": str(exc)}
    if "blowup" in wanted:
        try:
            bu = blowup_rescale(gap, x0, t0, r_loc / 4, s, cfg.eps_reg)
            audits["blowup"] = {"r": bu.r, "scale": bu.scale, "grid_sup": bu.grid_sup, "nondegenerate": bu.nondegenerate}
        except ValueError as exc:
            audits["blowup"] = {"error": str(exc)}

    report = RegularityReport((x0, t0), mu, cls, best["c0"], int(best["e"]), best["a"], best["residual"], lip, beta, audits, cfg.eps_reg)
    return report, soft


def _solve(cfg, obs, p, sg, tg, scheme):
    scfg = solver_config(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        result = (solve_lcp if scheme == "lcp" else solve_penalized)(obs, p, sg, tg, scfg)
    for w in caught:
        log.warning("%s solve: %s", scheme, w.message)
    log.info("%s solve: %.2f s", scheme, result.wall_time)
    return result


def _invariants(cfg, result, obs, p, mask):
    u = result.u
    gap = result.gap
    dtu = np.diff(u.values, axis=1)
    inv = {
        "min_gap": float(gap.min()),
        "min_dt_u": float(dtu.min() / u.tg.dt),
        "nested_violations": mask.nested_violations(),
        "solver_warnings": list(result.warnings),
        "max_step_residual": float(np.max(result.residuals)),
        "max_iterations": int(np.max(result.iterations)),
    }
    hard = []
    if inv["min_gap"] < -1e-6:
        hard.append("u >= phi")
    if inv["min_dt_u"] < -1e-8:
        hard.append("d_t u >= 0")
    if inv["nested_violations"]:
        hard.append("nested contact sets")
    if result.scheme == "lcp":
        cr = residual_complementarity(u, obs, p, far_field=cfg.far_field)
        inv["complementarity"] = {"max_abs_min": float(np.max(np.abs(cr.r3))), "min_r1": float(cr.r1.min()), "min_r2": float(cr.r2.min())}
        if inv["complementarity"]["max_abs_min"] > 1e-6:
            hard.append("complementarity residual")
    soft = ["edge contact"] if result.warnings else []
    if "semiconvexity" in cfg.audit_list:
        sc = semiconvexity_audit(u, obs)
        inv["semiconvexity"] = {"bound": sc.bound, "worst": sc.worst, "verdict": sc.verdict,
                                "minima": {f"{a},{b}": v for (a, b), v in sc.minima.items()}}
        if sc.verdict == "fail":
            hard.append("semiconvexity")
        elif sc.verdict == "flag":
            soft.append("semiconvexity")
    return inv, hard, soft


def _status(hard, soft) -> int:
    return 1 if hard else (2 if soft else 0)


def run_u0_validation(cfg: ExperimentConfig, out: Path) -> Outcome:
    """Closed-form checks: trace identity, discrete a-harmonicity, homogeneity."""
    checks = {"config": cfg.to_dict()}
    hard = []
    z = np.linspace(-5.0, 5.0, 10_000)
    trace = {}
    for s in sorted({0.6, 0.75, 0.9, cfg.s}):
        err = float(np.max(np.abs(cf.eval_u0(z, 0.0, s) - np.maximum(z, 0.0) ** (1 + s))))
        trace[f"{s:g}"] = err
        if err > 1e-12:
            hard.append(f"trace identity s={s:g}")
    checks["trace_identity_max_error"] = trace
    s = cfg.s
    a = 1.0 - 2.0 * s
    cases = {
        "u0": (lambda X, Y: cf.eval_u0(X, Y, s), a),
        "P": (lambda X, Y: cf.eval_polynomial_P(X, Y, 0.0, 0.0, 0.5, 1, s), a),
        "bR": (lambda X, Y: cf.eval_barrier_bR(X, Y, 2.0, 1, a), -a),
    }
    ratios = {}
    for name, (fun, b) in cases.items():
        errs = []
        for n in (64, 128):
            g = cf.HalfPlaneGrid(-1.0, 1.0, n + 1, 1.0, n + 1, a)
            rows = np.arange(n // 4, 3 * n // 4 + 1)
            R = cf.apply_weighted_operator(g.sample(fun), g, b, rows)
            cols = np.abs(g.x[1:-1]) <= 0.75
            errs.append(float(np.max(np.abs(R[cols]))))
        ratios[name] = {"residuals": errs, "ratio": errs[0] / errs[1]}
        if not 3.2 <= errs[0] / errs[1] <= 4.8:
            hard.append(f"a-harmonic residual ratio {name}")
    checks["weighted_operator_convergence"] = ratios
    cone = cf.ConeParams(1.0, 0.5, 0.5 * s)
    xs = np.linspace(0.1, 2.0, 50)
    lam = 2.0
    hom = float(np.max(np.abs(cf.eval_subsolution_Phi(lam * xs, cone, s) - lam ** (s + cone.gamma) * cf.eval_subsolution_Phi(xs, cone, s))))
    checks["subsolution_homogeneity_error"] = hom
    if hom > 1e-12:
        hard.append("subsolution homogeneity")
    checks["constant_cna"] = cf.constant_cna(1, a, s)
    checks["hard_failures"] = hard
    write_json(out / "checks.json", checks)
    return Outcome(_status(hard, []), {"checks": str(out / "checks.json")}, [str(out / "checks.json")], hard, [])


def run_experiment(cfg: ExperimentConfig) -> Outcome:
    """Execute a preset and write its artifacts into ``cfg.out``."""
    validate_config(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.preset == "u0-validation":
        return run_u0_validation(cfg, out)
    if cfg.obstacle in ("put", "call-spread"):
        return price_american(cfg)
    obs, p, sg, tg = build_problem(cfg)
    schemes = ["lcp", "penalized"] if cfg.scheme == "both" else [cfg.scheme]
    results = {sch: _solve(cfg, obs, p, sg, tg, sch) for sch in schemes}
    primary = results[schemes[0]]
    mask = contact_mask(primary.u, obs, cfg.s, cfg.tol_c)
    inv, hard, soft = _invariants(cfg, primary, obs, p, mask)
    diag = {"scheme": primary.scheme, "invariants": inv}
    if len(results) == 2:
        diag["scheme_gap"] = float(np.max(np.abs(results["lcp"].u.values - results["penalized"].u.values)))
        diag["penalized_newton_max"] = int(np.max(results["penalized"].iterations))

    GL, GR = boundary_series(mask, option=None)
    G = GR if cfg.point_side == "right" else GL
    t_ok, G_ok = _longest_finite_run(tg.t, G)
    traj = FreeBoundaryTrajectory(cfg.point_side, t_ok, G_ok) if t_ok.size else None
    report, soft_pt = analyse_point(cfg, primary.u, obs, traj, {"config": cfg.to_dict(), "diagnostics": diag})
    soft += soft_pt

    files = []
    write_field(out / "field_u.csv", primary.u, primary.info["phi"], cfg.csv_time_stride)
    write_csv(out / "boundary.csv", {"t": tg.t, "G_left": GL, "G_right": GR})
    report.audits["hard_failures"] = hard
    report.audits["soft_failures"] = soft
    write_json(out / "report.json", report.to_dict())
    files += [str(out / f) for f in ("field_u.csv", "boundary.csv", "report.json")]
    summary = {
        "mu_hat": report.mu_hat, "class": report.cls, "scheme_gap": diag.get("scheme_gap", np.nan),
        "complementarity": inv["complementarity"]["max_abs_min"] if "complementarity" in inv else np.nan,
        "beta_hat": report.beta_hat, "lip_t": report.lip_t,
    }
    return Outcome(_status(hard, soft), summary, files, hard, soft)


def price_american(cfg: ExperimentConfig) -> Outcome:
    """Price an American payoff on a fractional-diffusion model.

    The solver time is the time to expiry ``tau``; the exercise region is
    the contact set. Also solves a short-expiry problem to check that the
    price stays within ``n_t max(-lambda)_+ dt`` of the payoff.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    obs, p, sg, tg = build_problem(cfg)
    opt = option_spec(cfg, sg.h)
    result = _solve(cfg, obs, p, sg, tg, "lcp")
    mask = contact_mask(result.u, obs, cfg.s, cfg.tol_c)
    inv, hard, soft = _invariants(cfg, result, obs, p, mask)
    kind = opt.payoff
    GL, GR = boundary_series(mask, option=kind)
    G = GR if kind == "put" else GL
    side = "right" if kind == "put" else "left"
    diag = {"invariants": inv, "option": dataclasses.asdict(opt)}

    payoff = result.info["phi"]
    diag["price_minus_payoff_min"] = float((result.u.values - payoff[:, None]).min())
    if diag["price_minus_payoff_min"] < -1e-6:
        hard.append("price >= payoff")

    # short expiry: price -> payoff with the a priori bound n_t dt max(-lambda)_+
    short = dataclasses.replace(cfg, n_t=cfg.consistency_n_t, t_final=cfg.consistency_t_final)
    obs_s, p_s, sg_s, tg_s = build_problem(short)
    res_s = _solve(short, obs_s, p_s, sg_s, tg_s, "lcp")
    gap_s = float(np.max(np.abs(res_s.gap[:, -1])))
    C = tg_s.n_t * float(np.max(np.maximum(-res_s.forcing, 0.0)))
    diag["short_expiry"] = {"dt": tg_s.dt, "sup_gap": gap_s, "C": C, "bound": C * tg_s.dt, "passed": gap_s <= C * tg_s.dt * (1 + 1e-9) + 1e-14}
    if not diag["short_expiry"]["passed"]:
        soft.append("short-expiry consistency")

    traj = None
    if not np.isfinite(G[-1]):
        msg = "exercise region is empty at the longest time to expiry; exercise boundary omitted"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        log.warning(msg)
        diag["exercise_boundary"] = None
        soft.append("empty exercise region")
    else:
        t_ok, G_ok = _longest_finite_run(tg.t, G)
        traj = FreeBoundaryTrajectory(side, t_ok, G_ok)
        mono = traj.monotone(tol=0.1 * sg.h)
        diag["exercise_boundary"] = {"monotone_in_tau": mono, "tau_range": traj.time_range}
        if not mono:
            soft.append("exercise boundary monotonicity")

    report, soft_pt = analyse_point(cfg, result.u, obs, traj, {"config": cfg.to_dict(), "diagnostics": diag})
    soft += soft_pt

    write_field(out / "field_u.csv", result.u, payoff, cfg.csv_time_stride)
    write_csv(out / "boundary.csv", {"t": tg.t, "G_left": GL, "G_right": GR})
    cols = np.arange(0, tg.n_t + 1, cfg.csv_time_stride)
    X, TAU = np.meshgrid(sg.x, tg.t[cols], indexing="ij")
    write_csv(out / "price.csv", {
        "x": X.T, "S": opt.to_price(X).T, "tau": TAU.T, "price": result.u.values[:, cols].T,
        "payoff": np.broadcast_to(opt.raw_payoff(opt.to_price(sg.x))[:, None], X.shape).T,
    })
    files = [str(out / f) for f in ("field_u.csv", "boundary.csv", "price.csv", "report.json")]
    if traj is not None:
        write_csv(out / "exercise_boundary.csv", {"tau": traj.t, "x": traj.G, "S": opt.to_price(traj.G)})
        files.append(str(out / "exercise_boundary.csv"))
    report.audits["hard_failures"] = hard
    report.audits["soft_failures"] = soft
    write_json(out / "report.json", report.to_dict())
    summary = {"mu_hat": report.mu_hat, "class": report.cls, "short_expiry_gap": gap_s,
               "complementarity": inv["complementarity"]["max_abs_min"]}
    return Outcome(_status(hard, soft), summary, files, hard, soft)


# sweeps --------------------------------------------------------------------------

def _sweep_instance(args):
    cfg, axis, value = args
    row = {"value": value}
    try:
        outcome = run_experiment(cfg)
        row.update(outcome.summary)
        row.update({"status": outcome.status, "hard_failures": outcome.hard_failures, "soft_failures": outcome.soft_failures})
    except Exception as exc:  # a failed instance is recorded, the sweep goes on
        log.error("sweep %s=%s failed: %s", axis, value, exc)
        row.update({"status": 1, "error": f"{type(exc).__name__}: {exc}"})
    return row


def sweep(cfg: ExperimentConfig, axis: str | None = None, values=None) -> Outcome:
    """Run one instance per value of ``axis``; writes ``sweep.json`` into ``cfg.out``."""
    axis = axis or cfg.sweep_axis
    if values is None:
        values = [float(v) for v in (cfg.sweep_values or "").split(",") if v.strip()]
    if axis is None:
        raise ConfigError("sweep_axis", "no sweep axis given")
    if axis not in NUMERIC_FIELDS:
        raise ConfigError("sweep_axis", f"{axis!r} is not a numeric field")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = []
    for v in values:
        v = _coerce(axis, str(v))
        inst = dataclasses.replace(cfg, **{axis: v, "out": str(out / f"{axis}={v:g}"), "sweep_axis": None, "sweep_values": None})
        validate_config(inst)
        jobs.append((inst, axis, v))
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_sweep_instance, jobs))
    else:
        rows = [_sweep_instance(j) for j in jobs]
    table = {"axis": axis, "values": [r["value"] for r in rows], "rows": rows, "config": cfg.to_dict()}
    write_json(out / "sweep.json", table)
    status = 0 if all(r["status"] == 0 for r in rows) else 2
    return Outcome(status, table, [str(out / "sweep.json")])
