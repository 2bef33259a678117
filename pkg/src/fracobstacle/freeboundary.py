"""Free-boundary extraction and regularity diagnostics for one space dimension.

Everything here reads the gap ``v = u - phi`` of a solve (or a synthetic
field) on a uniform space-time grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats
from scipy.interpolate import RegularGridInterpolator

from .grid import ObstacleSpec, ParabolicCylinder, SpaceTimeField, cylinder_indices

EPS_REG = 0.1


def contact_threshold(h: float, s: float, tol_c: float = 1e-8) -> float:
    return max(10.0 * tol_c, h ** (1.0 + s))


def gap_field(u: SpaceTimeField, obs: ObstacleSpec | None) -> SpaceTimeField:
    """``u - phi`` as a field; ``obs=None`` means ``u`` already is a gap."""
    if obs is None:
        return u
    return u.with_values(u.values - obs(u.x)[:, None])


# contact sets -------------------------------------------------------------

@dataclass(frozen=True)
class ContactMask:
    mask: np.ndarray
    x: np.ndarray
    t: np.ndarray
    threshold: float
    gap: np.ndarray | None = field(default=None, repr=False)
    s: float | None = None
    floor: float = 0.0

    def nested_violations(self) -> int:
        """Number of nodes that join the contact set at a later time."""
        m = self.mask
        return int(np.count_nonzero(m[:, 1:] & ~m[:, :-1]))

    @property
    def nested(self) -> bool:
        return self.nested_violations() == 0


def contact_mask(u: SpaceTimeField, obs: ObstacleSpec | None, s: float, tol_c: float = 1e-8, threshold: float | None = None) -> ContactMask:
    """Nodes with ``u - phi <= max(10 tol_c, h^{1+s})``."""
    v = gap_field(u, obs).values
    thr = contact_threshold(u.sg.h, s, tol_c) if threshold is None else threshold
    return ContactMask(v <= thr, u.x, u.t, thr, np.array(v), s, 10.0 * tol_c)


def _runs(col: np.ndarray):
    """``(start, stop)`` index pairs of the True runs of a boolean vector."""
    d = np.diff(np.concatenate(([0], col.astype(np.int8), [0])))
    return list(zip(np.nonzero(d == 1)[0], np.nonzero(d == -1)[0] - 1))


def _endpoint(x, v, i_contact, direction, thr, s, mode, floor=0.0, fit_nodes=4, skip=1, reach=3):
    """Sub-grid location of a contact-interval endpoint.

    ``i_contact`` is the last contact node, ``direction`` (+1/-1) points into
    the positivity set.

    ``mode="power"`` walks back to the first node whose gap exceeds
    ``floor``, fits a line to ``v^{1/(1+s)}`` on ``fit_nodes`` nodes after
    skipping ``skip`` of them, and returns the root (exact for a
    ``(1+s)``-power profile). The first lifted node sits in a discrete
    boundary layer and is skipped by default; the root is kept within
    ``reach`` cells of the first positive node.
    ``mode="threshold"`` interpolates ``v`` linearly to the contact
    threshold; ``mode="node"`` returns the contact node itself.
    """
    h = x[1] - x[0]
    if mode == "node" or v is None:
        return float(x[i_contact])
    n = x.size
    j = i_contact + direction
    if not 0 <= j < n:
        return float(x[i_contact])
    if mode == "threshold":
        v0, v1 = v[i_contact], v[j]
        frac = 0.0 if v1 == v0 else np.clip((thr - v0) / (v1 - v0), 0.0, 1.0)
        return float(x[i_contact] + direction * frac * h)
    first = j
    while 0 <= first - direction < n and v[first - direction] > floor and abs(first - j) < 8:
        first -= direction
    idx = first + direction * (skip + np.arange(fit_nodes))
    idx = idx[(idx >= 0) & (idx < n)]
    if idx.size < 2 or np.any(v[idx] <= floor):
        return float(x[i_contact])
    q = v[idx] ** (1.0 / (1.0 + s))
    slope, icpt = np.polyfit(x[idx], q, 1)
    if slope * direction <= 0:
        return float(x[i_contact])
    root = -icpt / slope
    lo, hi = sorted((x[first] - direction * reach * h, x[first]))
    return float(np.clip(root, lo, hi))


@dataclass
class FreeBoundaryTrajectory:
    """Boundary position ``G(t)`` of one end of a contact interval.

    ``side`` is ``"left"`` for the left end of an interval (contact to the
    right of ``G``) and ``"right"`` for the right end.
    """

    side: str
    t: np.ndarray
    G: np.ndarray
    events: list = field(default_factory=list)

    @property
    def time_range(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    def monotone(self, tol: float = 0.0) -> bool:
        d = np.diff(self.G)
        return bool(np.all(d >= -tol) if self.side == "left" else np.all(d <= tol))

    def at(self, t0: float) -> float:
        return float(np.interp(t0, self.t, self.G))


def slice_endpoints(mask: ContactMask, j: int, mode: str = "power"):
    """Interior endpoints of the contact intervals at time index ``j``.

    Returns a list of ``(side, position, interval)``; ends that touch the
    edge of the grid are not free-boundary points and are skipped.
    """
    col = mask.mask[:, j]
    n = col.size
    v = None if mask.gap is None else mask.gap[:, j]
    if mode == "power" and mask.s is None:
        mode = "threshold"
    out = []
    for a, b in _runs(col):
        if a > 0:
            out.append(("left", _endpoint(mask.x, v, a, -1, mask.threshold, mask.s, mode, mask.floor), (a, b)))
        if b < n - 1:
            out.append(("right", _endpoint(mask.x, v, b, +1, mask.threshold, mask.s, mode, mask.floor), (a, b)))
    return out


def boundary_trajectories(mask: ContactMask, mode: str = "power", max_jump: float | None = None) -> list[FreeBoundaryTrajectory]:
    """Follow every interior contact-interval endpoint through time.

    Endpoints are matched to the nearest endpoint of the same side at the
    previous time. A trajectory ends when its endpoint vanishes or when the
    number of intervals changes (a split or merge); the event is recorded.
    """
    h = mask.x[1] - mask.x[0]
    if max_jump is None:
        max_jump = 0.25 * (mask.x[-1] - mask.x[0])
    finished: list[FreeBoundaryTrajectory] = []
    active: list[tuple[FreeBoundaryTrajectory, list, list]] = []
    prev_count = None
    for j in range(mask.t.size):
        eps = slice_endpoints(mask, j, mode)
        count = len(_runs(mask.mask[:, j]))
        if prev_count is not None and count != prev_count and active:
            for traj, ts, gs in active:
                traj.events.append(("topology change", float(mask.t[j])))
                traj.t, traj.G = np.array(ts), np.array(gs)
                finished.append(traj)
            active = []
        prev_count = count
        used = set()
        still = []
        for traj, ts, gs in active:
            cands = [(abs(pos - gs[-1]), k) for k, (side, pos, _) in enumerate(eps) if side == traj.side and k not in used]
            if cands:
                dist, k = min(cands)
                if dist <= max_jump:
                    used.add(k)
                    ts.append(float(mask.t[j]))
                    gs.append(eps[k][1])
                    still.append((traj, ts, gs))
                    continue
            traj.events.append(("endpoint lost", float(mask.t[j])))
            traj.t, traj.G = np.array(ts), np.array(gs)
            finished.append(traj)
        for k, (side, pos, _) in enumerate(eps):
            if k not in used:
                traj = FreeBoundaryTrajectory(side, np.empty(0), np.empty(0))
                still.append((traj, [float(mask.t[j])], [pos]))
        active = still
    for traj, ts, gs in active:
        traj.t, traj.G = np.array(ts), np.array(gs)
        finished.append(traj)
    return finished


def principal_interval(mask: ContactMask, j: int, mode: str = "power"):
    """``(G_left, G_right)`` of the longest contact interval away from the grid edges."""
    col = mask.mask[:, j]
    n = col.size
    best = None
    for a, b in _runs(col):
        if a == 0 or b == n - 1:
            continue
        if best is None or b - a > best[1] - best[0]:
            best = (a, b)
    if best is None:
        return np.nan, np.nan
    v = None if mask.gap is None else mask.gap[:, j]
    m = mode if mask.s is not None else "threshold"
    left = _endpoint(mask.x, v, best[0], -1, mask.threshold, mask.s, m, mask.floor)
    right = _endpoint(mask.x, v, best[1], +1, mask.threshold, mask.s, m, mask.floor)
    return left, right


def edge_interval_endpoint(mask: ContactMask, j: int, edge: str = "left", mode: str = "power") -> float:
    """Interior end of the contact interval attached to a grid edge, or NaN.

    For an American put in the log price this is the exercise boundary:
    the contact set is the run touching the left edge and its right end is
    the free boundary.
    """
    col = mask.mask[:, j]
    n = col.size
    runs = _runs(col)
    v = None if mask.gap is None else mask.gap[:, j]
    m = mode if mask.s is not None else "threshold"
    for a, b in runs:
        if edge == "left" and a == 0 and b < n - 1:
            return _endpoint(mask.x, v, b, +1, mask.threshold, mask.s, m, mask.floor)
        if edge == "right" and b == n - 1 and a > 0:
            return _endpoint(mask.x, v, a, -1, mask.threshold, mask.s, m, mask.floor)
    if edge not in ("left", "right"):
        raise ValueError("edge must be 'left' or 'right'")
    return np.nan


# growth exponent -----------------------------------------------------------

@dataclass(frozen=True)
class GrowthFit:
    mu: float
    band: tuple[float, float]
    radii: np.ndarray
    sups: np.ndarray
    residual: float
    cls: str
    clipped: bool


def classify_exponent(mu: float, residual: float, eps_reg: float = EPS_REG, max_residual: float = 0.1) -> str:
    """Regular below ``2 - 2 eps_reg``, degenerate from ``2 - eps_reg``, unresolved between or on a poor fit."""
    if not np.isfinite(mu) or residual > max_residual:
        return "unresolved"
    if mu >= 2.0 - eps_reg:
        return "degenerate"
    if mu <= 2.0 - 2.0 * eps_reg:
        return "regular"
    return "unresolved"


def dyadic_radii(r0: float, count: int) -> np.ndarray:
    return r0 * 2.0 ** (-np.arange(count, dtype=float))


def default_radii(h: float, count: int = 5, min_nodes: float = 8.0) -> np.ndarray:
    """Dyadic radii whose smallest member is ``min_nodes * h``."""
    return dyadic_radii(min_nodes * h * 2.0 ** (count - 1), count)


def growth_exponent(u: SpaceTimeField, obs: ObstacleSpec | None, x0: float, t0: float, radii, s: float,
                    eps_reg: float = EPS_REG, max_residual: float = 0.1, require_decade: bool = True) -> GrowthFit:
    """Slope of ``log sup_{Q_r} |u - phi|`` against ``log r``.

    Cylinders must lie inside the spatial window and end before the final
    time. They may reach below ``t = 0``; the part before the initial time is
    dropped (``clipped=True``), which leaves the sup unchanged for solutions
    that are nondecreasing in time. With ``require_decade=False`` a shorter
    ladder is accepted but always classified ``"unresolved"``.
    """
    v = gap_field(u, obs)
    radii = np.sort(np.asarray(radii, dtype=float))[::-1]
    if radii.size < 2:
        raise ValueError("need at least two radii")
    short = radii[0] / radii[-1] < 10.0 - 1e-9
    if short and require_decade:
        raise ValueError("radii must span at least one decade")
    sg, tg = v.sg, v.tg
    tol = 0.5 * min(sg.h, tg.dt)
    sups = []
    clipped = False
    for r in radii:
        cyl = ParabolicCylinder(x0, t0, r, s)
        lo, hi = cyl.x_extent
        if lo < sg.x_min - tol or hi > sg.x_max + tol or cyl.t_extent[1] > tg.t_final + tol:
            raise ValueError(f"cylinder of radius {r:g} leaves the domain")
        clipped |= cyl.t_extent[0] < -tol
        xs, ts = cylinder_indices(cyl, sg, tg)
        sup = float(np.max(np.abs(v.values[xs, ts]))) if xs.stop > xs.start else 0.0
        if sup == 0.0:
            raise ValueError(f"sup of u - phi vanishes on the cylinder of radius {r:g}; point is not on the free boundary")
        sups.append(sup)
    sups = np.array(sups)
    fit = stats.linregress(np.log(radii), np.log(sups))
    pred = fit.intercept + fit.slope * np.log(radii)
    resid = float(np.sqrt(np.mean((np.log(sups) - pred) ** 2)))
    half = 2.0 * fit.stderr if np.isfinite(fit.stderr) else np.inf
    cls = "unresolved" if short else classify_exponent(fit.slope, resid, eps_reg, max_residual)
    return GrowthFit(float(fit.slope), (float(fit.slope - half), float(fit.slope + half)), radii, sups, resid, cls, bool(clipped))


# blow-ups ------------------------------------------------------------------

@dataclass(frozen=True)
class LocalField:
    """Samples on a tensor grid ``x`` (space) by ``t`` (time); NaN marks missing data."""

    values: np.ndarray
    x: np.ndarray
    t: np.ndarray


@dataclass(frozen=True)
class BlowUp:
    field: LocalField
    scale: float
    grid_sup: float
    nondegenerate: bool
    r: float


def blowup_rescale(v: SpaceTimeField, x0: float, t0: float, r: float, s: float, eps_reg: float = EPS_REG, n_unit: int = 65) -> BlowUp:
    """``v(x0 + r x, t0 + r^{2s} t)`` on the unit cylinder, normalized to sup 1.

    Resampling is bilinear; times before ``t = 0`` or after the final time
    are NaN. The normalizing constant is the sup of the resampled values,
    so the result has sup exactly 1; ``grid_sup`` is the sup over the grid
    nodes of the cylinder, used for the nondegeneracy test
    ``grid_sup >= r^{2 - eps_reg} / 2``.
    """
    cyl = ParabolicCylinder(x0, t0, r, s)
    xs, ts = cylinder_indices(cyl, v.sg, v.tg)
    block = v.values[xs, ts]
    grid_sup = float(np.max(np.abs(block))) if block.size else 0.0
    if grid_sup == 0.0:
        raise ValueError("sup of the gap vanishes on the cylinder")
    X = np.linspace(-1.0, 1.0, n_unit)
    T = np.linspace(-1.0, 1.0, n_unit)
    px = x0 + r * X
    pt = t0 + cyl.half_time * T
    interp = RegularGridInterpolator((v.x, v.t), v.values, bounds_error=False, fill_value=np.nan)
    PX, PT = np.meshgrid(px, pt, indexing="ij")
    vals = interp(np.stack([PX, PT], axis=-1))
    scale = float(np.nanmax(np.abs(vals)))
    if not scale > 0:
        raise ValueError("sup of the gap vanishes on the cylinder")
    nondeg = grid_sup >= 0.5 * r ** (2.0 - eps_reg)
    return BlowUp(LocalField(vals / scale, X, T), scale, grid_sup, bool(nondeg), r)


# expansion fit ----------------------------------------------------------------

@dataclass(frozen=True)
class ExpansionFit:
    c0: float
    e: int
    a: float
    residual: float
    shift: float
    status: str


def expansion_model(x, t, x0, t0, c0, e, a, s, shift=0.0):
    return c0 * np.maximum(e * (x - x0 - shift) + a * (t - t0), 0.0) ** (1.0 + s)


def fit_expansion(v: SpaceTimeField, x0: float, t0: float, r: float, s: float, fit_shift: bool = True, stationary_tol: float = 1e-6) -> ExpansionFit:
    """Least-squares fit of ``c0 ((x - x0) e + a (t - t0))_+^{1+s}`` on ``Q_r``.

    ``e`` is the side on which the gap is larger; ``a >= 0`` and ``c0 > 0``
    are enforced by bounds. With ``fit_shift`` the base point may move by
    up to two grid spacings to absorb the sub-grid error of ``x0``. The
    residual is the relative L2 misfit over the cylinder nodes. ``status`` is
    ``"ok"``, ``"stationary"`` (fitted ``a`` at the lower bound) or
    ``"unresolved"`` (optimizer failure).
    """
    cyl = ParabolicCylinder(x0, t0, r, s)
    xs, ts = cylinder_indices(cyl, v.sg, v.tg)
    block = v.values[xs, ts]
    if block.size == 0 or not np.any(block):
        raise ValueError("no positive data on the cylinder")
    X, T = np.meshgrid(v.x[xs], v.t[ts], indexing="ij")
    right = block[X > x0].sum()
    left = block[X < x0].sum()
    e = 1 if right >= left else -1
    h = v.sg.h
    # initial guess from the spatial profile at t0
    d = e * (X - x0)
    sel = d > 0
    c_guess = float(np.median(block[sel] / np.maximum(d[sel], h) ** (1 + s))) if sel.any() else 1.0
    c_guess = max(c_guess, 1e-12)
    scale = max(np.max(np.abs(block)), 1e-300)

    def resid(p):
        c0, a = p[0], p[1]
        sh = p[2] if fit_shift else 0.0
        return (expansion_model(X, T, x0, t0, c0, e, a, s, sh) - block).ravel() / scale

    if fit_shift:
        p0 = [c_guess, 0.1, 0.0]
        lb, ub = [0.0, 0.0, -2 * h], [np.inf, np.inf, 2 * h]
    else:
        p0 = [c_guess, 0.1]
        lb, ub = [0.0, 0.0], [np.inf, np.inf]
    try:
        best = None
        for a0 in (0.0, 0.1, 1.0):
            p0[1] = a0
            sol = optimize.least_squares(resid, p0, bounds=(lb, ub), xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
            if best is None or sol.cost < best.cost:
                best = sol
        sol = best
    except (ValueError, np.linalg.LinAlgError):
        return ExpansionFit(np.nan, e, np.nan, np.nan, 0.0, "unresolved")
    if not sol.success or not np.all(np.isfinite(sol.x)):
        return ExpansionFit(np.nan, e, np.nan, np.nan, 0.0, "unresolved")
    c0, a = float(sol.x[0]), float(sol.x[1])
    sh = float(sol.x[2]) if fit_shift else 0.0
    rel = float(np.linalg.norm(sol.fun) * scale / np.linalg.norm(block))
    status = "stationary" if a <= stationary_tol else "ok"
    if not c0 > 0:
        status = "unresolved"
    return ExpansionFit(c0, e, a, rel, sh, status)


# trajectory regularity ------------------------------------------------------

@dataclass(frozen=True)
class GraphRegularity:
    lip_t: float
    beta_hat: float
    taus: np.ndarray
    second_differences: np.ndarray
    status: str

    @property
    def passed(self) -> bool:
        return self.beta_hat > 0.05


def lipschitz_and_c1beta_audit(traj: FreeBoundaryTrajectory, t_window=None, noise_floor="auto", min_scales: int = 3) -> GraphRegularity:
    """Lipschitz constant in time and a Hölder exponent for ``G'``.

    ``Lip_t = max |dG/dt|`` over consecutive samples. For dyadic ``tau``,
    ``D(tau) = max_t |G(t + tau) + G(t - tau) - 2 G(t)|``, and
    ``beta_hat`` is the slope of ``log D`` against ``log tau`` minus one,
    capped at 1. Scales with ``D`` at or below the noise floor are dropped;
    ``"auto"`` takes twice ``D`` at the smallest ``tau``, where sub-grid
    location noise dominates any smooth signal. With fewer than
    ``min_scales`` informative scales the trajectory is reported
    ``"smooth"`` with ``beta_hat = 1``. ``t_window`` restricts the samples.
    """
    t, G = np.asarray(traj.t, dtype=float), np.asarray(traj.G, dtype=float)
    if t_window is not None:
        keep = (t >= t_window[0] - 1e-12) & (t <= t_window[1] + 1e-12)
        t, G = t[keep], G[keep]
    if t.size < 8:
        raise ValueError("trajectory needs at least 8 samples")
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-6):
        raise ValueError("trajectory samples must be uniformly spaced in time")
    lip = float(np.max(np.abs(np.diff(G)) / dt))
    taus, D = [], []
    k = 1
    while 2 * k < t.size:
        d2 = G[2 * k:] + G[:-2 * k] - 2.0 * G[k:-k]
        taus.append(k * dt[0])
        D.append(float(np.max(np.abs(d2))))
        k *= 2
    taus, D = np.array(taus), np.array(D)
    tiny = 1e-12 * max(1.0, float(np.max(np.abs(G))))
    if noise_floor == "auto":
        floor = max(2.0 * D[0], tiny)
    else:
        floor = max(float(noise_floor), tiny)
    keep = D > floor
    if keep.sum() < min_scales:
        return GraphRegularity(lip, 1.0, taus, D, "smooth")
    slope = stats.linregress(np.log(taus[keep]), np.log(D[keep])).slope
    beta = float(min(slope - 1.0, 1.0))
    return GraphRegularity(lip, beta, taus, D, "ok" if beta > 0.05 else "fail")


# audits ----------------------------------------------------------------------

def local_field(v: SpaceTimeField, xs: slice, ts: slice) -> LocalField:
    return LocalField(np.array(v.values[xs, ts]), v.x[xs], v.t[ts])


def monotonicity_cone_audit(v: LocalField, e: int, gamma: float | None = None, kappa: float | None = None,
                            tol: float = 1e-6, positive_frac: float = 1e-3) -> dict:
    """Sign and cone checks for the gap near a boundary point.

    Uses forward differences ``D_e v = e (v(x + e h) - v(x)) / h`` and
    ``D_t v = (v(t + dt) - v(t)) / dt``. Checks ``D_e v >= -tol scale``,
    ``D_t v >= -tol scale``, and on the positivity set (where ``D_e v``
    exceeds ``positive_frac`` of its maximum) reports
    ``kappa_hat = max D_t / D_e`` and ``gamma_hat = min D_t / D_e``; given
    ``gamma`` or ``kappa`` the corresponding bound is checked as well.
    """
    vals = np.asarray(v.values, dtype=float)
    h = v.x[1] - v.x[0]
    dt = v.t[1] - v.t[0]
    if e == 1:
        De = (vals[1:, :-1] - vals[:-1, :-1]) / h
        base = vals[:-1, :-1]
        Dt = (vals[:-1, 1:] - vals[:-1, :-1]) / dt
    else:
        De = (vals[:-1, :-1] - vals[1:, :-1]) / h
        base = vals[1:, :-1]
        Dt = (vals[1:, 1:] - vals[1:, :-1]) / dt
    ok = np.isfinite(De) & np.isfinite(Dt)
    scale = float(np.nanmax(np.abs(vals))) if np.any(np.isfinite(vals)) else 0.0
    de_min = float(np.min(De[ok])) if ok.any() else np.nan
    dt_min = float(np.min(Dt[ok])) if ok.any() else np.nan
    out = {
        "de_min": de_min,
        "dt_min": dt_min,
        "de_nonnegative": bool(de_min >= -tol * max(scale, 1e-300) / h) if ok.any() else False,
        "dt_nonnegative": bool(dt_min >= -tol * max(scale, 1e-300) / dt) if ok.any() else False,
    }
    pos = ok & (base > 0) & (De > positive_frac * np.max(De[ok], initial=0.0))
    if pos.any():
        ratio = Dt[pos] / De[pos]
        out["kappa_hat"] = float(np.max(ratio))
        out["gamma_hat"] = float(np.min(ratio))
    else:
        out["kappa_hat"] = np.nan
        out["gamma_hat"] = np.nan
    if ok.any() and np.max(np.abs(Dt[ok])) <= tol * max(scale, 1e-300) / dt:
        out["status"] = "stationary"
    else:
        out["status"] = "ok" if out["de_nonnegative"] and out["dt_nonnegative"] else "fail"
    if kappa is not None and np.isfinite(out["kappa_hat"]):
        out["kappa_bound_holds"] = bool(out["kappa_hat"] <= kappa * (1 + 1e-9))
    if gamma is not None and np.isfinite(out["gamma_hat"]):
        out["gamma_bound_holds"] = bool(out["gamma_hat"] >= gamma * (1 - 1e-9))
    return out


def _holder_profile(F: np.ndarray, dx: float, dt: float, s: float, axis_steps):
    """Max ``|F(p) - F(q)| / rho^s`` over pairs at parabolic distance ``rho``."""
    out = []
    for kx, kt, rho in axis_steps:
        if kx:
            d = np.abs(F[kx:, :] - F[:-kx, :])
        else:
            d = np.abs(F[:, kt:] - F[:, :-kt])
        d = d[np.isfinite(d)]
        out.append(float(d.max()) / rho**s if d.size else np.nan)
    return np.array(out)


def time_regularity_audit(u: SpaceTimeField, x0: float, t0: float, r: float, s: float, levels: int = 4, obs: ObstacleSpec | None = None) -> dict:
    """Empirical ``C^s`` seminorms of ``d_t u`` and ``d_x u`` near a point.

    The derivatives are one-sided differences restricted to ``Q_r``. For
    dyadic increments ``delta`` in space (and ``delta^{2s}`` in time) the
    quotient ``max |Df(p) - Df(q)| / delta^s`` is recorded. The log-log slope
    ``p`` of this profile classifies the result: ``|p| <= 0.15`` plateau,
    ``p > 0.15`` smoother than ``C^s``, ``p < -0.15`` blow-up.
    """
    f = gap_field(u, obs) if obs is not None else u
    cyl = ParabolicCylinder(x0, t0, r, s)
    xs, ts = cylinder_indices(cyl, f.sg, f.tg)
    F = f.values[xs, ts]
    h, dt = f.sg.h, f.tg.dt
    if F.shape[0] < 4 or F.shape[1] < 2:
        raise ValueError("cylinder holds too few nodes")
    Ux = np.diff(F, axis=0)[:, :-1] / h if F.shape[1] > 1 else np.diff(F, axis=0) / h
    Ut = np.diff(F, axis=1)[:-1, :] / dt
    report = {}
    for name, D in (("dx", Ux), ("dt", Ut)):
        steps = []
        for k in range(levels):
            kx = 2**k
            if kx >= D.shape[0]:
                break
            steps.append((kx, 0, kx * h))
        prof_x = _holder_profile(D, h, dt, s, steps)
        tsteps = []
        for k in range(levels):
            kt = 2**k
            if kt >= D.shape[1]:
                break
            tsteps.append((0, kt, (kt * dt) ** (1.0 / (2.0 * s))))
        prof_t = _holder_profile(D, h, dt, s, tsteps)
        rho = np.array([st[2] for st in steps + tsteps])
        prof = np.concatenate([prof_x, prof_t])
        good = np.isfinite(prof) & (prof > 0)
        seminorm = float(np.nanmax(prof)) if good.any() else 0.0
        if good.sum() >= 2 and steps:
            px = prof_x[np.isfinite(prof_x) & (prof_x > 0)]
            rx = np.array([st[2] for st in steps])[np.isfinite(prof_x) & (prof_x > 0)]
            slope = float(np.polyfit(np.log(rx), np.log(px), 1)[0]) if px.size >= 2 else 0.0
        else:
            slope = 0.0
        fin = D[np.isfinite(D)]
        # variation at rounding level counts as a constant derivative
        flat = fin.size == 0 or np.ptp(fin) <= 1e-9 * max(float(np.max(np.abs(fin))), 1e-300)
        if seminorm == 0.0 or flat:
            verdict = "constant"
        elif slope > 0.15:
            verdict = "smoother than C^s"
        elif slope < -0.15:
            verdict = "blow-up"
        else:
            verdict = "plateau"
        report[name] = {"seminorm": seminorm, "profile_x": prof_x.tolist(), "profile_t": prof_t.tolist(), "slope": slope, "verdict": verdict}
    report["passed"] = all(report[k]["verdict"] != "blow-up" for k in ("dx", "dt"))
    return report


# report ----------------------------------------------------------------------

REPORT_KEYS = ("point", "mu_hat", "class", "c0", "e", "a", "fit_residual", "lip_t", "beta_hat", "audits")


@dataclass
class RegularityReport:
    point: tuple[float, float]
    mu_hat: float
    cls: str
    c0: float
    e: int
    a: float
    fit_residual: float
    lip_t: float
    beta_hat: float
    audits: dict = field(default_factory=dict)
    eps_reg: float = EPS_REG

    def __post_init__(self):
        if self.cls not in ("regular", "degenerate", "unresolved"):
            raise ValueError(f"unknown class {self.cls!r}")
        if self.cls == "regular" and not self.mu_hat < 2.0 - self.eps_reg:
            raise ValueError("regular class requires mu_hat < 2 - eps_reg")
        if self.cls == "degenerate" and not self.mu_hat >= 2.0 - self.eps_reg:
            raise ValueError("degenerate class requires mu_hat >= 2 - eps_reg")

    def to_dict(self) -> dict:
        return {
            "point": [float(self.point[0]), float(self.point[1])],
            "mu_hat": float(self.mu_hat),
            "class": self.cls,
            "c0": float(self.c0),
            "e": int(self.e),
            "a": float(self.a),
            "fit_residual": float(self.fit_residual),
            "lip_t": float(self.lip_t),
            "beta_hat": float(self.beta_hat),
            "audits": self.audits,
        }
