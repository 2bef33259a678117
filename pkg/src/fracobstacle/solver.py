"""Time stepping for ``min{d_t u + (-Delta)^s u, u - phi} = 0``, ``u(., 0) = phi``.

Both schemes work with the gap ``v = u - phi``, which solves

    min{d_t v + A v + lam, v} = 0,    v(., 0) = 0,    lam = (-Delta)^s phi,

with ``v`` extended by zero outside the grid (``far_field="zero"``) or
periodically (``far_field="periodic"``).

* :func:`solve_lcp` takes backward-Euler steps and solves each linear
  complementarity problem with projected SOR on the quadrature matrix. A
  primal-dual active-set prediction supplies the starting iterate; PSOR then
  runs to its own stopping rule.
* :func:`solve_penalized` replaces the constraint by the reaction
  ``exp(-v / eps)`` and starts from ``v = eps``.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ._psor import psor_solve
from .fraclap import QuadratureOperator, calibrate_constant, frac_lap_affine_tails, spectral_toeplitz
from .grid import FracParams, ObstacleSpec, SpaceGrid, SpaceTimeField, TimeGrid


class SolverError(RuntimeError):
    """Raised when a time step fails; ``step`` is the failing step index."""

    def __init__(self, message: str, step: int, snapshot=None):
        super().__init__(f"step {step}: {message}")
        self.step = step
        self.snapshot = snapshot


@dataclass(frozen=True)
class SolverConfig:
    eps_pen: float = 1e-3
    newton_tol: float = 1e-11
    newton_max_iter: int = 60
    relaxation: float = 1.0
    tol_c: float = 1e-8
    max_iter: int = 20000
    half_width: float | None = None
    far_field: str = "zero"
    pen_operator: str = "spectral"
    active_set: bool = True
    dt: float | None = None

    def __post_init__(self):
        if not 0.0 < self.relaxation < 2.0:
            raise ValueError(f"relaxation parameter omega must lie in (0, 2), got {self.relaxation}")
        if not self.tol_c > 0:
            raise ValueError("complementarity tolerance tol_c must be positive")
        if not self.eps_pen > 0:
            raise ValueError("penalty eps_pen must be positive")
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if self.max_iter < 1 or self.newton_max_iter < 1:
            raise ValueError("iteration caps must be positive")
        if self.far_field not in ("zero", "periodic"):
            raise ValueError("far_field must be 'zero' or 'periodic'")
        if self.pen_operator not in ("spectral", "quadrature"):
            raise ValueError("pen_operator must be 'spectral' or 'quadrature'")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.half_width is not None and not self.half_width > 0:
            raise ValueError("half_width must be positive")


@dataclass(frozen=True)
class SolveResult:
    u: SpaceTimeField
    scheme: str
    residuals: np.ndarray
    iterations: np.ndarray
    wall_time: float
    forcing: np.ndarray = field(repr=False)
    warnings: tuple = ()
    info: dict = field(default_factory=dict)

    @property
    def gap(self) -> np.ndarray:
        return self.u.values - self.info["phi"][:, None]


# operators ------------------------------------------------------------------

def _check_grids(sg: SpaceGrid, tg: TimeGrid, cfg: SolverConfig):
    if cfg.dt is not None and not np.isclose(cfg.dt, tg.dt, rtol=1e-12, atol=0):
        raise ValueError(f"configured dt={cfg.dt} does not match the time grid step {tg.dt}")
    if cfg.half_width is not None:
        if not np.isclose(sg.x_min, -cfg.half_width) or not np.isclose(sg.x_max, cfg.half_width):
            raise ValueError("space grid does not span [-half_width, half_width]")


def obstacle_forcing(obs: ObstacleSpec, s: float, sg: SpaceGrid, far_field: str = "zero", c: float | None = None) -> np.ndarray:
    """``(-Delta)^s phi`` on the grid nodes.

    For the zero far field the obstacle is sampled on a window three times
    as wide as the grid and continued affinely beyond it; for the periodic
    far field the grid is one period.
    """
    if c is None:
        c = calibrate_constant(s)
    n, h = sg.n_x, sg.h
    if far_field == "zero":
        xe = sg.x_min + h * np.arange(-n, 2 * n)
        return frac_lap_affine_tails(obs(xe), h, s, c, np.arange(n, 2 * n))
    return QuadratureOperator(s, h, "periodic", c).apply(obs(sg.x))


def _circulant(col: np.ndarray) -> np.ndarray:
    n = col.size
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return col[idx]


def quadrature_matrix(s: float, sg: SpaceGrid, far_field: str = "zero", c: float | None = None) -> np.ndarray:
    if far_field == "zero":
        return QuadratureOperator(s, sg.h, "zero", c).matrix(sg.n_x)
    e0 = np.zeros(sg.n_x)
    e0[0] = 1.0
    return _circulant(QuadratureOperator(s, sg.h, "periodic", c).apply(e0))


def spectral_matrix(s: float, sg: SpaceGrid, far_field: str = "zero") -> np.ndarray:
    if far_field == "zero":
        return spectral_toeplitz(s, sg.h, sg.n_x)
    xi = 2.0 * np.pi * np.fft.fftfreq(sg.n_x, d=sg.h)
    return _circulant(np.fft.ifft(np.abs(xi) ** (2.0 * s)).real)


def _edge_warning(v: np.ndarray, threshold: float, far_field: str) -> tuple:
    if far_field != "zero":
        return ()
    if v[0] > threshold or v[-1] > threshold:
        msg = "contact is not maintained at the truncation boundary; zero extension of u - phi is inexact"
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
        return (msg,)
    return ()


# LCP scheme ------------------------------------------------------------------

def _active_set_predict(M, b, active, max_iter=50):
    """Primal-dual active-set iteration for ``v >= 0, Mv - b >= 0, v (Mv - b) = 0``."""
    n = b.size
    v = np.zeros(n)
    for it in range(1, max_iter + 1):
        free = ~active
        v = np.zeros(n)
        if free.any():
            sub = M[np.ix_(free, free)]
            v[free] = cho_solve(cho_factor(sub, check_finite=False), b[free], check_finite=False)
        mult = M @ v - b
        new_active = (v - mult) < 0.0
        if np.array_equal(new_active, active):
            return np.maximum(v, 0.0), it
        active = new_active
    return np.maximum(v, 0.0), max_iter


def lcp_step(M, b, v0, cfg: SolverConfig, dt: float, step: int = 0, active=None):
    """One complementarity step; returns ``(v, sweeps, residual)``."""
    if cfg.active_set:
        if active is None:
            active = v0 <= 0.0
        guess, _ = _active_set_predict(M, b, active.copy())
    else:
        guess = v0.copy()
    v = np.ascontiguousarray(guess, dtype=float)
    sweeps, res, upd = psor_solve(M, b, v, cfg.relaxation, cfg.tol_c, cfg.max_iter, dt)
    if not (res <= cfg.tol_c and upd <= cfg.tol_c):
        raise SolverError(
            f"projected SOR stalled after {sweeps} sweeps (residual {res:.3e}, last update {upd:.3e})",
            step,
            snapshot={"v": v.copy(), "residual": res, "update": upd},
        )
    return v, int(sweeps), float(res)


def solve_lcp(obs: ObstacleSpec, p: FracParams, sg: SpaceGrid, tg: TimeGrid, cfg: SolverConfig | None = None) -> SolveResult:
    cfg = cfg or SolverConfig()
    _check_grids(sg, tg, cfg)
    t_start = time.perf_counter()
    s, dt, n = p.s, tg.dt, sg.n_x
    c = calibrate_constant(s)
    lam = obstacle_forcing(obs, s, sg, cfg.far_field, c)
    M = np.eye(n) + dt * quadrature_matrix(s, sg, cfg.far_field, c)
    v = np.zeros(n)
    V = np.empty((n, tg.n_t + 1))
    V[:, 0] = v
    res = np.empty(tg.n_t)
    its = np.empty(tg.n_t, dtype=int)
    for k in range(tg.n_t):
        b = v - dt * lam
        v, its[k], res[k] = lcp_step(M, b, v, cfg, dt, step=k + 1, active=v <= 0.0)
        V[:, k + 1] = v
    phi = obs(sg.x)
    warn = _edge_warning(v, max(10 * cfg.tol_c, sg.h ** (1 + s)), cfg.far_field)
    u = SpaceTimeField(V + phi[:, None], sg, tg)
    return SolveResult(u, "lcp", res, its, time.perf_counter() - t_start, lam, warn, {"phi": phi, "s": s})


# penalized scheme ------------------------------------------------------------

def _penalty(z, eps):
    # clip keeps exp finite if an iterate undershoots far below zero
    return np.exp(np.clip(-z / eps, -745.0, 700.0))


def _newton_step(M, rhs, z, dt, eps, cfg: SolverConfig, step: int):
    """Damped Newton for ``M z - dt exp(-z/eps) = rhs``.

    The system is the gradient of the convex energy
    ``1/2 z.Mz - rhs.z + dt eps sum exp(-z/eps)``; a backtracking line search
    on that energy makes the iteration globally convergent.
    """

    def energy(w):
        return 0.5 * w @ (M @ w) - rhs @ w + dt * eps * np.sum(_penalty(w, eps))

    E = energy(z)
    for it in range(1, cfg.newton_max_iter + 1):
        e = _penalty(z, eps)
        F = M @ z - dt * e - rhs
        J = M + np.diag(dt / eps * e)
        dz = -cho_solve(cho_factor(J, check_finite=False), F, check_finite=False)
        slope = F @ dz
        tau = 1.0
        while True:
            trial = z + tau * dz
            Et = energy(trial)
            if Et <= E + 1e-4 * tau * slope or tau < 1e-10:
                break
            tau *= 0.5
        z, E = trial, Et
        if np.max(np.abs(tau * dz)) <= cfg.newton_tol:
            F = M @ z - dt * _penalty(z, eps) - rhs
            return z, it, float(np.max(np.abs(F)) / dt)
    raise SolverError(f"Newton iteration did not converge in {cfg.newton_max_iter} iterations", step)


def solve_penalized(obs: ObstacleSpec, p: FracParams, sg: SpaceGrid, tg: TimeGrid, cfg: SolverConfig | None = None) -> SolveResult:
    cfg = cfg or SolverConfig()
    _check_grids(sg, tg, cfg)
    t_start = time.perf_counter()
    s, dt, n, eps = p.s, tg.dt, sg.n_x, cfg.eps_pen
    c = calibrate_constant(s)
    lam = obstacle_forcing(obs, s, sg, cfg.far_field, c)
    if cfg.pen_operator == "spectral":
        A = spectral_matrix(s, sg, cfg.far_field)
    else:
        A = quadrature_matrix(s, sg, cfg.far_field, c)
    M = np.eye(n) + dt * A
    M_chol = cho_factor(M, check_finite=False)
    v = np.full(n, eps)
    V = np.empty((n, tg.n_t + 1))
    V[:, 0] = v
    res = np.empty(tg.n_t)
    its = np.empty(tg.n_t, dtype=int)
    explicit_steps = 0
    for k in range(tg.n_t):
        e = _penalty(v, eps)
        if dt * np.max(e) / eps <= 1.0:
            rhs = v - dt * lam + dt * e
            v = cho_solve(M_chol, rhs, check_finite=False)
            its[k] = 0
            res[k] = 0.0
            explicit_steps += 1
        else:
            rhs = v - dt * lam
            v, its[k], res[k] = _newton_step(M, rhs, v.copy(), dt, eps, cfg, k + 1)
        V[:, k + 1] = v
    phi = obs(sg.x)
    warn = _edge_warning(v, max(10 * cfg.tol_c, sg.h ** (1 + s)) + 20 * eps, cfg.far_field)
    u = SpaceTimeField(V + phi[:, None], sg, tg)
    info = {"phi": phi, "s": s, "explicit_steps": explicit_steps, "operator": cfg.pen_operator}
    return SolveResult(u, "penalized", res, its, time.perf_counter() - t_start, lam, warn, info)


# diagnostics -----------------------------------------------------------------

@dataclass(frozen=True)
class ComplementarityResidual:
    r1: np.ndarray
    r2: np.ndarray
    r3: np.ndarray

    def violations(self, tol: float) -> np.ndarray:
        """Indices ``(i, k)`` where the complementarity system fails by more than ``tol``."""
        bad = (np.abs(self.r3) > tol) | (self.r2 < -tol)
        return np.argwhere(bad)


def residual_complementarity(u: SpaceTimeField, obs: ObstacleSpec, p: FracParams, operator: str = "quadrature", far_field: str = "zero") -> ComplementarityResidual:
    """``r1 = d_t u + (-Delta)^s u``, ``r2 = u - phi`` and ``min(r1, r2)``.

    Time derivatives are backward differences, so the arrays cover the time
    levels ``1 .. n_t``.
    """
    sg, tg = u.sg, u.tg
    if tg.n_t + 1 < 2:
        raise ValueError("need at least two time slices")
    phi = obs(sg.x)
    v = u.values - phi[:, None]
    lam = obstacle_forcing(obs, p.s, sg, far_field)
    if operator == "quadrature":
        A = quadrature_matrix(p.s, sg, far_field)
    elif operator == "spectral":
        A = spectral_matrix(p.s, sg, far_field)
    else:
        raise ValueError("operator must be 'quadrature' or 'spectral'")
    r1 = np.diff(v, axis=1) / tg.dt + A @ v[:, 1:] + lam[:, None]
    r2 = v[:, 1:]
    return ComplementarityResidual(r1, r2, np.minimum(r1, r2))


@dataclass(frozen=True)
class SemiconvexityAudit:
    bound: float
    minima: dict
    verdict: str

    @property
    def worst(self) -> float:
        return min(self.minima.values())


DEFAULT_STENCILS = ((1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (2, -1), (1, 2), (1, -2))


def semiconvexity_audit(u: SpaceTimeField, obs: ObstacleSpec, stencils=DEFAULT_STENCILS, skip_initial: int = 0) -> SemiconvexityAudit:
    """Smallest second difference of ``u`` along lattice directions.

    A stencil ``(p, q)`` is the direction of ``(p h, q dt)``; the second
    difference uses the step ``sqrt((p h)^2 + (q dt)^2)`` so all three points
    are grid nodes. The bound is ``M1 + M2 + M3 + M4`` of the obstacle.
    Verdicts: ``ok`` above ``-(bound + 0.1)``, ``flag`` when exceeded by less
    than a factor 10, ``fail`` otherwise.
    """
    U = u.values
    h, dt = u.sg.h, u.tg.dt
    bound = obs.semiconvexity_bound
    minima = {}
    nx, nt = U.shape
    for p_, q_ in stencils:
        if (p_, q_) == (0, 0):
            continue
        step2 = (p_ * h) ** 2 + (q_ * dt) ** 2
        ap, aq = abs(p_), abs(q_)
        j0 = max(aq, skip_initial + aq)
        if nx <= 2 * ap or nt <= j0 + aq:
            continue
        ic = slice(ap, nx - ap)
        jc = slice(j0, nt - aq)
        center = U[ic, jc]
        plus = U[ap + p_: nx - ap + p_, j0 + q_: nt - aq + q_]
        minus = U[ap - p_: nx - ap - p_, j0 - q_: nt - aq - q_]
        d2 = (plus - 2.0 * center + minus) / step2
        minima[(p_, q_)] = float(d2.min())
    worst = min(minima.values())
    limit = bound + 0.1
    if worst >= -limit:
        verdict = "ok"
    elif worst >= -10.0 * limit:
        verdict = "flag"
    else:
        verdict = "fail"
    return SemiconvexityAudit(bound, minima, verdict)
