"""Explicit profiles and barriers of the extension problem, and a discrete
weighted divergence operator to check that they solve their equations.

Coordinates: ``x`` is the trace variable (``n = 1`` unless stated), ``y >= 0``
the extension variable, and ``a = 1 - 2s``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _weight(s: float) -> float:
    return 1.0 - 2.0 * s


def eval_u0(z, y, s: float):
    """Global homogeneous solution of degree ``1 + s``.

    ``2^{-s} / (1 - s) * (r + z)^s * (z - s r)`` with ``r = sqrt(z^2 + y^2)``;
    its trace on ``y = 0`` is ``(z_+)^{1+s}``.
    """
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValueError("y must be nonnegative")
    r = np.hypot(z, y)
    # r + z loses all digits for z << 0; use r + z = y^2 / (r - z) there
    with np.errstate(divide="ignore", invalid="ignore"):
        rpz = np.where(z >= 0, r + z, np.where(r - z > 0, y * y / (r - z), 0.0))
    out = 2.0 ** (-s) / (1.0 - s) * rpz**s * (z - s * r)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class ConeParams:
    """Direction ``e``, opening ``eta`` and degree shift ``gamma`` of the
    subsolution. In one dimension ``e`` is ``+1`` or ``-1``."""

    e: float | tuple = 1.0
    eta: float = 0.5
    gamma: float = 0.25

    def __post_init__(self):
        e = np.atleast_1d(np.asarray(self.e, dtype=float))
        if not np.isclose(np.linalg.norm(e), 1.0, rtol=0, atol=1e-12):
            raise ValueError("cone direction must be a unit vector")
        if not self.eta > 0:
            raise ValueError("cone opening eta must be positive")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    @property
    def direction(self) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.e, dtype=float))

    @property
    def dim(self) -> int:
        return self.direction.size


def eval_subsolution_Phi(x, cone: ConeParams, s: float):
    """``(e.x - eta/4 |x| (1 - (e.x)^2 / |x|^2))_+^{s + gamma}``, zero at the origin.

    For ``n = 1`` pass ``x`` as an array of scalars; the transverse term then
    vanishes and the profile is ``((e x)_+)^{s + gamma}``. For ``n > 1`` the
    last axis of ``x`` holds the coordinates.
    """
    if not 0 < cone.gamma < s:
        raise ValueError("gamma must lie in (0, s)")
    e = cone.direction
    x = np.asarray(x, dtype=float)
    if e.size == 1:
        ex = e[0] * x
        norm = np.abs(x)
    else:
        if x.shape[-1] != e.size:
            raise ValueError("point dimension does not match cone direction")
        ex = x @ e
        norm = np.linalg.norm(x, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        transverse = np.where(norm > 0, 1.0 - ex**2 / np.where(norm > 0, norm, 1.0) ** 2, 0.0)
    arg = ex - 0.25 * cone.eta * norm * transverse
    out = np.maximum(arg, 0.0) ** (s + cone.gamma)
    return out[()] if out.ndim == 0 else out


def _norm_sq(x, n: int):
    x = np.asarray(x, dtype=float)
    if n == 1:
        return x * x
    if x.shape[-1] != n:
        raise ValueError(f"expected last axis of length {n}")
    return np.sum(x * x, axis=-1)


def eval_barrier_bR(x, y, R: float, n: int, a: float):
    """``-(n+1)/(1-a) y^{1+a} - (|x|^2 - n/(1-a) y^2) / R^{1-a}``.

    Annihilated by ``div(y^{-a} grad)``.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    y = np.asarray(y, dtype=float)
    out = -(n + 1.0) / (1.0 - a) * y ** (1.0 + a) - (_norm_sq(x, n) - n / (1.0 - a) * y**2) / R ** (1.0 - a)
    return out[()] if np.ndim(out) == 0 else out


def eval_polynomial_P(x, y, t, x0, t0, n: int, s: float):
    """``|x - x0|^2 + 2s (t0 - t) - n/(a+1) y^2 - y^{2s}``.

    Annihilated by ``div(y^a grad)``, and ``y^a d_y P -> -2s = d_t P`` as ``y -> 0``.
    """
    a = _weight(s)
    y = np.asarray(y, dtype=float)
    dx = np.asarray(x, dtype=float) - np.asarray(x0, dtype=float)
    out = _norm_sq(dx, n) + 2.0 * s * (t0 - np.asarray(t, dtype=float)) - n / (a + 1.0) * y**2 - y ** (2.0 * s)
    return out[()] if np.ndim(out) == 0 else out


def constant_cna(n: int, a: float, s: float) -> float:
    """``min(1/8 sqrt(s (1+a) / n), (sqrt(s) / 8)^{1/s})``."""
    if not np.isclose(a, _weight(s), rtol=0, atol=1e-12):
        raise ValueError(f"weight a={a} is inconsistent with s={s}")
    if n < 1:
        raise ValueError("dimension must be positive")
    first = 0.125 * np.sqrt(s * (1.0 + a) / n)
    second = (np.sqrt(s) / 8.0) ** (1.0 / s)
    return float(min(first, second))


@dataclass(frozen=True)
class HalfPlaneGrid:
    """Tensor grid on ``[x_min, x_max] x [0, y_max]`` including the row ``y = 0``."""

    x_min: float
    x_max: float
    n_x: int
    y_max: float
    n_y: int
    a: float

    def __post_init__(self):
        if not self.y_max > 0:
            raise ValueError("y_max must be positive")
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be smaller than x_max")
        if self.n_x < 3 or self.n_y < 3:
            raise ValueError("half-plane grid needs at least 3 nodes per direction")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_x)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(0.0, self.y_max, self.n_y)

    @property
    def hx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_x - 1)

    @property
    def hy(self) -> float:
        return self.y_max / (self.n_y - 1)

    def mesh(self):
        """``(X, Y)`` arrays of shape ``(n_x, n_y)``."""
        return np.meshgrid(self.x, self.y, indexing="ij")

    def sample(self, fun) -> np.ndarray:
        X, Y = self.mesh()
        return np.asarray(fun(X, Y), dtype=float)


def apply_weighted_operator(f: np.ndarray, grid: HalfPlaneGrid, b: float, rows=None) -> np.ndarray:
    """Conservative five-point discretization of ``div(y^b grad f)``.

    ``f`` has shape ``(n_x, n_y)``. The result covers interior columns
    ``1 .. n_x-2`` and the requested ``rows`` (default: all interior rows),
    with the weight evaluated at the half nodes ``y_{j +- 1/2}``.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.n_x, grid.n_y):
        raise ValueError(f"field shape {f.shape} does not match grid ({grid.n_x}, {grid.n_y})")
    if rows is None:
        rows = np.arange(1, grid.n_y - 1)
    rows = np.atleast_1d(np.asarray(rows, dtype=int))
    if np.any(rows <= 0):
        raise ValueError("weighted operator is undefined on the y = 0 row")
    if np.any(rows >= grid.n_y - 1):
        raise ValueError("row index must be interior")
    hx, hy = grid.hx, grid.hy
    yj = rows * hy
    up = (yj + 0.5 * hy) ** b
    dn = (yj - 0.5 * hy) ** b
    c = f[1:-1]
    fyy = (up * (c[:, rows + 1] - c[:, rows]) - dn * (c[:, rows] - c[:, rows - 1])) / hy**2
    fxx = yj**b * (f[2:, rows] - 2.0 * f[1:-1, rows] + f[:-2, rows]) / hx**2
    return fxx + fyy
