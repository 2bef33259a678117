"""Grids, parameters, parabolic cylinders and field containers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class FracParams:
    """Fractional exponent ``s`` and the extension weight ``a = 1 - 2s``."""

    s: float

    def __post_init__(self):
        if not (0.5 < self.s < 1.0):
            raise ValueError(f"exponent s must lie in (1/2, 1), got {self.s}")

    @property
    def a(self) -> float:
        return 1.0 - 2.0 * self.s


@dataclass(frozen=True)
class SpaceGrid:
    x_min: float
    x_max: float
    n_x: int

    def __post_init__(self):
        if self.n_x < 16:
            raise ValueError("n_x must be at least 16")
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be smaller than x_max")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_x - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_x)

    @classmethod
    def symmetric(cls, half_width: float, n_x: int) -> "SpaceGrid":
        return cls(-half_width, half_width, n_x)


@dataclass(frozen=True)
class TimeGrid:
    t_final: float
    n_t: int

    def __post_init__(self):
        if self.n_t < 2:
            raise ValueError("n_t must be at least 2")
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")

    @property
    def dt(self) -> float:
        return self.t_final / self.n_t

    @property
    def t(self) -> np.ndarray:
        # n_t steps -> n_t + 1 time levels including t = 0
        return np.linspace(0.0, self.t_final, self.n_t + 1)


@dataclass(frozen=True)
class SpaceTimeField:
    """Values of a function on ``sg.x`` x ``tg.t``, indexed ``values[i, j]``."""

    values: np.ndarray
    sg: SpaceGrid
    tg: TimeGrid

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.sg.n_x, self.tg.n_t + 1):
            raise ValueError(
                f"field shape {values.shape} does not match grid "
                f"({self.sg.n_x}, {self.tg.n_t + 1})"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def x(self) -> np.ndarray:
        return self.sg.x

    @property
    def t(self) -> np.ndarray:
        return self.tg.t

    def slice_at(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def with_values(self, values) -> "SpaceTimeField":
        return SpaceTimeField(values, self.sg, self.tg)


@dataclass(frozen=True)
class ParabolicCylinder:
    """``[x0 - r, x0 + r] x [t0 - r^{2s}, t0 + r^{2s}]``."""

    x0: float
    t0: float
    r: float
    s: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("cylinder radius must be positive")

    @property
    def half_time(self) -> float:
        return self.r ** (2.0 * self.s)

    @property
    def x_extent(self) -> tuple[float, float]:
        return self.x0 - self.r, self.x0 + self.r

    @property
    def t_extent(self) -> tuple[float, float]:
        return self.t0 - self.half_time, self.t0 + self.half_time


def _closed_range(nodes: np.ndarray, lo: float, hi: float, tol: float) -> slice:
    inside = np.nonzero((nodes >= lo - tol) & (nodes <= hi + tol))[0]
    if inside.size == 0:
        return slice(0, 0)
    return slice(int(inside[0]), int(inside[-1]) + 1)


def cylinder_indices(cyl: ParabolicCylinder, sg: SpaceGrid, tg: TimeGrid) -> tuple[slice, slice]:
    """Index slices of the grid nodes inside ``cyl``, clipped to the grid.

    Membership uses closed inequalities padded by ``min(h, dt) / 2``. An empty
    intersection gives empty slices.
    """
    tol = 0.5 * min(sg.h, tg.dt)
    xs = _closed_range(sg.x, *cyl.x_extent, tol)
    ts = _closed_range(tg.t, *cyl.t_extent, tol)
    if xs.stop == xs.start or ts.stop == ts.start:
        return slice(0, 0), slice(0, 0)
    return xs, ts


def sup_on_cylinder(f: SpaceTimeField, cyl: ParabolicCylinder) -> float:
    xs, ts = cylinder_indices(cyl, f.sg, f.tg)
    block = f.values[xs, ts]
    if block.size == 0:
        raise ValueError("cylinder outside domain")
    return float(np.max(np.abs(block)))


def central_difference(fun: Callable, x: np.ndarray, order: int, step: float) -> np.ndarray:
    """Centered finite-difference approximation of the ``order``-th derivative."""
    stencils = {
        1: ([-1, 1], [-0.5, 0.5]),
        2: ([-1, 0, 1], [1.0, -2.0, 1.0]),
        3: ([-2, -1, 1, 2], [-0.5, 1.0, -1.0, 0.5]),
        4: ([-2, -1, 0, 1, 2], [1.0, -4.0, 6.0, -4.0, 1.0]),
    }
    offsets, coeffs = stencils[order]
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for off, c in zip(offsets, coeffs):
        total += c * fun(x + off * step)
    return total / step**order


@dataclass(frozen=True)
class ObstacleSpec:
    """An obstacle with its first four derivatives and their sup-norms.

    ``derivatives`` holds callables for D^1..D^4; missing entries are filled
    by centered finite differences. ``bounds`` are estimated by sampling on
    ``window`` unless given explicitly.
    """

    phi: Callable[[np.ndarray], np.ndarray]
    derivatives: Sequence[Callable | None] = (None, None, None, None)
    window: tuple[float, float] = (-10.0, 10.0)
    bounds: tuple[float, float, float, float] | None = None
    fd_step: float = 1e-3
    name: str = "custom"
    _derivs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        derivs = list(self.derivatives) + [None] * (4 - len(self.derivatives))
        filled = []
        for k, d in enumerate(derivs[:4], start=1):
            if d is not None and not callable(d):
                raise TypeError(f"derivative {k} of the obstacle must be callable or None")
            if d is None:
                d = (lambda x, k=k: central_difference(self.phi, x, k, self.fd_step))
            filled.append(d)
        object.__setattr__(self, "_derivs", tuple(filled))
        if self.bounds is None:
            xs = np.linspace(self.window[0], self.window[1], 20001)
            est = tuple(float(np.max(np.abs(d(xs)))) for d in filled)
            object.__setattr__(self, "bounds", est)
        if not all(np.isfinite(b) for b in self.bounds):
            raise ValueError("obstacle derivative bounds must be finite")

    def __call__(self, x):
        return self.phi(np.asarray(x, dtype=float))

    def derivative(self, k: int, x) -> np.ndarray:
        if not 1 <= k <= 4:
            raise ValueError("derivative order must be 1..4")
        return self._derivs[k - 1](np.asarray(x, dtype=float))

    @property
    def semiconvexity_bound(self) -> float:
        """``M1 + M2 + M3 + M4`` (the semiconvexity constant with C = 1)."""
        return float(sum(self.bounds))
