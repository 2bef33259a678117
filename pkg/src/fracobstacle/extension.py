"""Poisson extension to the upper half plane and the weighted boundary flux.

The kernel ``C y^{2s} (x^2 + y^2)^{-(1+2s)/2}`` is normalized to unit mass.
Two ways of applying it:

* ``"direct"``: convolution with exact cell masses, values outside the
  sampled window taken as zero;
* ``"fft"``: the Fourier multiplier ``2^{1-s} / Gamma(s) (|xi| y)^s K_s(|xi| y)``
  on a periodic grid, exact for trigonometric polynomials.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, signal, special

from .closed_forms import HalfPlaneGrid


@dataclass(frozen=True)
class PoissonKernel:
    s: float
    C: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError("kernel exponent must lie in (0, 1)")
        # int (1 + t^2)^{-(1+2s)/2} dt = B(1/2, s)
        object.__setattr__(self, "C", 1.0 / special.beta(0.5, self.s))

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = float(y)
        return self.C * y ** (2 * self.s) * (x * x + y * y) ** (-(1.0 + 2.0 * self.s) / 2.0)

    def cdf(self, x, y):
        """Kernel mass on ``(-inf, x]`` at height ``y``."""
        t = np.asarray(x, dtype=float) / y
        with np.errstate(invalid="ignore"):
            w = np.where(np.isinf(t), 1.0, t * t / (1.0 + t * t))
        return 0.5 + 0.5 * np.sign(t) * special.betainc(0.5, self.s, w)

    def mass(self, y: float) -> float:
        """Total mass at height ``y`` by adaptive quadrature (should be 1)."""
        half, _ = integrate.quad(lambda x: self(x, y), 0.0, np.inf, limit=200, epsabs=1e-13, epsrel=1e-12)
        return 2.0 * half

    def cell_masses(self, h: float, y: float, J: int) -> np.ndarray:
        """Masses of the cells ``[(j - 1/2) h, (j + 1/2) h]`` for ``j = -J .. J``."""
        j = np.arange(-J, J + 1)
        return self.cdf((j + 0.5) * h, y) - self.cdf((j - 0.5) * h, y)

    def multiplier(self, xi, y: float) -> np.ndarray:
        """Fourier transform of the kernel at height ``y``."""
        t = np.abs(np.asarray(xi, dtype=float)) * y
        out = np.ones_like(t)
        nz = t > 0
        tn = t[nz]
        # K_s decays like exp(-t); kve keeps the product finite for large t
        out[nz] = 2.0 ** (1.0 - self.s) / special.gamma(self.s) * tn**self.s * special.kve(self.s, tn) * np.exp(-tn)
        return out


def poisson_extend(f, y: float, kernel: PoissonKernel, h: float, method: str = "direct") -> np.ndarray:
    """Values of the extension of ``f`` at height ``y`` on the same nodes.

    ``method="direct"`` treats ``f`` as zero outside the window;
    ``method="fft"`` treats ``f`` as one period.
    """
    if not y > 0:
        raise ValueError("extension height must be positive")
    f = np.asarray(f, dtype=float)
    n = f.size
    if method == "direct":
        masses = kernel.cell_masses(h, y, n - 1)
        return signal.fftconvolve(f, masses, mode="same")
    if method == "fft":
        xi = 2.0 * np.pi * np.fft.rfftfreq(n, d=h)
        return np.fft.irfft(np.fft.rfft(f) * kernel.multiplier(xi, y), n=n)
    raise ValueError("method must be 'direct' or 'fft'")


@dataclass(frozen=True)
class ExtensionField:
    values: np.ndarray
    grid: HalfPlaneGrid
    source: str
    method: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_x, self.grid.n_y):
            raise ValueError("extension values do not match the half-plane grid")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def trace(self) -> np.ndarray:
        return self.values[:, 0]


def extend_to_grid(f, grid: HalfPlaneGrid, kernel: PoissonKernel, method: str = "direct", source: str = "field") -> ExtensionField:
    """Fill every row of ``grid`` with the extension of the boundary field ``f``."""
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.n_x,):
        raise ValueError("boundary field does not match the grid's x nodes")
    vals = np.empty((grid.n_x, grid.n_y))
    vals[:, 0] = f
    for j, yj in enumerate(grid.y[1:], start=1):
        vals[:, j] = poisson_extend(f, yj, kernel, grid.hx, method)
    return ExtensionField(vals, grid, source, method)


def default_heights(h: float, s: float, count: int = 4) -> np.ndarray:
    """Dyadic heights below the resolution scale ``h^{1/(2s)}``."""
    return h ** (1.0 / (2.0 * s)) * 2.0 ** (-np.arange(count, dtype=float))


def _richardson_exponents(s: float, m: int) -> list[float]:
    # u(x, y) - f(x) = L y^{2s}/(2s) + O(y^2) + O(y^{2+2s}) + O(y^4) ...
    # so the raw estimate carries corrections y^{2-2s}, y^2, y^{4-2s}, y^4, ...
    exps = []
    k = 1
    while len(exps) < m:
        exps.extend([2.0 * k - 2.0 * s, 2.0 * k])
        k += 1
    return exps[:m]


@dataclass(frozen=True)
class FluxEstimate:
    value: np.ndarray
    raw: np.ndarray
    heights: np.ndarray


def weighted_normal_derivative(f, kernel: PoissonKernel, heights, h: float, method: str = "fft") -> FluxEstimate:
    """Estimate ``lim_{y -> 0} y^a d_y u`` from the extension at a few heights.

    Each height gives ``(1 - a) (u(x, y) - f(x)) / y^{1-a}``; these raw
    estimates are combined by Richardson extrapolation in the known
    correction exponents.
    """
    heights = np.asarray(heights, dtype=float)
    if heights.ndim != 1 or heights.size < 2:
        raise ValueError("need at least two heights")
    if np.any(np.diff(heights) >= 0):
        raise ValueError("heights must be strictly decreasing")
    if np.any(heights <= 0):
        raise ValueError("heights must be positive")
    f = np.asarray(f, dtype=float)
    s = kernel.s
    p = 2.0 * s  # = 1 - a
    raw = np.array([p * (poisson_extend(f, y, kernel, h, method) - f) / y**p for y in heights])
    exps = _richardson_exponents(s, heights.size - 1)
    V = np.column_stack([np.ones_like(heights)] + [heights**e for e in exps])
    coef = np.linalg.solve(V, raw)
    return FluxEstimate(coef[0], raw, heights)


@dataclass(frozen=True)
class FluxCalibration:
    sigma: int
    kappa: float
    residual: float

    @property
    def factor(self) -> float:
        return self.sigma * self.kappa


def calibrate_extension_sign_constant(kernel: PoissonKernel, fields, fractional_laplacians, heights, h: float, method: str = "fft") -> FluxCalibration:
    """Least-squares ``sigma * kappa`` with ``sigma kappa W(f) ~ (-Delta)^s f``.

    ``fields`` and ``fractional_laplacians`` are matching sequences of
    boundary samples and reference operator values. The residual is the
    relative L2 misfit over the whole test set.
    """
    W = [weighted_normal_derivative(f, kernel, heights, h, method).value for f in fields]
    S = [np.asarray(g, dtype=float) for g in fractional_laplacians]
    if len(W) == 0 or len(W) != len(S):
        raise ValueError("need matching, nonempty test sets")
    w = np.concatenate(W)
    g = np.concatenate(S)
    ww = float(w @ w)
    if ww == 0.0 or not np.any(g):
        raise ValueError("degenerate calibration: test fields produce no flux")
    factor = float(w @ g) / ww
    resid = float(np.linalg.norm(factor * w - g) / np.linalg.norm(g))
    return FluxCalibration(int(np.sign(factor)), abs(factor), resid)


def flux_constant_closed_form(s: float) -> float:
    """``sigma * kappa`` implied by the small-height expansion of the multiplier."""
    return -(4.0**s) * special.gamma(s) / (2.0 * special.gamma(1.0 - s))
