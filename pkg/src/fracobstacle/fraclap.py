"""Discrete fractional Laplacian in one dimension.

Two independent discretizations:

* :class:`SpectralOperator` multiplies Fourier coefficients by ``|xi|^{2s}``
  on a periodic grid.
* :class:`QuadratureOperator` evaluates the singular integral

      c_{1,s} * int_0^inf (2 f(x) - f(x+z) - f(x-z)) z^{-1-2s} dz

  by product integration: on ``[0, h]`` the symmetric difference is modelled
  as ``g(h) z^2 / h^2``, on every other cell by cubic Lagrange interpolation
  through the neighbouring nodes, and beyond the sampled range by an affine
  model integrated in closed form. The local error is ``O(h^{4-2s})``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, special
from scipy.linalg import toeplitz

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(12)


def c1s_closed_form(s: float) -> float:
    """``4^s Gamma(1/2 + s) / (sqrt(pi) |Gamma(-s)|)``."""
    return 4.0**s * special.gamma(0.5 + s) / (np.sqrt(np.pi) * abs(special.gamma(-s)))


def cosine_mode_integral(s: float, k: float = 1.0) -> float:
    """``int_0^inf 2 (1 - cos(k z)) z^{-1-2s} dz`` by direct quadrature.

    The integral is split at ``z = 1/k``: the head is summed from the Taylor
    series of the cosine, the oscillatory tail uses QUADPACK's Fourier rule.
    Nothing here uses the homogeneity ``k^{2s}``.
    """
    k = float(abs(k))
    b = 1.0 / k
    head = 0.0
    m = 1
    while True:
        # 2 (-1)^{m+1} k^{2m} / (2m)! * b^{2m-2s} / (2m - 2s)
        term = 2.0 * (-1) ** (m + 1) * k ** (2 * m) / special.factorial(2 * m) * b ** (2 * m - 2 * s) / (2 * m - 2 * s)
        head += term
        if abs(term) < 1e-18 * abs(head):
            break
        m += 1
    tail_const = 2.0 * b ** (-2.0 * s) / (2.0 * s)
    osc, _ = integrate.quad(
        lambda z: z ** (-1.0 - 2.0 * s), b, np.inf, weight="cos", wvar=k, limlst=200
    )
    return head + tail_const - 2.0 * osc


def calibrate_constant(s: float, k: float = 1.0) -> float:
    """Normalization making the singular integral reproduce ``|k|^{2s} cos(kx)``."""
    if not (0.5 < s < 1.0):
        raise ValueError("calibration requires 1/2 < s < 1")
    return abs(k) ** (2.0 * s) / cosine_mode_integral(s, k)


@lru_cache(maxsize=64)
def _unit_weights(s: float, J: int) -> tuple[np.ndarray, float, float]:
    """Product-integration weights for unit spacing.

    Returns ``(w, T0, T1)`` where ``w[j-1]`` multiplies the symmetric
    difference ``g_j`` for ``j = 1 .. J+3`` (the last three are partial and
    pair with the affine far-field model), and ``T0``, ``T1`` are the
    zeroth and first kernel moments beyond ``z = J + 2``.
    """
    p = 1.0 + 2.0 * s
    w = np.zeros(J + 4)  # index = node number, w[0] unused (g_0 = 0)
    w[1] += 1.0 / (2.0 - 2.0 * s)
    m = np.arange(1, J + 2)
    # Gauss points on each cell [m, m+1]
    zeta = 0.5 * (_GAUSS_NODES[None, :] + 1.0)  # in [0, 1]
    z = m[:, None] + zeta
    kern = z ** (-p) * 0.5 * _GAUSS_WEIGHTS[None, :]
    # cubic Lagrange basis on nodes m-1, m, m+1, m+2 in the local coordinate zeta
    basis = (
        -zeta * (zeta - 1.0) * (zeta - 2.0) / 6.0,
        (zeta + 1.0) * (zeta - 1.0) * (zeta - 2.0) / 2.0,
        -(zeta + 1.0) * zeta * (zeta - 2.0) / 2.0,
        (zeta + 1.0) * zeta * (zeta - 1.0) / 6.0,
    )
    for off, L in zip((-1, 0, 1, 2), basis):
        contrib = np.sum(kern * L, axis=1)
        np.add.at(w, m + off, contrib)
    z_tail = J + 2.0
    T0 = z_tail ** (-2.0 * s) / (2.0 * s)
    T1 = z_tail ** (1.0 - 2.0 * s) / (2.0 * s - 1.0)
    return w[1:], T0, T1


@dataclass(frozen=True)
class SpectralOperator:
    """``|xi|^{2s}`` Fourier multiplier on a periodic grid of ``n`` points."""

    s: float
    period: float
    n: int
    multiplier: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        xi = 2.0 * np.pi * np.fft.rfftfreq(self.n, d=self.period / self.n)
        mult = np.abs(xi) ** (2.0 * self.s)
        mult[0] = 0.0
        mult.setflags(write=False)
        object.__setattr__(self, "multiplier", mult)

    @property
    def h(self) -> float:
        return self.period / self.n

    def apply(self, f: np.ndarray) -> np.ndarray:
        return frac_lap_spectral(f, self)


def frac_lap_spectral(f: np.ndarray, op: SpectralOperator) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (op.n,):
        raise ValueError(f"field of shape {f.shape} does not match spectral grid of {op.n} points")
    return np.fft.irfft(np.fft.rfft(f) * op.multiplier, n=op.n)


def spectral_toeplitz(s: float, h: float, n: int, pad: int = 4) -> np.ndarray:
    """Spectral operator restricted to ``n`` nodes of a zero-padded periodic grid.

    The result is the ``n x n`` principal block of the circulant matrix of
    ``|xi|^{2s}`` on ``pad * n`` points, i.e. the spectral operator acting on
    functions that vanish outside the block.
    """
    N = pad * n
    xi = 2.0 * np.pi * np.fft.fftfreq(N, d=h)
    kernel = np.fft.ifft(np.abs(xi) ** (2.0 * s)).real
    return toeplitz(kernel[:n])


@dataclass(frozen=True)
class QuadratureOperator:
    """Singular-integral fractional Laplacian on a uniform grid of spacing ``h``.

    ``extension`` declares the values outside the sampled nodes: ``"zero"``
    (zero extension) or ``"periodic"`` (the samples are one period).
    ``rho`` is the near-field radius handled by the quadratic model.
    """

    s: float
    h: float
    extension: str = "zero"
    c: float | None = None

    def __post_init__(self):
        if self.extension not in ("zero", "periodic"):
            raise ValueError("extension must be 'zero' or 'periodic'")
        if self.c is None:
            object.__setattr__(self, "c", calibrate_constant(self.s))
        if not self.c > 0:
            raise ValueError("normalization must be positive")

    @property
    def rho(self) -> float:
        return self.h

    def weights(self, J: int):
        w, T0, T1 = _unit_weights(float(self.s), int(J))
        scale = self.h ** (-2.0 * self.s)
        return w * scale, T0 * scale, T1 * scale * self.h

    def matrix(self, n: int) -> np.ndarray:
        """Dense matrix of the zero-extension operator on ``n`` nodes."""
        if self.extension != "zero":
            raise ValueError("matrix assembly is defined for the zero extension")
        w, T0, _ = self.weights(n - 1)
        diag = 2.0 * (np.sum(w) + T0)
        col = np.concatenate(([diag], -w[: n - 1]))
        return self.c * toeplitz(col)

    def apply(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if self.extension == "zero":
            return self.matrix(f.size) @ f
        return self._apply_periodic(f)

    def _apply_periodic(self, f: np.ndarray, images: int = 16) -> np.ndarray:
        n = f.size
        J = images * n
        w, T0, _ = self.weights(J)
        folded = np.zeros(n)
        np.add.at(folded, np.arange(1, J + 4) % n, w)
        # circulant symbol of sum_d folded_d (2 f_i - f_{i+d} - f_{i-d}) + 2 T0 (f_i - mean)
        symbol = 2.0 * (np.sum(folded) - np.fft.rfft(folded).real) + 2.0 * T0
        symbol[0] = 0.0
        return self.c * np.fft.irfft(np.fft.rfft(f) * symbol, n=n)


def frac_lap_quadrature(f: np.ndarray, op: QuadratureOperator, i: int) -> float:
    """Quadrature value of the fractional Laplacian of ``f`` at node ``i``."""
    f = np.asarray(f, dtype=float)
    n = f.size
    if not 0 < i < n - 1:
        raise ValueError("needs interior node")
    if op.extension == "periodic":
        return float(op._apply_periodic(f)[i])
    J = n - 1
    w, T0, _ = op.weights(J)
    j = np.arange(1, J + 4)
    right = i + j
    left = i - j
    fr = np.where(right < n, f[np.minimum(right, n - 1)], 0.0)
    fl = np.where(left >= 0, f[np.maximum(left, 0)], 0.0)
    g = 2.0 * f[i] - fr - fl
    return float(op.c * (np.dot(w, g) + 2.0 * f[i] * T0))


def frac_lap_affine_tails(values: np.ndarray, h: float, s: float, c: float, nodes: np.ndarray) -> np.ndarray:
    """Fractional Laplacian at ``nodes`` of a function sampled on an extended
    grid and continued affinely beyond both ends.

    ``values`` are samples on a uniform grid with spacing ``h``; ``nodes`` are
    indices into it. The affine continuation uses the last two samples at
    each end, so asymptotically affine functions are handled exactly in the
    far field.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    nodes = np.asarray(nodes)
    slope_r = (values[-1] - values[-2]) / h
    slope_l = (values[1] - values[0]) / h
    J = int(max(np.max(n - 1 - nodes), np.max(nodes))) + 1
    w, T0, T1 = _unit_weights(float(s), J)
    scale = h ** (-2.0 * s)
    j = np.arange(1, J + 4)
    out = np.empty(nodes.size)
    for k, i in enumerate(nodes):
        right = i + j
        left = i - j
        fr = np.where(right <= n - 1, values[np.minimum(right, n - 1)], values[-1] + slope_r * (right - (n - 1)) * h)
        fl = np.where(left >= 0, values[np.maximum(left, 0)], values[0] + slope_l * left * h)
        g = 2.0 * values[i] - fr - fl
        # beyond the last node g(z) = g0 + g1 z with z measured from node i
        g0 = 2.0 * values[i] - (values[-1] - slope_r * (n - 1 - i) * h) - (values[0] + slope_l * i * h)
        g1 = -(slope_r - slope_l)
        out[k] = np.dot(w, g) + g0 * T0 + g1 * T1 * h
    return c * scale * out
