"""Smoothed option payoffs as C^4 obstacles.

The ramp ``y_+`` is mollified by the bump ``rho(z) ~ (1 - (z/delta)^2)^5`` on
``[-delta, delta]``; the result ``R_delta`` agrees with ``y_+`` for
``|y| >= delta`` and has four continuous derivatives (the fifth jumps).
Payoffs are composed with ``K - S`` or ``S - K`` either in the price
variable ``S = x`` or in the log price ``S = exp(x)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial

from .grid import ObstacleSpec


@lru_cache(maxsize=None)
def _ramp_polys():
    """Polynomials on ``[-1, 1]`` for the unit-width smoothed ramp and its derivatives."""
    bump = Polynomial([1.0, 0.0, -1.0]) ** 5
    bump = bump / (bump.integ(lbnd=-1)(1.0))
    cdf = bump.integ(lbnd=-1)
    first = Polynomial([0.0, 1.0]) * bump
    ramp = Polynomial([0.0, 1.0]) * cdf - first.integ(lbnd=-1)
    return (ramp, cdf, bump, bump.deriv(), bump.deriv(2))


def smoothed_ramp(y, delta: float, k: int = 0):
    """``k``-th derivative (``k <= 4``) of the mollified ramp ``R_delta(y)``."""
    if not delta > 0:
        raise ValueError("smoothing width must be positive")
    if k not in range(5):
        raise ValueError("derivatives are available up to order 4")
    y = np.asarray(y, dtype=float)
    eta = y / delta
    inside = np.abs(eta) < 1.0
    if k == 0:
        out = np.maximum(y, 0.0)
    elif k == 1:
        out = (y >= 0).astype(float)
    else:
        out = np.zeros_like(y)
    poly = _ramp_polys()[k]
    out = np.where(inside, delta ** (1 - k) * poly(np.clip(eta, -1.0, 1.0)), out)
    return out[()] if out.ndim == 0 else out


def _compose(outer, g, dg):
    """Derivatives 0..4 of ``R(g(x))`` by Faa di Bruno; ``dg`` holds ``g', g'', g''', g''''``."""
    R = [outer(k) for k in range(5)]
    g1, g2, g3, g4 = dg
    return [
        R[0],
        R[1] * g1,
        R[2] * g1**2 + R[1] * g2,
        R[3] * g1**3 + 3.0 * R[2] * g1 * g2 + R[1] * g3,
        R[4] * g1**4 + 6.0 * R[3] * g1**2 * g2 + R[2] * (3.0 * g2**2 + 4.0 * g1 * g3) + R[1] * g4,
    ]


@dataclass(frozen=True)
class OptionSpec:
    """Smoothed put ``(K - S)_+`` or call spread ``(S - K)_+ - (S - K_high)_+``.

    ``smoothing`` is the mollifier half-width in the solver coordinate; the
    harness sets it to four grid steps. ``coordinate`` is ``"log"`` for
    ``x = log S`` and ``"price"`` for ``x = S``.
    """

    payoff: str = "put"
    strike: float = 1.0
    smoothing: float = 0.05
    expiry: float = 1.0
    strike_high: float | None = None
    coordinate: str = "log"

    def __post_init__(self):
        if self.payoff not in ("put", "call-spread"):
            raise ValueError("payoff must be 'put' or 'call-spread'")
        if not self.strike > 0:
            raise ValueError("strike must be positive")
        if not self.smoothing > 0:
            raise ValueError("smoothing width must be positive")
        if not self.expiry > 0:
            raise ValueError("expiry must be positive")
        if self.coordinate not in ("log", "price"):
            raise ValueError("coordinate must be 'log' or 'price'")
        if self.payoff == "call-spread" and not (self.strike_high is not None and self.strike_high > self.strike):
            raise ValueError("call spread needs strike_high above strike")

    def raw_payoff(self, S):
        S = np.asarray(S, dtype=float)
        if self.payoff == "put":
            return np.maximum(self.strike - S, 0.0)
        return np.maximum(S - self.strike, 0.0) - np.maximum(S - self.strike_high, 0.0)

    def to_price(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(x) if self.coordinate == "log" else x

    def _legs(self):
        # (sign, strike, orientation): payoff = sum sign * R(orientation * (S - strike))
        if self.payoff == "put":
            return [(1.0, self.strike, -1.0)]
        return [(1.0, self.strike, 1.0), (-1.0, self.strike_high, 1.0)]

    def derivatives(self, x) -> list[np.ndarray]:
        """Smoothed payoff and its first four derivatives in the solver coordinate."""
        x = np.asarray(x, dtype=float)
        total = [np.zeros_like(x) for _ in range(5)]
        for sign, K, o in self._legs():
            if self.coordinate == "log":
                S = np.exp(np.minimum(x, 700.0))
                g = o * (S - K)
                dg = [o * S] * 4
            else:
                g = o * (x - K)
                dg = [np.full_like(x, o), np.zeros_like(x), np.zeros_like(x), np.zeros_like(x)]
            parts = _compose(lambda k, g=g: smoothed_ramp(g, self.smoothing, k), g, dg)
            for k in range(5):
                total[k] = total[k] + sign * parts[k]
        return total

    def obstacle(self, window: tuple[float, float]) -> ObstacleSpec:
        """Obstacle for the solver, with ``M_1 .. M_4`` measured on ``window``.

        Raises if the payoff is not numerically C^4 there (non-finite
        derivatives, for example from an overflowing exponential).
        """
        xs = np.linspace(window[0], window[1], 20001)
        # the kinks of each leg sit at the strikes; sample them densely too
        extra = []
        for _, K, _ in self._legs():
            c = np.log(K) if self.coordinate == "log" else K
            extra.append(np.linspace(c - 2 * self.smoothing, c + 2 * self.smoothing, 2001))
        xs = np.concatenate([xs] + extra)
        with np.errstate(over="ignore", invalid="ignore"):
            ders = self.derivatives(xs)
        bounds = tuple(float(np.max(np.abs(d))) for d in ders[1:])
        if not all(np.isfinite(b) for b in bounds):
            raise ValueError("smoothed payoff has non-finite derivatives on the window")
        derivs = [(lambda x, k=k: self.derivatives(x)[k]) for k in range(1, 5)]
        return ObstacleSpec(lambda x: self.derivatives(x)[0], derivatives=derivs, window=window,
                            bounds=bounds, name=f"smoothed {self.payoff} ({self.coordinate})")
