"""Projected SOR kernel for dense symmetric M-matrices."""

import numpy as np
from numba import njit


@njit(cache=True)
def psor_solve(M, b, v, omega, tol, max_sweeps, dt):
    """Solve ``v >= 0, M v - b >= 0, v . (M v - b) = 0`` in place.

    ``M v`` is carried along and updated column-wise, so nodes that stay on
    the constraint cost O(1). Iteration stops once both the largest update
    of a sweep and the scaled complementarity residual
    ``max |min(v, (M v - b) / dt)|`` are below ``tol``.
    Returns ``(sweeps, residual, last_update)``.
    """
    n = b.shape[0]
    y = M @ v
    diag = np.empty(n)
    for i in range(n):
        diag[i] = M[i, i]
    res = np.inf
    upd = np.inf
    for sweep in range(1, max_sweeps + 1):
        upd = 0.0
        for i in range(n):
            r = b[i] - y[i]
            new = v[i] + omega * r / diag[i]
            if new < 0.0:
                new = 0.0
            delta = new - v[i]
            if delta != 0.0:
                v[i] = new
                for k in range(n):
                    y[k] += M[k, i] * delta
                if abs(delta) > upd:
                    upd = abs(delta)
        res = 0.0
        for i in range(n):
            r1 = (y[i] - b[i]) / dt
            m = min(v[i], r1)
            if abs(m) > res:
                res = abs(m)
        if res <= tol and upd <= tol:
            return sweep, res, upd
    return max_sweeps, res, upd
