"""Closed-form profiles and the extension flux, checked numerically.

Run: python3 demos/closed_forms_tour.py
"""

import numpy as np

from fracobstacle import closed_forms as cf
from fracobstacle.extension import (
    PoissonKernel, calibrate_extension_sign_constant, default_heights, flux_constant_closed_form,
    weighted_normal_derivative,
)
from fracobstacle.fraclap import SpectralOperator

s = 0.75
a = 1 - 2 * s

# the homogeneous solution restricts to (z_+)^{1+s} on the boundary
z = np.linspace(-3, 3, 7)
print("u0(z, 0)       ", np.round(cf.eval_u0(z, 0.0, s), 6))
print("(z_+)^(1+s)    ", np.round(np.maximum(z, 0) ** (1 + s), 6))

# it is annihilated by div(y^a grad .): the five-point residual falls like h^2
for n in (32, 64, 128, 256):
    g = cf.HalfPlaneGrid(-1.0, 1.0, n + 1, 1.0, n + 1, a)
    rows = np.arange(n // 4, 3 * n // 4 + 1)
    R = cf.apply_weighted_operator(g.sample(lambda X, Y: cf.eval_u0(X, Y, s)), g, a, rows)
    print(f"n = {n:4d}   max weighted residual {np.max(np.abs(R)):.3e}")

# weighted normal derivative of the Poisson extension versus the spectral operator
n, L = 1024, 20.0
x = -L / 2 + L / n * np.arange(n)
h = L / n
K, op = PoissonKernel(s), SpectralOperator(s, L, n)
H = default_heights(h, s, 5)
probes = [np.cos(2 * np.pi * k * x / L) for k in (4, 8)]
cal = calibrate_extension_sign_constant(K, probes, [op.apply(f) for f in probes], H, h)
print(f"calibrated sign {cal.sigma:+d}, factor {cal.factor:.10f}, closed form {flux_constant_closed_form(s):.10f}")
f = np.exp(-x * x)
est = cal.factor * weighted_normal_derivative(f, K, H, h).value
ref = op.apply(f)
print(f"gaussian: relative sup error of the flux {np.max(np.abs(est - ref)) / np.max(np.abs(ref)):.2e}")
