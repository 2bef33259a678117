import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracobstacle.closed_forms import HalfPlaneGrid, eval_u0
from fracobstacle.extension import (
    ExtensionField, PoissonKernel, calibrate_extension_sign_constant, default_heights, extend_to_grid,
    flux_constant_closed_form, poisson_extend, weighted_normal_derivative,
)
from fracobstacle.fraclap import SpectralOperator

# mpmath, 30 digits: -4^s Gamma(s) / (2 Gamma(1 - s))
FLUX_FROZEN = {0.6: -0.77119461100066295, 0.75: -0.477988797486125, 0.9: -0.1955735671953174}


def periodic(n, period):
    return -period / 2 + period / n * np.arange(n)


@pytest.mark.parametrize("s", [0.3, 0.5, 0.75, 0.9])
@pytest.mark.parametrize("y", [0.01, 1.0, 30.0])
def test_kernel_unit_mass(s, y):
    K = PoissonKernel(s)
    assert K.mass(y) == pytest.approx(1.0, abs=1e-9)
    assert K.cdf(-np.inf, y) == 0.0 and K.cdf(np.inf, y) == pytest.approx(1.0)
    assert K.multiplier(np.array([0.0]), y)[0] == 1.0


def test_kernel_validation():
    for s in (0.0, 1.0):
        with pytest.raises(ValueError):
            PoissonKernel(s)


@pytest.mark.parametrize("method", ["direct", "fft"])
def test_constants_extend_to_constants(method):
    K = PoissonKernel(0.75)
    n, L = 2001, 2000.0
    f = np.ones(n)
    u = poisson_extend(f, 0.5, K, L / n, method)
    # zero extension leaks mass only near the window edges
    assert np.allclose(u[n // 4 : 3 * n // 4], 1.0, atol=1e-3 if method == "direct" else 1e-12)


@pytest.mark.parametrize("method", ["direct", "fft"])
def test_odd_data_stay_odd(method):
    K = PoissonKernel(0.75)
    x = np.linspace(-10, 10, 401)
    f = np.tanh(x) * np.exp(-0.1 * x * x)
    u = poisson_extend(f, 0.7, K, x[1] - x[0], method)
    assert np.allclose(u, -u[::-1], atol=1e-12)


@given(st.floats(0.01, 5.0), st.integers(0, 2**31 - 1))
def test_maximum_principle(y, seed):
    r = np.random.default_rng(seed)
    f = r.uniform(-1, 1, 256)
    u = poisson_extend(f, y, PoissonKernel(0.75), 0.05, "direct")
    assert np.max(u) <= np.max(f) + 1e-12
    assert np.min(u) >= np.min(f) - 1e-12


def test_semigroup_at_one_half():
    # at s = 1/2 the kernel is the Cauchy kernel and extension heights add
    K = PoissonKernel(0.5)
    x = periodic(512, 40.0)
    h = x[1] - x[0]
    f = np.exp(-x * x) * np.cos(3 * x)
    two_step = poisson_extend(poisson_extend(f, 0.3, K, h, "fft"), 0.4, K, h, "fft")
    assert np.allclose(two_step, poisson_extend(f, 0.7, K, h, "fft"), atol=1e-12)


def test_semigroup_fails_away_from_one_half():
    K = PoissonKernel(0.75)
    x = periodic(512, 40.0)
    h = x[1] - x[0]
    f = np.exp(-x * x)
    two_step = poisson_extend(poisson_extend(f, 0.3, K, h, "fft"), 0.4, K, h, "fft")
    assert np.max(np.abs(two_step - poisson_extend(f, 0.7, K, h, "fft"))) > 1e-3


def test_trace_ramp_matches_u0_up_to_growing_offset():
    # the extension integral of (z_+)^{1+s} diverges; on a window [-R, R] the
    # truncated extension differs from u0 by c(R) y^{2s} with c(R) ~ R^{1-s}
    s, h = 0.75, 0.01
    K = PoissonKernel(s)
    coef, spread = [], []
    for R in (10.0, 40.0):
        x = np.linspace(-R, R, int(round(2 * R / h)) + 1)
        f = np.maximum(x, 0) ** (1 + s)
        centre = np.abs(x) <= 0.5
        c = []
        for y in (0.25, 0.5):
            D = (poisson_extend(f, y, K, h) - eval_u0(x, y, s))[centre]
            c.append(D.mean() / y ** (2 * s))
            spread.append(np.ptp(D) / y ** (2 * s))
        assert c[0] == pytest.approx(c[1], rel=2e-3)
        coef.append(c[0])
    assert coef[1] / coef[0] == pytest.approx(4 ** (1 - s), rel=1e-2)
    assert spread[2] < spread[0] / 2 and spread[3] < spread[1] / 2


def test_extend_to_grid_rows():
    g = HalfPlaneGrid(-5, 5, 101, 1.0, 5, -0.5)
    f = np.exp(-g.x ** 2)
    ext = extend_to_grid(f, g, PoissonKernel(0.75))
    assert isinstance(ext, ExtensionField)
    assert np.array_equal(ext.trace, f)
    # the peak decays with height
    assert np.all(np.diff(ext.values[50]) < 0)
    with pytest.raises(ValueError):
        ext.values[0, 0] = 1.0
    with pytest.raises(ValueError):
        extend_to_grid(f[:-1], g, PoissonKernel(0.75))


def test_extension_argument_validation():
    K = PoissonKernel(0.75)
    with pytest.raises(ValueError):
        poisson_extend(np.zeros(8), 0.0, K, 0.1)
    with pytest.raises(ValueError):
        poisson_extend(np.zeros(8), 0.1, K, 0.1, "spline")


def test_heights_validation():
    K = PoissonKernel(0.75)
    f = np.zeros(64)
    for bad in ([0.1], [0.1, 0.2], [0.1, 0.0], [[0.2, 0.1]]):
        with pytest.raises(ValueError):
            weighted_normal_derivative(f, K, bad, 0.1)
    H = default_heights(0.01, 0.75, 4)
    assert np.all(np.diff(H) < 0) and H[0] == pytest.approx(0.01 ** (2 / 3))


def test_constant_has_zero_flux():
    K = PoissonKernel(0.75)
    est = weighted_normal_derivative(np.full(128, 2.0), K, default_heights(0.1, 0.75), 0.1)
    assert np.allclose(est.value, 0.0, atol=1e-12)


@pytest.mark.parametrize("s", [0.6, 0.75, 0.9])
def test_flux_of_cosine_is_proportional_to_symbol(s):
    n, L = 512, 2 * np.pi
    x = periodic(n, L)
    h = L / n
    K = PoissonKernel(s)
    H = default_heights(h, s, 5)
    w1 = weighted_normal_derivative(np.cos(x), K, H, h).value
    w2 = weighted_normal_derivative(np.cos(2 * x), K, H, h).value
    k1 = w1 / np.cos(x)
    k2 = w2 / (2 ** (2 * s) * np.cos(2 * x))
    m1 = np.abs(np.cos(x)) > 0.5
    m2 = np.abs(np.cos(2 * x)) > 0.5
    # the same factor converts both modes
    assert np.ptp(k1[m1]) < 1e-6
    assert np.median(k1[m1]) == pytest.approx(np.median(k2[m2]), rel=1e-3)
    assert 1 / np.median(k1[m1]) == pytest.approx(FLUX_FROZEN[s], rel=1e-3)


@pytest.mark.parametrize("s", sorted(FLUX_FROZEN))
def test_flux_constant_closed_form(s):
    assert flux_constant_closed_form(s) == pytest.approx(FLUX_FROZEN[s], rel=1e-13)


@pytest.mark.parametrize("s", [0.6, 0.75, 0.9])
def test_calibration_recovers_sign_and_constant(s):
    n, L = 1024, 20.0
    x = periodic(n, L)
    h = L / n
    K = PoissonKernel(s)
    op = SpectralOperator(s, L, n)
    fields = [np.cos(2 * np.pi * k * x / L) for k in (4, 8)]
    cal = calibrate_extension_sign_constant(K, fields, [op.apply(f) for f in fields], default_heights(h, s, 5), h)
    assert cal.sigma == -1
    assert cal.factor == pytest.approx(flux_constant_closed_form(s), rel=1e-6)
    assert cal.residual < 1e-6


def test_calibration_rejects_degenerate_sets():
    K = PoissonKernel(0.75)
    H = default_heights(0.1, 0.75)
    with pytest.raises(ValueError):
        calibrate_extension_sign_constant(K, [], [], H, 0.1)
    with pytest.raises(ValueError):
        calibrate_extension_sign_constant(K, [np.ones(64)], [np.zeros(64)], H, 0.1)


@pytest.mark.parametrize("s", [0.6, 0.75, 0.9])
def test_weighted_flux_of_u0(s):
    # y^a d_y u0(z, y) as y -> 0: -2s(1+s)/(1-s) 4^{-s} |z|^{1-s} for z < 0; for z > 0
    # it vanishes like -s(1+s)/(2(1-s)) z^{s-1} y^{2-2s} (second-order Taylor term in y)
    a = 1 - 2 * s
    flux = lambda z, y: y ** a * (eval_u0(z, y * 1.001, s) - eval_u0(z, y * 0.999, s)) / (0.002 * y)
    for z in (-2.0, -1.0):
        exact = -2 * s * (1 + s) / (1 - s) * 4 ** (-s) * abs(z) ** (1 - s)
        assert flux(z, 1e-5) == pytest.approx(exact, rel=1e-3)
    # larger height here: the y^2 term must stand well above rounding of u0 itself
    y = 1e-3
    for z in (0.5, 2.0):
        lead = -s * (1 + s) / (2 * (1 - s)) * z ** (s - 1)
        assert flux(z, y) / y ** (2 - 2 * s) == pytest.approx(lead, rel=1e-3)
