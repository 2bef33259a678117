import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from fracobstacle import closed_forms as cf
from fracobstacle.fraclap import c1s_closed_form

# mpmath, 30 digits: 2^{-s}/(1-s) (r+z)^s (z - s r) at z=0, y=1, s=3/4
U0_AT_01 = -1.7838106725040816


def test_u0_examples():
    assert cf.eval_u0(1.0, 0.0, 0.75) == pytest.approx(1.0, abs=1e-14)
    assert cf.eval_u0(-1.0, 0.0, 0.75) == 0.0
    assert cf.eval_u0(0.0, 1.0, 0.75) == pytest.approx(U0_AT_01, rel=1e-13)


@pytest.mark.parametrize("s", [0.6, 0.75, 0.9])
def test_u0_trace_identity(s):
    z = np.linspace(-5, 5, 10_000)
    assert np.max(np.abs(cf.eval_u0(z, 0.0, s) - np.maximum(z, 0) ** (1 + s))) <= 1e-12


def test_u0_rejects_negative_height():
    with pytest.raises(ValueError):
        cf.eval_u0(0.0, -0.1, 0.75)


@given(st.floats(-10, 10), st.floats(0, 10), st.floats(0.1, 5), st.floats(0.51, 0.99))
def test_u0_homogeneity(z, y, lam, s):
    lhs = cf.eval_u0(lam * z, lam * y, s)
    rhs = lam ** (1 + s) * cf.eval_u0(z, y, s)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)


def test_u0_sign_structure():
    # positive near the positive axis, negative near the negative axis and along y
    s = 0.75
    assert cf.eval_u0(1.0, 0.1, s) > 0
    assert cf.eval_u0(-1.0, 0.1, s) < 0
    assert cf.eval_u0(0.0, 2.0, s) < 0
    # the stable branch for z << 0 agrees with the naive formula where both are accurate
    z, y = -3.0, 1.5
    r = np.hypot(z, y)
    naive = 2 ** -s / (1 - s) * (r + z) ** s * (z - s * r)
    assert cf.eval_u0(z, y, s) == pytest.approx(naive, rel=1e-10)


def test_subsolution_examples():
    cone = cf.ConeParams(1.0, 0.5, 0.25)
    assert cf.eval_subsolution_Phi(0.0, cone, 0.75) == 0.0
    assert cf.eval_subsolution_Phi(-1.0, cone, 0.75) == 0.0
    assert cf.eval_subsolution_Phi(2.0, cone, 0.75) == pytest.approx(2.0)
    left = cf.ConeParams(-1.0, 0.5, 0.25)
    assert cf.eval_subsolution_Phi(-2.0, left, 0.75) == pytest.approx(2.0)
    # in two dimensions the transverse term shrinks the support to a cone
    cone2 = cf.ConeParams((1.0, 0.0), 1.0, 0.25)
    on_axis = cf.eval_subsolution_Phi(np.array([1.0, 0.0]), cone2, 0.75)
    off_axis = cf.eval_subsolution_Phi(np.array([1.0, 1.0]), cone2, 0.75)
    assert on_axis == pytest.approx(1.0)
    assert 0 < off_axis < cf.eval_subsolution_Phi(np.array([1.0, 0.0]) * np.sqrt(2), cone2, 0.75)
    assert cf.eval_subsolution_Phi(np.array([0.0, 1.0]), cone2, 0.75) == 0.0


@given(st.floats(0.01, 3), st.floats(0.1, 4), st.floats(0.05, 0.7))
def test_subsolution_homogeneity(x, lam, frac):
    s = 0.75
    cone = cf.ConeParams(1.0, 0.5, frac * s)
    lhs = cf.eval_subsolution_Phi(lam * x, cone, s)
    assert lhs == pytest.approx(lam ** (s + cone.gamma) * cf.eval_subsolution_Phi(x, cone, s), rel=1e-12)


def test_subsolution_validation():
    with pytest.raises(ValueError):
        cf.ConeParams((1.0, 1.0))
    with pytest.raises(ValueError):
        cf.ConeParams(1.0, eta=0.0)
    with pytest.raises(ValueError):
        cf.eval_subsolution_Phi(1.0, cf.ConeParams(1.0, 0.5, 0.8), 0.75)
    with pytest.raises(ValueError):
        cf.eval_subsolution_Phi(np.ones(3), cf.ConeParams((1.0, 0.0)), 0.75)


@pytest.mark.parametrize("gamma", [0.1, 0.375, 0.6])
def test_subsolution_has_nonpositive_fractional_laplacian(gamma):
    # principal-value integral at x = 1 by adaptive quadrature, split at the kink z = 1
    s = 0.75
    cone = cf.ConeParams(1.0, 0.5, gamma)
    f = lambda x: cf.eval_subsolution_Phi(x, cone, s)
    g = lambda z: (2 * f(1.0) - f(1.0 + z) - f(1.0 - z)) * z ** (-1 - 2 * s)
    val = sum(integrate.quad(g, a, b, limit=400)[0] for a, b in [(0, 0.5), (0.5, 1), (1, 2), (2, 20), (20, np.inf)])
    assert c1s_closed_form(s) * val < 0


def test_barrier_examples():
    a = -0.5
    assert cf.eval_barrier_bR(0.0, 0.0, 1.0, 1, a) == 0.0
    for R in (0.5, 1.0, 3.0):
        assert cf.eval_barrier_bR(R, R, R, 1, a) <= -R ** (1 + a)
    assert cf.eval_barrier_bR(np.array([0.3, 0.4]), 0.2, 1.0, 2, a) < 0
    with pytest.raises(ValueError):
        cf.eval_barrier_bR(0.0, 0.0, 0.0, 1, a)


def test_polynomial_examples():
    s = 0.75
    assert cf.eval_polynomial_P(0.0, 0.0, 0.5, 0.0, 0.5, 1, s) == 0.0
    assert cf.eval_polynomial_P(1.0, 0.0, 0.5, 0.0, 0.5, 1, s) == pytest.approx(1.0)
    t = np.linspace(0, 1, 5)
    P = cf.eval_polynomial_P(0.3, 0.0, t, 0.0, 0.5, 1, s)
    assert np.allclose(np.diff(P) / np.diff(t), -2 * s)


@pytest.mark.parametrize("s", [0.6, 0.75, 0.9])
def test_polynomial_flux_matches_time_derivative(s):
    a = 1 - 2 * s
    y = np.array([1e-2, 1e-3, 1e-4])
    dy = 1e-3 * y
    P = lambda yy: cf.eval_polynomial_P(0.2, yy, 0.0, 0.0, 0.0, 1, s)
    flux = y ** a * (P(y + dy) - P(y - dy)) / (2 * dy)
    # the y^2 term contributes -2/(1+a) y^{1+a}, which vanishes in the limit
    assert np.allclose(flux + 2 / (1 + a) * y ** (1 + a), -2 * s, rtol=1e-4)
    assert np.all(np.diff(np.abs(flux + 2 * s)) < 0)


def test_constant_cna_example():
    # first branch 1/8 sqrt(0.375) = 0.07655, second (sqrt(0.75)/8)^{4/3} = 0.05159
    assert cf.constant_cna(1, -0.5, 0.75) == pytest.approx(0.0515926, abs=1e-7)


@given(st.integers(1, 50), st.floats(0.51, 0.99))
def test_constant_cna_bounds(n, s):
    c = cf.constant_cna(n, 1 - 2 * s, s)
    assert 0 < c <= 0.125
    assert c <= cf.constant_cna(1, 1 - 2 * s, s)


def test_constant_cna_large_dimension_and_validation():
    assert cf.constant_cna(10**8, -0.5, 0.75) < 1e-5
    with pytest.raises(ValueError):
        cf.constant_cna(1, 0.0, 0.75)
    with pytest.raises(ValueError):
        cf.constant_cna(0, -0.5, 0.75)


def residual_sequence(fun, b, sizes):
    errs = []
    for n in sizes:
        g = cf.HalfPlaneGrid(-1.0, 1.0, n + 1, 1.0, n + 1, 1 - 2 * 0.75)
        rows = np.arange(n // 4, 3 * n // 4 + 1)
        R = cf.apply_weighted_operator(g.sample(fun), g, b, rows)
        errs.append(np.max(np.abs(R[np.abs(g.x[1:-1]) <= 0.75])))
    return np.array(errs)


@pytest.mark.parametrize("name", ["u0", "P", "bR"])
def test_weighted_operator_second_order(name):
    s = 0.75
    a = 1 - 2 * s
    fun, b = {
        "u0": (lambda X, Y: cf.eval_u0(X, Y, s), a),
        "P": (lambda X, Y: cf.eval_polynomial_P(X, Y, 0.0, 0.0, 0.5, 1, s), a),
        "bR": (lambda X, Y: cf.eval_barrier_bR(X, Y, 2.0, 1, a), -a),
    }[name]
    errs = residual_sequence(fun, b, (32, 64, 128))
    ratios = errs[:-1] / errs[1:]
    assert np.all((3.2 <= ratios) & (ratios <= 4.8)), ratios


def test_weighted_operator_constant_and_rows():
    g = cf.HalfPlaneGrid(-1, 1, 17, 1, 17, -0.5)
    assert np.allclose(cf.apply_weighted_operator(np.full((17, 17), 2.5), g, -0.5), 0.0)
    with pytest.raises(ValueError, match="y = 0"):
        cf.apply_weighted_operator(np.zeros((17, 17)), g, -0.5, rows=[0])
    with pytest.raises(ValueError):
        cf.apply_weighted_operator(np.zeros((17, 17)), g, -0.5, rows=[16])
    with pytest.raises(ValueError):
        cf.apply_weighted_operator(np.zeros((16, 17)), g, -0.5)


def test_half_plane_grid_validation():
    with pytest.raises(ValueError):
        cf.HalfPlaneGrid(-1, 1, 17, 0.0, 17, -0.5)
    with pytest.raises(ValueError):
        cf.HalfPlaneGrid(1, -1, 17, 1.0, 17, -0.5)
    g = cf.HalfPlaneGrid(-1, 1, 5, 2.0, 3, -0.5)
    assert g.hx == 0.5 and g.hy == 1.0 and g.y[0] == 0.0
