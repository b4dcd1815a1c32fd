import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tgbundle import dual
from tgbundle.dual import Dual, variables


def f(x, y, lib):
    return lib.sin(x) * lib.exp(0.3 * y) / (1.0 + x * x) + lib.sqrt(2.0 + y * y) - lib.log(3.0 + lib.cos(x * y))


class NumpyLib:
    sin, cos, exp, log, sqrt = np.sin, np.cos, np.exp, np.log, np.sqrt


def fd_jet(x, y, h=1e-4):
    g = lambda p: f(p[0], p[1], NumpyLib)  # noqa: E731
    p0 = np.array([x, y])
    grad = np.zeros(2)
    hess = np.zeros((2, 2))
    for a in range(2):
        e = np.eye(2)[a] * h
        grad[a] = (g(p0 + e) - g(p0 - e)) / (2 * h)
        for b in range(2):
            d = np.eye(2)[b] * h
            hess[a, b] = (g(p0 + e + d) - g(p0 + e - d) - g(p0 - e + d) + g(p0 - e - d)) / (4 * h * h)
    return g(p0), grad, hess


coord = st.floats(-1.5, 1.5)


@settings(max_examples=40, deadline=None)
@given(coord, coord)
def test_second_order_jet_matches_finite_differences(x, y):
    xs = variables([x, y], order=2)
    out = f(xs[0], xs[1], dual)
    val, grad, hess = fd_jet(x, y)
    assert out.val == pytest.approx(val, abs=1e-12)
    np.testing.assert_allclose(out.grad, grad, atol=1e-7)
    np.testing.assert_allclose(out.hess, hess, atol=1e-5)
    np.testing.assert_allclose(out.hess, out.hess.T, atol=1e-14)


def test_batched_values_broadcast():
    pts = np.random.default_rng(0).normal(size=(4, 3, 2))
    xs = variables(pts, order=2)
    out = xs[0] * xs[1] + dual.sin(xs[0])
    assert out.val.shape == (4, 3)
    assert out.grad.shape == (2, 4, 3)
    assert out.hess.shape == (2, 2, 4, 3)
    np.testing.assert_allclose(out.grad[0], pts[..., 1] + np.cos(pts[..., 0]))
    np.testing.assert_allclose(out.hess[0, 1], 1.0)


@pytest.mark.parametrize("k", [0, 1, 2, 3, -1, 0.5])
def test_power(k):
    (x,) = variables([1.7], order=2)
    out = x ** k
    assert out.val == pytest.approx(1.7 ** k)
    assert out.grad[0] == pytest.approx(k * 1.7 ** (k - 1))
    assert out.hess[0, 0] == pytest.approx(k * (k - 1) * 1.7 ** (k - 2))


def test_dual_exponent_and_reflected_ops():
    x, y = variables([1.3, 0.4], order=1)
    out = x ** y
    assert out.val == pytest.approx(1.3 ** 0.4)
    assert out.grad[1] == pytest.approx(np.log(1.3) * 1.3 ** 0.4)
    out = 2.0 ** x
    assert out.grad[0] == pytest.approx(np.log(2.0) * 2.0 ** 1.3)
    out = 1.0 - 3.0 / x
    assert out.grad[0] == pytest.approx(3.0 / 1.3 ** 2)
    assert isinstance(np.float64(2.0) * x, Dual)


def test_first_order_has_no_hessian():
    (x,) = variables([0.2])
    assert x.hess is None and (dual.tan(x) * x).hess is None
    assert dual.value_of(x) == 0.2 and dual.value_of(3.0) == 3.0


def test_math_functions_on_plain_numbers():
    assert dual.sin(0.5) == pytest.approx(np.sin(0.5))
    assert dual.absolute(-2.0) == 2.0
    (x,) = variables([-2.0], order=2)
    out = dual.absolute(x)
    assert out.val == 2.0 and out.grad[0] == -1.0
