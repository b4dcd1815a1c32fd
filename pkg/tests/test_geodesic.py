import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tgbundle.geodesic import (
    BundleGeodesicState,
    csv_header,
    integrate,
    integrate_base,
    integrate_many,
    max_divergence,
    oracle_integrate,
    rhs,
    sasaki_energy,
    write_csv,
)
from tgbundle.manifold import Box, DomainError, christoffel, conformal, euclidean, metric, sphere_band

vec2 = arrays(np.float64, 2, elements=st.floats(-1, 1))


def state(x, xdot, xi, xidot):
    return BundleGeodesicState(x, xdot, xi, xidot)


def test_state_validation():
    with pytest.raises(ValueError):
        state([0.0, 0.0], [1.0], [0.0, 0.0], [0.0, 0.0])
    s = state([1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0])
    np.testing.assert_array_equal(BundleGeodesicState.from_array(s.as_array()).as_array(), s.as_array())


def test_rhs_reductions():
    s = state([0.1, 0.2], [1.0, -1.0], [0.5, 0.3], [0.2, 0.7])
    np.testing.assert_array_equal(rhs(euclidean(2), s), [1.0, -1.0, 0.0, 0.0, 0.2, 0.7, 0.0, 0.0])
    m = conformal(2, 1.0)
    s = state([0.4, -0.2], [0.7, 0.3], [0.0, 0.0], [0.0, 0.0])
    out = rhs(m, s)
    G = christoffel(m, s.x)
    np.testing.assert_allclose(out[2:4], -np.einsum("abc,b,c->a", G, s.xdot, s.xdot), atol=1e-14)
    np.testing.assert_array_equal(out[4:], 0.0)


def test_energy_examples():
    s = state([0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, 2.0])
    assert sasaki_energy(euclidean(2), s) == 5.0
    m = conformal(2, 1.0)
    s = state([2.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, 0.0])
    assert sasaki_energy(m, s) == pytest.approx(metric(m, s.x)[0, 0])


def test_flat_geodesics_are_affine():
    s = state([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    tr = integrate(euclidean(3), s, 2.0, step=1e-2)
    np.testing.assert_allclose(tr.final.x, [2.0, 0.0, 0.0], atol=1e-13)
    np.testing.assert_allclose(tr.final.xi, [0.0, 2.0, 0.0], atol=1e-13)
    assert tr.sigmas[-1] == pytest.approx(2.0)
    assert not tr.exited
    assert tr.energy_drift <= 1e-14


def test_zero_fiber_follows_base_geodesic():
    m = sphere_band()
    x0, v0 = np.array([0.2, 0.1]), np.array([0.6, 0.9])
    tr = integrate(m, state(x0, v0, [0.0, 0.0], [0.0, 0.0]), 1.0)
    base = integrate_base(m, x0, v0, 1.0)
    assert len(base) == len(tr)
    np.testing.assert_allclose(tr.states[:, :4], base[:, 1:], atol=1e-8)
    np.testing.assert_array_equal(tr.states[:, 4:], 0.0)


@pytest.mark.parametrize("m", [conformal(2, 1.0), conformal(2, -1.0), sphere_band()],
                         ids=["c=1", "c=-1", "band"])
@settings(max_examples=5, deadline=None)
@given(x=vec2, v=vec2, xi=vec2, w=vec2)
def test_energy_conserved(m, x, v, xi, w):
    s = state(0.4 * x, v, xi, w)
    tr = integrate(m, s, 0.5, step=1e-3)
    if not tr.exited:
        assert tr.energy_drift <= 1e-8


@pytest.mark.parametrize("m, tol", [(euclidean(2), 1e-12), (conformal(2, 1.0), 1e-6), (sphere_band(), 1e-6)],
                         ids=["flat", "c=1", "band"])
def test_matches_oracle(m, tol):
    s = state([0.3, -0.2], [0.5, 0.8], [0.7, -0.4], [0.1, 0.3])
    a = integrate(m, s, 1.0)
    b = oracle_integrate(m, s, 1.0)
    assert len(a) == len(b) == 1001
    assert max_divergence(a, b) <= tol


def test_batched_matches_single():
    m = conformal(2, -1.0)
    states = [state([0.1 * k, 0.0], [0.5, 0.2 * k], [1.0, 0.0], [0.0, 0.3]) for k in range(3)]
    many = integrate_many(m, states, 0.3, step=1e-2)
    for s, tr in zip(states, many):
        np.testing.assert_allclose(tr.states, integrate(m, s, 0.3, step=1e-2).states, atol=1e-15)


def test_chart_exit_is_flagged():
    m = sphere_band()
    keep = state([0.0, 0.0], [0.1, 0.0], [0.0, 0.0], [0.0, 0.0])
    leave = state([0.0, 0.0], [3.0, 0.0], [0.0, 0.0], [0.0, 0.0])
    a, b = integrate_many(m, [keep, leave], 1.0, step=1e-2)
    assert not a.exited and len(a) == 101
    assert b.exited and len(b) < 101
    assert np.all(np.abs(b.states[:, 0]) < math.pi / 2)
    boxed = euclidean(2, Box((-1.0, -1.0), (1.0, 1.0)))
    tr = integrate(boxed, state([0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, 0.0]), 2.0, step=0.25)
    assert tr.exited and tr.sigmas[-1] == 1.0


def test_start_outside_chart_raises():
    with pytest.raises(DomainError):
        integrate(sphere_band(), state([2.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]), 1.0)
    with pytest.raises(ValueError):
        integrate(euclidean(3), state([0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]), 1.0)
    with pytest.raises(ValueError):
        integrate(euclidean(2), state([0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]), 1.0, step=0.0)


def test_partial_last_step():
    tr = integrate(euclidean(1), state([0.0], [1.0], [0.0], [0.0]), 0.25, step=0.1)
    np.testing.assert_allclose(tr.sigmas, [0.0, 0.1, 0.2, 0.25])
    assert tr.final.x[0] == pytest.approx(0.25)


def test_csv_format():
    tr = integrate(conformal(2, 1.0), state([0.1, 0.2], [0.3, 0.4], [0.5, 0.6], [0.7, 0.8]), 0.05, step=0.01)
    buf = io.StringIO()
    write_csv(tr, buf)
    text = buf.getvalue()
    assert "\r" not in text and text.endswith("\n")
    lines = text.splitlines()
    assert lines[0].split(",") == csv_header(2)
    assert csv_header(2) == ["sigma", "x1", "x2", "xdot1", "xdot2", "xi1", "xi2", "xidot1", "xidot2", "energy"]
    assert len(lines) == len(tr) + 1
    last = np.array([float(v) for v in lines[-1].split(",")])
    np.testing.assert_array_equal(last[1:-1], tr.states[-1])
    assert last[0] == tr.sigmas[-1] and last[-1] == tr.energies[-1]


def test_csv_to_path(tmp_path):
    tr = integrate(euclidean(1), state([0.0], [1.0], [0.0], [0.0]), 0.1, step=0.05)
    out = tmp_path / "trace.csv"
    write_csv(tr, out)
    assert out.read_bytes().count(b"\n") == 4
