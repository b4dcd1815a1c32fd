import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tgbundle.fields import PreconditionError
from tgbundle.lie import (
    LieAlgebraModel,
    abelian,
    centralizer_basis,
    lie_curvature,
    lie_field_residual,
    lie_nabla,
    sectional_curvature,
    so3,
    so3_plus_r,
)

E = np.eye(3)
vec3 = arrays(np.float64, 3, elements=st.floats(-2, 2))


def test_so3_examples():
    a = so3()
    np.testing.assert_array_equal(a.bracket(E[0], E[1]), E[2])
    np.testing.assert_array_equal(lie_nabla(a, E[0], E[1]), 0.5 * E[2])
    np.testing.assert_allclose(lie_curvature(a, E[0], E[1], E[1]), 0.25 * E[0])
    assert sectional_curvature(a, E[0], E[1]) == pytest.approx(0.25)
    # one-parameter subgroups are geodesics
    X = np.array([0.3, -1.2, 2.0])
    np.testing.assert_array_equal(lie_nabla(a, X, X), 0.0)
    # the bracket of so(3) with this basis is the cross product
    X, Y = np.array([1.0, 2.0, -1.0]), np.array([0.5, 0.0, 3.0])
    np.testing.assert_allclose(a.bracket(X, Y), np.cross(X, Y))


def test_abelian_is_flat():
    a = abelian(4)
    X, Y, Z = np.random.default_rng(0).normal(size=(3, 4))
    np.testing.assert_array_equal(lie_curvature(a, X, Y, Z), 0.0)
    assert sectional_curvature(a, X, Y) == 0.0


@pytest.mark.parametrize("make", [so3, so3_plus_r])
@settings(max_examples=25, deadline=None)
@given(data=st.data())
def test_curvature_identities(make, data):
    a = make()
    v = arrays(np.float64, a.dim, elements=st.floats(-2, 2))
    X, Y, Z = data.draw(v), data.draw(v), data.draw(v)
    np.testing.assert_allclose(lie_curvature(a, X, Y, Z), -0.25 * a.bracket(a.bracket(X, Y), Z), atol=1e-12)
    area = a.dot(X, X) * a.dot(Y, Y) - a.dot(X, Y) ** 2
    if area > 1e-3:
        assert sectional_curvature(a, X, Y) == pytest.approx(0.25 * a.norm(a.bracket(X, Y)) ** 2 / area, rel=1e-9)
        assert sectional_curvature(a, X, Y) >= -1e-12


@settings(max_examples=25, deadline=None)
@given(X=vec3, Y=vec3)
def test_connection_is_torsion_free_and_metric(X, Y):
    a = so3()
    np.testing.assert_allclose(lie_nabla(a, X, Y) - lie_nabla(a, Y, X), a.bracket(X, Y), atol=1e-12)
    # X <Y, Y> = 0 for left-invariant fields, so <nabla_X Y, Y> must vanish
    assert abs(a.dot(lie_nabla(a, X, Y), Y)) <= 1e-12


def test_invariants_are_checked():
    C = so3().structure_constants.copy()
    with pytest.raises(ValueError, match="antisymmetric"):
        bad = C.copy()
        bad[0, 1, 2] = 2.0
        LieAlgebraModel(bad, np.eye(3))
    with pytest.raises(ValueError, match="ad-invariant"):
        LieAlgebraModel(C, np.diag([1.0, 2.0, 3.0]))
    with pytest.raises(ValueError, match="positive definite"):
        LieAlgebraModel(np.zeros((2, 2, 2)), np.diag([1.0, -1.0]))
    jac = np.zeros((3, 3, 3))
    # [e1, e2] = e2, [e1, e3] = e1 breaks Jacobi
    jac[0, 1, 1], jac[1, 0, 1] = 1.0, -1.0
    jac[0, 2, 0], jac[2, 0, 0] = 1.0, -1.0
    with pytest.raises(ValueError, match="Jacobi"):
        LieAlgebraModel(jac, np.eye(3))
    with pytest.raises(ValueError):
        LieAlgebraModel(np.zeros((2, 2, 3)), np.eye(2))


def test_field_residual():
    a = so3_plus_r()
    e = np.eye(4)
    line = [e[2]]
    assert lie_field_residual(a, line, e[2]) == 0.0
    assert lie_field_residual(a, line, e[3]) == 0.0
    assert lie_field_residual(a, line, e[0]) == pytest.approx(0.5)
    assert lie_field_residual(so3(), E, E[0]) == pytest.approx(0.5)


def test_field_residual_preconditions():
    a = so3()
    with pytest.raises(PreconditionError, match="closed"):
        lie_field_residual(a, [E[0], E[1]], E[2])
    with pytest.raises(PreconditionError, match="dependent"):
        lie_field_residual(a, [E[0], 2 * E[0]], E[0])
    with pytest.raises(ValueError):
        lie_field_residual(a, [E[0]], [1.0, 0.0])


def test_centralizer():
    a = so3_plus_r()
    e = np.eye(4)
    cz = centralizer_basis(a, [e[0]])
    assert cz.shape == (2, 4)
    # span{e1, e4}
    proj = cz.T @ cz
    np.testing.assert_allclose(proj, np.diag([1.0, 0.0, 0.0, 1.0]), atol=1e-12)
    for xi in cz:
        assert lie_field_residual(a, [e[0]], xi) <= 1e-12
    assert centralizer_basis(so3(), E).shape == (0, 3)
    assert centralizer_basis(abelian(2), np.eye(2)).shape == (2, 2)
