"""Left-invariant geometry of Lie groups with a bi-invariant metric.

Everything is reduced to the Lie algebra: a left-invariant field is a
vector of the algebra, the Levi-Civita connection is ``1/2 [X, Y]`` and the
curvature follows from the connection by the usual commutator formula.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import PreconditionError

__all__ = [
    "LieAlgebraModel",
    "so3",
    "so3_plus_r",
    "abelian",
    "lie_nabla",
    "lie_curvature",
    "sectional_curvature",
    "lie_field_residual",
    "centralizer_basis",
]

_INVARIANT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LieAlgebraModel:
    """Structure constants ``C[i, j, k] = c^k_ij`` (``[e_i, e_j] = c^k_ij e_k``)
    and an ad-invariant inner product ``inner``.

    Antisymmetry, the Jacobi identity and ad-invariance are checked at
    construction.
    """

    structure_constants: np.ndarray
    inner: np.ndarray
    name: str = "lie-algebra"

    def __post_init__(self):
        C = np.asarray(self.structure_constants, dtype=float)
        B = np.asarray(self.inner, dtype=float)
        object.__setattr__(self, "structure_constants", C)
        object.__setattr__(self, "inner", B)
        k = C.shape[0]
        if C.shape != (k, k, k) or B.shape != (k, k):
            raise ValueError("structure constants must be (k, k, k) and the inner product (k, k)")
        if np.max(np.abs(C + np.swapaxes(C, 0, 1)), initial=0.0) > _INVARIANT_TOL:
            raise ValueError("structure constants are not antisymmetric")
        # Jacobi: [e_i,[e_j,e_l]] + cyclic = 0
        inner_br = np.einsum("jlm,imk->ijlk", C, C)
        jac = inner_br + np.einsum("ijlk->jlik", inner_br) + np.einsum("ijlk->lijk", inner_br)
        if np.max(np.abs(jac), initial=0.0) > _INVARIANT_TOL:
            raise ValueError("structure constants violate the Jacobi identity")
        if np.max(np.abs(B - B.T), initial=0.0) > _INVARIANT_TOL:
            raise ValueError("inner product is not symmetric")
        if k and np.linalg.eigvalsh(B)[0] <= 0:
            raise ValueError("inner product is not positive definite")
        # <[e_i, e_j], e_l> + <e_j, [e_i, e_l]> = 0
        t = np.einsum("ijm,ml->ijl", C, B)
        if np.max(np.abs(t + np.swapaxes(t, 1, 2)), initial=0.0) > _INVARIANT_TOL:
            raise ValueError("inner product is not ad-invariant")

    @property
    def dim(self) -> int:
        return self.structure_constants.shape[0]

    def bracket(self, X, Y) -> np.ndarray:
        return np.einsum("ijk,i,j->k", self.structure_constants, np.asarray(X, float), np.asarray(Y, float))

    def dot(self, X, Y) -> float:
        return float(np.asarray(X, float) @ self.inner @ np.asarray(Y, float))

    def norm(self, X) -> float:
        return float(np.sqrt(max(self.dot(X, X), 0.0)))


def so3() -> LieAlgebraModel:
    C = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        C[i, j, k] = 1.0
        C[j, i, k] = -1.0
    return LieAlgebraModel(C, np.eye(3), "so3")


def so3_plus_r() -> LieAlgebraModel:
    """``so(3)`` plus a central line, spanned by ``e_4``."""
    C = np.zeros((4, 4, 4))
    C[:3, :3, :3] = so3().structure_constants
    return LieAlgebraModel(C, np.eye(4), "so3+r")


def abelian(k: int = 3) -> LieAlgebraModel:
    return LieAlgebraModel(np.zeros((k, k, k)), np.eye(k), f"r{k}")


def lie_nabla(a: LieAlgebraModel, X, Y) -> np.ndarray:
    return 0.5 * a.bracket(X, Y)


def lie_curvature(a: LieAlgebraModel, X, Y, Z) -> np.ndarray:
    """``R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``."""
    return (lie_nabla(a, X, lie_nabla(a, Y, Z))
            - lie_nabla(a, Y, lie_nabla(a, X, Z))
            - lie_nabla(a, a.bracket(X, Y), Z))


def sectional_curvature(a: LieAlgebraModel, X, Y) -> float:
    """``<R(X,Y)Y, X>`` divided by the squared area of the parallelogram."""
    area = a.dot(X, X) * a.dot(Y, Y) - a.dot(X, Y) ** 2
    if area <= 0:
        raise ValueError("X and Y are linearly dependent")
    return a.dot(lie_curvature(a, X, Y, Y), X) / area


def _check_subalgebra(a: LieAlgebraModel, basis: np.ndarray, tol: float):
    if basis.ndim != 2 or basis.shape[1] != a.dim or basis.shape[0] == 0:
        raise ValueError(f"subalgebra basis must be a non-empty (l, {a.dim}) array")
    if np.linalg.matrix_rank(basis) < basis.shape[0]:
        raise PreconditionError("subalgebra basis is linearly dependent")
    proj = np.linalg.pinv(basis.T)
    for X in basis:
        for Y in basis:
            br = a.bracket(X, Y)
            leftover = br - basis.T @ (proj @ br)
            if np.linalg.norm(leftover) > tol * (1.0 + np.linalg.norm(br)):
                raise PreconditionError("basis is not closed under the bracket")


def lie_field_residual(a: LieAlgebraModel, subalgebra_basis, xi, tol: float = 1e-10) -> float:
    """Largest ``|nabla_X xi| = |1/2 [X, xi]|`` over the subalgebra basis.

    Zero exactly when ``xi`` centralises the subalgebra.
    """
    basis = np.atleast_2d(np.asarray(subalgebra_basis, dtype=float))
    _check_subalgebra(a, basis, tol)
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (a.dim,):
        raise ValueError(f"xi must have {a.dim} components")
    return max(a.norm(lie_nabla(a, X, xi)) for X in basis)


def centralizer_basis(a: LieAlgebraModel, subalgebra_basis, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal (Euclidean) basis of ``{xi : [xi, X] = 0 for all X}``, as rows."""
    basis = np.atleast_2d(np.asarray(subalgebra_basis, dtype=float))
    # rows: for each X, the linear map xi -> [X, xi]
    M = np.concatenate([np.einsum("ijk,i->kj", a.structure_constants, X) for X in basis])
    _, s, vt = np.linalg.svd(M)
    rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 0.0)))
    return vt[rank:]
