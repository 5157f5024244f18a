"""Multilinear algebra on a single tangent space.

All components are expressed in one fixed basis chosen by the caller.  When a
:class:`Frame` carries a metric, its columns are orthonormal with respect to
that metric and curvature components are read in the same basis.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionMismatchError, FrameError, RangeError, SymmetryError

DEFAULT_FRAME_TOL = 1e-12


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SymmetricForm:
    """Symmetric bilinear form on an ``n``-dimensional space.

    Input that is symmetric up to rounding is accepted and symmetrized so the
    stored entries are exactly symmetric; anything further off raises.
    """

    entries: np.ndarray
    tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("symmetric form has non-finite entries")
        skew = np.max(np.abs(a - a.T))
        if skew > self.tol * (1.0 + np.max(np.abs(a))):
            raise SymmetryError(f"form is not symmetric (max |A - A^T| = {skew:.3e})")
        object.__setattr__(self, "entries", _readonly(0.5 * (a + a.T)))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __call__(self, v, w):
        return float(np.asarray(v) @ self.entries @ np.asarray(w))

    def trace(self) -> float:
        return float(np.trace(self.entries))

    @classmethod
    def identity(cls, n: int) -> SymmetricForm:
        return cls(np.eye(n))

    @classmethod
    def zero(cls, n: int) -> SymmetricForm:
        return cls(np.zeros((n, n)))


@dataclass(frozen=True, eq=False)
class AlgebraicCurvatureTensor:
    """Rank-4 tensor ``R[i, j, k, l]`` with the curvature symmetries.

    The constructor stores the array as given.  Use :meth:`from_components`
    to validate and project a numerically computed array.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        n = a.shape[0] if a.ndim else 0
        if a.ndim != 4 or a.shape != (n, n, n, n) or n == 0:
            raise DimensionMismatchError(f"expected an n^4 array, got shape {a.shape}")
        object.__setattr__(self, "entries", _readonly(a))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __add__(self, other):
        return AlgebraicCurvatureTensor(self.entries + np.asarray(other))

    def __sub__(self, other):
        return AlgebraicCurvatureTensor(self.entries - np.asarray(other))

    def __mul__(self, c):
        return AlgebraicCurvatureTensor(float(c) * self.entries)

    __rmul__ = __mul__

    def __call__(self, v1, v2, v3, v4):
        return float(np.einsum("abcd,a,b,c,d->", self.entries, v1, v2, v3, v4))

    @classmethod
    def from_components(cls, entries, tol=1e-8):
        """Validate ``entries`` at relative tolerance ``tol`` and project them
        onto the curvature-symmetric subspace."""
        a = np.asarray(entries, dtype=float)
        scale = 1.0 + np.max(np.abs(a))
        report = validate_curvature(a, tol * scale)
        if not report.passed:
            raise SymmetryError(f"curvature symmetries violated: {report}")
        return cls(project_curvature(a))

    def in_basis(self, basis) -> AlgebraicCurvatureTensor:
        """Components with respect to the columns of ``basis``."""
        E = np.asarray(basis, dtype=float)
        return AlgebraicCurvatureTensor(
            np.einsum("ijkl,ia,jb,kc,ld->abcd", self.entries, E, E, E, E, optimize=True)
        )

    def ricci(self) -> np.ndarray:
        """Ricci contraction ``Ric[i, j] = sum_k R[i, k, j, k]`` (orthonormal basis)."""
        return np.einsum("ikjk->ij", self.entries)

    def half_scalar(self) -> float:
        """Half the double contraction ``sum_{p,q} R[p, q, p, q]`` (orthonormal basis)."""
        return 0.5 * float(np.einsum("pqpq->", self.entries))

    def sectional_matrix(self, basis=None) -> np.ndarray:
        """``K[p, q] = R(e_p, e_q, e_p, e_q)`` for the columns of ``basis``."""
        R = self.entries
        if basis is None:
            return np.einsum("pqpq->pq", R)
        E = np.asarray(basis, dtype=float)
        return np.einsum("abcd,ap,bq,cp,dq->pq", R, E, E, E, E, optimize=True)

    @classmethod
    def zero(cls, n: int) -> AlgebraicCurvatureTensor:
        return cls(np.zeros((n, n, n, n)))


@dataclass(frozen=True, eq=False)
class Frame:
    """Columns orthonormal with respect to ``metric`` (identity when omitted)."""

    columns: np.ndarray
    metric: SymmetricForm | None = None
    tol: float = field(default=DEFAULT_FRAME_TOL, repr=False)

    def __post_init__(self):
        E = np.array(self.columns, dtype=float)
        if E.ndim != 2 or E.shape[0] != E.shape[1]:
            raise DimensionMismatchError(f"frame must be n x n, got shape {E.shape}")
        metric = self.metric
        if metric is not None and not isinstance(metric, SymmetricForm):
            metric = SymmetricForm(metric)
            object.__setattr__(self, "metric", metric)
        if metric is not None and metric.dim != E.shape[0]:
            raise DimensionMismatchError("frame and metric dimensions differ")
        G = np.eye(E.shape[0]) if metric is None else metric.entries
        err = np.max(np.abs(E.T @ G @ E - np.eye(E.shape[0])))
        if err > self.tol:
            raise FrameError(f"frame is not orthonormal (max deviation {err:.3e} > {self.tol:g})")
        object.__setattr__(self, "columns", _readonly(E))

    @property
    def dim(self) -> int:
        return self.columns.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.columns, dtype=dtype)

    def __getitem__(self, i):
        return self.columns[:, i]

    @classmethod
    def orthonormalize(cls, vectors, metric=None, tol=DEFAULT_FRAME_TOL) -> Frame:
        """Gram-Schmidt (two passes) of the columns of ``vectors`` against ``metric``."""
        V = np.array(vectors, dtype=float)
        n = V.shape[0]
        G = np.eye(n) if metric is None else np.asarray(metric, dtype=float)
        E = np.zeros_like(V)
        for k in range(V.shape[1]):
            v = V[:, k].copy()
            for _ in range(2):
                for j in range(k):
                    v -= (E[:, j] @ G @ v) * E[:, j]
            norm2 = v @ G @ v
            if norm2 <= 0 or not np.isfinite(norm2):
                raise FrameError("vectors are linearly dependent")
            E[:, k] = v / np.sqrt(norm2)
        return cls(E, None if metric is None else SymmetricForm(G), tol)

    @classmethod
    def standard(cls, n: int) -> Frame:
        return cls(np.eye(n))


def _as_matrix(S):
    if isinstance(S, SymmetricForm):
        return S.entries
    return SymmetricForm(S).entries


def _as_tensor(R):
    if isinstance(R, AlgebraicCurvatureTensor):
        return R.entries
    return AlgebraicCurvatureTensor(R).entries


def kulkarni_nomizu(S, T) -> AlgebraicCurvatureTensor:
    """Kulkarni-Nomizu product of two symmetric forms.

    ``(S o T)_{ijkl} = S_ik T_jl + S_jl T_ik - S_il T_jk - S_jk T_il``.
    """
    A, B = _as_matrix(S), _as_matrix(T)
    if A.shape != B.shape:
        raise DimensionMismatchError(f"dimensions differ: {A.shape[0]} vs {B.shape[0]}")
    P = np.einsum("ik,jl->ijkl", A, B)
    Q = np.einsum("il,jk->ijkl", A, B)
    return AlgebraicCurvatureTensor(P + P.transpose(1, 0, 3, 2) - Q - Q.transpose(1, 0, 3, 2))


def rank_one(nu) -> SymmetricForm:
    v = np.asarray(nu, dtype=float).ravel()
    return SymmetricForm(np.outer(v, v))


def constant_curvature(n: int, kappa: float = 1.0) -> AlgebraicCurvatureTensor:
    """Curvature tensor with every sectional curvature equal to ``kappa``."""
    I = np.eye(n)
    return kulkarni_nomizu(I, I) * (0.5 * kappa)


def gauss_equation(R, h) -> AlgebraicCurvatureTensor:
    """Intrinsic curvature of a hypersurface: ``R + (1/2) h o h``.

    ``R`` is the ambient curvature restricted to the hypersurface directions and
    ``h`` its second fundamental form, both in the same basis.  The sectional
    values are ``R(X,Y,X,Y) + h(X,X) h(Y,Y) - h(X,Y)^2``.
    """
    return AlgebraicCurvatureTensor(_as_tensor(R)) + kulkarni_nomizu(h, h) * 0.5


def _check_m(m, n):
    if not (1 <= m <= n - 1):
        raise RangeError(f"m must satisfy 1 <= m <= n - 1 = {n - 1}, got {m}")


def partial_sectional_sum(R, frame, m: int) -> float:
    """``sum_{p<=m} sum_{q>p} R(e_p, e_q, e_p, e_q)`` over the columns of ``frame``.

    A bare array is treated as a frame for the identity metric and checked.
    """
    Rm = _as_tensor(R)
    if not isinstance(frame, Frame):
        frame = Frame(frame)
    n = Rm.shape[0]
    if frame.dim != n:
        raise DimensionMismatchError("frame and tensor dimensions differ")
    _check_m(m, n)
    K = AlgebraicCurvatureTensor(Rm).sectional_matrix(frame.columns)
    return float(np.sum(np.triu(K, 1)[:m]))


def partial_sum_weights(n: int, m: int) -> np.ndarray:
    """0/1 mask selecting the pairs ``p < q`` with ``p < m`` (0-based)."""
    W = np.triu(np.ones((n, n)), 1)
    W[m:] = 0.0
    return W


@dataclass(frozen=True)
class CurvatureReport:
    antisymmetry: float
    pair_symmetry: float
    bianchi: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.antisymmetry, self.pair_symmetry, self.bianchi) <= self.tol

    def __bool__(self):
        return self.passed


def validate_curvature(R, tol: float = 1e-12) -> CurvatureReport:
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = np.asarray(R, dtype=float)
    anti = np.max(np.abs(a + a.transpose(1, 0, 2, 3)))
    pair = np.max(np.abs(a - a.transpose(2, 3, 0, 1)))
    # R_ijkl + R_kijl + R_jkil
    bianchi = np.max(np.abs(a + a.transpose(1, 2, 0, 3) + a.transpose(2, 0, 1, 3)))
    return CurvatureReport(float(anti), float(pair), float(bianchi), tol)


def project_curvature(a) -> np.ndarray:
    """Orthogonal projection of a 4-tensor onto the algebraic curvature tensors."""
    a = np.asarray(a, dtype=float)
    a = 0.5 * (a - a.transpose(1, 0, 2, 3))
    a = 0.5 * (a - a.transpose(0, 1, 3, 2))
    a = 0.5 * (a + a.transpose(2, 3, 0, 1))
    # with the pair symmetries in place the cyclic sum is the totally skew part
    b = (a + a.transpose(1, 2, 0, 3) + a.transpose(2, 0, 1, 3)) / 3.0
    return a - b


def random_symmetric(rng, n: int, scale: float = 1.0) -> np.ndarray:
    A = rng.standard_normal((n, n)) * scale
    return 0.5 * (A + A.T)


def random_curvature(rng, n: int) -> AlgebraicCurvatureTensor:
    """Gaussian 4-tensor projected onto the curvature-symmetric subspace."""
    return AlgebraicCurvatureTensor(project_curvature(rng.standard_normal((n, n, n, n))))


def haar_orthogonal(rng, n: int, size: int | None = None) -> np.ndarray:
    """Haar-distributed orthogonal matrices via sign-fixed QR of Gaussians."""
    shape = (n, n) if size is None else (size, n, n)
    Q, Rr = np.linalg.qr(rng.standard_normal(shape))
    d = np.sign(np.diagonal(Rr, axis1=-2, axis2=-1))
    d[d == 0] = 1.0
    return Q * d[..., None, :]
