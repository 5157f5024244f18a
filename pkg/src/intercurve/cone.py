"""Membership in the m-intermediate curvature cone and m-positivity of forms.

The cone functional of a curvature tensor ``R`` is the minimum over
orthonormal frames of the partial sectional sum
``sum_{p<=m} sum_{q>p} R(e_p, e_q, e_p, e_q)``.  It is computed exactly for
``m = 1`` (smallest Ricci eigenvalue) and ``m = n - 1`` (half the scalar
contraction); otherwise a multi-start Jacobi sweep of plane rotations is used,
with dense Haar sampling available as an oracle for ``n <= 4``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.linalg

from ._parallel import parallel_map
from .exceptions import DimensionMismatchError, RangeError
from .tensor_core import (
    AlgebraicCurvatureTensor,
    Frame,
    SymmetricForm,
    haar_orthogonal,
    kulkarni_nomizu,
    partial_sectional_sum,
    rank_one,
)

METHODS = ("auto", "exact_m1", "exact_mn1", "sweep", "brute_force")
DEFAULT_STRICT_TOL = 1e-8
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ConeOptions:
    method: str = "auto"
    restarts: int = 8
    tol: float = 1e-13
    max_sweeps: int = 200
    samples: int | None = None
    refine: int = 6
    seed: int = 0
    strict_tol: float = DEFAULT_STRICT_TOL

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown cone method {self.method!r}; expected one of {METHODS}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")

    def sample_count(self, n: int) -> int:
        if self.samples is not None:
            return self.samples
        return 10**6 if n >= 4 else 10**5


@dataclass(frozen=True, eq=False)
class ConeVerdict:
    min_value: float
    minimizer: Frame
    method: str
    m: int
    tolerance: float = DEFAULT_STRICT_TOL
    restarts: int = 0
    seed: int | None = None

    @property
    def interior_margin(self) -> float:
        """Positive iff the tensor is certified to lie in the open cone."""
        return self.min_value - self.tolerance

    @property
    def interior(self) -> bool:
        return self.interior_margin > 0


def m_positive(S, m: int, metric=None) -> tuple[bool, float]:
    """Return ``(margin > 0, margin)`` with ``margin`` the sum of the ``m``
    smallest eigenvalues of ``S`` (generalized eigenvalues if ``metric`` is given)."""
    A = S.entries if isinstance(S, SymmetricForm) else SymmetricForm(S).entries
    n = A.shape[0]
    if not (1 <= m <= n):
        raise RangeError(f"m must satisfy 1 <= m <= {n}, got {m}")
    if metric is None:
        ev = np.linalg.eigvalsh(A)
    else:
        G = np.asarray(metric, dtype=float)
        if G.shape != A.shape:
            raise DimensionMismatchError("form and metric dimensions differ")
        ev = scipy.linalg.eigh(A, G, eigvals_only=True)
    margin = float(np.sum(np.sort(ev)[:m]))
    return margin > 0, margin


# --- frame objective -------------------------------------------------------


def _pair_matrix(R: np.ndarray) -> np.ndarray:
    """``M[(a,c),(b,d)] = R[a,b,c,d]`` so that ``K_pq = v_p^T M v_q`` with ``v_p = e_p (x) e_p``."""
    n = R.shape[0]
    return R.transpose(0, 2, 1, 3).reshape(n * n, n * n)


def _objective(M: np.ndarray, Q: np.ndarray, m: int) -> float:
    n = Q.shape[0]
    V = (Q[:, None, :] * Q[None, :, :]).reshape(n * n, n)
    K = V[:, :m].T @ M @ V
    return float(np.sum(np.triu(K, 1)))


def _objective_batch(R: np.ndarray, Qs: np.ndarray, m: int) -> np.ndarray:
    """Objective for a stack of frames via
    ``sum_{p<=m} Ric(e_p, e_p) - sum_{p<q<=m} R(e_p, e_q, e_p, e_q)``."""
    B, n, _ = Qs.shape
    ric = np.einsum("abcb->ac", R)
    head = Qs[:, :, :m]
    out = np.sum(head * (ric @ head), axis=(1, 2))
    if m > 1:
        a, b = np.triu_indices(n, 1)
        Rpairs = R[a[:, None], b[:, None], a[None, :], b[None, :]]
        for p in range(m):
            for q in range(p + 1, m):
                x, y = Qs[:, :, p], Qs[:, :, q]
                biv = x[:, a] * y[:, b] - x[:, b] * y[:, a]
                out -= np.sum((biv @ Rpairs) * biv, axis=1)
    return out


def _rotate(Q, i, j, t):
    c, s = math.cos(t), math.sin(t)
    Q = Q.copy()
    qi, qj = Q[:, i].copy(), Q[:, j].copy()
    Q[:, i] = c * qi + s * qj
    Q[:, j] = -s * qi + c * qj
    return Q


def _trig_fit(values):
    """Coefficients of ``a0 + a1 cos2t + b1 sin2t + a2 cos4t + b2 sin4t`` from
    samples at ``t_k = k pi / 5``."""
    F = np.fft.rfft(values) / 5.0
    return F[0].real, 2 * F[1].real, -2 * F[1].imag, 2 * F[2].real, -2 * F[2].imag


def _trig_eval(coef, t):
    a0, a1, b1, a2, b2 = coef
    return a0 + a1 * np.cos(2 * t) + b1 * np.sin(2 * t) + a2 * np.cos(4 * t) + b2 * np.sin(4 * t)


def _golden_section(f, lo, hi, xtol=1e-12):
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > xtol:
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
    return 0.5 * (lo + hi)


_ANGLES = np.arange(5) * math.pi / 5.0
_GRID = np.linspace(0.0, math.pi, 64, endpoint=False)


def _best_angle(coef):
    vals = _trig_eval(coef, _GRID)
    k = int(np.argmin(vals))
    h = _GRID[1]
    t = _golden_section(lambda x: _trig_eval(coef, x), _GRID[k] - h, _GRID[k] + h)
    return t, _trig_eval(coef, t)


def _sweep(M, Q, m, tol, max_sweeps):
    """Jacobi sweeps: minimize over one rotation angle per coordinate plane.

    The objective restricted to a plane rotation is a trigonometric polynomial
    in ``2t`` of degree 2, so five samples determine it exactly.
    """
    n = Q.shape[0]
    f = _objective(M, Q, m)
    for _ in range(max_sweeps):
        f_start = f
        for i in range(n - 1):
            for j in range(i + 1, n):
                vals = [f] + [_objective(M, _rotate(Q, i, j, t), m) for t in _ANGLES[1:]]
                t, fit = _best_angle(_trig_fit(np.array(vals)))
                if fit < f:
                    Q_new = _rotate(Q, i, j, t)
                    f_new = _objective(M, Q_new, m)
                    if f_new < f:
                        Q, f = Q_new, f_new
        if f_start - f <= tol * (1.0 + abs(f)):
            break
    # re-orthonormalize accumulated rotations
    Q, r = np.linalg.qr(Q)
    Q = Q * np.sign(np.diag(r))
    return Q, _objective(M, Q, m)


@lru_cache(maxsize=4)
def _haar_bank(n: int, samples: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, n, 0x5EED]))
    chunk = 200_000
    parts = [haar_orthogonal(rng, n, min(chunk, samples - k)) for k in range(0, samples, chunk)]
    bank = np.concatenate(parts)
    bank.setflags(write=False)
    return bank


def _restart_frames(n, restarts, seed):
    children = np.random.SeedSequence(seed).spawn(restarts)
    frames = [np.eye(n)]
    for child in children[1:]:
        frames.append(haar_orthogonal(np.random.default_rng(child), n))
    return frames


def _orthonormal_basis(metric, n):
    if metric is None:
        return np.eye(n), None
    G = np.asarray(metric, dtype=float)
    L = np.linalg.cholesky(G)
    return scipy.linalg.solve_triangular(L, np.eye(n), lower=True).T, SymmetricForm(G)


def cone_min(R, m: int, opts: ConeOptions | None = None, metric=None) -> ConeVerdict:
    """Smallest partial sectional sum of ``R`` over orthonormal frames.

    ``R`` holds components in some basis; ``metric`` is the inner product in
    that basis (identity when omitted).  The returned minimizer is expressed in
    the same basis and is orthonormal with respect to ``metric``.
    """
    opts = opts or ConeOptions()
    Rm = R.entries if isinstance(R, AlgebraicCurvatureTensor) else np.asarray(R, dtype=float)
    n = Rm.shape[0]
    if not (1 <= m <= n - 1):
        raise RangeError(f"m must satisfy 1 <= m <= n - 1 = {n - 1}, got {m}")
    method = opts.method
    if method == "auto":
        method = "exact_m1" if m == 1 else "exact_mn1" if m == n - 1 else "sweep"
    if method == "exact_m1" and m != 1:
        raise RangeError("exact_m1 requires m == 1")
    if method == "exact_mn1" and m != n - 1:
        raise RangeError("exact_mn1 requires m == n - 1")
    if method == "brute_force" and n > 4:
        raise RangeError("brute_force is limited to n <= 4")

    E, G = _orthonormal_basis(metric, n)
    if G is not None:
        Rm = AlgebraicCurvatureTensor(Rm).in_basis(E).entries
    restarts, seed = 0, None

    if method == "exact_m1":
        ev, vecs = np.linalg.eigh(AlgebraicCurvatureTensor(Rm).ricci())
        Q, value = vecs, float(ev[0])
    elif method == "exact_mn1":
        Q, value = np.eye(n), AlgebraicCurvatureTensor(Rm).half_scalar()
    else:
        M = _pair_matrix(Rm)
        seed = opts.seed
        if method == "sweep":
            starts = _restart_frames(n, opts.restarts, opts.seed)
        else:
            bank = _haar_bank(n, opts.sample_count(n), opts.seed)
            vals = np.concatenate(
                [_objective_batch(Rm, bank[k:k + 100_000], m) for k in range(0, len(bank), 100_000)]
            )
            best = np.argsort(vals)[: opts.refine]
            starts = [bank[b] for b in best]
        restarts = len(starts)
        results = parallel_map(lambda Q0: _sweep(M, Q0, m, opts.tol, opts.max_sweeps), starts)
        Q, value = min(results, key=lambda r: r[1])

    frame = Frame(E @ Q, G, tol=1e-12 if G is None else 1e-9)
    return ConeVerdict(float(value), frame, method, m, opts.strict_tol, restarts, seed)


# --- Kulkarni-Nomizu with a rank-one form ----------------------------------


def kn_rank_one_sum(T, nu, frame, m: int) -> float:
    """Closed form of the partial sectional sum of ``T o (nu (x) nu)``.

    With ``a_p = nu(e_p)``, ``w' = sum_{p>m} a_p e_p`` and ``nu`` identified
    with its dual vector::

        tr(T) sum_{p<=m} a_p^2 + (sum_{p>m} a_p^2) sum_{q<=m} T(e_q, e_q)
            + T(w', w') - T(nu, nu)

    The last term vanishes when ``T`` annihilates ``nu``.
    """
    A = T.entries if isinstance(T, SymmetricForm) else SymmetricForm(T).entries
    if not isinstance(frame, Frame):
        frame = Frame(frame)
    v = np.asarray(nu, dtype=float).ravel()
    n = A.shape[0]
    if v.shape[0] != n or frame.dim != n:
        raise DimensionMismatchError("form, covector and frame dimensions must agree")
    if not (1 <= m <= n - 1):
        raise RangeError(f"m must satisfy 1 <= m <= n - 1 = {n - 1}, got {m}")
    E = frame.columns
    a = E.T @ v
    TE = E.T @ A @ E
    lo, hi = slice(0, m), slice(m, n)
    return float(
        np.trace(TE) * np.sum(a[lo] ** 2)
        + np.sum(a[hi] ** 2) * np.trace(TE[lo, lo])
        + a[hi] @ TE[hi, hi] @ a[hi]
        - a @ TE @ a
    )


def complement_basis(nu) -> np.ndarray:
    """Orthonormal basis (columns) of the orthogonal complement of ``nu``,
    taken from a Householder reflection that maps ``e_1`` to a multiple of ``nu``."""
    v = np.asarray(nu, dtype=float).ravel()
    n = v.shape[0]
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("nu must be non-zero")
    u = v / norm
    w = u.copy()
    w[0] += math.copysign(1.0, u[0])
    H = np.eye(n) - 2.0 * np.outer(w, w) / (w @ w)
    return H[:, 1:]


@dataclass(frozen=True, eq=False)
class Prop31Report:
    n: int
    m: int
    restricted_margin: float
    cone: ConeVerdict
    strict_tol: float = DEFAULT_STRICT_TOL
    details: dict = field(default_factory=dict)

    @property
    def restricted_positive(self) -> bool:
        return self.restricted_margin > 0

    @property
    def cone_positive(self) -> bool:
        return self.cone.min_value > self.strict_tol

    @property
    def agree(self) -> bool:
        return self.restricted_positive == self.cone_positive


def check_prop31(S, nu, m: int, opts: ConeOptions | None = None, unit_tol=1e-12) -> Prop31Report:
    """Compare m-positivity of ``S`` on ``nu^perp`` with interior membership of
    ``S o (nu (x) nu)`` in the cone (brute-force oracle for ``n <= 4``)."""
    A = SymmetricForm(S).entries
    v = np.asarray(nu, dtype=float).ravel()
    n = A.shape[0]
    if abs(np.linalg.norm(v) - 1.0) > unit_tol:
        raise ValueError(f"nu must be a unit vector (|nu| = {np.linalg.norm(v)!r})")
    if not (1 <= m <= n - 1):
        raise RangeError(f"m must satisfy 1 <= m <= n - 1 = {n - 1}, got {m}")
    W = complement_basis(v)
    _, margin = m_positive(W.T @ A @ W, m)
    opts = opts or ConeOptions()
    method = "brute_force" if n <= 4 else "sweep"
    verdict = cone_min(kulkarni_nomizu(A, rank_one(v)), m, replace(opts, method=method))
    return Prop31Report(n, m, margin, verdict, opts.strict_tol)


@dataclass
class Prop31Summary:
    trials: int
    agreements: int
    resampled: int
    disagreements: list = field(default_factory=list)

    @property
    def all_agree(self) -> bool:
        return self.agreements == self.trials and not self.disagreements


def prop31_trials(trials: int, seed: int, dims=(3, 4), exclusion=1e-6, opts: ConeOptions | None = None):
    """Random equivalence trials; inputs whose margins fall inside the
    exclusion band around zero are redrawn."""
    opts = opts or ConeOptions()
    rng = np.random.default_rng(seed)
    summary = Prop31Summary(trials, 0, 0)
    done = 0
    while done < trials:
        n = int(dims[done % len(dims)])
        m = int(rng.integers(1, n))
        A = rng.standard_normal((n, n))
        S = 0.5 * (A + A.T)
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        report = check_prop31(S, v, m, opts)
        if abs(report.restricted_margin) < exclusion or abs(report.cone.min_value) < exclusion:
            summary.resampled += 1
            continue
        done += 1
        if report.agree:
            summary.agreements += 1
        else:
            summary.disagreements.append(report)
    return summary
