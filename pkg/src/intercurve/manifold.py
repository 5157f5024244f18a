"""Riemannian metrics on coordinate boxes and their curvature.

Curvature follows the sign convention ``Rm(X,Y,Z,W) = -g(D_X D_Y Z - D_Y D_X Z
- D_[X,Y] Z, W)``, so ``Rm(e_p, e_q, e_p, e_q)`` is the sectional curvature of an
orthonormal pair (``+1`` on the unit sphere).  The second fundamental form of
the boundary is ``h(X, Y) = g(nu, D_X Y)`` with ``nu`` the inward unit normal,
positive on the unit sphere bounding the unit ball.

Collar charts are in Fermi form near the boundary: one coordinate ``rho`` is
the distance to the boundary face ``rho = 0`` and the metric splits as
``d rho^2 + g_rho``.  Supplying metrics in this form is the caller's job; no
distance function is computed here.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .cone import ConeOptions, ConeVerdict, cone_min
from .exceptions import CollarError, DimensionMismatchError, SingularMetricError
from .expr import Expression, Jet2, default_variables, parse
from .tensor_core import AlgebraicCurvatureTensor, SymmetricForm, kulkarni_nomizu

FERMI_TOL = 1e-12


def _constant_component(value):
    def component(env):
        return value

    return component


def _expression_component(expression):
    def component(env):
        return expression.evaluate_on(env)

    return component


@dataclass(frozen=True, eq=False)
class ChartMetric:
    """Metric on an axis-aligned coordinate box.

    ``components[i][j]`` is a callable taking a list of ``dim`` coordinate
    values (floats or :class:`~intercurve.expr.Jet2`) and returning the
    component there.  The grid is symmetric by construction; only the upper
    triangle is ever evaluated.
    """

    dim: int
    domain: tuple
    components: tuple
    collar_axis: int | None = None
    name: str = ""
    expressions: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        domain = tuple((float(lo), float(hi)) for lo, hi in self.domain)
        if len(domain) != self.dim or any(lo > hi for lo, hi in domain):
            raise DimensionMismatchError("domain must list one (lo, hi) interval per axis")
        object.__setattr__(self, "domain", domain)
        if len(self.components) != self.dim or any(len(row) != self.dim for row in self.components):
            raise DimensionMismatchError("components must be a dim x dim grid")
        if self.collar_axis is not None and not (0 <= self.collar_axis < self.dim):
            raise CollarError(f"collar_axis {self.collar_axis} out of range")

    @classmethod
    def from_expressions(cls, dim, domain, upper, collar_axis=None, name="", variables=None):
        """Build a metric from component expressions.

        ``upper`` maps ``(i, j)`` with ``i <= j`` (0-based) to source text, or is
        a full ``dim x dim`` nested list whose upper triangle is read.  Missing
        entries are zero.
        """
        variables = tuple(variables or default_variables(dim))
        if isinstance(upper, dict):
            items = upper
        else:
            items = {(i, j): upper[i][j] for i in range(dim) for j in range(i, dim)}
        exprs = [[None] * dim for _ in range(dim)]
        for (i, j), source in items.items():
            i, j = min(i, j), max(i, j)
            if not (0 <= i < dim and 0 <= j < dim):
                raise DimensionMismatchError(f"component index ({i}, {j}) out of range")
            exprs[i][j] = exprs[j][i] = parse(str(source), variables)
        zero = parse("0", variables)
        exprs = tuple(tuple(e if e is not None else zero for e in row) for row in exprs)
        comps = tuple(
            tuple(
                _constant_component(e.evaluate([0.0] * dim)) if e.is_constant else _expression_component(e)
                for e in row
            )
            for row in exprs
        )
        return cls(dim, tuple(domain), comps, collar_axis, name, exprs)

    # -- evaluation --------------------------------------------------------

    def _check_point(self, point):
        x = np.asarray(point, dtype=float).ravel()
        if x.shape[0] != self.dim:
            raise DimensionMismatchError(f"expected a point with {self.dim} coordinates")
        return x

    def component_grid(self, env):
        n = self.dim
        out = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                out[i][j] = out[j][i] = self.components[i][j](env)
        return out

    def value(self, point) -> np.ndarray:
        x = self._check_point(point)
        grid = self.component_grid(list(x))
        return np.array([[float(getattr(c, "value", c)) for c in row] for row in grid])

    def jets(self, point):
        """Metric, first and second derivatives at ``point``.

        Returns ``(G, dG, ddG)`` with ``dG[i, j, k] = d_k g_ij`` and
        ``ddG[i, j, k, l] = d_k d_l g_ij``.
        """
        x = self._check_point(point)
        n = self.dim
        env = [Jet2.variable(x[k], k, n) for k in range(n)]
        grid = self.component_grid(env)
        G = np.empty((n, n))
        dG = np.zeros((n, n, n))
        ddG = np.zeros((n, n, n, n))
        for i in range(n):
            for j in range(i, n):
                c = grid[i][j]
                if isinstance(c, Jet2):
                    G[i, j] = G[j, i] = c.value
                    dG[i, j] = dG[j, i] = c.grad
                    ddG[i, j] = ddG[j, i] = c.hess
                else:
                    G[i, j] = G[j, i] = float(c)
        return G, dG, ddG

    def sample_points(self, per_axis=3, margin=0.0):
        axes = []
        for lo, hi in self.domain:
            pad = margin * (hi - lo)
            axes.append(np.linspace(lo + pad, hi - pad, per_axis) if hi > lo else np.array([lo]))
        return [np.array(p) for p in itertools.product(*axes)]

    def validate(self, per_axis=3, fermi_tol=FERMI_TOL):
        """Positive definiteness (and Fermi form, for collar charts) on a sample grid."""
        for p in self.sample_points(per_axis):
            G = self.value(p)
            ev = np.linalg.eigvalsh(0.5 * (G + G.T))
            if ev[0] <= 0:
                raise SingularMetricError(f"metric {self.name!r} is not positive definite at {p.tolist()}")
            if self.collar_axis is not None:
                check_fermi(G, self.collar_axis, fermi_tol, p)
        return True

    def with_name(self, name):
        return ChartMetric(self.dim, self.domain, self.components, self.collar_axis, name, self.expressions)


def check_fermi(G, axis, tol=FERMI_TOL, point=None):
    row = G[axis].copy()
    row[axis] -= 1.0
    err = float(np.max(np.abs(row)))
    if err > tol:
        where = "" if point is None else f" at {np.asarray(point).tolist()}"
        raise CollarError(f"metric is not in Fermi form{where} (deviation {err:.3e})")
    return err


def orthonormal_frame(G) -> np.ndarray:
    """Columns orthonormal for ``G``: ``E = L^{-T}`` from ``G = L L^T``."""
    try:
        L = np.linalg.cholesky(np.asarray(G, dtype=float))
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError("metric is not positive definite") from exc
    n = L.shape[0]
    return scipy.linalg.solve_triangular(L, np.eye(n), lower=True).T


# --- connection and curvature ----------------------------------------------


def _lowered_christoffel(dG):
    # Gamma_{l,ij} = (d_i g_jl + d_j g_il - d_l g_ij) / 2, with dG[a, b, c] = d_c g_ab
    return 0.5 * (
        np.einsum("jli->lij", dG) + np.einsum("ilj->lij", dG) - np.einsum("ijl->lij", dG)
    )


def _inverse(G):
    try:
        Ginv = np.linalg.inv(G)
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError("metric is singular") from exc
    if not np.all(np.isfinite(Ginv)) or np.linalg.cond(G) > 1e14:
        raise SingularMetricError("metric is numerically singular")
    return Ginv


def christoffel_from_jets(G, dG):
    """``Gamma[k, i, j]`` = Christoffel symbol of the second kind."""
    return np.einsum("kl,lij->kij", _inverse(G), _lowered_christoffel(dG))


def riemann_from_jets(G, dG, ddG) -> np.ndarray:
    """Fully lowered curvature components (unvalidated)."""
    Ginv = _inverse(G)
    low = _lowered_christoffel(dG)
    Gam = np.einsum("kl,lij->kij", Ginv, low)
    dlow = 0.5 * (
        np.einsum("jlim->lijm", ddG) + np.einsum("iljm->lijm", ddG) - np.einsum("ijlm->lijm", ddG)
    )
    dGinv = -np.einsum("ka,abm,bl->klm", Ginv, dG, Ginv)
    # dGam[k, i, j, m] = d_m Gamma^k_ij
    dGam = np.einsum("klm,lij->kijm", dGinv, low) + np.einsum("kl,lijm->kijm", Ginv, dlow)
    # R(d_i, d_j) d_k = up[l, i, j, k] d_l
    up = (
        np.einsum("ljki->lijk", dGam)
        - np.einsum("likj->lijk", dGam)
        + np.einsum("lip,pjk->lijk", Gam, Gam)
        - np.einsum("ljp,pik->lijk", Gam, Gam)
    )
    return -np.einsum("lm,mijk->ijkl", G, up)


def christoffel(g: ChartMetric, p) -> np.ndarray:
    G, dG, _ = g.jets(p)
    return christoffel_from_jets(G, dG)


def riemann(g: ChartMetric, p, tol=1e-8) -> AlgebraicCurvatureTensor:
    """Curvature tensor at ``p`` in coordinate components; symmetries are
    checked at relative tolerance ``tol`` and then projected exactly."""
    G, dG, ddG = g.jets(p)
    return AlgebraicCurvatureTensor.from_components(riemann_from_jets(G, dG, ddG), tol)


@dataclass(frozen=True, eq=False)
class PointGeometry:
    point: np.ndarray
    metric_value: SymmetricForm
    christoffel: np.ndarray
    riemann: AlgebraicCurvatureTensor

    def orthonormal_riemann(self):
        """Curvature components in the Cholesky orthonormal frame."""
        return self.riemann.in_basis(orthonormal_frame(self.metric_value.entries))


def point_geometry(g: ChartMetric, p, tol=1e-8) -> PointGeometry:
    G, dG, ddG = g.jets(p)
    R = AlgebraicCurvatureTensor.from_components(riemann_from_jets(G, dG, ddG), tol)
    return PointGeometry(np.asarray(p, dtype=float), SymmetricForm(G), christoffel_from_jets(G, dG), R)


def m_intermediate_min(g: ChartMetric, p, m: int, opts: ConeOptions | None = None) -> ConeVerdict:
    G, dG, ddG = g.jets(p)
    R = AlgebraicCurvatureTensor.from_components(riemann_from_jets(G, dG, ddG))
    return cone_min(R, m, opts, metric=G)


# --- boundary geometry -----------------------------------------------------


def _tangential(g):
    return [k for k in range(g.dim) if k != g.collar_axis]


def _boundary_point(g, q, level_set):
    if g.collar_axis is None:
        raise CollarError("metric has no collar axis")
    q = np.asarray(q, dtype=float).ravel()
    if q.shape[0] != g.dim:
        raise DimensionMismatchError(f"expected a point with {g.dim} coordinates")
    if not level_set and q[g.collar_axis] != 0.0:
        raise CollarError(f"point {q.tolist()} is not on the boundary face rho = 0")
    return q


def second_fundamental_form(g: ChartMetric, q, level_set=False) -> SymmetricForm:
    """``h = -D^2 rho`` on the tangential coordinate directions at ``q``.

    In a collar chart ``rho`` is a coordinate, so ``-D^2 rho(d_a, d_b) =
    Gamma^rho_ab``.  With ``level_set=True`` the point may lie on any level
    ``rho = const`` (the level hypersurface is then the one measured).
    """
    q = _boundary_point(g, q, level_set)
    G, dG, _ = g.jets(q)
    check_fermi(G, g.collar_axis, 1e-10, q)
    Gam = christoffel_from_jets(G, dG)
    t = _tangential(g)
    return SymmetricForm(Gam[g.collar_axis][np.ix_(t, t)])


def second_fundamental_form_direct(g: ChartMetric, q, level_set=False) -> SymmetricForm:
    """``h(X, Y) = g(nu, D_X Y)`` with ``nu`` the unit gradient of ``rho``.

    Does not assume Fermi form; used as an independent check of
    :func:`second_fundamental_form`.
    """
    q = _boundary_point(g, q, level_set)
    G, dG, _ = g.jets(q)
    Ginv = _inverse(G)
    nu = Ginv[:, g.collar_axis] / np.sqrt(Ginv[g.collar_axis, g.collar_axis])
    low = _lowered_christoffel(dG)
    t = _tangential(g)
    return SymmetricForm(np.einsum("k,kab->ab", nu, low)[np.ix_(t, t)])


def level_chart(g: ChartMetric, level=0.0) -> ChartMetric:
    """Induced metric on the level set ``rho = level`` as an ``(n-1)``-chart."""
    if g.collar_axis is None:
        raise CollarError("metric has no collar axis")
    axis = g.collar_axis
    t = _tangential(g)

    def lift(component):
        def restricted(env):
            full = list(env)
            full.insert(axis, level)
            return component(full)

        return restricted

    comps = tuple(tuple(lift(g.components[i][j]) for j in t) for i in t)
    domain = tuple(g.domain[k] for k in t)
    return ChartMetric(g.dim - 1, domain, comps, None, f"{g.name}|rho={level:g}")


def gauss_boundary_curvature(g: ChartMetric, q, level_set=False) -> AlgebraicCurvatureTensor:
    """Intrinsic curvature of the level set through ``q`` (tangential
    coordinate components) from the ambient curvature and ``h``."""
    q = _boundary_point(g, q, level_set)
    t = _tangential(g)
    R = riemann(g, q).entries[np.ix_(t, t, t, t)]
    h = second_fundamental_form(g, q, level_set)
    return AlgebraicCurvatureTensor(R) + kulkarni_nomizu(h, h) * 0.5


def tangential_metric(g: ChartMetric, q) -> SymmetricForm:
    t = _tangential(g)
    return SymmetricForm(g.value(q)[np.ix_(t, t)])


def expression_metric(dim, domain, upper, collar_axis=None, name=""):
    """Shorthand for :meth:`ChartMetric.from_expressions` with ``x1..xn`` variables."""
    return ChartMetric.from_expressions(dim, domain, upper, collar_axis, name)


__all__ = [
    "ChartMetric",
    "Expression",
    "PointGeometry",
    "check_fermi",
    "christoffel",
    "christoffel_from_jets",
    "expression_metric",
    "gauss_boundary_curvature",
    "level_chart",
    "m_intermediate_min",
    "orthonormal_frame",
    "point_geometry",
    "riemann",
    "riemann_from_jets",
    "second_fundamental_form",
    "second_fundamental_form_direct",
    "tangential_metric",
]
