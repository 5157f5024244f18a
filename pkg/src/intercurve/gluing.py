"""Gluing a metric ``g`` to a boundary-modified ``g_tilde`` across a collar.

With ``g_tilde = g + rho S`` near the boundary, the glued family is::

    g + chi(lam rho) S / lam                         rho >= exp(-lam^2)
    g_tilde - lam rho^2 beta(log(rho) / lam^2) S     rho <  exp(-lam^2)

It equals ``g_tilde`` for ``rho <= exp(-2 lam^2)`` and ``g`` wherever ``S``
vanishes.  ``S`` is recovered from the two metrics and cut off smoothly at
the edge of the collar.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._parallel import parallel_map
from .cone import ConeOptions, m_positive
from .cutoffs import CutoffBeta, CutoffChi, PiecewisePolynomial, build_beta, build_chi, taper
from .exceptions import CollarError, DimensionMismatchError, GlueError
from .expr import Jet2, apply_function
from .manifold import (
    ChartMetric,
    m_intermediate_min,
    second_fundamental_form,
    tangential_metric,
)

QUADRATURE_NODES = 16
TAPER_START = 0.8
AGREE_TOL = 1e-12


def _value(x):
    return x.value if isinstance(x, Jet2) else float(x)


class TensorField(ChartMetric):
    """Symmetric (0,2) field on a chart; shares the evaluation machinery of
    :class:`ChartMetric` but carries no definiteness requirement."""

    def validate(self, *args, **kwargs):
        return True


# --- extracting S ----------------------------------------------------------


def _check_pair(g: ChartMetric, g_tilde: ChartMetric):
    if g.dim != g_tilde.dim:
        raise DimensionMismatchError("g and g_tilde live on charts of different dimension")
    if g.collar_axis is None or g.collar_axis != g_tilde.collar_axis:
        raise CollarError("g and g_tilde need the same collar axis")
    if g.expressions is None or g_tilde.expressions is None:
        raise GlueError("S extraction needs metrics built from expressions")


def boundary_points(g: ChartMetric, per_axis=3, margin=0.1):
    """Points of the face ``rho = 0`` on a tangential grid."""
    axes = []
    for k, (lo, hi) in enumerate(g.domain):
        if k == g.collar_axis:
            axes.append(np.array([0.0]))
        else:
            pad = margin * (hi - lo)
            axes.append(np.linspace(lo + pad, hi - pad, per_axis) if hi > lo else np.array([lo]))
    return [np.array(p) for p in itertools.product(*axes)]


def boundary_mismatch(g, g_tilde, points=None) -> float:
    points = boundary_points(g, 4, 0.0) if points is None else points
    return max(float(np.max(np.abs(g.value(p) - g_tilde.value(p)))) for p in points)


def _s_component(dt, dg, axis, cut: PiecewisePolynomial, end, nodes, weights):
    if dt.is_constant and dg.is_constant:
        diff = dt.evaluate_on([0.0] * dt.arity) - dg.evaluate_on([0.0] * dg.arity)
        if diff == 0.0:
            return lambda env: 0.0

    def component(env):
        rho = env[axis]
        r = _value(rho)
        if r >= end:
            return 0.0
        total = 0.0
        local = list(env)
        for t, w in zip(nodes, weights):
            local[axis] = rho * t
            total = total + w * (dt.evaluate_on(local) - dg.evaluate_on(local))
        return total * cut.apply(rho)

    return component


def extract_S(g: ChartMetric, g_tilde: ChartMetric, collar_width: float, taper_start=TAPER_START) -> TensorField:
    """``S`` with ``g_tilde = g + rho S`` on the inner collar, tapered to 0 at
    ``rho = collar_width``.

    ``(g_tilde - g) / rho`` is written as the average of ``d_rho (g_tilde - g)``
    along the segment from the boundary, evaluated by Gauss-Legendre
    quadrature; this has no cancellation at tiny ``rho`` and gives the exact
    limit at ``rho = 0``.
    """
    _check_pair(g, g_tilde)
    if not collar_width > 0:
        raise GlueError("collar_width must be positive")
    mismatch = boundary_mismatch(g, g_tilde)
    if mismatch > AGREE_TOL:
        raise GlueError(f"g and g_tilde differ on rho = 0 (max component difference {mismatch:.3e})")
    axis, n = g.collar_axis, g.dim
    x, w = np.polynomial.legendre.leggauss(QUADRATURE_NODES)
    nodes, weights = 0.5 * (x + 1.0), 0.5 * w
    cut = taper(taper_start * collar_width, collar_width)
    comps = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            dt = g_tilde.expressions[i][j].derivative(axis)
            dg = g.expressions[i][j].derivative(axis)
            comps[i][j] = comps[j][i] = _s_component(dt, dg, axis, cut, collar_width, nodes, weights)
    comps = tuple(tuple(row) for row in comps)
    return TensorField(n, g.domain, comps, axis, f"S({g.name},{g_tilde.name})")


# --- the glued family ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GlueSpec:
    g: ChartMetric
    g_tilde: ChartMetric
    S: TensorField
    collar_width: float
    lam: float | None = None
    taper_start: float = TAPER_START
    name: str = ""

    @classmethod
    def build(cls, g, g_tilde, collar_width, lam=None, taper_start=TAPER_START, name=""):
        S = extract_S(g, g_tilde, collar_width, taper_start)
        return cls(g, g_tilde, S, float(collar_width), lam, taper_start, name)

    def with_lambda(self, lam):
        return replace(self, lam=float(lam))

    @property
    def axis(self) -> int:
        return self.g.collar_axis

    def taper_profile(self) -> str:
        lo = self.taper_start * self.collar_width
        return f"quintic smoothstep 1 -> 0 on rho in [{lo:.6g}, {self.collar_width:.6g}]"


def thresholds(lam: float) -> tuple[float, float]:
    """``(exp(-2 lam^2), exp(-lam^2))``."""
    return math.exp(-2.0 * lam * lam), math.exp(-lam * lam)


def _inner(gij, sij, rho, lam, chi):
    if isinstance(sij, float) and sij == 0.0:
        return gij
    return gij + chi.apply(rho * lam) * sij * (1.0 / lam)


def _outer(tij, sij, rho, lam, beta):
    if isinstance(sij, float) and sij == 0.0:
        return tij
    b = beta.apply(apply_function("log", rho) * (1.0 / (lam * lam)))
    return tij - rho * rho * b * sij * lam


def _glued_component(glue, i, j, lam, chi, beta):
    g_ij, t_ij, s_ij = glue.g.components[i][j], glue.g_tilde.components[i][j], glue.S.components[i][j]
    axis = glue.axis
    low, seam = thresholds(lam)

    def component(env):
        rho = env[axis]
        r = _value(rho)
        if r <= low:
            return t_ij(env)
        if r >= seam:
            return _inner(g_ij(env), s_ij(env), rho, lam, chi)
        return _outer(t_ij(env), s_ij(env), rho, lam, beta)

    return component


def _resolve(glue, lam, chi, beta):
    lam = glue.lam if lam is None else lam
    if lam is None or not lam > 0:
        raise GlueError("lambda must be a positive number")
    return float(lam), chi or build_chi(), beta or build_beta()


def glued_metric(glue: GlueSpec, chi: CutoffChi | None = None, beta: CutoffBeta | None = None,
                 lam: float | None = None, check=True) -> ChartMetric:
    """The glued metric for parameter ``lam`` (falls back to ``glue.lam``).

    With ``check`` the result is tested for positive definiteness on the
    standard collar samples; failure raises :class:`GlueError`.
    """
    lam, chi, beta = _resolve(glue, lam, chi, beta)
    n = glue.g.dim
    comps = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            comps[i][j] = comps[j][i] = _glued_component(glue, i, j, lam, chi, beta)
    hat = ChartMetric(n, glue.g.domain, tuple(tuple(r) for r in comps), glue.axis,
                      f"glued[{glue.name or glue.g.name}, lambda={lam:g}]")
    if check:
        for p in collar_samples(glue, lam, boundary_points(glue.g, 2, 0.1)):
            ev = np.linalg.eigvalsh(hat.value(p))
            if ev[0] <= 0:
                raise GlueError(f"glued metric is not positive definite at {p.tolist()} for lambda = {lam:g}")
    return hat


def branch_values(glue: GlueSpec, point, lam=None, chi=None, beta=None):
    """Both branch formulas evaluated at ``point`` regardless of region."""
    lam, chi, beta = _resolve(glue, lam, chi, beta)
    x = [float(v) for v in point]
    rho = x[glue.axis]
    if rho <= 0:
        raise GlueError("branch comparison needs rho > 0")
    G, Gt, S = glue.g.value(x), glue.g_tilde.value(x), glue.S.value(x)
    inner = G + chi(lam * rho) / lam * S
    outer = Gt - lam * rho * rho * beta(math.log(rho) / (lam * lam)) * S
    return inner, outer


# --- sampling --------------------------------------------------------------


def collar_rhos(glue: GlueSpec, lam: float, n_inner=24, n_outer=8, n_far=3):
    """``rho`` values covering every region of the glued metric.

    The outer band ``[exp(-2 lam^2), exp(-lam^2))`` is sampled uniformly in
    ``log rho``; the inner region log-uniformly up to the collar edge, plus a
    few points beyond it.
    """
    lo, hi = glue.g.domain[glue.axis]
    low, seam = thresholds(lam)
    log_outer = np.linspace(-2.0 * lam * lam, -lam * lam, n_outer, endpoint=False)
    outer = np.exp(log_outer[1:]) if n_outer > 1 else np.array([])
    w = glue.collar_width
    inner = np.geomspace(seam, w, n_inner) if n_inner > 1 else np.array([w])
    far = np.linspace(w, min(hi, 1.25 * w), n_far + 1)[1:] if n_far else np.array([])
    rhos = np.concatenate([[0.0, 0.5 * low], outer, inner, far])
    rhos = rhos[(rhos >= lo) & (rhos <= hi)]
    return np.unique(rhos)


def collar_samples(glue: GlueSpec, lam: float, tangential_points, n_inner=24, n_outer=8, n_far=3):
    out = []
    for q in tangential_points:
        for r in collar_rhos(glue, lam, n_inner, n_outer, n_far):
            p = np.array(q, dtype=float)
            p[glue.axis] = r
            out.append(p)
    return out


def region(glue: GlueSpec, lam: float, rho: float) -> str:
    low, seam = thresholds(lam)
    if rho <= low:
        return "tilde"
    if rho < seam:
        return "outer"
    if rho < glue.collar_width:
        return "inner"
    return "exterior"


# --- positivity scan -------------------------------------------------------


@dataclass
class HypothesisCheck:
    m: int
    boundary_margin: float
    g_min: float
    g_tilde_min: float
    boundary_points: int
    interior_points: int
    strict_tol: float

    @property
    def boundary_ok(self) -> bool:
        return self.boundary_margin > 0

    @property
    def g_ok(self) -> bool:
        return self.g_min > self.strict_tol

    @property
    def g_tilde_ok(self) -> bool:
        return self.g_tilde_min > self.strict_tol

    @property
    def ok(self) -> bool:
        return self.boundary_ok and self.g_ok and self.g_tilde_ok

    def violations(self) -> list[str]:
        out = []
        if not self.boundary_ok:
            out.append(f"h_g - h_g_tilde is not {self.m}-positive (margin {self.boundary_margin:.6g})")
        if not self.g_ok:
            out.append(f"g fails positive {self.m}-intermediate curvature (min {self.g_min:.6g})")
        if not self.g_tilde_ok:
            out.append(f"g_tilde fails positive {self.m}-intermediate curvature (min {self.g_tilde_min:.6g})")
        return out


@dataclass
class LambdaRow:
    lam: float
    min_value: float
    worst_point: np.ndarray
    worst_region: str
    inner_min: float
    outer_min: float
    points: int

    @property
    def deficit(self) -> float:
        return max(0.0, -self.min_value)


@dataclass
class ScanReport:
    m: int
    rows: list
    hypotheses: HypothesisCheck
    lambda0: float | None
    strict_tol: float
    taper: str
    chi: str
    beta: str

    @property
    def hypothesis_flag(self) -> bool:
        return not self.hypotheses.ok

    @property
    def deficit_curve(self):
        return [(r.lam, r.deficit) for r in self.rows]


def check_hypotheses(glue: GlueSpec, m: int, tangential_points, opts: ConeOptions | None = None,
                     n_rho=8) -> HypothesisCheck:
    opts = opts or ConeOptions()
    margins = []
    for q in tangential_points:
        diff = np.asarray(second_fundamental_form(glue.g, q)) - np.asarray(second_fundamental_form(glue.g_tilde, q))
        margins.append(m_positive(diff, m, metric=np.asarray(tangential_metric(glue.g, q)))[1])
    lo, hi = glue.g.domain[glue.axis]

    def grid(top):
        out = []
        for q in tangential_points:
            for r in np.linspace(lo, min(hi, top), n_rho):
                p = np.array(q, dtype=float)
                p[glue.axis] = r
                out.append(p)
        return out

    # g_tilde only enters where g_tilde = g + rho S holds untapered
    pts, near = grid(1.25 * glue.collar_width), grid(glue.taper_start * glue.collar_width)
    g_min = min(parallel_map(lambda p: m_intermediate_min(glue.g, p, m, opts).min_value, pts))
    gt_min = min(parallel_map(lambda p: m_intermediate_min(glue.g_tilde, p, m, opts).min_value, near))
    return HypothesisCheck(m, float(min(margins)), g_min, gt_min, len(tangential_points), len(pts), opts.strict_tol)


def inner_profile(glue: GlueSpec, m: int, lambdas, rho: float, tangential_points=None,
                  opts: ConeOptions | None = None, chi=None, beta=None):
    """Smallest sampled cone minimum of the glued metric on the level ``rho``
    for each ``lam``; every ``lam`` must put ``rho`` in the inner region."""
    opts = opts or ConeOptions()
    tangential_points = tangential_points or boundary_points(glue.g, 2, 0.1)
    out = []
    for lam in lambdas:
        if region(glue, lam, rho) != "inner":
            raise GlueError(f"rho = {rho:g} is not in the inner region for lambda = {lam:g}")
        hat = glued_metric(glue, chi, beta, lam, check=False)
        vals = []
        for q in tangential_points:
            p = np.array(q, dtype=float)
            p[glue.axis] = rho
            vals.append(m_intermediate_min(hat, p, m, opts).min_value)
        out.append((float(lam), min(vals)))
    return out


def _empirical_lambda0(rows, strict_tol):
    lam0 = None
    for row in reversed(rows):
        if row.min_value > strict_tol:
            lam0 = row.lam
        else:
            break
    return lam0


def positivity_scan(glue: GlueSpec, m: int, lambda_grid=(1, 2, 4, 8, 12), tangential_points=None,
                    opts: ConeOptions | None = None, chi=None, beta=None,
                    n_inner=24, n_outer=8, n_far=3) -> ScanReport:
    """Sampled cone minima of the glued metric for each ``lam`` in the grid.

    The empirical ``lambda0`` is the least grid value from which on every
    sampled minimum is positive (``None`` if the largest grid value fails).
    Unmet hypotheses are recorded, not raised.
    """
    opts = opts or ConeOptions()
    chi, beta = chi or build_chi(), beta or build_beta()
    grid = sorted(float(x) for x in lambda_grid)
    if not grid:
        raise ValueError("lambda grid is empty")
    tangential_points = tangential_points or boundary_points(glue.g, 2, 0.1)
    hyp = check_hypotheses(glue, m, tangential_points, opts)
    rows = []
    for lam in grid:
        hat = glued_metric(glue, chi, beta, lam, check=False)
        pts = collar_samples(glue, lam, tangential_points, n_inner, n_outer, n_far)
        vals = parallel_map(lambda p: m_intermediate_min(hat, p, m, opts).min_value, pts)
        regions = [region(glue, lam, p[glue.axis]) for p in pts]
        k = int(np.argmin(vals))
        inner = [v for v, r in zip(vals, regions) if r in ("inner", "exterior")]
        outer = [v for v, r in zip(vals, regions) if r in ("outer", "tilde")]
        rows.append(LambdaRow(lam, float(vals[k]), pts[k], regions[k],
                              min(inner, default=math.inf), min(outer, default=math.inf), len(pts)))
    return ScanReport(m, rows, hyp, _empirical_lambda0(rows, opts.strict_tol), opts.strict_tol,
                      glue.taper_profile(), repr(chi), repr(beta))


# --- pointwise comparison --------------------------------------------------


@dataclass
class SlackRow:
    point: np.ndarray
    region: str
    hat_min: float
    g_min: float
    g_tilde_min: float

    @property
    def slack(self) -> float:
        return self.hat_min - min(self.g_min, self.g_tilde_min)


@dataclass
class Corollary43Report:
    m: int
    lam: float
    epsilon: float
    rows: list = field(default_factory=list)

    @property
    def worst(self) -> SlackRow:
        return min(self.rows, key=lambda r: r.slack)

    @property
    def worst_slack(self) -> float:
        return self.worst.slack

    @property
    def failures(self) -> list:
        return [r for r in self.rows if r.slack < -self.epsilon]

    @property
    def passed(self) -> bool:
        return not self.failures


def check_corollary43(glue: GlueSpec, m: int, lam: float, epsilon: float, sample_points=None,
                      opts: ConeOptions | None = None, chi=None, beta=None) -> Corollary43Report:
    """At every sample, the frame-minimized partial sum of the glued metric
    against the smaller of those of ``g`` and ``g_tilde``, less ``epsilon``."""
    opts = opts or ConeOptions()
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    hat = glued_metric(glue, chi, beta, lam, check=False)
    if sample_points is None:
        sample_points = collar_samples(glue, lam, boundary_points(glue.g, 2, 0.1))

    def row(p):
        return SlackRow(
            np.asarray(p, dtype=float),
            region(glue, lam, float(p[glue.axis])),
            m_intermediate_min(hat, p, m, opts).min_value,
            m_intermediate_min(glue.g, p, m, opts).min_value,
            m_intermediate_min(glue.g_tilde, p, m, opts).min_value,
        )

    return Corollary43Report(m, float(lam), float(epsilon), parallel_map(row, sample_points))


# --- C^alpha convergence ---------------------------------------------------


@dataclass
class HolderRow:
    lam: float
    sup: float
    seminorm: float
    bound: float

    @property
    def distance(self) -> float:
        return self.sup + self.seminorm


@dataclass
class HolderTable:
    alpha: float
    rows: list

    @property
    def strictly_decreasing(self) -> bool:
        d = [r.distance for r in self.rows]
        return all(b < a for a, b in zip(d, d[1:]))

    @property
    def within_bound(self) -> bool:
        return all(r.sup <= r.bound for r in self.rows)


def holder_points(glue: GlueSpec, tangential_points=None, n_rho=160):
    """Points along the collar direction, log-spaced towards the boundary."""
    tangential_points = tangential_points or boundary_points(glue.g, 1, 0.0)
    lo, hi = glue.g.domain[glue.axis]
    top = min(hi, 1.25 * glue.collar_width)
    rhos = np.unique(np.concatenate([[0.0], np.geomspace(1e-6 * top, top, n_rho)]))
    out = []
    for q in tangential_points:
        for r in rhos:
            p = np.array(q, dtype=float)
            p[glue.axis] = r
            out.append(p)
    return out


def holder_convergence(glue: GlueSpec, alpha: float, lambdas=(2, 4, 8, 16), points=None,
                       chi=None, beta=None) -> HolderTable:
    """Empirical C^alpha size of ``glued - g`` in chart coordinates.

    The seminorm is the largest difference quotient over all pairs of sample
    points; the distance column adds the sup norm.  ``bound`` is
    ``max chi * max|S| / lam``.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    lams = [float(x) for x in lambdas]
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise ValueError("lambda list must be strictly increasing")
    chi, beta = chi or build_chi(), beta or build_beta()
    points = points if points is not None else holder_points(glue)
    X = np.array(points, dtype=float)
    G = np.array([glue.g.value(p) for p in X])
    s_max = max(float(np.max(np.abs(glue.S.value(p)))) for p in X)
    dist = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
    mask = dist > 0
    rows = []
    for lam in lams:
        hat = glued_metric(glue, chi, beta, lam, check=False)
        D = np.array([hat.value(p) for p in X]) - G
        sup = float(np.max(np.abs(D)))
        diff = np.max(np.abs(D[:, None] - D[None, :]), axis=(2, 3))
        semi = float(np.max(diff[mask] / dist[mask] ** alpha)) if mask.any() else 0.0
        rows.append(HolderRow(lam, sup, semi, chi.c_infinity_value * s_max / lam))
    return HolderTable(float(alpha), rows)


__all__ = [
    "Corollary43Report",
    "GlueSpec",
    "HolderTable",
    "HypothesisCheck",
    "ScanReport",
    "TensorField",
    "boundary_points",
    "branch_values",
    "check_corollary43",
    "check_hypotheses",
    "collar_samples",
    "extract_S",
    "glued_metric",
    "holder_convergence",
    "inner_profile",
    "positivity_scan",
    "thresholds",
]
