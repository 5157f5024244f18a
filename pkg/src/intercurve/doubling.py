"""Curvature of the doubled manifold near its bent edge, to leading order in ``eps``.

The double is the boundary of the ``eps``-neighbourhood of a slightly
shrunken ``N_1`` inside ``N x I``.  At a point on the bend, parametrized by
the angle ``theta`` of the normal geodesic, the second fundamental form is
``cos(theta) h_bdry`` on the directions tangent to the boundary and
``cos(theta) / eps`` on the remaining direction ``nu``; O(eps) terms are
dropped throughout.  Frames put ``nu`` last.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import parallel_map
from .cone import ConeOptions, cone_min, kn_rank_one_sum, m_positive
from .exceptions import DimensionMismatchError, FrameError, RangeError
from .tensor_core import (
    AlgebraicCurvatureTensor,
    Frame,
    SymmetricForm,
    kulkarni_nomizu,
    partial_sectional_sum,
)

LEADING_ORDER = "leading order"


@dataclass(frozen=True, eq=False)
class DoubleEdgeState:
    boundary_h: SymmetricForm
    ambient_Rm: AlgebraicCurvatureTensor
    theta: float
    epsilon: float
    collar_trim: float = 0.0

    def __post_init__(self):
        h = self.boundary_h if isinstance(self.boundary_h, SymmetricForm) else SymmetricForm(self.boundary_h)
        R = self.ambient_Rm
        if not isinstance(R, AlgebraicCurvatureTensor):
            R = AlgebraicCurvatureTensor.from_components(R)
        object.__setattr__(self, "boundary_h", h)
        object.__setattr__(self, "ambient_Rm", R)
        if h.dim != R.dim - 1:
            raise DimensionMismatchError(f"boundary h has dimension {h.dim}, expected {R.dim - 1}")
        if not self.epsilon > 0:
            raise RangeError(f"epsilon must be positive, got {self.epsilon!r}")
        if not (0.0 <= self.theta <= math.pi / 2 + 1e-15):
            raise RangeError(f"theta must lie in [0, pi/2], got {self.theta!r}")

    @property
    def n(self) -> int:
        return self.ambient_Rm.dim

    def with_epsilon(self, eps):
        return DoubleEdgeState(self.boundary_h, self.ambient_Rm, self.theta, eps, self.collar_trim)


def _normal(n):
    nu = np.zeros(n)
    nu[-1] = 1.0
    return nu


def dn_principal_curvatures(state: DoubleEdgeState) -> np.ndarray:
    """``mu_k cos(theta)`` for the boundary eigenvalues ``mu_k``, then ``cos(theta)/eps``."""
    c = math.cos(state.theta)
    mu = np.linalg.eigvalsh(state.boundary_h.entries)
    return np.append(mu * c, c / state.epsilon)


def _block(H, last, n):
    out = np.zeros((n, n))
    out[: n - 1, : n - 1] = H
    out[-1, -1] = last
    return out


def dn_second_fundamental_form(state: DoubleEdgeState) -> SymmetricForm:
    c = math.cos(state.theta)
    return SymmetricForm(_block(c * state.boundary_h.entries, c / state.epsilon, state.n))


def edge_curvature(state: DoubleEdgeState) -> AlgebraicCurvatureTensor:
    """Gauss equation: ambient curvature plus ``(1/2) h o h``.

    The ambient term is the curvature of ``N`` in the frame where ``nu`` is
    identified with the inward normal of ``N_1``; the interval factor is flat.
    """
    h = dn_second_fundamental_form(state)
    return state.ambient_Rm + kulkarni_nomizu(h, h) * 0.5


@dataclass(frozen=True)
class EdgeDecomposition:
    """Pieces of the partial sum; ``total = ambient + inv_eps + remainder``
    and ``inv_eps_sq`` is the (vanishing) coefficient of ``1/eps^2``."""

    ambient: float
    inv_eps: float
    inv_eps_sq: float
    remainder: float
    total: float
    label: str = LEADING_ORDER


def _check_frame(frame, n):
    if not isinstance(frame, Frame):
        frame = Frame(frame)
    if frame.dim != n:
        raise FrameError(f"frame has dimension {frame.dim}, the edge has dimension {n}")
    return frame


def dn_intermediate_sum(state: DoubleEdgeState, frame, m: int, decompose=False):
    """Partial sectional sum of the edge curvature in ``frame``.

    With ``decompose=True`` returns an :class:`EdgeDecomposition` instead.
    """
    n = state.n
    frame = _check_frame(frame, n)
    total = partial_sectional_sum(edge_curvature(state), frame, m)
    if not decompose:
        return total
    c2 = math.cos(state.theta) ** 2
    H = _block(state.boundary_h.entries, 0.0, n)
    nn = _block(np.zeros((n - 1, n - 1)), 1.0, n)
    amb = partial_sectional_sum(state.ambient_Rm, frame, m)
    lead = c2 * partial_sectional_sum(kulkarni_nomizu(H, nn), frame, m)
    sq = 0.5 * c2 * partial_sectional_sum(kulkarni_nomizu(nn, nn), frame, m)
    rest = 0.5 * c2 * partial_sectional_sum(kulkarni_nomizu(H, H), frame, m)
    return EdgeDecomposition(amb, lead, sq, rest, total)


def leading_coefficient(state: DoubleEdgeState, frame, m: int) -> float:
    """Coefficient of ``1/eps`` via the rank-one closed form."""
    n = state.n
    frame = _check_frame(frame, n)
    H = _block(state.boundary_h.entries, 0.0, n)
    return math.cos(state.theta) ** 2 * kn_rank_one_sum(H, _normal(n), frame, m)


def richardson_fit(f, eps: float, levels: int = 3) -> np.ndarray:
    """Coefficients ``c_k`` of ``sum_k c_k eps^-k`` (``k < levels``) fitted
    through ``f(eps), f(eps/2), ...``."""
    xs = np.array([2.0**j / eps for j in range(levels)])
    ys = np.array([f(1.0 / x) for x in xs])
    V = np.vander(xs, levels, increasing=True)
    return np.linalg.solve(V, ys)


def cancellation_check(state: DoubleEdgeState, frame, m: int):
    """``(relative 1/eps^2 coefficient, fitted 1/eps coefficient)`` from a
    three-level fit at ``state.epsilon``."""
    coef = richardson_fit(lambda e: dn_intermediate_sum(state.with_epsilon(e), frame, m), state.epsilon)
    x_max = 4.0 / state.epsilon
    scale = max(abs(coef[0]), abs(coef[1]) * x_max, 1e-300)
    return abs(coef[2]) * x_max**2 / scale, float(coef[1])


# --- sweep -----------------------------------------------------------------


@dataclass
class EpsilonRow:
    epsilon: float
    worst_margin: float
    worst_theta: float
    worst_point: int
    equator_margin: float
    strict_tol: float = 1e-8

    @property
    def passed(self) -> bool:
        return self.worst_margin > self.strict_tol


@dataclass
class DoublingReport:
    m: int
    rows: list
    boundary_margins: list
    theta_count: int
    points: int
    strict_tol: float
    label: str = LEADING_ORDER
    notes: list = field(default_factory=list)

    @property
    def hypothesis_flag(self) -> bool:
        return min(self.boundary_margins) <= 0

    @property
    def largest_passing_epsilon(self):
        ok = [r.epsilon for r in self.rows if r.passed]
        return max(ok) if ok else None

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def improves(self) -> bool:
        """Worst margin does not decrease as ``eps`` decreases."""
        rows = sorted(self.rows, key=lambda r: -r.epsilon)
        return all(b.worst_margin >= a.worst_margin - 1e-12 for a, b in zip(rows, rows[1:]))


def theta_grid(count=32) -> np.ndarray:
    return np.linspace(0.0, math.pi / 2, count)


def doubling_sweep(boundary_h, ambient, m: int, epsilons=(0.1, 0.05, 0.01), theta_count=32,
                   opts: ConeOptions | None = None, collar_trim=0.0) -> DoublingReport:
    """Frame-minimized edge partial sums over sample points, angles and ``eps``.

    ``boundary_h`` and ``ambient`` are parallel sequences of samples.  A
    sample whose ``h`` is not ``m``-positive is recorded as a hypothesis
    violation; the sweep still runs.  A margin passes when it exceeds
    ``opts.strict_tol``.
    """
    opts = opts or ConeOptions()
    hs = [SymmetricForm(h) for h in boundary_h]
    rms = [R if isinstance(R, AlgebraicCurvatureTensor) else AlgebraicCurvatureTensor.from_components(R)
           for R in ambient]
    if len(hs) != len(rms) or not hs:
        raise DimensionMismatchError("need the same, non-zero number of boundary and ambient samples")
    if not epsilons:
        raise ValueError("epsilon list is empty")
    margins = [m_positive(h, m)[1] for h in hs]
    thetas = theta_grid(theta_count)
    rows = []
    for eps in sorted(epsilons, reverse=True):
        cases = [(k, th) for k in range(len(hs)) for th in thetas]

        def value(case):
            k, th = case
            state = DoubleEdgeState(hs[k], rms[k], float(th), float(eps), collar_trim)
            return cone_min(edge_curvature(state), m, opts).min_value

        vals = np.array(parallel_map(value, cases))
        i = int(np.argmin(vals))
        eq = [v for (k, th), v in zip(cases, vals) if th == thetas[-1]]
        rows.append(EpsilonRow(float(eps), float(vals[i]), float(cases[i][1]), cases[i][0], float(min(eq)),
                                opts.strict_tol))
    return DoublingReport(m, rows, margins, theta_count, len(hs), opts.strict_tol)


def sweep_preset(data, m: int, epsilons=(0.1, 0.05, 0.01), theta_count=32, opts=None) -> DoublingReport:
    return doubling_sweep(data.boundary_h, data.ambient, m, epsilons, theta_count, opts, data.collar_trim)


__all__ = [
    "DoubleEdgeState",
    "DoublingReport",
    "EdgeDecomposition",
    "cancellation_check",
    "dn_intermediate_sum",
    "dn_principal_curvatures",
    "dn_second_fundamental_form",
    "doubling_sweep",
    "edge_curvature",
    "leading_coefficient",
    "richardson_fit",
    "sweep_preset",
    "theta_grid",
]
