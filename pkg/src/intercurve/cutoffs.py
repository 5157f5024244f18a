"""C^2 piecewise-polynomial cutoff profiles used by the gluing construction."""
from __future__ import annotations

import bisect
import functools
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .expr import Jet2

SAMPLES = 10_000


class PiecewisePolynomial:
    """Polynomials on consecutive intervals split at ``breaks``.

    ``pieces[k]`` is used on ``[breaks[k-1], breaks[k])`` with the first piece
    extending to ``-inf`` and the last to ``+inf``.
    """

    def __init__(self, breaks, pieces):
        if len(pieces) != len(breaks) + 1:
            raise ValueError("need exactly one more piece than break points")
        self.breaks = [float(b) for b in breaks]
        self.pieces = [p if isinstance(p, Polynomial) else Polynomial(p) for p in pieces]
        self._d1 = [p.deriv(1) for p in self.pieces]
        self._d2 = [p.deriv(2) for p in self.pieces]

    def _index(self, s):
        return bisect.bisect_right(self.breaks, s)

    def __call__(self, s):
        return float(self.pieces[self._index(s)](s))

    def derivatives(self, s):
        k = self._index(s)
        return float(self.pieces[k](s)), float(self._d1[k](s)), float(self._d2[k](s))

    def one_sided(self, s, side):
        """Value and two derivatives of the piece left (``side=-1``) or right of ``s``."""
        k = self._index(s)
        if side < 0 and k > 0 and s in self.breaks:
            k -= 1
        return float(self.pieces[k](s)), float(self._d1[k](s)), float(self._d2[k](s))

    def apply(self, x):
        """Compose with a float or a :class:`Jet2`."""
        if isinstance(x, Jet2):
            return x.apply(*self.derivatives(x.value))
        return self(float(x))

    def continuity_defect(self):
        """Largest jump of value, first or second derivative across the breaks."""
        worst = 0.0
        for b in self.breaks:
            left, right = np.array(self.one_sided(b, -1)), np.array(self.one_sided(b, +1))
            worst = max(worst, float(np.max(np.abs(left - right))))
        return worst


def smoothstep(order=5) -> Polynomial:
    """Polynomial rising from 0 to 1 on ``[0, 1]`` with flat ends.

    ``order=5`` is C^2 at the ends, ``order=7`` is C^3.
    """
    if order == 5:
        return Polynomial([0, 0, 0, 10, -15, 6])
    if order == 7:
        return Polynomial([0, 0, 0, 0, 35, -84, 70, -20])
    raise ValueError("smoothstep order must be 5 or 7")


@dataclass(frozen=True)
class ChiShape:
    """``chi''`` on ``[1/2, 1]`` is ``-(1-u)(1 + b u + c u^2)`` with
    ``u = 2s - 1`` and ``b = 3 - c/2``, which forces ``chi'(1) = 0``."""

    c: float = 0.0


@dataclass(frozen=True)
class BetaShape:
    order: int = 5


class CutoffChi(PiecewisePolynomial):
    """``chi(s) = s - s^2/2`` on ``[0, 1/2]``, strictly concave on ``[0, 1)``,
    constant for ``s >= 1``."""

    def __init__(self, shape: ChiShape = ChiShape()):
        self.shape = shape
        c = float(shape.c)
        b = 3.0 - 0.5 * c
        u = Polynomial([-1.0, 2.0])
        curvature = -(1 - u) * (1 + b * u + c * u * u)
        slope = curvature.integ(1, k=[0.5], lbnd=0.5)
        middle = slope.integ(1, k=[0.375], lbnd=0.5)
        first = Polynomial([0.0, 1.0, -0.5])
        self.c_infinity_value = float(middle(1.0))
        super().__init__([0.5, 1.0], [first, middle, Polynomial([self.c_infinity_value])])
        self._validate()

    def _validate(self):
        s = np.linspace(0.0, 1.0, SAMPLES, endpoint=False)
        d2 = np.array([self.derivatives(x)[2] for x in s])
        if not np.all(d2 < 0):
            bad = s[np.argmax(d2 >= 0)]
            raise ValueError(f"chi shape {self.shape} violates chi'' < 0 (at s = {bad:.4f})")
        if self.continuity_defect() > 1e-12:
            raise ValueError("chi is not C^2 at its break points")

    def __repr__(self):
        return f"CutoffChi({self.shape})"


class CutoffBeta(PiecewisePolynomial):
    """0 on ``(-inf, -2]``, 1/2 on ``[-1, 0]``, a smoothstep of height 1/2 between."""

    def __init__(self, shape: BetaShape = BetaShape()):
        self.shape = shape
        step = smoothstep(shape.order)
        middle = 0.5 * step(Polynomial([2.0, 1.0]))
        super().__init__([-2.0, -1.0], [Polynomial([0.0]), middle, Polynomial([0.5])])
        s = np.linspace(-3.0, 0.0, SAMPLES)
        vals = np.array([self(x) for x in s])
        if np.any(vals < 0) or np.any(vals > 1) or self.continuity_defect() > 1e-12:
            raise ValueError(f"beta shape {shape} is not an admissible cutoff")

    def __repr__(self):
        return f"CutoffBeta({self.shape})"


@functools.lru_cache(maxsize=32)
def _chi(shape):
    return CutoffChi(shape)


@functools.lru_cache(maxsize=32)
def _beta(shape):
    return CutoffBeta(shape)


def build_chi(shape: ChiShape | None = None) -> CutoffChi:
    """Cached per shape; validation samples ``chi''`` densely."""
    return _chi(shape or ChiShape())


def build_beta(shape: BetaShape | None = None) -> CutoffBeta:
    return _beta(shape or BetaShape())


def taper(start: float, end: float, order=5) -> PiecewisePolynomial:
    """1 up to ``start``, 0 from ``end`` on, smoothstep in between."""
    if not (0 <= start < end):
        raise ValueError("taper needs 0 <= start < end")
    step = smoothstep(order)
    # evaluated in the local variable so the ends are hit exactly
    down = Polynomial((1.0 - step).coef, domain=[start, end], window=[0.0, 1.0])
    return PiecewisePolynomial([start, end], [Polynomial([1.0]), down, Polynomial([0.0])])
