"""Named geometries used by the command line and the acceptance checks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import ConfigError
from .manifold import ChartMetric, orthonormal_frame, riemann, second_fundamental_form

# Round cap of S^3 of radius CAP_RADIUS about a pole; rho is the distance to
# the boundary sphere, so the cap metric is d rho^2 + sin^2(r0 - rho) sigma.
CAP_RADIUS = math.pi / 4
CAP_COLLAR = 0.6
CAP_C_POSITIVE = 0.01
CAP_C_NEGATIVE = 0.5
THETA_RANGE = (0.6, math.pi - 0.6)
PHI_RANGE = (0.0, 2 * math.pi)


def round_sphere(n: int) -> ChartMetric:
    """Unit ``S^n`` in nested polar angles ``x1..xn``."""
    upper = {}
    factor = "1"
    for k in range(n):
        upper[(k, k)] = factor
        factor = f"{factor}*sin(x{k + 1})^2" if k else f"sin(x{k + 1})^2"
    domain = [(0.4, math.pi - 0.4)] * (n - 1) + [(0.0, 2 * math.pi)]
    return ChartMetric.from_expressions(n, domain, upper, name=f"round-s{n}")


def flat_torus(n: int = 3) -> ChartMetric:
    upper = {(k, k): "1" for k in range(n)}
    return ChartMetric.from_expressions(n, [(0.0, 1.0)] * n, upper, name=f"flat-t{n}")


def unit_ball_collar(n: int = 3, depth=0.5) -> ChartMetric:
    """Flat unit ball near its boundary: ``rho = 1 - r``, angles on ``S^{n-1}``."""
    sphere = round_sphere(n - 1)
    upper = {(0, 0): "1"}
    for k in range(n - 1):
        src = str(sphere.expressions[k][k])
        for j in range(n - 1, 0, -1):
            src = src.replace(f"x{j}", f"x{j + 1}")
        upper[(k + 1, k + 1)] = f"(1 - x1)^2*{src}"
    domain = [(0.0, depth)] + list(sphere.domain)
    return ChartMetric.from_expressions(n, domain, upper, collar_axis=0, name=f"unit-ball{n}")


def _cap_components(r0, c):
    scale = "" if c == 0 else f"*(1 + {c!r}*x1)"
    return {
        (0, 0): "1",
        (1, 1): f"sin({r0!r} - x1)^2{scale}",
        (2, 2): f"sin({r0!r} - x1)^2*sin(x2)^2{scale}",
    }


def cap_collar(r0=CAP_RADIUS, c=0.0, depth=None, name=None) -> ChartMetric:
    """Collar chart of a round cap of ``S^3``; with ``c != 0`` the tangential
    block is multiplied by ``1 + c rho``."""
    depth = r0 - 0.05 if depth is None else depth
    domain = [(0.0, depth), THETA_RANGE, PHI_RANGE]
    return ChartMetric.from_expressions(3, domain, _cap_components(r0, c), collar_axis=0,
                                        name=name or f"cap(r0={r0:g}, c={c:g})")


def cap_glue(c: float, r0=CAP_RADIUS, collar_width=CAP_COLLAR, name=""):
    from .gluing import GlueSpec

    g = cap_collar(r0, 0.0, name="cap")
    gt = cap_collar(r0, c, name=f"cap*(1{c:+g}rho)")
    return GlueSpec.build(g, gt, collar_width, name=name or f"cap c={c:g}")


@dataclass(frozen=True)
class DoublingData:
    """Boundary and ambient samples for the doubling sweep.

    ``boundary_h[k]`` is the second fundamental form of the trimmed boundary
    in an orthonormal tangential frame; ``ambient[k]`` the curvature of ``N``
    in the orthonormal frame extended by the inward normal as last vector.
    """

    name: str
    boundary_h: tuple
    ambient: tuple
    points: tuple
    collar_trim: float = 0.0


def doubling_from_collar(g: ChartMetric, trim: float, points, name="") -> DoublingData:
    axis = g.collar_axis
    t = [k for k in range(g.dim) if k != axis]
    hs, rms, pts = [], [], []
    for q in points:
        p = np.array(q, dtype=float)
        p[axis] = trim
        G = g.value(p)
        Et = orthonormal_frame(G[np.ix_(t, t)])
        h = np.asarray(second_fundamental_form(g, p, level_set=True))
        hs.append(Et.T @ h @ Et)
        E = np.zeros((g.dim, g.dim))
        E[np.ix_(t, range(g.dim - 1))] = Et
        E[axis, g.dim - 1] = 1.0
        rms.append(riemann(g, p).in_basis(E))
        pts.append(p)
    return DoublingData(name or g.name, tuple(hs), tuple(rms), tuple(pts), trim)


def double_cap(trim_fraction=0.05) -> DoublingData:
    g = cap_collar(CAP_RADIUS, 0.0, name="cap")
    qs = [[0.0, th, ph] for th in np.linspace(*THETA_RANGE, 3) for ph in (0.0, math.pi)]
    return doubling_from_collar(g, trim_fraction * CAP_COLLAR, qs, "double-cap")


def slab_geodesic(n=3) -> DoublingData:
    from .tensor_core import AlgebraicCurvatureTensor

    flat = AlgebraicCurvatureTensor.zero(n)
    pts = tuple(np.array([0.0] + [float(k)] * (n - 1)) for k in range(3))
    return DoublingData("slab-geodesic", tuple(np.zeros((n - 1, n - 1)) for _ in pts),
                        tuple(flat for _ in pts), pts)


@dataclass(frozen=True)
class Preset:
    name: str
    kind: str  # "metric", "glue" or "double"
    description: str
    build: Callable


PRESETS = {
    p.name: p
    for p in [
        Preset("sphere4", "metric", "unit round S^4 in polar angles", lambda: round_sphere(4)),
        Preset("round-s2", "metric", "unit round S^2 in polar angles", lambda: round_sphere(2)),
        Preset("flat-torus", "metric", "flat 3-torus (zero curvature)", lambda: flat_torus(3)),
        Preset("unit-ball", "metric", "flat unit 3-ball near its boundary", lambda: unit_ball_collar(3)),
        Preset("cap", "metric", "round cap of S^3, radius pi/4, collar chart", lambda: cap_collar()),
        Preset("cap-positive-control", "glue",
               f"cap of S^3 glued to g(1 + {CAP_C_POSITIVE:g} rho) on the tangential block",
               lambda: cap_glue(CAP_C_POSITIVE, name="cap-positive-control")),
        Preset("cap-negative-control", "glue",
               f"cap of S^3 glued to g(1 - {CAP_C_NEGATIVE:g} rho) on the tangential block",
               lambda: cap_glue(-CAP_C_NEGATIVE, name="cap-negative-control")),
        Preset("cap-trivial", "glue", "cap of S^3 glued to itself", lambda: cap_glue(0.0, name="cap-trivial")),
        Preset("double-cap", "double", "boundary data of the round cap, trimmed collar", double_cap),
        Preset("slab-geodesic", "double", "flat slab with totally geodesic boundary", slab_geodesic),
    ]
}


def get_preset(name: str, kind: str | None = None, path="geometry.preset"):
    try:
        preset = PRESETS[name]
    except KeyError:
        raise ConfigError(path, f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}") from None
    if kind is not None and preset.kind != kind:
        raise ConfigError(path, f"preset {name!r} is a {preset.kind} preset, this command needs {kind}")
    return preset.build()
