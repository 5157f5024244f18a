"""``intercurve`` command line.

Exit codes: 0 every check passed, 1 usage or configuration error,
2 a hypothesis of the check is violated (the run still completes),
3 a check failed.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .cone import ConeOptions, cone_min, prop31_trials
from .config import COMMANDS, RunConfig
from .cutoffs import BetaShape, ChiShape, build_beta, build_chi
from .doubling import doubling_sweep
from .exceptions import ConfigError, IntercurveError, ParseError
from .expr import default_variables, parse
from .gluing import (
    GlueSpec,
    boundary_points,
    check_corollary43,
    collar_samples,
    holder_convergence,
    holder_points,
    positivity_scan,
)
from .manifold import ChartMetric, orthonormal_frame, point_geometry
from .presets import PRESETS, DoublingData, doubling_from_collar, get_preset
from .report import Report
from .tensor_core import constant_curvature, validate_curvature

EXIT_PASS, EXIT_USAGE, EXIT_HYPOTHESIS, EXIT_FAILED = 0, 1, 2, 3


class Outcome:
    """Accumulates pass / hypothesis / failure over the parts of a run."""

    def __init__(self):
        self.flagged = False
        self.failed = False

    def record(self, ok=True, hypothesis_ok=True):
        self.failed |= not ok
        self.flagged |= not hypothesis_ok

    def code(self):
        # an unmet hypothesis explains a failure, so it takes precedence
        if self.flagged:
            return "hypothesis-violated", EXIT_HYPOTHESIS
        if self.failed:
            return "failed", EXIT_FAILED
        return "pass", EXIT_PASS


# --- geometry from the config ----------------------------------------------


def _chart_metric(chart, key, path):
    dim = chart.get("dim")
    if dim is None:
        raise ConfigError(f"{path}.dim", "required")
    domain = chart.get("domain")
    if domain is None or len(domain) != dim:
        raise ConfigError(f"{path}.domain", f"expected {dim} intervals")
    rows = chart.get(key)
    if rows is None:
        raise ConfigError(f"{path}.{key}", "required")
    if len(rows) != dim:
        raise ConfigError(f"{path}.{key}", f"expected a {dim} x {dim} matrix")
    variables = tuple(chart.get("variables") or default_variables(dim))
    if len(variables) != dim:
        raise ConfigError(f"{path}.variables", f"expected {dim} names")
    axis = chart.get("collar_axis")
    if axis is not None and axis >= dim:
        raise ConfigError(f"{path}.collar_axis", f"must be < dim = {dim}")
    upper = {}
    for i in range(dim):
        for j in range(i, dim):
            src = str(rows[i][j])
            try:
                parse(src, variables)
                if str(rows[j][i]) != src:
                    parse(str(rows[j][i]), variables)
            except ParseError as exc:
                raise ConfigError(f"{path}.{key}[{i}][{j}]", str(exc)) from None
            upper[(i, j)] = src
    return ChartMetric.from_expressions(dim, domain, upper, axis, key, variables)


def metric_source(cfg):
    geo = cfg["geometry"]
    if geo.get("preset"):
        return get_preset(geo["preset"], "metric")
    if "chart" in geo:
        return _chart_metric(geo["chart"], "g", "geometry.chart")
    raise ConfigError("geometry", "needs a preset or a chart")


def glue_source(cfg):
    geo = cfg["geometry"]
    if geo.get("preset"):
        return get_preset(geo["preset"], "glue")
    if "chart" in geo:
        chart = geo["chart"]
        if chart.get("collar_axis") is None:
            raise ConfigError("geometry.chart.collar_axis", "required for gluing")
        width = chart.get("collar_width")
        if width is None:
            raise ConfigError("geometry.chart.collar_width", "required for gluing")
        g = _chart_metric(chart, "g", "geometry.chart")
        gt = _chart_metric(chart, "g_tilde", "geometry.chart")
        return GlueSpec.build(g, gt, width, name="chart")
    raise ConfigError("geometry", "needs a preset or a chart")


def double_source(cfg) -> DoublingData:
    geo, dbl = cfg["geometry"], cfg["double"]
    if dbl.get("boundary_h"):
        hs = [np.array(h, dtype=float) for h in dbl["boundary_h"]]
        n = hs[0].shape[0] + 1
        R = constant_curvature(n, dbl["ambient_kappa"])
        return DoublingData("table", tuple(hs), tuple(R for _ in hs), tuple(np.zeros(n) for _ in hs))
    name = geo.get("preset")
    if name and PRESETS.get(name) is not None and PRESETS[name].kind == "double":
        return get_preset(name, "double")
    g = metric_source(cfg)
    if g.collar_axis is None:
        raise ConfigError("geometry", "double-sweep needs a double preset, a collar chart or double.boundary_h")
    depth = g.domain[g.collar_axis][1]
    trim = dbl["collar_trim"] if dbl.get("collar_trim") is not None else 0.05 * depth
    return doubling_from_collar(g, trim, boundary_points(g, 2, 0.1), g.name)


def _ms(cfg, n):
    ms = cfg["cone"]["m"] or list(range(1, n))
    for k, m in enumerate(ms):
        if not 1 <= m <= n - 1:
            raise ConfigError(f"cone.m[{k}]", f"must satisfy 1 <= m <= {n - 1}")
    return ms


def _opts(cfg):
    c = cfg["cone"]
    return ConeOptions(method=c["method"], restarts=c["restarts"], tol=c["sweep_tol"],
                       samples=c["samples"], seed=cfg["seed"], strict_tol=cfg["tolerances"]["strict"])


def _cutoffs(cfg):
    c = cfg["cutoffs"]
    try:
        return build_chi(ChiShape(c["chi_c"])), build_beta(BetaShape(c["beta_order"]))
    except ValueError as exc:
        raise ConfigError("cutoffs", str(exc)) from None


def _points(cfg, g):
    chart = cfg["geometry"].get("chart") or {}
    if chart.get("points"):
        pts = [np.array(p, dtype=float) for p in chart["points"]]
        for k, p in enumerate(pts):
            if p.shape[0] != g.dim:
                raise ConfigError(f"geometry.chart.points[{k}]", f"expected {g.dim} coordinates")
        return pts
    return [np.array([0.5 * (lo + hi) for lo, hi in g.domain])]


def _geometry_fields(cfg, name):
    return [("geometry", cfg["geometry"].get("preset") or "chart"), ("source", name)]


# --- commands --------------------------------------------------------------


def cmd_cone_check(cfg, report, out):
    g = metric_source(cfg)
    opts = _opts(cfg)
    ms = _ms(cfg, g.dim)
    report.fields("settings", _geometry_fields(cfg, g.name) + [
        ("m", ms), ("method", opts.method), ("strict-tol", opts.strict_tol)])
    rows = []
    for p in _points(cfg, g):
        geom = point_geometry(g, p, cfg["tolerances"]["curvature"])
        for m in ms:
            v = cone_min(geom.riemann, m, opts, metric=geom.metric_value.entries)
            ok = v.min_value > opts.strict_tol
            out.record(ok)
            rows.append((p, m, v.min_value, v.method, ok))
    report.table("cone minima", ["point", "m", "min_value", "method", "interior"], rows)


def cmd_prop31(cfg, report, out):
    p = cfg["prop31"]
    opts = _opts(cfg)
    summary = prop31_trials(p["trials"], cfg["seed"], tuple(p["dims"]), p["exclusion"], opts)
    report.fields("settings", [("trials", p["trials"]), ("dims", p["dims"]), ("exclusion", p["exclusion"]),
                               ("oracle-samples", {n: opts.sample_count(n) for n in p["dims"]}.__repr__())])
    report.fields("summary", [("agreements", summary.agreements), ("resampled", summary.resampled),
                              ("disagreements", len(summary.disagreements)), ("all-agree", summary.all_agree)])
    if summary.disagreements:
        report.table("disagreements", ["n", "m", "restricted_margin", "cone_min"],
                     [(r.n, r.m, r.restricted_margin, r.cone.min_value) for r in summary.disagreements])
    out.record(summary.all_agree)


def cmd_curvature(cfg, report, out):
    g = metric_source(cfg)
    tol = cfg["tolerances"]["curvature"]
    report.fields("settings", _geometry_fields(cfg, g.name) + [("symmetry-tol", tol)])
    for k, p in enumerate(_points(cfg, g)):
        try:
            geom = point_geometry(g, p, tol)
        except IntercurveError as exc:
            report.fields(f"point {k}", [("point", p), ("error", str(exc))])
            out.record(False)
            continue
        R = geom.orthonormal_riemann()
        check = validate_curvature(R, tol * max(1.0, float(np.max(np.abs(R.entries)))))
        out.record(check.passed)
        report.fields(f"point {k}", [
            ("point", p),
            ("metric", geom.metric_value.entries),
            ("ricci-eigenvalues", np.linalg.eigvalsh(R.ricci())),
            ("half-scalar", R.half_scalar()),
            ("antisymmetry", check.antisymmetry),
            ("pair-symmetry", check.pair_symmetry),
            ("bianchi", check.bianchi),
        ])
        report.table(f"point {k} sectional curvatures (orthonormal frame)",
                     ["i"] + [str(j + 1) for j in range(g.dim)],
                     [[i + 1] + list(row) for i, row in enumerate(R.sectional_matrix())])


def _lambdas(cfg, args_lambda, key="lambda"):
    return sorted(args_lambda) if args_lambda else cfg["glue"][key]


def cmd_glue_scan(cfg, report, out, args):
    glue = glue_source(cfg)
    chi, beta = _cutoffs(cfg)
    opts = _opts(cfg)
    gl = cfg["glue"]
    lams = _lambdas(cfg, args.lam)
    tangential = boundary_points(glue.g, gl["tangential_per_axis"], 0.1)
    report.fields("settings", _geometry_fields(cfg, glue.name) + [
        ("lambda", lams), ("collar-width", glue.collar_width), ("taper", glue.taper_profile()),
        ("chi", repr(chi)), ("beta", repr(beta)), ("n-inner", gl["n_inner"]), ("n-outer", gl["n_outer"]),
        ("n-far", gl["n_far"]), ("tangential-points", len(tangential)), ("strict-tol", opts.strict_tol)])
    for m in _ms(cfg, glue.g.dim):
        r = positivity_scan(glue, m, lams, tangential, opts, chi, beta, gl["n_inner"], gl["n_outer"], gl["n_far"])
        h = r.hypotheses
        report.fields(f"m={m} hypotheses", [
            ("boundary-difference-margin", h.boundary_margin), ("g-min", h.g_min),
            ("g-tilde-min", h.g_tilde_min), ("satisfied", h.ok)] + [("violation", v) for v in h.violations()])
        report.table(f"m={m} scan", ["lambda", "min_value", "deficit", "inner_min", "outer_min", "worst_region",
                                     "worst_point", "points"],
                     [(x.lam, x.min_value, x.deficit, x.inner_min, x.outer_min, x.worst_region, x.worst_point,
                       x.points) for x in r.rows])
        report.fields(f"m={m} result", [("empirical-lambda0", r.lambda0)])
        out.record(r.lambda0 is not None, h.ok)


def cmd_corollary43(cfg, report, out, args):
    glue = glue_source(cfg)
    chi, beta = _cutoffs(cfg)
    opts = _opts(cfg)
    lam = max(_lambdas(cfg, args.lam))
    eps = args.epsilon[0] if args.epsilon else cfg["glue"]["epsilon"]
    report.fields("settings", _geometry_fields(cfg, glue.name) + [("lambda", lam), ("epsilon", eps)])
    pts = collar_samples(glue, lam, boundary_points(glue.g, cfg["glue"]["tangential_per_axis"], 0.1),
                         cfg["glue"]["n_inner"], cfg["glue"]["n_outer"], cfg["glue"]["n_far"])
    for m in _ms(cfg, glue.g.dim):
        r = check_corollary43(glue, m, lam, eps, pts, opts, chi, beta)
        w = r.worst
        report.fields(f"m={m}", [("samples", len(r.rows)), ("worst-slack", w.slack), ("worst-point", w.point),
                                 ("worst-region", w.region), ("failures", len(r.failures)), ("passed", r.passed)])
        if r.failures:
            report.table(f"m={m} failing points", ["point", "region", "hat_min", "g_min", "g_tilde_min", "slack"],
                         [(f.point, f.region, f.hat_min, f.g_min, f.g_tilde_min, f.slack) for f in r.failures])
        out.record(r.passed)


def cmd_holder(cfg, report, out, args):
    glue = glue_source(cfg)
    chi, beta = _cutoffs(cfg)
    gl = cfg["glue"]
    lams = _lambdas(cfg, args.lam, "holder_lambda")
    pts = holder_points(glue, n_rho=gl["holder_points"])
    t = holder_convergence(glue, gl["alpha"], lams, pts, chi, beta)
    report.fields("settings", _geometry_fields(cfg, glue.name) + [
        ("alpha", t.alpha), ("lambda", lams), ("points", len(pts)), ("distance", "chart coordinates")])
    report.table("holder distance", ["lambda", "sup", "seminorm", "distance", "sup_bound"],
                 [(r.lam, r.sup, r.seminorm, r.distance, r.bound) for r in t.rows])
    report.fields("result", [("strictly-decreasing", t.strictly_decreasing), ("within-bound", t.within_bound)])
    out.record(t.strictly_decreasing and t.within_bound)


def cmd_double_sweep(cfg, report, out, args):
    data = double_source(cfg)
    opts = _opts(cfg)
    eps = sorted(args.epsilon or cfg["double"]["epsilon"], reverse=True)
    n = data.ambient[0].dim
    report.fields("settings", [("source", data.name), ("points", len(data.boundary_h)),
                               ("collar-trim", data.collar_trim), ("epsilon", eps),
                               ("theta-count", cfg["double"]["theta_count"]), ("model", "leading order")])
    for m in _ms(cfg, n):
        r = doubling_sweep(data.boundary_h, data.ambient, m, eps, cfg["double"]["theta_count"], opts,
                           data.collar_trim)
        report.fields(f"m={m} hypotheses", [("min-boundary-margin", min(r.boundary_margins)),
                                            ("strictly-m-convex", not r.hypothesis_flag)])
        report.table(f"m={m} sweep", ["epsilon", "worst_margin", "worst_theta", "worst_point", "equator_margin",
                                      "passed"],
                     [(x.epsilon, x.worst_margin, x.worst_theta, x.worst_point, x.equator_margin, x.passed)
                      for x in r.rows])
        report.fields(f"m={m} result", [("largest-passing-epsilon", r.largest_passing_epsilon),
                                        ("margin-improves", r.improves), ("all-passed", r.all_passed)])
        out.record(r.all_passed, not r.hypothesis_flag)


HANDLERS = {
    "cone-check": lambda cfg, rep, out, args: cmd_cone_check(cfg, rep, out),
    "prop31": lambda cfg, rep, out, args: cmd_prop31(cfg, rep, out),
    "curvature": lambda cfg, rep, out, args: cmd_curvature(cfg, rep, out),
    "glue-scan": cmd_glue_scan,
    "corollary43": cmd_corollary43,
    "holder": cmd_holder,
    "double-sweep": cmd_double_sweep,
}


# --- entry point -----------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="intercurve", description="Numerical checks for m-intermediate curvature.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--preset", help="named geometry (overrides geometry.preset)")
    p.add_argument("-m", type=int, action="append", help="curvature index m (repeatable)")
    p.add_argument("--seed", type=int)
    p.add_argument("--lambda", dest="lam", type=float, nargs="+")
    p.add_argument("--epsilon", type=float, nargs="+")
    p.add_argument("--trials", type=int, help="prop31 trial count")
    p.add_argument("--out", help="report path (default: standard output)")
    p.add_argument("--version", action="version", version=f"intercurve {__version__}")
    return p


def load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig.from_dict({})
    cfg.set("command", args.command)
    if args.seed is not None:
        cfg.set("seed", args.seed)
    if args.preset:
        cfg.set("geometry.preset", args.preset)
    if args.m:
        cfg.set("cone.m", args.m)
    if args.trials is not None:
        cfg.set("prop31.trials", args.trials)
    if args.lam:
        key = "glue.holder_lambda" if args.command == "holder" else "glue.lambda"
        cfg.set(key, sorted(args.lam))
    if args.epsilon:
        key = "double.epsilon" if args.command == "double-sweep" else "glue.epsilon"
        cfg.set(key, args.epsilon if args.command == "double-sweep" else args.epsilon[0])
    return cfg


def run(args) -> tuple[int, str | None]:
    try:
        cfg = load_config(args)
        report = Report(args.command, cfg["seed"], cfg.digest(), __version__)
        outcome = Outcome()
        HANDLERS[args.command](cfg, report, outcome, args)
    except ConfigError as exc:
        print(f"intercurve: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE, None
    except IntercurveError as exc:
        print(f"intercurve: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED, None
    status, code = outcome.code()
    report.finish(status, code)
    text = report.render()
    path = args.out or cfg["output"]
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"intercurve {args.command}: {status} (exit {code})", file=sys.stderr)
    return code, text


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    code, _ = run(args)
    return code


if __name__ == "__main__":
    sys.exit(main())
