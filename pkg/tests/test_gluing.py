import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intercurve.cutoffs import BetaShape, ChiShape, build_beta, build_chi, taper
from intercurve.exceptions import GlueError
from intercurve.gluing import (
    GlueSpec,
    branch_values,
    check_corollary43,
    extract_S,
    glued_metric,
    holder_convergence,
    inner_profile,
    positivity_scan,
    region,
    thresholds,
)
from intercurve.manifold import ChartMetric, second_fundamental_form
from intercurve.presets import cap_glue, get_preset, unit_ball_collar

from _collars import random_collar

CHI = build_chi()
BETA = build_beta()
DENSE = np.linspace(0.0, 1.0, 10_000, endpoint=False)


# --- cutoffs ---------------------------------------------------------------


def test_chi_examples():
    assert CHI(0.25) == pytest.approx(0.21875, abs=1e-15)
    v, d1, d2 = CHI.derivatives(1.0)
    assert d1 == 0 and d2 == 0
    assert CHI.one_sided(1.0, -1)[1] == pytest.approx(0.0, abs=1e-14)
    assert CHI.one_sided(1.0, -1)[2] == pytest.approx(0.0, abs=1e-14)
    assert CHI.c_infinity_value == pytest.approx(23 / 48, abs=1e-14)


def test_chi_invariants():
    s = DENSE[DENSE <= 0.5]
    np.testing.assert_allclose([CHI(x) for x in s], s - s * s / 2, atol=1e-15)
    assert all(CHI.derivatives(x)[2] < 0 for x in DENSE)
    assert all(CHI(x) == CHI.c_infinity_value for x in (1.0, 1.5, 7.0, 1e6))
    assert CHI.continuity_defect() < 1e-13


def test_beta_examples_and_invariants():
    assert BETA(-0.5) == 0.5 and BETA(-3) == 0.0
    s = np.linspace(-4, 0, 10_000)
    vals = np.array([BETA(x) for x in s])
    assert np.all((vals >= 0) & (vals <= 1))
    assert np.all(vals[s <= -2] == 0) and np.all(vals[s >= -1] == 0.5)
    assert BETA.continuity_defect() < 1e-13
    assert build_beta(BetaShape(order=7)).continuity_defect() < 1e-13


@pytest.mark.parametrize("c", [-2.0, 0.0, 1.0, 3.0])
def test_chi_family(c):
    chi = build_chi(ChiShape(c))
    assert chi.derivatives(0.25)[0] == pytest.approx(0.21875)
    assert chi.continuity_defect() < 1e-12


def test_chi_rejects_bad_shape():
    with pytest.raises(ValueError):
        build_chi(ChiShape(-10.0))


def test_taper_profile():
    t = taper(0.4, 0.5)
    assert t(0.0) == 1 and t(0.4) == 1 and t(0.5) == 0 and t(2.0) == 0
    assert t.continuity_defect() < 1e-10
    with pytest.raises(ValueError):
        taper(0.5, 0.4)


# --- S ---------------------------------------------------------------------


def test_identical_metrics_give_zero_S():
    g = unit_ball_collar(3)
    S = extract_S(g, g, 0.3)
    for p in ([0.0, 1.0, 1.0], [0.1, 1.5, 0.3], [0.4, 2.0, 2.0]):
        assert np.all(S.value(p) == 0)


def test_slab_S():
    c = 0.3
    dom = [(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)]
    g = ChartMetric.from_expressions(3, dom, {(0, 0): "1", (1, 1): "1", (2, 2): "1"}, collar_axis=0)
    gt = ChartMetric.from_expressions(3, dom, {(0, 0): "1", (1, 1): f"1 + {c}*x1", (2, 2): f"1 + {c}*x1"},
                                      collar_axis=0)
    glue = GlueSpec.build(g, gt, 0.5)
    for rho in (0.0, 1e-9, 0.2, 0.4):
        np.testing.assert_allclose(glue.S.value([rho, 0.5, 0.5]), np.diag([0, c, c]), atol=1e-14)
    q = [0.0, 0.5, 0.5]
    diff = second_fundamental_form(g, q).entries - second_fundamental_form(gt, q).entries
    np.testing.assert_allclose(diff, c / 2 * np.eye(2), atol=1e-14)
    assert np.all(glue.S.value([0.55, 0.5, 0.5]) == 0)


def test_unit_ball_perturbation_recovered():
    g = unit_ball_collar(3)
    P = "0.2*cos(x2)"
    comps = {(0, 0): "1", (1, 1): f"(1 - x1)^2 + x1*({P})", (2, 2): "(1 - x1)^2*sin(x2)^2"}
    gt = ChartMetric.from_expressions(3, g.domain, comps, collar_axis=0)
    S = extract_S(g, gt, 0.4)
    for rho in (0.0, 1e-6, 0.1, 0.32):
        for t in (0.8, 1.3, 2.0):
            assert S.value([rho, t, 0.7])[1, 1] == pytest.approx(0.2 * math.cos(t), abs=1e-10)


def test_boundary_mismatch_rejected():
    g = unit_ball_collar(3)
    comps = {(0, 0): "1", (1, 1): "1.01*(1 - x1)^2", (2, 2): "(1 - x1)^2*sin(x2)^2"}
    gt = ChartMetric.from_expressions(3, g.domain, comps, collar_axis=0)
    with pytest.raises(GlueError):
        extract_S(g, gt, 0.3)


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_random_collar_identities(seed):
    glue, rng = random_collar(seed)
    w = glue.collar_width
    for _ in range(3):
        q = [0.0, *rng.uniform(-0.9, 0.9, 2)]
        # boundary tensor identity
        diff = second_fundamental_form(glue.g, q).entries - second_fundamental_form(glue.g_tilde, q).entries
        np.testing.assert_allclose(glue.S.value(q)[1:, 1:], 2 * diff, atol=1e-9)
        # reconstruction before the taper
        x = np.array([rng.uniform(1e-8, 0.8 * w), *q[1:]])
        np.testing.assert_allclose(glue.g.value(x) + x[0] * glue.S.value(x), glue.g_tilde.value(x), atol=1e-10)
        for lam in (1.0, 2.0, 4.0):
            low, seam = thresholds(lam)
            inner, outer = branch_values(glue, [seam, *q[1:]], lam)
            np.testing.assert_allclose(inner, outer, rtol=0, atol=1e-13)
            hat = glued_metric(glue, lam=lam, check=False)
            for r in (0.0, 0.5 * low, low):
                p = [r, *q[1:]]
                assert np.all(hat.value(p) == glue.g_tilde.value(p))
            for r in (w, 1.1 * w, 0.9):
                p = [r, *q[1:]]
                assert np.all(hat.value(p) == glue.g.value(p))


def test_branches_agree_on_overlap():
    glue, _ = random_collar(5)
    lam = 2.0
    # lam rho <= 1/2 and log(rho)/lam^2 >= -1
    for rho in np.geomspace(math.exp(-lam * lam), 0.25 / lam, 7):
        inner, outer = branch_values(glue, [rho, 0.1, -0.2], lam)
        np.testing.assert_allclose(inner, outer, atol=1e-13)


def test_region_classification():
    glue = cap_glue(0.0)
    low, seam = thresholds(2.0)
    assert region(glue, 2.0, 0.5 * low) == "tilde"
    assert region(glue, 2.0, 0.5 * (low + seam)) == "outer"
    assert region(glue, 2.0, 0.1) == "inner"
    assert region(glue, 2.0, 0.7) == "exterior"


def test_glued_metric_requires_lambda():
    glue = cap_glue(0.0)
    with pytest.raises(GlueError):
        glued_metric(glue)
    with pytest.raises(GlueError):
        glued_metric(glue, lam=-1.0)


def test_indefinite_glued_metric_reported():
    g = unit_ball_collar(3)
    comps = {(0, 0): "1", (1, 1): "(1 - x1)^2 - 40*x1", (2, 2): "(1 - x1)^2*sin(x2)^2"}
    gt = ChartMetric.from_expressions(3, g.domain, comps, collar_axis=0)
    glue = GlueSpec.build(g, gt, 0.4)
    with pytest.raises(GlueError, match="lambda = 1"):
        glued_metric(glue, lam=1.0)


# --- scans on the shipped presets ------------------------------------------


@pytest.fixture(scope="module")
def positive():
    return get_preset("cap-positive-control", "glue")


@pytest.fixture(scope="module")
def negative():
    return get_preset("cap-negative-control", "glue")


def test_trivial_glue_passes_everywhere():
    glue = get_preset("cap-trivial", "glue")
    rep = positivity_scan(glue, 2, (1, 2, 4), n_inner=6, n_outer=4, n_far=1)
    assert rep.lambda0 == 1.0
    # a zero difference of second fundamental forms is not strictly m-positive
    assert rep.hypothesis_flag and rep.hypotheses.boundary_margin == 0
    assert all(r.min_value == pytest.approx(3.0, abs=1e-8) for r in rep.rows)
    hold = holder_convergence(glue, 0.5, points=[[r, 1.2, 0.4] for r in np.linspace(0, 0.7, 15)])
    assert all(r.distance == 0 for r in hold.rows)
    cor = check_corollary43(glue, 1, 4.0, 0.1)
    assert cor.passed and abs(cor.worst_slack) < 1e-8


@pytest.mark.parametrize("m", [1, 2])
def test_positive_control_scan(positive, m):
    rep = positivity_scan(positive, m, n_inner=10, n_outer=4, n_far=1)
    assert not rep.hypothesis_flag
    assert rep.lambda0 is not None
    assert all(r.min_value > 0 for r in rep.rows if r.lam >= rep.lambda0)


@pytest.mark.parametrize("m", [1, 2])
def test_negative_control_flags(negative, m):
    rep = positivity_scan(negative, m, (1, 4, 12), n_inner=6, n_outer=4, n_far=1)
    assert rep.hypothesis_flag
    assert not rep.hypotheses.boundary_ok
    assert rep.lambda0 is None
    assert rep.deficit_curve[0][1] > 0


@pytest.mark.parametrize("m", [1, 2])
def test_inner_deficit_monotone(positive, m):
    prof = inner_profile(positive, m, (2, 4, 8, 12), 0.05)
    vals = [v for _, v in prof]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    with pytest.raises(GlueError):
        inner_profile(positive, m, (0.5,), 0.9)


def test_corollary_positive_and_negative(positive):
    good = check_corollary43(positive, 2, 12.0, 0.1)
    assert good.passed and good.worst_slack >= -0.1
    bad = check_corollary43(positive, 1, 1.0, 0.1)
    assert not bad.passed and bad.failures
    with pytest.raises(ValueError):
        check_corollary43(positive, 1, 1.0, 0.0)


def test_holder_table(positive):
    tab = holder_convergence(positive, 0.5)
    assert tab.strictly_decreasing and tab.within_bound
    with pytest.raises(ValueError):
        holder_convergence(positive, 1.5)
    with pytest.raises(ValueError):
        holder_convergence(positive, 0.5, lambdas=(4, 2))
