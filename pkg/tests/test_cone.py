import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intercurve.cone import (
    ConeOptions,
    _objective_batch,
    _trig_eval,
    _trig_fit,
    check_prop31,
    complement_basis,
    cone_min,
    kn_rank_one_sum,
    m_positive,
    prop31_trials,
)
from intercurve.exceptions import RangeError
from intercurve.tensor_core import (
    Frame,
    constant_curvature,
    haar_orthogonal,
    kulkarni_nomizu,
    partial_sectional_sum,
    random_curvature,
    random_symmetric,
    rank_one,
)

seeds = st.integers(0, 2**32 - 1)


def test_m_positive_examples():
    assert m_positive(np.diag([1.0, 2.0, 3.0]), 1) == (True, 1.0)
    ok, margin = m_positive(np.diag([-1.0, 2.0, 3.0]), 2)
    assert ok and margin == pytest.approx(1.0)
    assert not m_positive(np.diag([-1.0, 2.0, 3.0]), 1)[0]


def test_m_positive_uses_metric():
    G = np.diag([4.0, 1.0])
    ok, margin = m_positive(np.diag([2.0, 3.0]), 1, metric=G)
    assert ok and margin == pytest.approx(0.5)


def test_trig_fit_is_exact():
    coef = (0.3, -1.2, 0.7, 0.25, -0.4)
    samples = _trig_eval(coef, np.arange(5) * math.pi / 5)
    np.testing.assert_allclose(_trig_fit(samples), coef, atol=1e-14)


def test_constant_curvature_minimum():
    R = constant_curvature(4)
    for m, expected in [(1, 3.0), (2, 5.0), (3, 6.0)]:
        assert cone_min(R, m).min_value == pytest.approx(expected, abs=1e-12)


@given(seeds, st.integers(3, 5))
def test_exact_cases(seed, n):
    R = random_curvature(np.random.default_rng(seed), n)
    assert cone_min(R, 1).min_value == pytest.approx(np.linalg.eigvalsh(R.ricci())[0], abs=1e-10)
    assert cone_min(R, n - 1).min_value == pytest.approx(R.half_scalar(), abs=1e-10)


@given(seeds, st.integers(3, 5))
@settings(max_examples=15)
def test_sweep_agrees_with_exact_cases(seed, n):
    R = random_curvature(np.random.default_rng(seed), n)
    sweep = cone_min(R, 1, ConeOptions(method="sweep"))
    assert sweep.min_value == pytest.approx(np.linalg.eigvalsh(R.ricci())[0], abs=1e-8)


@given(seeds)
@settings(max_examples=15)
def test_sweep_agrees_with_brute_force(seed):
    rng = np.random.default_rng(seed)
    R = random_curvature(rng, 4)
    a = cone_min(R, 2, ConeOptions(method="sweep"))
    b = cone_min(R, 2, ConeOptions(method="brute_force", samples=20_000))
    assert a.min_value == pytest.approx(b.min_value, abs=1e-8)


@given(seeds, st.integers(3, 5))
@settings(max_examples=15)
def test_minimum_below_random_frames(seed, n):
    rng = np.random.default_rng(seed)
    R = random_curvature(rng, n)
    m = int(rng.integers(1, n))
    v = cone_min(R, m)
    assert partial_sectional_sum(R, v.minimizer, m) == pytest.approx(v.min_value, abs=1e-10)
    vals = _objective_batch(R.entries, haar_orthogonal(rng, n, 500), m)
    assert vals.min() >= v.min_value - 1e-10


def test_metric_basis_handling():
    rng = np.random.default_rng(2)
    R = random_curvature(rng, 3)
    A = rng.normal(size=(3, 3)) + 3 * np.eye(3)
    # the same tensor written in the basis given by the columns of A
    coords = R.in_basis(A)
    G = A.T @ A
    for m in (1, 2):
        direct = cone_min(R, m)
        via_metric = cone_min(coords, m, metric=G)
        assert via_metric.min_value == pytest.approx(direct.min_value, abs=1e-10)
        E = via_metric.minimizer.columns
        np.testing.assert_allclose(E.T @ G @ E, np.eye(3), atol=1e-9)


def test_range_errors():
    R = constant_curvature(5)
    with pytest.raises(RangeError):
        cone_min(R, 5)
    with pytest.raises(RangeError):
        cone_min(R, 2, ConeOptions(method="brute_force"))
    with pytest.raises(RangeError):
        cone_min(R, 2, ConeOptions(method="exact_m1"))
    with pytest.raises(ValueError):
        ConeOptions(method="magic")


def test_interior_margin():
    v = cone_min(constant_curvature(3), 1)
    assert v.interior and v.interior_margin == pytest.approx(2.0 - v.tolerance)
    flat = cone_min(constant_curvature(3, 0.0), 1)
    assert not flat.interior


def _direct_rank_one(T, nu, frame, m):
    return partial_sectional_sum(kulkarni_nomizu(T, rank_one(nu)), frame, m)


@given(seeds, st.integers(2, 6))
def test_rank_one_closed_form(seed, n):
    rng = np.random.default_rng(seed)
    T = random_symmetric(rng, n)
    nu = rng.normal(size=n)
    F = Frame(haar_orthogonal(rng, n))
    m = int(rng.integers(1, n))
    assert kn_rank_one_sum(T, nu, F, m) == pytest.approx(_direct_rank_one(T, nu, F, m), abs=1e-12)


def test_rank_one_examples():
    T = np.diag([2.0, 3.0, 5.0])
    e1 = np.array([1.0, 0.0, 0.0])
    # nu = e_1, m = 1: only the pairs (1, q) contribute T_qq
    assert kn_rank_one_sum(T, e1, Frame.standard(3), 1) == pytest.approx(8.0)
    # nu orthogonal to span(e_1 .. e_m) with T = identity gives m |nu|^2
    nu = np.array([0.0, 0.0, 0.6, 0.8])
    assert kn_rank_one_sum(np.eye(4), nu, Frame.standard(4), 2) == pytest.approx(2.0)


def test_complement_basis():
    nu = np.array([0.3, -0.4, 0.5, 0.7])
    W = complement_basis(nu)
    np.testing.assert_allclose(W.T @ W, np.eye(3), atol=1e-14)
    np.testing.assert_allclose(W.T @ nu, 0.0, atol=1e-14)


def test_prop31_single_cases():
    nu = np.array([0.0, 0.0, 1.0])
    good = check_prop31(np.diag([1.0, 2.0, -5.0]), nu, 1, ConeOptions(samples=20_000))
    assert good.restricted_positive and good.cone_positive and good.agree
    bad = check_prop31(np.diag([-1.0, 2.0, 5.0]), nu, 1, ConeOptions(samples=20_000))
    assert not bad.restricted_positive and not bad.cone_positive and bad.agree


def test_prop31_requires_unit_normal():
    with pytest.raises(ValueError):
        check_prop31(np.eye(3), np.array([1.0, 1.0, 0.0]), 1)


def test_prop31_small_batch():
    summary = prop31_trials(12, seed=11, opts=ConeOptions(samples=20_000))
    assert summary.all_agree and summary.agreements == 12
