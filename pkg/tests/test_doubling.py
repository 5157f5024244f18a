import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intercurve.cone import ConeOptions, cone_min, kn_rank_one_sum, m_positive
from intercurve.doubling import (
    DoubleEdgeState,
    cancellation_check,
    dn_intermediate_sum,
    dn_principal_curvatures,
    dn_second_fundamental_form,
    doubling_sweep,
    edge_curvature,
    leading_coefficient,
    richardson_fit,
    sweep_preset,
    theta_grid,
)
from intercurve.exceptions import DimensionMismatchError, FrameError, RangeError
from intercurve.presets import double_cap, get_preset, slab_geodesic
from intercurve.tensor_core import (
    AlgebraicCurvatureTensor,
    Frame,
    constant_curvature,
    haar_orthogonal,
    random_curvature,
    random_symmetric,
)

FLAT3 = AlgebraicCurvatureTensor.zero(3)
seeds = st.integers(0, 2**32 - 1)


def state(h, theta=0.0, eps=0.1, R=None):
    h = np.asarray(h, dtype=float)
    n = h.shape[0] + 1
    return DoubleEdgeState(h, R if R is not None else AlgebraicCurvatureTensor.zero(n), theta, eps)


def test_principal_curvatures():
    np.testing.assert_allclose(dn_principal_curvatures(state(np.eye(2), 0.0, 0.01)), [1, 1, 100])
    np.testing.assert_allclose(dn_principal_curvatures(state(np.diag([2.0, -1.0]), math.pi / 3, 0.1)),
                               [-0.5, 1, 5], atol=1e-14)
    assert np.allclose(dn_principal_curvatures(state(np.eye(2), math.pi / 2)), 0, atol=1e-15)


def test_second_fundamental_form_blocks():
    st_ = state(np.diag([2.0, -1.0]), math.pi / 3, 0.1)
    ev = np.linalg.eigvalsh(dn_second_fundamental_form(st_).entries)
    np.testing.assert_allclose(ev, np.sort(dn_principal_curvatures(st_)), atol=1e-14)
    h0 = dn_second_fundamental_form(state(np.zeros((2, 2)), 0.3, 0.2)).entries
    expected = np.zeros((3, 3))
    expected[2, 2] = math.cos(0.3) / 0.2
    np.testing.assert_allclose(h0, expected, atol=1e-15)
    np.testing.assert_allclose(dn_second_fundamental_form(state(np.eye(2), 0.0, 1.0)).entries, np.eye(3))


def test_gauss_assembly_examples():
    frame = Frame(np.eye(3))
    s = state(np.eye(2), 0.0, 0.1)
    assert dn_intermediate_sum(s, frame, 2) == pytest.approx(21.0, abs=1e-12)
    assert dn_intermediate_sum(s, frame, 1) == pytest.approx(11.0, abs=1e-12)
    assert dn_intermediate_sum(state(np.eye(2), math.pi / 2, 0.1), frame, 2) == pytest.approx(0.0, abs=1e-12)


def test_sphere_sanity():
    # the round sphere in flat space: h = identity, no bend
    for n in (3, 4, 5):
        s = DoubleEdgeState(np.eye(n - 1), AlgebraicCurvatureTensor.zero(n), 0.0, 1.0)
        np.testing.assert_allclose(edge_curvature(s).entries, constant_curvature(n).entries, atol=1e-12)


def test_decomposition_adds_up():
    rng = np.random.default_rng(3)
    s = DoubleEdgeState(random_symmetric(rng, 3), random_curvature(rng, 4), 0.4, 0.05)
    frame = Frame(haar_orthogonal(rng, 4))
    d = dn_intermediate_sum(s, frame, 2, decompose=True)
    assert d.total == pytest.approx(dn_intermediate_sum(s, frame, 2), abs=1e-12)
    assert d.ambient + d.inv_eps / s.epsilon + d.inv_eps_sq / s.epsilon**2 + d.remainder == pytest.approx(
        d.total, rel=1e-12)
    assert abs(d.inv_eps_sq) < 1e-14
    assert d.label == "leading order"


def test_richardson_recovers_polynomial():
    coef = richardson_fit(lambda e: 3.0 - 2.0 / e + 0.5 / e**2, 0.1)
    np.testing.assert_allclose(coef, [3.0, -2.0, 0.5], rtol=1e-9)


@settings(max_examples=50)
@given(seeds, st.integers(3, 5), st.data())
def test_cancellation_and_leading_term(seed, n, data):
    rng = np.random.default_rng(seed)
    m = data.draw(st.integers(1, n - 1))
    s = DoubleEdgeState(random_symmetric(rng, n - 1), random_curvature(rng, n),
                        float(rng.uniform(0, math.pi / 2)), float(rng.uniform(0.01, 0.2)))
    frame = Frame(haar_orthogonal(rng, n))
    rel, b = cancellation_check(s, frame, m)
    assert rel < 1e-8
    lead = leading_coefficient(s, frame, m)
    assert b == pytest.approx(lead, rel=1e-6, abs=1e-9)
    # two-level difference quotient of the sum tends to the same coefficient
    e = s.epsilon
    dq = (dn_intermediate_sum(s, frame, m) - dn_intermediate_sum(s.with_epsilon(2 * e), frame, m)) * 2 * e
    assert dq == pytest.approx(lead, rel=1e-6, abs=1e-9)


def test_leading_term_positive_for_m_positive_h():
    rng = np.random.default_rng(11)
    for _ in range(20):
        h = random_symmetric(rng, 3) + 3 * np.eye(3)
        assert m_positive(h, 2)[0]
        s = DoubleEdgeState(h, AlgebraicCurvatureTensor.zero(4), 0.2, 0.1)
        frame = Frame(haar_orthogonal(rng, 4))
        assert leading_coefficient(s, frame, 2) >= -1e-12


def test_state_validation():
    with pytest.raises(RangeError):
        state(np.eye(2), 0.0, 0.0)
    with pytest.raises(RangeError):
        state(np.eye(2), 2.0, 0.1)
    with pytest.raises(DimensionMismatchError):
        DoubleEdgeState(np.eye(3), FLAT3, 0.0, 0.1)
    with pytest.raises(FrameError):
        dn_intermediate_sum(state(np.eye(2)), Frame(np.eye(4)), 1)


def test_theta_grid():
    g = theta_grid(32)
    assert len(g) == 32 and g[0] == 0 and g[-1] == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("m", [1, 2])
def test_double_cap_passes(m):
    rep = sweep_preset(double_cap(), m, theta_count=8)
    assert not rep.hypothesis_flag
    assert rep.all_passed and rep.largest_passing_epsilon == 0.1
    assert rep.improves
    # equator points are carried by the ambient curvature alone
    for row in rep.rows:
        assert row.equator_margin == pytest.approx(cone_min(double_cap().ambient[0], m).min_value, rel=1e-6)


def test_slab_negative_control():
    rep = sweep_preset(slab_geodesic(), 1, theta_count=8)
    assert rep.hypothesis_flag
    for row in rep.rows:
        assert row.equator_margin == pytest.approx(0.0, abs=1e-12)
        assert not row.passed


def test_flat_convex_equator_is_zero():
    rep = doubling_sweep([np.eye(2)], [FLAT3], 2, (0.1,), theta_count=4)
    assert not rep.hypothesis_flag
    assert rep.rows[0].equator_margin == pytest.approx(0.0, abs=1e-12)


def test_sweep_input_errors():
    with pytest.raises(DimensionMismatchError):
        doubling_sweep([np.eye(2)], [], 1)
    with pytest.raises(ValueError):
        doubling_sweep([np.eye(2)], [FLAT3], 1, ())


def test_double_cap_boundary_data():
    data = get_preset("double-cap", "double")
    assert data.collar_trim == pytest.approx(0.03)
    # trimmed cap boundary: geodesic sphere of radius pi/4 - 0.03 in S^3
    for h in data.boundary_h:
        np.testing.assert_allclose(h, np.eye(2) / math.tan(math.pi / 4 - 0.03), atol=1e-8)
    for R in data.ambient:
        np.testing.assert_allclose(R.entries, constant_curvature(3).entries, atol=1e-8)
