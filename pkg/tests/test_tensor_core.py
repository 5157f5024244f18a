import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from intercurve.exceptions import DimensionMismatchError, FrameError, RangeError, SymmetryError
from intercurve.tensor_core import (
    AlgebraicCurvatureTensor,
    Frame,
    SymmetricForm,
    constant_curvature,
    gauss_equation,
    haar_orthogonal,
    kulkarni_nomizu,
    partial_sectional_sum,
    partial_sum_weights,
    project_curvature,
    random_curvature,
    random_symmetric,
    rank_one,
    validate_curvature,
)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(2, 6)


def direct_kn(S, T):
    n = S.shape[0]
    out = np.zeros((n,) * 4)
    for i, j, k, l in itertools.product(range(n), repeat=4):
        out[i, j, k, l] = S[i, k] * T[j, l] + S[j, l] * T[i, k] - S[i, l] * T[j, k] - S[j, k] * T[i, l]
    return out


def test_kn_matches_index_formula():
    rng = np.random.default_rng(3)
    S, T = random_symmetric(rng, 4), random_symmetric(rng, 4)
    np.testing.assert_allclose(kulkarni_nomizu(S, T).entries, direct_kn(S, T), atol=1e-14)


def test_kn_identity_is_twice_constant_curvature():
    R = kulkarni_nomizu(np.eye(3), np.eye(3))
    assert R(np.eye(3)[0], np.eye(3)[1], np.eye(3)[0], np.eye(3)[1]) == pytest.approx(2.0)
    np.testing.assert_allclose(constant_curvature(3, 1.0).entries, 0.5 * R.entries)


@given(seeds, dims)
def test_kn_has_curvature_symmetries(seed, n):
    rng = np.random.default_rng(seed)
    R = kulkarni_nomizu(random_symmetric(rng, n), random_symmetric(rng, n))
    assert validate_curvature(R, 1e-12).passed


@given(seeds, dims)
def test_kn_symmetric_and_bilinear(seed, n):
    rng = np.random.default_rng(seed)
    S, T, U = (random_symmetric(rng, n) for _ in range(3))
    a = float(rng.normal())
    np.testing.assert_allclose(kulkarni_nomizu(S, T).entries, kulkarni_nomizu(T, S).entries, atol=1e-12)
    lhs = kulkarni_nomizu(a * S + U, T).entries
    rhs = a * kulkarni_nomizu(S, T).entries + kulkarni_nomizu(U, T).entries
    np.testing.assert_allclose(lhs, rhs, atol=1e-11)


@pytest.mark.parametrize("n", range(2, 9))
def test_partial_sum_of_identity_kn_closed_form(n):
    R = kulkarni_nomizu(np.eye(n), np.eye(n))
    for m in range(1, n):
        assert partial_sectional_sum(R, Frame.standard(n), m) == pytest.approx(m * (2 * n - m - 1), abs=1e-12)


def test_constant_curvature_contractions():
    R = constant_curvature(5, 2.0)
    np.testing.assert_allclose(R.ricci(), 8.0 * np.eye(5))
    assert R.half_scalar() == pytest.approx(20.0)


def test_gauss_equation_unit_sphere_in_flat_space():
    n = 4
    R = gauss_equation(AlgebraicCurvatureTensor.zero(n), np.eye(n))
    K = R.sectional_matrix()
    off = ~np.eye(n, dtype=bool)
    np.testing.assert_allclose(K[off], 1.0, atol=1e-12)


@given(seeds, st.integers(3, 5))
def test_partial_sum_invariant_under_basis_change(seed, n):
    rng = np.random.default_rng(seed)
    R = random_curvature(rng, n)
    Q = haar_orthogonal(rng, n)
    m = int(rng.integers(1, n))
    direct = partial_sectional_sum(R, Frame(Q), m)
    rotated = partial_sectional_sum(R.in_basis(Q), Frame.standard(n), m)
    assert direct == pytest.approx(rotated, abs=1e-12)


def test_partial_sum_weights_shape():
    w = partial_sum_weights(4, 2)
    assert w.sum() == 5
    assert np.all(np.triu(w, 1) == w)


def test_partial_sum_rejects_bad_m():
    R = constant_curvature(3)
    with pytest.raises(RangeError):
        partial_sectional_sum(R, Frame.standard(3), 3)
    with pytest.raises(RangeError):
        partial_sectional_sum(R, Frame.standard(3), 0)


def test_frame_orthonormality_checked():
    with pytest.raises(FrameError):
        Frame(np.array([[1.0, 0.1], [0.0, 1.0]]))
    G = np.array([[2.0, 0.3], [0.3, 1.0]])
    F = Frame.orthonormalize(np.eye(2), G)
    np.testing.assert_allclose(F.columns.T @ G @ F.columns, np.eye(2), atol=1e-14)


def test_symmetric_form_rejects_skew():
    with pytest.raises(SymmetryError):
        SymmetricForm(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(DimensionMismatchError):
        kulkarni_nomizu(np.eye(2), np.eye(3))


def test_from_components_rejects_non_curvature():
    rng = np.random.default_rng(0)
    with pytest.raises(SymmetryError):
        AlgebraicCurvatureTensor.from_components(rng.normal(size=(3, 3, 3, 3)))


@given(seeds, st.integers(2, 5))
def test_projection_is_idempotent_and_valid(seed, n):
    rng = np.random.default_rng(seed)
    P = project_curvature(rng.normal(size=(n,) * 4))
    assert validate_curvature(P, 1e-12).passed
    np.testing.assert_allclose(project_curvature(P), P, atol=1e-13)


def test_random_tensor_fails_validation():
    rng = np.random.default_rng(1)
    report = validate_curvature(rng.normal(size=(3, 3, 3, 3)))
    assert not report.passed and not report


def test_rank_one_form():
    nu = np.array([1.0, 2.0, 0.0])
    np.testing.assert_allclose(rank_one(nu).entries, np.outer(nu, nu))


def test_haar_frames_are_orthogonal():
    Q = haar_orthogonal(np.random.default_rng(5), 4, 10)
    np.testing.assert_allclose(np.einsum("bji,bjk->bik", Q, Q), np.broadcast_to(np.eye(4), (10, 4, 4)), atol=1e-12)
