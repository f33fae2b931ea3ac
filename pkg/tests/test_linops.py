import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iadmm.errors import DimensionError, EmptyBasisError, NumericError
from iadmm.linops import (
    DenseMap,
    HStack,
    IdentityMap,
    LeftMultiply,
    RightMultiply,
    adjoint_apply,
    apply,
    gram_norm,
    inner,
    power_iteration,
    qr_orthonormalize,
    svd,
)


def _triple_loop(A, B):
    out = np.zeros((A.shape[0], B.shape[1]))
    for i in range(A.shape[0]):
        for j in range(B.shape[1]):
            for k in range(A.shape[1]):
                out[i, j] += A[i, k] * B[k, j]
    return out


def _maps(rng):
    return [
        DenseMap(rng.standard_normal((5, 3))),
        IdentityMap((4, 3)),
        IdentityMap(6, scale=-2.5),
        LeftMultiply(rng.standard_normal((4, 6)), cols=3),
        RightMultiply(rng.standard_normal((5, 2)), rows=3),
        HStack([LeftMultiply(rng.standard_normal((4, 2)), 3), RightMultiply(rng.standard_normal((5, 3)), 4)]),
    ]


def _random_input(map_, rng):
    if isinstance(map_.in_shape[0], tuple):
        return tuple(rng.standard_normal(s) for s in map_.in_shape)
    return rng.standard_normal(map_.in_shape)


class TestApply:
    def test_identity(self):
        m = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(apply(IdentityMap((2, 2)), m), m)

    def test_left_multiply_diag(self):
        out = apply(LeftMultiply(np.diag([2.0, 3.0]), cols=1), np.ones((2, 1)))
        np.testing.assert_array_equal(out, [[2.0], [3.0]])

    def test_right_multiply_hand_product(self):
        A = np.array([[1.0, 1.0], [0.0, 1.0]])
        v = np.array([[1.0, 0.0]])
        out = apply(RightMultiply(A, rows=1), v)
        np.testing.assert_array_equal(out, [[1.0, 1.0]])
        np.testing.assert_array_equal(out, _triple_loop(v, A))

    def test_shape_mismatch_raises(self):
        with pytest.raises(DimensionError):
            apply(DenseMap(np.ones((2, 3))), np.ones(2))
        with pytest.raises(DimensionError):
            adjoint_apply(LeftMultiply(np.ones((2, 3)), 4), np.ones((3, 4)))

    def test_hstack_sums_blocks(self, rng):
        M1 = LeftMultiply(rng.standard_normal((4, 2)), 3)
        M2 = RightMultiply(rng.standard_normal((5, 3)), 4)
        x1, x2 = rng.standard_normal((2, 3)), rng.standard_normal((4, 5))
        np.testing.assert_array_equal(HStack([M1, M2]).apply((x1, x2)), M1.apply(x1) + M2.apply(x2))

    def test_hstack_rejects_mismatched_outputs(self):
        with pytest.raises(DimensionError):
            HStack([IdentityMap(3), IdentityMap(4)])


class TestAdjoint:
    def test_identity_adjoint_is_apply(self, rng):
        v = rng.standard_normal((3, 2))
        I = IdentityMap((3, 2), scale=1.7)
        np.testing.assert_array_equal(I.adjoint_apply(v), I.apply(v))

    def test_dense_adjoint_is_transpose(self, rng):
        A = rng.standard_normal((5, 3))
        M = DenseMap(A)
        v, w = rng.standard_normal(3), rng.standard_normal(5)
        np.testing.assert_allclose(M.adjoint_apply(w), A.T @ w, atol=1e-12)
        assert abs(inner(M.apply(v), w) - inner(v, M.adjoint_apply(w))) < 1e-12

    def test_left_multiply_adjoint_is_transpose_map(self, rng):
        A = rng.standard_normal((4, 6))
        M, MT = LeftMultiply(A, 3), LeftMultiply(A.T, 3)
        for _ in range(10):
            w = rng.standard_normal((4, 3))
            np.testing.assert_allclose(M.adjoint_apply(w), MT.apply(w), atol=1e-12)

    def test_adjoint_identity_all_kinds(self, rng):
        for M in _maps(rng):
            for _ in range(100):
                v = _random_input(M, rng)
                w = rng.standard_normal(M.out_shape)
                lhs, rhs = inner(M.apply(v), w), inner(v, M.adjoint_apply(w))
                assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))

    def test_double_adjoint_is_original(self, rng):
        for M in _maps(rng):
            v = _random_input(M, rng)
            a, b = M.H.H.apply(v), M.apply(v)
            np.testing.assert_allclose(a, b, atol=1e-12)


class TestGramNorm:
    def test_identity(self):
        assert gram_norm(IdentityMap(5)) == 1.0

    def test_diagonal(self):
        assert gram_norm(DenseMap(np.diag([2.0, 1.0]))) == pytest.approx(4.0, abs=1e-9)

    def test_random_dense_vs_svd(self, rng):
        A = rng.standard_normal((20, 10))
        expected = np.linalg.svd(A, compute_uv=False)[0] ** 2
        assert abs(gram_norm(DenseMap(A)) - expected) < 1e-6

    def test_hstack_vs_svd(self, rng):
        A, B = rng.standard_normal((6, 4)), rng.standard_normal((6, 3))
        H = HStack([DenseMap(A), DenseMap(B)])
        expected = np.linalg.svd(np.hstack([A, B]), compute_uv=False)[0] ** 2
        assert gram_norm(H) == pytest.approx(expected, rel=1e-8)

    def test_lower_bounds_rayleigh(self, rng):
        M = LeftMultiply(rng.standard_normal((7, 5)), 4)
        g = gram_norm(M)
        for _ in range(50):
            v = rng.standard_normal(M.in_shape)
            assert g >= np.linalg.norm(M.adjoint_apply(M.apply(v))) / np.linalg.norm(v) - 1e-8 * g

    def test_ones_in_null_space_restarts(self):
        A = np.array([[1.0, -1.0]])
        assert gram_norm(DenseMap(A)) == pytest.approx(2.0, rel=1e-9)

    def test_deterministic(self, rng):
        M = DenseMap(rng.standard_normal((9, 9)))
        assert power_iteration(M) == power_iteration(M)

    def test_nonconvergence_warns(self, rng):
        M = DenseMap(rng.standard_normal((30, 30)))
        with pytest.warns(RuntimeWarning):
            gram_norm(M, tol=1e-15, max_iter=2)


class TestSvd:
    def test_zero(self):
        _, S, _ = svd(np.zeros((3, 2)))
        np.testing.assert_array_equal(S, 0.0)

    def test_diag(self):
        _, S, _ = svd(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(S, [3.0, 1.0])

    def test_random_reconstruction(self, rng):
        m = rng.standard_normal((8, 5))
        U, S, V = svd(m)
        np.testing.assert_allclose((U * S) @ V.T, m, atol=1e-10)
        np.testing.assert_allclose(U.T @ U, np.eye(5), atol=1e-10)
        np.testing.assert_allclose(V.T @ V, np.eye(5), atol=1e-10)
        assert np.all(np.diff(S) <= 0)

    def test_sign_convention(self, rng):
        m = rng.standard_normal((6, 4))
        U, _, _ = svd(m)
        U2, _, _ = svd(-m)
        idx = np.argmax(np.abs(U), axis=0)
        assert np.all(U[idx, np.arange(4)] > 0)
        np.testing.assert_allclose(U, U2, atol=1e-10)

    def test_nonfinite(self):
        with pytest.raises(NumericError):
            svd(np.array([[np.nan]]))


class TestQr:
    def test_orthonormal_unchanged_up_to_sign(self, rng):
        Q0, _ = np.linalg.qr(rng.standard_normal((6, 3)))
        Q = qr_orthonormalize(Q0)
        np.testing.assert_allclose(np.abs(np.sum(Q * Q0, axis=0)), 1.0, atol=1e-12)
        np.testing.assert_allclose(np.abs(Q), np.abs(Q0), atol=1e-12)

    def test_rank_one(self):
        Q = qr_orthonormalize(np.array([[1.0, 2.0], [0.0, 0.0]]))
        assert Q.shape == (2, 1)
        np.testing.assert_allclose(np.abs(Q[:, 0]), [1.0, 0.0])

    def test_random_projection(self, rng):
        m = rng.standard_normal((10, 4))
        Q = qr_orthonormalize(m)
        np.testing.assert_allclose(Q.T @ Q, np.eye(4), atol=1e-10)
        np.testing.assert_allclose(Q @ (Q.T @ m), m, atol=1e-10)

    def test_zero_matrix(self):
        with pytest.raises(EmptyBasisError):
            qr_orthonormalize(np.zeros((3, 3)))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_adjoint_identity_property(rows, cols, seed):
    r = np.random.default_rng(seed)
    A = r.standard_normal((rows, cols))
    for M in (LeftMultiply(A, 3), RightMultiply(A, 2), DenseMap(A)):
        v = r.standard_normal(M.in_shape)
        w = r.standard_normal(M.out_shape)
        lhs, rhs = inner(M.apply(v), w), inner(v, M.adjoint_apply(w))
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))
