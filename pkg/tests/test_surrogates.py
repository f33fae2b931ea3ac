import numpy as np
import pytest

from iadmm.errors import InvalidConstantError
from iadmm.linops import DenseMap, IdentityMap
from iadmm.prox import column_exp_penalty, nuclear_norm, svt
from iadmm.surrogates import (
    SmoothTerm,
    bregman_surrogate,
    check_smooth_term,
    check_surrogate,
    lipschitz_surrogate,
    lrr_u2_surrogate,
    self_surrogate,
    subproblem_objective,
    u2_weights,
)


def nuclear_surrogate(lam1=1.0):
    f = lambda z: lam1 * nuclear_norm(z[0])

    def solver(z, linear, weight, anchor, g_prox=None):
        return svt(anchor - linear / weight, lam1 / weight)

    return f, self_surrogate(f, solver, index=0)


class TestSelfSurrogate:
    def test_nuclear_closed_form_is_subproblem_minimizer(self, rng):
        f, s = nuclear_surrogate(0.5)
        z = (rng.standard_normal((4, 3)),)
        lin, anchor, w = rng.standard_normal((4, 3)), rng.standard_normal((4, 3)), 2.0
        x = s.solve(z, lin, w, anchor)
        base = subproblem_objective(s, z, lin, w, anchor, x)
        for _ in range(50):
            d = 1e-3 * rng.standard_normal(x.shape)
            assert base <= subproblem_objective(s, z, lin, w, anchor, x + d) + 1e-12
        assert base <= subproblem_objective(s, z, lin, w, anchor, anchor)

    def test_constant_f_is_prox_of_g(self, rng):
        f = lambda z: 3.0
        s = self_surrogate(f, lambda z, lin, w, a, g_prox=None: g_prox(a - lin / w, 1.0 / w))
        z = (rng.standard_normal(4),)
        lin, a = rng.standard_normal(4), rng.standard_normal(4)
        g_prox = lambda v, step: np.sign(v) * np.maximum(np.abs(v) - step, 0.0)
        out = s.solve(z, lin, 2.0, a, g_prox)
        np.testing.assert_allclose(out, g_prox(a - lin / 2.0, 0.5))

    def test_quadratic_exact_solve_stationary(self, rng):
        M = rng.standard_normal((5, 5))
        Q = M.T @ M + np.eye(5)
        q = rng.standard_normal(5)
        f = lambda z: 0.5 * z[0] @ Q @ z[0] + q @ z[0]

        def solver(z, linear, weight, anchor, g_prox=None):
            return np.linalg.solve(Q + weight * np.eye(5), weight * anchor - q - linear)

        s = self_surrogate(f, solver)
        lin, a, w = rng.standard_normal(5), rng.standard_normal(5), 1.5
        x = s.solve((np.zeros(5),), lin, w, a)
        grad = Q @ x + q + lin + w * (x - a)
        assert np.linalg.norm(grad) < 1e-10

    def test_check_passes(self):
        f, s = nuclear_surrogate()
        rep = check_surrogate(s, f, [(3, 3)], samples=200)
        assert rep.passed and rep.error_bound_violation <= 0.0


class TestLipschitzSurrogate:
    def test_half_norm_exact(self, rng):
        f = lambda z: 0.5 * np.sum(z[0] ** 2)
        s = lipschitz_surrogate(f, lambda z: z[0], 1.0)
        for _ in range(20):
            z, x = (rng.standard_normal(3),), rng.standard_normal(3)
            assert s.value(x, z) == pytest.approx(0.5 * np.sum(x ** 2), abs=1e-12)

    def test_majorizes_with_gram_norm(self, rng):
        A = rng.standard_normal((6, 4))
        f = lambda z: 0.5 * np.sum((A @ z[0]) ** 2)
        L = np.linalg.norm(A, 2) ** 2
        s = lipschitz_surrogate(f, lambda z: A.T @ (A @ z[0]), L, shapes=[(4,)])
        rep = check_surrogate(s, f, [(4,)], samples=100)
        assert rep.passed

    def test_touches(self, rng):
        f = lambda z: np.sum(np.cos(z[0]))
        s = lipschitz_surrogate(f, lambda z: -np.sin(z[0]), 1.0)
        z = (rng.standard_normal(5),)
        assert s.value(z[0], z) == pytest.approx(f(z), abs=1e-14)

    def test_halved_constant_fails(self):
        f = lambda z: 0.5 * np.sum(z[0] ** 2)
        s = lipschitz_surrogate(f, lambda z: z[0], 0.25)
        rep = check_surrogate(s, f, [(1,)], samples=100)
        assert not rep.passed
        assert rep.majorization_violation > 0
        with pytest.raises(InvalidConstantError):
            lipschitz_surrogate(f, lambda z: z[0], 0.25, shapes=[(1,)])

    def test_error_bound_sampled(self, rng):
        f = lambda z: np.sum(np.log1p(z[0] ** 2))
        s = lipschitz_surrogate(f, lambda z: 2 * z[0] / (1 + z[0] ** 2), 2.0)
        rep = check_surrogate(s, f, [(3,)], samples=500)
        assert rep.passed

    def test_solve_with_prox(self, rng):
        f = lambda z: 0.5 * np.sum(z[0] ** 2)
        s = lipschitz_surrogate(f, lambda z: z[0], 1.0)
        g = lambda x: 0.3 * np.sum(np.abs(x))
        g_prox = lambda v, step: np.sign(v) * np.maximum(np.abs(v) - 0.3 * step, 0.0)
        z = (rng.standard_normal(4),)
        lin, a = rng.standard_normal(4), rng.standard_normal(4)
        x = s.solve(z, lin, 3.0, a, g_prox)
        base = subproblem_objective(s, z, lin, 3.0, a, x, g)
        for _ in range(50):
            d = 1e-3 * rng.standard_normal(4)
            assert base <= subproblem_objective(s, z, lin, 3.0, a, x + d, g) + 1e-12


class TestBregmanSurrogate:
    def _base(self):
        f = lambda z: 0.5 * np.sum(z[0] ** 2) + np.sum(np.sin(z[0]))
        return f, lipschitz_surrogate(f, lambda z: z[0] + np.cos(z[0]), 2.0)

    def test_identity_adds_squared_distance(self, rng):
        f, base = self._base()
        s = bregman_surrogate(base, IdentityMap(3))
        z, x = (rng.standard_normal(3),), rng.standard_normal(3)
        assert s.value(x, z) == pytest.approx(base.value(x, z) + np.sum((x - z[0]) ** 2), rel=1e-12)

    def test_small_q_recovers_base(self, rng):
        f, base = self._base()
        s = bregman_surrogate(base, IdentityMap(3, scale=1e-12))
        z = (rng.standard_normal(3),)
        lin, a = rng.standard_normal(3), rng.standard_normal(3)
        np.testing.assert_allclose(s.solve(z, lin, 1.0, a), base.solve(z, lin, 1.0, a), atol=1e-6)

    def test_error_lower_bound(self, rng):
        f, base = self._base()
        Q = DenseMap(np.diag([1.0, 2.0, 3.0]))
        s = bregman_surrogate(base, Q)
        for _ in range(100):
            z, x = (rng.standard_normal(3),), rng.standard_normal(3)
            e = s.value(x, z) - f((x,))
            assert e >= 1.0 * np.sum((x - z[0]) ** 2) - 1e-10

    def test_general_q_inner_loop_minimizes(self, rng):
        f, base = self._base()
        B = rng.standard_normal((3, 3))
        Q = DenseMap(B @ B.T + np.eye(3))
        s = bregman_surrogate(base, Q)
        z = (rng.standard_normal(3),)
        lin, a = rng.standard_normal(3), rng.standard_normal(3)
        x = s.solve(z, lin, 1.5, a)
        base_val = subproblem_objective(s, z, lin, 1.5, a, x)
        for _ in range(50):
            assert base_val <= subproblem_objective(s, z, lin, 1.5, a, x + 1e-3 * rng.standard_normal(3)) + 1e-10
        assert check_surrogate(s, f, [(3,)], samples=200).passed

    def test_not_positive_definite(self):
        f, base = self._base()
        with pytest.raises(InvalidConstantError):
            bregman_surrogate(base, DenseMap(-np.eye(3)))


class TestLrrU2:
    def test_weights_at_zero(self):
        np.testing.assert_allclose(u2_weights(np.zeros((3, 4)), 0.01, 5.0), 0.05)

    def test_touches(self, rng):
        s = lrr_u2_surrogate(0.01, 5.0, index=0)
        Y = rng.standard_normal((3, 4))
        assert s.value(Y, (Y,)) == pytest.approx(column_exp_penalty(Y, 0.01, 5.0), abs=1e-15)

    def test_majorizes(self):
        lam, theta = 0.01, 5.0
        f = lambda z: column_exp_penalty(z[0], lam, theta)
        s = lrr_u2_surrogate(lam, theta, index=0)
        for scale in (0.1, 1.0):
            rep = check_surrogate(s, f, [(4, 5)], samples=1000, scale=scale)
            assert rep.passed, rep

    def test_with_rest(self, rng):
        lam, theta = 0.3, 2.0
        f = lambda z: nuclear_norm(z[0]) + column_exp_penalty(z[1], lam, theta)
        s = lrr_u2_surrogate(lam, theta, index=1, rest=lambda z: nuclear_norm(z[0]))
        rep = check_surrogate(s, f, [(3, 3), (3, 4)], samples=300)
        assert rep.passed

    def test_solve_minimizes_subproblem(self, rng):
        lam, theta = 0.5, 2.0
        s = lrr_u2_surrogate(lam, theta, index=0)
        Yk = rng.standard_normal((3, 4))
        lin, a = rng.standard_normal((3, 4)), rng.standard_normal((3, 4))
        x = s.solve((Yk,), lin, 2.0, a)
        base = subproblem_objective(s, (Yk,), lin, 2.0, a, x)
        for _ in range(50):
            assert base <= subproblem_objective(s, (Yk,), lin, 2.0, a, x + 1e-3 * rng.standard_normal(x.shape)) + 1e-12

    def test_rejects_g(self):
        s = lrr_u2_surrogate(1.0, 1.0, index=0)
        with pytest.raises(ValueError):
            s.solve((np.zeros((2, 2)),), np.zeros((2, 2)), 1.0, np.zeros((2, 2)), lambda v, t: v)


class TestSmoothTerm:
    def test_lipschitz_check(self):
        h = SmoothTerm(lambda y: 0.5 * y @ y, lambda y: y, 1.0)
        assert check_smooth_term(h, (4,)) <= 1e-12
        bad = SmoothTerm(lambda y: y @ y, lambda y: 2 * y, 1.0)
        assert check_smooth_term(bad, (4,)) > 0.5

    def test_positive_constant(self):
        with pytest.raises(ValueError):
            SmoothTerm(lambda y: 0.0, lambda y: 0 * y, 0.0)
