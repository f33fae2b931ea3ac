"""Block surrogate functions and their subproblem solvers.

A block ``i`` surrogate ``u_i(x_i, z)`` of ``f`` touches ``f`` at ``x_i = z_i``
and majorizes ``x_i -> f(x_i, z_{-i})`` everywhere.  Each surrogate carries a
``solve`` method for the composite subproblem

    min_x  u_i(x, z) + g_i(x) + <linear, x> + (weight / 2) ||x - anchor||^2

where ``g_i`` enters only through its prox, ``g_prox(v, step)`` returning
``argmin_x g_i(x) + ||x - v||^2 / (2 step)``.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidConstantError
from .linops import gram_norm, inner
from .prox import column_exp_penalty, group_soft_threshold_columns

__all__ = [
    "BlockSurrogate",
    "SmoothTerm",
    "SurrogateReport",
    "substitute",
    "self_surrogate",
    "lipschitz_surrogate",
    "bregman_surrogate",
    "lrr_u2_surrogate",
    "u2_weights",
    "check_surrogate",
    "check_smooth_term",
    "subproblem_objective",
]


def substitute(z, i, x_i):
    """Return the block tuple ``z`` with block ``i`` replaced by ``x_i``."""
    z = tuple(z)
    return z[:i] + (x_i,) + z[i + 1:]


@dataclass(frozen=True)
class BlockSurrogate:
    """A block surrogate together with its subproblem solver.

    ``error_coef`` is a constant ``c`` with ``0 <= e_i(x_i, z) <= c ||x_i - z_i||^2``
    for the approximation error ``e_i = u_i - f``; ``None`` means the surrogate
    declares no such bound.
    """

    index: int
    value: Callable
    solve: Callable
    convex: bool
    error_coef: Optional[float] = None
    name: str = "surrogate"


@dataclass(frozen=True)
class SmoothTerm:
    """``h`` with its gradient and Lipschitz constant of the gradient."""

    value: Callable
    grad: Callable
    lipschitz: float
    convex: bool = True

    def __post_init__(self):
        if not self.lipschitz > 0:
            raise ValueError("Lipschitz constant must be positive")


@dataclass
class SurrogateReport:
    samples: int
    touch_violation: float
    majorization_violation: float
    error_bound_violation: Optional[float] = None
    passed: bool = field(init=False)

    def __post_init__(self):
        ok = self.touch_violation <= 1e-10 and self.majorization_violation <= 1e-10
        if self.error_bound_violation is not None:
            ok = ok and self.error_bound_violation <= 1e-10
        self.passed = ok


def subproblem_objective(s, z, linear, weight, anchor, x, g=None):
    """Value of the composite subproblem that ``s.solve`` minimizes, at ``x``."""
    val = s.value(x, z) + inner(linear, x) + 0.5 * weight * float(np.sum((x - anchor) ** 2))
    if g is not None:
        val += g(x)
    return val


def self_surrogate(f, exact_solver, index=0, convex=True, name="self"):
    """Use ``f`` itself as the surrogate of block ``index``.

    ``f`` maps a tuple of blocks to a float and ``exact_solver(z, linear,
    weight, anchor, g_prox)`` must minimize the subproblem exactly, e.g. via a
    closed-form prox.  The approximation error is identically zero.
    """

    def value(x_i, z):
        return float(f(substitute(z, index, x_i)))

    return BlockSurrogate(index, value, exact_solver, convex, error_coef=0.0, name=name)


def lipschitz_surrogate(f, grad, L, index=0, convex=True, shapes=None, samples=100, seed=0):
    """Quadratic upper model ``f(z) + <grad_i f(z), x - z_i> + (L/2)||x - z_i||^2``.

    ``grad(z)`` returns the partial gradient of ``f`` in block ``index``.  The
    subproblem collapses to one prox of ``g_i``.  When ``shapes`` (the block
    shapes) is given, majorization is sampled on ``samples`` random pairs and a
    violation beyond ``1e-9`` raises :class:`InvalidConstantError`.
    """
    if not L > 0:
        raise ValueError("L must be positive")
    L = float(L)

    def value(x_i, z):
        d = x_i - z[index]
        return float(f(z)) + inner(grad(z), d) + 0.5 * L * float(np.sum(d * d))

    def solve(z, linear, weight, anchor, g_prox=None):
        total = L + weight
        center = (L * z[index] + weight * anchor - grad(z) - linear) / total
        return center if g_prox is None else g_prox(center, 1.0 / total)

    s = BlockSurrogate(index, value, solve, convex, error_coef=L, name="lipschitz")
    if shapes is not None:
        rep = check_surrogate(s, f, shapes, samples=samples, seed=seed)
        if rep.majorization_violation > 1e-9:
            raise InvalidConstantError(
                f"L={L} does not majorize f: violation {rep.majorization_violation:.3e}"
            )
    return s


def bregman_surrogate(base, Q, samples=100, seed=0, inner_tol=1e-12, inner_max_iter=500):
    """Add the Bregman term ``||x - z_i||_Q^2 = <x - z_i, Q(x - z_i)>`` to ``base``.

    ``Q`` is a self-adjoint positive-definite :class:`~iadmm.linops.LinearMap`
    on the block.  For a scaled identity the extra term folds into the
    subproblem quadratic exactly.  Otherwise the subproblem is solved by an
    inner majorization loop that replaces the ``Q`` term with its tangent plus
    ``lambda_max(Q) ||x - x_t||^2`` and calls ``base.solve`` each step.
    """
    rng = np.random.default_rng(seed)
    lam_min_seen = np.inf
    for _ in range(samples):
        v = rng.standard_normal(Q.in_shape)
        rq = inner(v, Q.apply(v)) / inner(v, v)
        lam_min_seen = min(lam_min_seen, rq)
    if not lam_min_seen > 0:
        raise InvalidConstantError(f"Q is not positive definite (Rayleigh quotient {lam_min_seen:.3e})")

    i = base.index

    def qnorm2(d):
        return inner(d, Q.apply(d))

    def value(x_i, z):
        return base.value(x_i, z) + qnorm2(x_i - z[i])

    if Q.is_scaled_identity():
        q = Q.scale

        def solve(z, linear, weight, anchor, g_prox=None):
            total = weight + 2.0 * q
            return base.solve(z, linear, total, (weight * anchor + 2.0 * q * z[i]) / total, g_prox)

        lam_max = q
    else:
        lam_max = float(np.sqrt(gram_norm(Q)))

        def solve(z, linear, weight, anchor, g_prox=None):
            total = weight + 2.0 * lam_max
            x = np.array(z[i], dtype=float)
            for _ in range(inner_max_iter):
                lin = linear + 2.0 * Q.apply(x - z[i])
                x_new = base.solve(z, lin, total, (weight * anchor + 2.0 * lam_max * x) / total, g_prox)
                step = np.linalg.norm(x_new - x)
                x = x_new
                if step <= inner_tol * (1.0 + np.linalg.norm(x)):
                    break
            return x

    coef = None if base.error_coef is None else base.error_coef + lam_max
    return BlockSurrogate(i, value, solve, base.convex, error_coef=coef, name=f"bregman({base.name})")


def u2_weights(Yk, lam, theta):
    """Tangent slopes ``lam * theta * exp(-theta ||Y^k_j||)``, one per column."""
    return lam * theta * np.exp(-theta * np.linalg.norm(Yk, axis=0))


def lrr_u2_surrogate(lam, theta, index=1, rest=None):
    """Linearized surrogate of the column penalty ``lam * sum_j (1 - exp(-theta ||Y_j||))``.

    At the expansion point ``Y^k = z[index]`` the concave profile is replaced
    by its tangent, giving per-column weights ``lam * theta * exp(-theta ||Y^k_j||)``::

        u(Y, z) = r2(Y^k) + sum_j w_j (||Y_j|| - ||Y^k_j||) + rest(z)

    ``rest(z)`` is the part of ``f`` that does not depend on this block (for
    the low-rank model, ``lambda_1 ||X||_*``).  The subproblem is solved column
    by column with a group soft threshold; ``g_i`` must be absent.
    """
    if not (lam > 0 and theta > 0):
        raise ValueError("lam and theta must be positive")

    def weights(Yk):
        return u2_weights(Yk, lam, theta)

    def value(Y, z):
        Yk = z[index]
        w = weights(Yk)
        val = column_exp_penalty(Yk, lam, theta)
        val += float(np.sum(w * (np.linalg.norm(Y, axis=0) - np.linalg.norm(Yk, axis=0))))
        if rest is not None:
            val += float(rest(z))
        return val

    def solve(z, linear, weight, anchor, g_prox=None):
        if g_prox is not None:
            raise ValueError("lrr_u2_surrogate does not support an extra g term")
        P = anchor - linear / weight
        return group_soft_threshold_columns(P, weights(z[index]) / weight)

    # |phi''| <= theta^2 bounds the tangent gap of 1 - exp(-theta t)
    return BlockSurrogate(index, value, solve, True, error_coef=0.5 * lam * theta ** 2, name="lrr-u2")


def check_surrogate(s, f, shapes, samples=1000, seed=0, scale=1.0):
    """Sample the two defining properties of a block surrogate.

    Draws ``samples`` seeded random pairs ``(x_i, z)`` with entries
    ``N(0, scale^2)`` and reports the worst violation of ``u_i(z_i, z) = f(z)``
    and of ``u_i(x_i, z) >= f(x_i, z_{-i})``; both must stay within ``1e-10``.
    If the surrogate declares ``error_coef``, the bound ``e_i <= c||x_i - z_i||^2``
    is sampled too.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    i = s.index
    touch = major = 0.0
    bound = 0.0 if s.error_coef is not None else None
    for _ in range(samples):
        z = tuple(scale * rng.standard_normal(sh) for sh in shapes)
        x_i = scale * rng.standard_normal(shapes[i])
        fz = float(f(z))
        touch = max(touch, abs(s.value(z[i], z) - fz))
        e = s.value(x_i, z) - float(f(substitute(z, i, x_i)))
        major = max(major, -e)
        if bound is not None:
            d2 = float(np.sum((x_i - z[i]) ** 2))
            bound = max(bound, e - s.error_coef * d2)
    return SurrogateReport(samples, touch, major, bound)


def check_smooth_term(h, shape, samples=100, seed=0):
    """Largest sampled ratio ``||grad h(a) - grad h(b)|| / ||a - b||`` minus ``h.lipschitz``."""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(samples):
        a = rng.standard_normal(shape)
        b = rng.standard_normal(shape)
        ratio = np.linalg.norm(h.grad(a) - h.grad(b)) / np.linalg.norm(a - b)
        worst = max(worst, ratio - h.lipschitz)
    return worst
