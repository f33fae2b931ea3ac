"""Proximal and thresholding operators.

All operators solve ``min_x g(x) + (c/2)||x - v||^2`` for a particular ``g``;
the thresholds passed in are already divided by ``c``.
"""

import numpy as np

from .errors import ConvexityError
from .linops import inner, svd

__all__ = [
    "ProxRequest",
    "soft_threshold",
    "svt",
    "nuclear_norm",
    "group_soft_threshold",
    "group_soft_threshold_columns",
    "exp_penalty",
    "column_exp_penalty",
    "exp_prox_objective",
    "exp_prox_mm",
    "bregman_distance",
]


class ProxRequest:
    """Anchor point and quadratic weight of a prox subproblem."""

    __slots__ = ("anchor", "weight")

    def __init__(self, anchor, weight):
        anchor = np.asarray(anchor, dtype=float)
        if not weight > 0:
            raise ValueError("prox weight must be positive")
        if not np.all(np.isfinite(anchor)):
            raise ValueError("prox anchor must be finite")
        self.anchor = anchor
        self.weight = float(weight)


def soft_threshold(v, t):
    """Componentwise ``sign(v) * max(|v| - t, 0)``."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def nuclear_norm(m):
    return float(np.sum(np.linalg.svd(np.asarray(m, dtype=float), compute_uv=False)))


def svt(m, t):
    """Singular value thresholding, the prox of ``t * ||.||_*``.

    Parameters
    ----------
    m : ndarray
        Matrix to shrink.
    t : float
        Nonnegative threshold applied to every singular value.

    Returns
    -------
    ndarray
        ``U diag([S - t]_+) V^T`` where ``U, S, V = svd(m)``.
    """
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    U, S, V = svd(m)
    S = np.maximum(S - t, 0.0)
    keep = S > 0
    if not np.any(keep):
        return np.zeros_like(np.asarray(m, dtype=float))
    return (U[:, keep] * S[keep]) @ V[:, keep].T


def group_soft_threshold(p, t):
    """Prox of ``t * ||.||_2`` (block soft thresholding).

    Returns the zero vector when ``||p|| <= t``, including ``p = 0``.
    """
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    p = np.asarray(p, dtype=float)
    norm = np.linalg.norm(p)
    if norm <= t or norm == 0.0:
        return np.zeros_like(p)
    return (1.0 - t / norm) * p


def group_soft_threshold_columns(P, t):
    """Apply :func:`group_soft_threshold` to each column of ``P``.

    ``t`` may be a scalar or one threshold per column.
    """
    P = np.asarray(P, dtype=float)
    t = np.broadcast_to(np.asarray(t, dtype=float), (P.shape[1],))
    if np.any(t < 0):
        raise ValueError("thresholds must be nonnegative")
    norms = np.linalg.norm(P, axis=0)
    factor = np.zeros_like(norms)
    live = norms > t
    factor[live] = 1.0 - t[live] / norms[live]
    return P * factor


def exp_penalty(x, lam, theta):
    """``lam * (1 - exp(-theta * ||x||_2))``."""
    return lam * (1.0 - np.exp(-theta * np.linalg.norm(x)))


def column_exp_penalty(Y, lam, theta):
    """``lam * sum_j (1 - exp(-theta ||Y[:, j]||_2))`` over the columns of ``Y``."""
    norms = np.linalg.norm(np.asarray(Y, dtype=float), axis=0)
    return float(lam * np.sum(-np.expm1(-theta * norms)))


def exp_prox_objective(x, p, lam, theta, c):
    x = np.asarray(x, dtype=float)
    return exp_penalty(x, lam, theta) + 0.5 * c * float(np.sum((x - p) ** 2))


def exp_prox_mm(p, lam, theta, c, max_iter=50, tol=1e-10, history=None):
    """Approximate prox of the exponential column penalty by majorization-minimization.

    The concave ``1 - exp(-theta t)`` is replaced by its tangent at the current
    norm, which turns each inner step into a group soft threshold::

        x <- group_soft_threshold(p, lam * theta * exp(-theta ||x||) / c)

    starting from ``x = p``.  Stops when successive iterates differ by at most
    ``tol`` or after ``max_iter`` steps.  If ``history`` is a list, the inner
    objective values (starting point included) are appended to it; they are
    nonincreasing.
    """
    if not (lam > 0 and theta > 0 and c > 0):
        raise ValueError("lam, theta and c must be positive")
    p = np.asarray(p, dtype=float)
    x = p.copy()
    if history is not None:
        history.append(exp_prox_objective(x, p, lam, theta, c))
    for _ in range(max_iter):
        weight = lam * theta * np.exp(-theta * np.linalg.norm(x)) / c
        x_new = group_soft_threshold(p, weight)
        step = np.linalg.norm(x_new - x)
        x = x_new
        if history is not None:
            history.append(exp_prox_objective(x, p, lam, theta, c))
        if step <= tol:
            break
    return x


def bregman_distance(phi_grad, phi_val, a, b):
    """``phi(a) - phi(b) - <grad phi(b), a - b>`` for convex differentiable ``phi``.

    Raises :class:`ConvexityError` when the result is below ``-1e-12``; tiny
    negative rounding is clipped to zero.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = float(phi_val(a) - phi_val(b) - inner(np.asarray(phi_grad(b), dtype=float), a - b))
    if d < -1e-12:
        raise ConvexityError(f"negative Bregman distance {d:.3e}; phi is not convex")
    return max(d, 0.0)
