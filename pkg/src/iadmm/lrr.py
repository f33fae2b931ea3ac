"""Nonconvex latent low-rank representation.

Model::

    min  lambda1 ||X||_* + lam sum_j (1 - exp(-theta ||Y_j||)) + 1/2 ||Z||_F^2
    s.t. A1 X + Y A2 + Z = D,   A1 = D P1,  A2 = P2^T D

with ``P1``, ``P2`` orthonormal bases of the column spaces of ``D^T`` and
``D``.  ``X`` and ``Y`` are the two primal blocks, ``Z`` plays the role of
``y`` with ``h(Z) = 1/2 ||Z||^2`` and ``B = I``.

Three variants share this model:

``admm-mm``
    ``X`` by singular value thresholding, ``Y`` through the linearized
    (tangent) surrogate of the exponential penalty, no extrapolation.
``iadmm-mm``
    ``admm-mm`` plus Nesterov-type extrapolation of both blocks.
``linearizedadmm``
    As ``admm-mm`` but the ``Y`` subproblem keeps the exact penalty and is
    solved approximately by an inner MM loop per column.
"""

from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from . import framework as fw
from .linops import IdentityMap, LeftMultiply, RightMultiply, gram_norm, qr_orthonormalize, svd
from .prox import column_exp_penalty, nuclear_norm, svt
from .surrogates import SmoothTerm, lrr_u2_surrogate, self_surrogate, u2_weights

__all__ = [
    "VARIANTS",
    "LrrModel",
    "LrrPreset",
    "LrrResult",
    "PRESETS",
    "build_model",
    "lrr_objective",
    "lrr_problem",
    "lrr_config",
    "update_X",
    "update_Y",
    "update_Z",
    "update_W",
    "exp_prox_mm_columns",
    "run_lrr",
    "affinity",
]

VARIANTS = ("linearizedadmm", "admm-mm", "iadmm-mm")

_ALIASES = {
    "linearizedadmm": "linearizedadmm",
    "linearized-admm": "linearizedadmm",
    "linearized": "linearizedadmm",
    "admm-mm": "admm-mm",
    "admmmm": "admm-mm",
    "iadmm-mm": "iadmm-mm",
    "iadmmmm": "iadmm-mm",
}


def _variant(name):
    key = str(name).lower()
    if key not in _ALIASES:
        raise ValueError(f"unknown variant {name!r}; choose from {', '.join(VARIANTS)}")
    return _ALIASES[key]


@dataclass(frozen=True)
class LrrModel:
    D: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    lambda1: float
    lam: float
    theta: float
    variant: str
    kappa1: float
    kappa2: float

    @property
    def X_shape(self):
        return (self.A1.shape[1], self.D.shape[1])

    @property
    def Y_shape(self):
        return (self.D.shape[0], self.A2.shape[0])

    def residual(self, X, Y, Z):
        return self.A1 @ X + Y @ self.A2 + Z - self.D


@dataclass(frozen=True)
class LrrPreset:
    """Named parameter set.  ``beta=None`` means the automatic choice."""

    name: str
    lambda1: float
    lam: float
    theta: float
    C_x: float = 1 - 1e-15
    C_y: float = 1 - 1e-6
    alpha: float = 1.0
    beta: Optional[float] = None


PRESETS = {
    "hopkins": LrrPreset("hopkins", lambda1=0.01, lam=0.01, theta=5.0),
    "faces": LrrPreset("faces", lambda1=1.0, lam=1.0, theta=5.0),
}


@dataclass
class LrrResult:
    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    W: np.ndarray
    objective: List[float]
    feasibility: List[float]
    wall_time: float
    converged: bool
    run: Optional[fw.RunResult] = field(default=None, repr=False)

    @property
    def iterations(self):
        return len(self.objective)


def build_model(D, lambda1, lam, theta, variant="iadmm-mm"):
    """Orthonormalize ``D^T`` and ``D``, form ``A1``, ``A2`` and their Gram norms.

    Raises :class:`~iadmm.errors.EmptyBasisError` for a zero ``D``.
    """
    D = np.array(D, dtype=float)
    if D.ndim != 2:
        raise ValueError("D must be a matrix")
    for name, v in (("lambda1", lambda1), ("lam", lam), ("theta", theta)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    P1 = qr_orthonormalize(D.T)
    P2 = qr_orthonormalize(D)
    A1 = D @ P1
    A2 = P2.T @ D
    n, d = D.shape[1], D.shape[0]
    kappa1 = gram_norm(LeftMultiply(A1, n))
    kappa2 = gram_norm(RightMultiply(A2, d))
    for a in (D, P1, P2, A1, A2):
        a.setflags(write=False)
    return LrrModel(D, P1, P2, A1, A2, float(lambda1), float(lam), float(theta),
                    _variant(variant), kappa1, kappa2)


def lrr_objective(m, X, Y, Z):
    """``lambda1 ||X||_* + lam sum_j (1 - exp(-theta ||Y_j||)) + 1/2 ||Z||_F^2``."""
    return (m.lambda1 * nuclear_norm(X) + column_exp_penalty(Y, m.lam, m.theta)
            + 0.5 * float(np.sum(np.asarray(Z) ** 2)))


def exp_prox_mm_columns(V, lam, theta, c, max_iter=50, tol=1e-10):
    """Column-wise MM prox of ``lam (1 - exp(-theta ||.||))`` with weight ``c``.

    Same iteration as :func:`~iadmm.prox.exp_prox_mm` run on every column of
    ``V`` at once; each column stops as soon as its own step is at most ``tol``.
    """
    V = np.asarray(V, dtype=float)
    vn = np.linalg.norm(V, axis=0)
    Y = V.copy()
    yn = vn.copy()
    active = np.ones(V.shape[1], dtype=bool)
    scale = lam * theta / c
    for _ in range(max_iter):
        if not active.any():
            break
        t = scale * np.exp(-theta * yn[active])
        vna = vn[active]
        factor = np.where(vna > t, 1.0 - t / np.where(vna > 0, vna, 1.0), 0.0)
        new = V[:, active] * factor
        step = np.linalg.norm(new - Y[:, active], axis=0)
        Y[:, active] = new
        yn[active] = np.linalg.norm(new, axis=0)
        idx = np.flatnonzero(active)
        active[idx[step <= tol]] = False
    return Y


def _x_solver(m):
    def solve(z, linear, weight, anchor, g_prox=None):
        return svt(anchor - linear / weight, m.lambda1 / weight)
    return solve


def _y_exact_solver(m):
    def solve(z, linear, weight, anchor, g_prox=None):
        return exp_prox_mm_columns(anchor - linear / weight, m.lam, m.theta, weight)
    return solve


def lrr_problem(m, variant=None):
    """Express the model as a :class:`~iadmm.framework.ProblemSpec`."""
    variant = _variant(variant or m.variant)
    d, n = m.D.shape

    def f(x):
        X, Y = x
        return m.lambda1 * nuclear_norm(X) + column_exp_penalty(Y, m.lam, m.theta)

    u1 = self_surrogate(f, _x_solver(m), index=0, convex=True, name="nuclear")
    if variant == "linearizedadmm":
        u2 = self_surrogate(f, _y_exact_solver(m), index=1, convex=False, name="exp-penalty")
    else:
        u2 = lrr_u2_surrogate(m.lam, m.theta, index=1,
                              rest=lambda z: m.lambda1 * nuclear_norm(z[0]))
    h = SmoothTerm(value=lambda Z: 0.5 * float(np.sum(Z * Z)), grad=lambda Z: Z,
                   lipschitz=1.0, convex=True)
    blocks = [
        fw.Block(u1, LeftMultiply(m.A1, n)),
        fw.Block(u2, RightMultiply(m.A2, d)),
    ]
    return fw.ProblemSpec(blocks, f, IdentityMap((d, n)), m.D, h, sigma_b=1.0)


def lrr_config(variant, preset="hopkins", **overrides):
    """Solver configuration of a variant under a preset; keywords override fields."""
    variant = _variant(variant)
    pr = PRESETS[preset] if isinstance(preset, str) else preset
    cfg = dict(
        alpha=pr.alpha,
        beta="auto" if pr.beta is None else pr.beta,
        C_x=pr.C_x,
        C_y=pr.C_y,
        x_extrapolation="nesterov" if variant == "iadmm-mm" else "none",
        mode="global",
    )
    cfg.update(overrides)
    return fw.SolverConfig(**cfg)


def _xbar(X, X_prev, zeta):
    return X if zeta == 0.0 else X + zeta * (X - X_prev)


def update_X(m, X, X_prev, Y, Z, W, beta, kappa1, zeta1=0.0):
    """``svt(Xbar - A1^T (A1 Xbar + Y A2 + Z - D + W/beta) / kappa1, lambda1 / (kappa1 beta))``."""
    Xb = _xbar(X, X_prev, zeta1)
    G = m.A1.T @ (m.A1 @ Xb + Y @ m.A2 + Z - m.D + W / beta)
    return svt(Xb - G / kappa1, m.lambda1 / (kappa1 * beta))


def update_Y(m, X_new, Y, Y_prev, Z, W, beta, kappa2, zeta2=0.0, variant=None):
    """Column group threshold of ``P = Ybar - (A1 X + Ybar A2 + Z - D + W/beta) A2^T / kappa2``.

    Thresholds are ``lam theta exp(-theta ||Y^k_j||) / (kappa2 beta)``.  For
    ``linearizedadmm`` the exact column prox is approximated by MM instead.
    """
    variant = _variant(variant or m.variant)
    Yb = _xbar(Y, Y_prev, zeta2)
    P = Yb - (m.A1 @ X_new + Yb @ m.A2 + Z - m.D + W / beta) @ m.A2.T / kappa2
    c = kappa2 * beta
    if variant == "linearizedadmm":
        return exp_prox_mm_columns(P, m.lam, m.theta, c)
    t = u2_weights(Y, m.lam, m.theta) / c
    norms = np.linalg.norm(P, axis=0)
    factor = np.zeros_like(norms)
    live = norms > t
    factor[live] = 1.0 - t[live] / norms[live]
    return P * factor


def update_Z(m, X_new, Y_new, W, beta):
    """``-(W + beta (A1 X + Y A2 - D)) / (1 + beta)``."""
    return -(W + beta * (m.A1 @ X_new + Y_new @ m.A2 - m.D)) / (1.0 + beta)


def update_W(m, X_new, Y_new, Z_new, W, beta, alpha=1.0):
    """``W + alpha beta (A1 X + Y A2 + Z - D)``."""
    return W + alpha * beta * m.residual(X_new, Y_new, Z_new)


def run_lrr(m, iterations=500, seconds=None, preset="hopkins", variant=None, audit=False,
            callbacks=(), **overrides):
    """Solve the model from all-zero initial points.

    ``iterations`` and ``seconds`` bound the run; the solver also stops early
    once the feasibility and step tolerances of the configuration are met.
    Keyword ``overrides`` go to :class:`~iadmm.framework.SolverConfig`.
    """
    variant = _variant(variant or m.variant)
    if variant != m.variant:
        m = replace(m, variant=variant)
    p = lrr_problem(m, variant)
    c = lrr_config(variant, preset, max_outer=iterations, max_seconds=seconds,
                   audit=audit, **overrides)
    res = fw.run(p, c, callbacks)
    st = res.state
    X, Y = st.x
    return LrrResult(
        X=X, Y=Y, Z=st.y, W=st.w,
        objective=[r.objective for r in res.trace],
        feasibility=[r.feas for r in res.trace],
        wall_time=res.wall_time,
        converged=res.converged,
        run=res,
    )


def affinity(result):
    """Affinity ``Q = U~ U~^T`` with ``U~`` the row-normalized ``U sqrt(Sigma)`` of ``svd(X*)``.

    Accepts an :class:`LrrResult` or the matrix ``X*`` itself.
    """
    X = result.X if isinstance(result, LrrResult) else np.asarray(result, dtype=float)
    U, S, _ = svd(X)
    if S.size == 0 or S[0] == 0.0:
        return np.zeros((X.shape[0], X.shape[0]))
    # numerically zero directions would be blown up by the row normalization
    tol = max(X.shape) * np.finfo(float).eps
    keep = S > S[0] * tol
    Ut = U[:, keep] * np.sqrt(S[keep])
    norms = np.linalg.norm(Ut, axis=1)
    nz = norms > norms.max() * tol
    Ut[~nz] = 0.0
    Ut[nz] /= norms[nz, None]
    return Ut @ Ut.T
