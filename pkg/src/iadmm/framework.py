"""Inertial majorization-minimization ADMM for multi-block linearly constrained problems.

Solves ::

    min  f(x_1, ..., x_s) + sum_i g_i(x_i) + h(y)
    s.t. sum_i A_i x_i + B y = b

by cycling over the ``x`` blocks (each one minimizing a block surrogate plus
a linearized, optionally extrapolated penalty), then a linearized ``y`` step
and an over-relaxed dual step ``omega += alpha * beta * residual``.
"""

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from . import diagnostics as diag
from .errors import InvalidParametersError, NumericError, SolverAbort, UnsupportedAutoError
from .linops import HStack, LinearMap, gram_norm, inner
from .surrogates import BlockSurrogate, SmoothTerm

__all__ = [
    "Block",
    "ProblemSpec",
    "SolverConfig",
    "DerivedConstants",
    "IterState",
    "Check",
    "ValidationReport",
    "RunResult",
    "NoExtrapolation",
    "ConstantZeta",
    "NesterovZeta",
    "nesterov_zeta_schedule",
    "augmented_lagrangian",
    "auto_beta",
    "derive_constants",
    "validate_parameters",
    "initial_state",
    "step_block_x",
    "step_y",
    "step_omega",
    "run",
]

NONCONVEX_KAPPA_FACTOR = 1.001


@dataclass(frozen=True)
class Block:
    """One primal block: its surrogate, coupling map and optional ``g_i``."""

    surrogate: BlockSurrogate
    A: LinearMap
    g: Optional[Callable] = None
    g_prox: Optional[Callable] = None


@dataclass
class ProblemSpec:
    """Problem data.

    ``f`` takes the tuple of blocks.  ``sigma_b`` is the smallest eigenvalue
    of ``B B^*`` and must be positive.  ``x0``, ``y0`` and ``w0`` default to
    zeros.
    """

    blocks: Sequence[Block]
    f: Callable
    B: LinearMap
    b: np.ndarray
    h: SmoothTerm
    sigma_b: float
    x0: Optional[Sequence[np.ndarray]] = None
    y0: Optional[np.ndarray] = None
    w0: Optional[np.ndarray] = None

    def __post_init__(self):
        self.blocks = tuple(self.blocks)
        self.b = np.asarray(self.b, dtype=float)
        if not self.sigma_b > 0:
            raise ValueError("sigma_b = lambda_min(B B^*) must be positive")
        for i, blk in enumerate(self.blocks):
            if blk.surrogate.index != i:
                raise ValueError(f"surrogate of block {i} declares index {blk.surrogate.index}")
            if tuple(blk.A.out_shape) != self.b.shape:
                raise ValueError(f"A_{i + 1} output shape {blk.A.out_shape} != b shape {self.b.shape}")
        if tuple(self.B.out_shape) != self.b.shape:
            raise ValueError(f"B output shape {self.B.out_shape} != b shape {self.b.shape}")
        self.A = HStack([blk.A for blk in self.blocks])

    @property
    def s(self):
        return len(self.blocks)

    @property
    def x_shapes(self):
        return [tuple(blk.A.in_shape) for blk in self.blocks]

    @property
    def y_shape(self):
        return tuple(self.B.in_shape)

    def F(self, x):
        val = float(self.f(tuple(x)))
        for blk, xi in zip(self.blocks, x):
            if blk.g is not None:
                val += float(blk.g(xi))
        return val


class NoExtrapolation:
    sup = 0.0

    def __iter__(self):
        while True:
            yield 0.0


class ConstantZeta:
    def __init__(self, zeta):
        if zeta < 0:
            raise ValueError("zeta must be nonnegative")
        self.sup = float(zeta)

    def __iter__(self):
        while True:
            yield self.sup


def nesterov_zeta_schedule(C_x, cap=None):
    """Yield ``zeta^k = min((a_{k-1} - 1) / a_k, sqrt(C_x))`` for ``k = 1, 2, ...``.

    ``a_0 = 1`` and ``a_k = (1 + sqrt(1 + 4 a_{k-1}^2)) / 2``.  ``cap``
    replaces the default cap ``sqrt(C_x)``.
    """
    if not 0 < C_x < 1:
        raise ValueError("C_x must lie in (0, 1)")
    cap = math.sqrt(C_x) if cap is None else float(cap)
    a_prev = 1.0
    while True:
        a = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * a_prev * a_prev))
        yield min((a_prev - 1.0) / a, cap)
        a_prev = a


class NesterovZeta:
    def __init__(self, C_x, cap=None):
        if cap is not None and cap < 0:
            raise ValueError("zeta cap must be nonnegative")
        self.C_x = C_x
        self.cap = cap
        # (a_{k-1} - 1) / a_k increases to 1
        self.sup = math.sqrt(C_x) if cap is None else min(float(cap), 1.0)

    def __iter__(self):
        return nesterov_zeta_schedule(self.C_x, self.cap)


ScheduleSpec = Union[str, float, NoExtrapolation, ConstantZeta, NesterovZeta]


@dataclass
class SolverConfig:
    """Tunables of the engine.

    ``x_extrapolation`` is one schedule for all blocks or a list with one per
    block; a schedule is ``"none"``, ``"nesterov"`` (capped at ``sqrt(C_x)``),
    a float (constant ``zeta``) or a schedule object.  ``delta`` is the
    constant ``y`` extrapolation weight.  ``C1``/``C2`` default to the split
    ``C1 = C_y, C2 = 0`` without ``y`` extrapolation and ``C1 = C2 = C_y / 2``
    with it.
    """

    alpha: float = 1.0
    beta: Union[float, str] = "auto"
    kappa: Union[str, Sequence[float]] = "auto"
    x_extrapolation: Union[ScheduleSpec, Sequence[ScheduleSpec]] = "none"
    delta: float = 0.0
    nu_x: Optional[Sequence[float]] = None
    nu_y: Optional[float] = None
    C_x: float = 1 - 1e-15
    C_y: float = 1 - 1e-6
    C1: Optional[float] = None
    C2: Optional[float] = None
    max_outer: int = 1000
    max_seconds: Optional[float] = None
    tol_feas: float = 1e-4
    tol_delta: float = 3e-3
    audit: bool = False
    kkt: bool = False
    mode: str = "subsequential"
    enforce: bool = True
    fault_inject: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise ValueError("alpha must lie in (0, 2)")
        if self.beta != "auto" and not float(self.beta) > 0:
            raise ValueError("beta must be positive or 'auto'")
        for name in ("C_x", "C_y"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.mode not in ("subsequential", "global"):
            raise ValueError("mode must be 'subsequential' or 'global'")
        if self.max_outer < 0:
            raise ValueError("max_outer must be nonnegative")
        if self.delta == 0.0:
            if self.C1 is None:
                self.C1 = self.C_y
            if self.C2 is None:
                self.C2 = 0.0
        else:
            if self.C1 is None and self.C2 is None:
                self.C1 = self.C2 = 0.5 * self.C_y
            elif self.C1 is None:
                self.C1 = self.C_y - self.C2
            elif self.C2 is None:
                self.C2 = self.C_y - self.C1

    def schedules(self, s):
        spec = self.x_extrapolation
        if isinstance(spec, (list, tuple)):
            if len(spec) != s:
                raise ValueError(f"need {s} extrapolation schedules, got {len(spec)}")
            return [self._schedule(v) for v in spec]
        return [self._schedule(spec) for _ in range(s)]

    def _schedule(self, v):
        if isinstance(v, (NoExtrapolation, ConstantZeta, NesterovZeta)):
            return v
        if v is None or v == "none":
            return NoExtrapolation()
        if v == "nesterov":
            return NesterovZeta(self.C_x)
        if isinstance(v, (int, float)):
            return NoExtrapolation() if v == 0 else ConstantZeta(float(v))
        raise ValueError(f"unknown extrapolation schedule {v!r}")


@dataclass
class DerivedConstants:
    """Constants of the descent analysis, resolved for one problem and config."""

    beta: float
    alpha: float
    kappa: List[float]
    gram_A: List[float]
    gram_B: float
    convex: List[bool]
    h_convex: bool
    L_h: float
    sigma_b: float
    nu_x: List[float]
    nu_y: float
    alpha1: float
    alpha2: float
    eta_x: List[float]
    eta_y: float
    mu: float
    delta: float
    delta_bar: float
    zeta_sup: List[float]
    C1: float
    C2: float
    error_bounded: List[bool] = field(default_factory=list)

    def a_x(self, i, zeta):
        return self.beta * zeta * (self.kappa[i] + self.gram_A[i])

    def gamma_x(self, i, zeta):
        if zeta == 0.0:
            return 0.0
        if self.convex[i]:
            return 0.5 * self.beta * self.kappa[i] * zeta * zeta
        gap = self.kappa[i] - self.gram_A[i]
        return self.a_x(i, zeta) ** 2 / (2.0 * self.nu_x[i] * gap * self.beta)

    def gamma_y(self, delta):
        if delta == 0.0:
            return 0.0
        if self.h_convex:
            return 0.5 * self.L_h * delta * delta
        scale = self.beta * self.gram_B + self.L_h
        return 2.0 * self.L_h ** 2 * delta * delta / (self.nu_y * scale)


@dataclass
class IterState:
    """Primal/dual iterates of one outer iteration plus their predecessors."""

    x: tuple
    x_prev: tuple
    y: np.ndarray
    y_prev: np.ndarray
    w: np.ndarray
    w_prev: np.ndarray
    k: int = 0
    residual: Optional[np.ndarray] = None
    lagrangian: float = math.nan


@dataclass
class Check:
    name: str
    lhs: float
    rhs: float
    strict: bool = False

    @property
    def margin(self):
        return self.rhs - self.lhs

    @property
    def passed(self):
        if not (math.isfinite(self.lhs) and math.isfinite(self.rhs)):
            return self.lhs == self.rhs and not self.strict
        if self.strict:
            return self.lhs < self.rhs
        scale = max(1.0, abs(self.lhs), abs(self.rhs))
        return self.margin >= -1e-12 * scale


@dataclass
class ValidationReport:
    mode: str
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def summary(self):
        lines = []
        for c in self.checks:
            status = "ok  " if c.passed else "FAIL"
            lines.append(f"{status} {c.name}: lhs={c.lhs:.6g} rhs={c.rhs:.6g} margin={c.margin:.3g}")
        return "\n".join(lines)


@dataclass
class RunResult:
    state: IterState
    trace: List[diag.IterationRecord]
    converged: bool
    constants: DerivedConstants
    report: ValidationReport
    wall_time: float

    @property
    def iterations(self):
        return len(self.trace)

    def __iter__(self):
        return iter((self.state, self.trace))


def _sq(v):
    return inner(v, v)


def augmented_lagrangian(p, beta, x, y, omega, F_value=None):
    """``F(x) + h(y) + <omega, r> + (beta/2)||r||^2`` with ``r = A x + B y - b``.

    ``F_value`` may be passed to reuse an already computed ``F(x)``.
    """
    x = tuple(x)
    r = p.A.apply(x) + p.B.apply(y) - p.b
    F = p.F(x) if F_value is None else F_value
    val = F + float(p.h.value(y)) + inner(omega, r) + 0.5 * beta * _sq(r)
    if not math.isfinite(val):
        raise NumericError("augmented Lagrangian is not finite")
    return val


def _one_minus_abs(alpha):
    return 1.0 - abs(1.0 - alpha)


def auto_beta(sigma_b, L_h, c, h_convex=True):
    """Smallest ``beta`` with ``2 alpha2 L_h^2 / beta = C_y mu`` when ``mu = L_h/2 - alpha2 L_h^2/beta``.

    This is ``beta = 2 (2 + C_y) alpha2 L_h / C_y``; about 18 for ``L_h =
    sigma_b = alpha = 1`` and ``C_y`` close to one.  Only defined for convex
    ``h`` without ``y`` extrapolation.
    """
    if not h_convex:
        raise UnsupportedAutoError("beta='auto' needs a convex h; set beta explicitly")
    if c.delta != 0.0:
        raise UnsupportedAutoError("beta='auto' needs delta = 0; set beta explicitly")
    om = _one_minus_abs(c.alpha)
    alpha2 = 3.0 * c.alpha / (sigma_b * om * om)
    return 2.0 * (2.0 + c.C_y) * alpha2 * L_h / c.C_y


def derive_constants(p, c, strict=True):
    """Resolve ``beta`` and ``kappa`` and compute every descent constant.

    ``kappa="auto"`` uses ``||A_i^* A_i||`` for blocks whose subproblem is
    convex and ``1.001 ||A_i^* A_i||`` otherwise.  With ``strict`` an
    :class:`InvalidParametersError` is raised when ``mu <= 0`` or some
    ``eta_i <= 0``.
    """
    s = p.s
    gram_A = [gram_norm(blk.A) for blk in p.blocks]
    gram_B = gram_norm(p.B)
    convex = [bool(blk.surrogate.convex) for blk in p.blocks]
    if isinstance(c.kappa, str):
        if c.kappa != "auto":
            raise ValueError("kappa must be 'auto' or a sequence")
        kappa = [g if cv else NONCONVEX_KAPPA_FACTOR * g for g, cv in zip(gram_A, convex)]
    else:
        kappa = [float(v) for v in c.kappa]
        if len(kappa) != s:
            raise ValueError(f"need {s} kappa values")
    L_h = float(p.h.lipschitz)
    h_convex = bool(p.h.convex)
    beta = auto_beta(p.sigma_b, L_h, c, h_convex) if c.beta == "auto" else float(c.beta)

    scheds = c.schedules(s)
    zeta_sup = [sc.sup for sc in scheds]
    if c.nu_x is None:
        nu_x = [0.5 if z > 0 else 0.0 for z in zeta_sup]
    else:
        nu_x = [float(v) if z > 0 else 0.0 for v, z in zip(c.nu_x, zeta_sup)]
    if c.delta > 0:
        nu_y = 0.5 if c.nu_y is None else float(c.nu_y)
    else:
        nu_y = 0.0

    om = _one_minus_abs(c.alpha)
    alpha1 = abs(1.0 - c.alpha) / (c.alpha * p.sigma_b * om)
    alpha2 = 3.0 * c.alpha / (p.sigma_b * om * om)

    eta_x = []
    for i in range(s):
        if convex[i]:
            eta_x.append(0.5 * beta * kappa[i])
        else:
            eta_x.append(0.5 * (1.0 - nu_x[i]) * (kappa[i] - gram_A[i]) * beta)
    if h_convex:
        eta_y = 0.5 * L_h
    else:
        eta_y = 0.5 * (1.0 - nu_y) * (beta * gram_B + L_h)
    mu = eta_y - alpha2 * L_h ** 2 / beta
    delta_bar = 2.0 if c.delta == 0.0 else 4.0 * (1.0 + c.delta) ** 2

    d = DerivedConstants(
        beta=beta, alpha=c.alpha, kappa=kappa, gram_A=gram_A, gram_B=gram_B,
        convex=convex, h_convex=h_convex, L_h=L_h, sigma_b=p.sigma_b,
        nu_x=nu_x, nu_y=nu_y, alpha1=alpha1, alpha2=alpha2, eta_x=eta_x,
        eta_y=eta_y, mu=mu, delta=c.delta, delta_bar=delta_bar,
        zeta_sup=zeta_sup, C1=c.C1, C2=c.C2,
        error_bounded=[blk.surrogate.error_coef is not None for blk in p.blocks],
    )
    if strict:
        bad = []
        if not mu > 0:
            bad.append("mu > 0")
        bad += [f"eta_x[{i + 1}] > 0" for i, e in enumerate(eta_x) if not e > 0]
        if bad:
            raise InvalidParametersError("violated: " + ", ".join(bad), bad)
    return d


def validate_parameters(d, c, mode=None):
    """Check the parameter inequalities that back the descent guarantees.

    ``mode="subsequential"`` checks the general conditions (including the two
    extra ``beta`` bounds when ``y`` is extrapolated).  ``mode="global"``
    additionally requires ``alpha == 1``, ``delta == 0`` and a declared error
    bound for every block surrogate, and uses the simplified condition
    ``2 alpha2 L_h^2 / beta <= C_y mu``.  Extrapolation
    weights are checked at their worst case over the schedule.
    """
    mode = mode or c.mode
    rep = ValidationReport(mode)
    chk = rep.checks
    L2 = d.L_h ** 2
    chk.append(Check("mu > 0", 0.0, d.mu, strict=True))
    for i, eta in enumerate(d.eta_x):
        chk.append(Check(f"eta_x[{i + 1}] > 0", 0.0, eta, strict=True))
        if d.convex[i]:
            chk.append(Check(f"kappa[{i + 1}] >= ||A_{i + 1}^*A_{i + 1}||", d.gram_A[i], d.kappa[i]))
        else:
            chk.append(Check(f"kappa[{i + 1}] > ||A_{i + 1}^*A_{i + 1}|| (nonconvex block)",
                             d.gram_A[i], d.kappa[i], strict=True))
        z = d.zeta_sup[i]
        if z > 0 and (d.convex[i] or d.nu_x[i] > 0):
            chk.append(Check(f"gamma_x[{i + 1}] <= C_x*eta_x[{i + 1}]", d.gamma_x(i, z), c.C_x * eta))
    if mode == "global":
        chk.append(Check("global mode requires alpha == 1", abs(c.alpha - 1.0), 0.0))
        chk.append(Check("global mode requires delta == 0 (no y extrapolation)", c.delta, 0.0))
        chk.append(Check("2*alpha2*L_h^2/beta <= C_y*mu", 2.0 * d.alpha2 * L2 / d.beta, c.C_y * d.mu))
        for i, ok in enumerate(d.error_bounded):
            chk.append(Check(f"surrogate {i + 1} declares an error bound", 0.0 if ok else 1.0, 0.0))
        return rep

    if c.delta == 0.0:
        chk.append(Check("C1 = C_y and C2 = 0 without y extrapolation",
                         abs(d.C1 - c.C_y) + abs(d.C2), 0.0))
    else:
        chk.append(Check("0 < C1 < C_y", 0.0, d.C1, strict=True))
        chk.append(Check("C1 + C2 = C_y", abs(d.C1 + d.C2 - c.C_y), 0.0))
    chk.append(Check("4*alpha2*L_h^2*delta^2/beta <= C2*mu",
                     4.0 * d.alpha2 * L2 * c.delta ** 2 / d.beta, d.C2 * d.mu))
    chk.append(Check("alpha2*L_h^2*delta_bar/beta + gamma_y <= C1*mu",
                     d.alpha2 * L2 * d.delta_bar / d.beta + d.gamma_y(c.delta), d.C1 * d.mu))
    if c.delta > 0:
        om = _one_minus_abs(c.alpha)
        chk.append(Check("beta >= 4*L_h*alpha/(sigma_B*(1-|1-alpha|))",
                         4.0 * d.L_h * c.alpha / (d.sigma_b * om), d.beta))
        factor = max(1.0, 12.0 * c.delta ** 2 / (1.0 - d.C1))
        bound = 6.0 * c.alpha * L2 * factor / (d.mu * d.sigma_b * om) if d.mu > 0 else math.inf
        chk.append(Check("beta >= 6*alpha*L_h^2*max(1, 12*delta^2/(1-C1))/(mu*sigma_B*(1-|1-alpha|))",
                         bound, d.beta))
    return rep


def initial_state(p):
    """``x^0 = x^{-1}``, ``y^0 = y^{-1}`` and ``omega^0`` (zeros unless given)."""
    if p.x0 is None:
        x = tuple(np.zeros(sh) for sh in p.x_shapes)
    else:
        x = tuple(np.array(v, dtype=float) for v in p.x0)
    y = np.zeros(p.y_shape) if p.y0 is None else np.array(p.y0, dtype=float)
    w = np.zeros(p.b.shape) if p.w0 is None else np.array(p.w0, dtype=float)
    return IterState(x=x, x_prev=x, y=y, y_prev=y, w=w, w_prev=w)


def step_block_x(state, p, c, d, i, zeta=0.0, x_partial=None, Ax_parts=None):
    """Update block ``i`` given blocks ``0..i-1`` already updated in ``x_partial``.

    Forms ``xbar_i = x_i + zeta (x_i - x_i^{prev})``, the linear term
    ``A_i^*(omega + beta (A xbar + B y - b))`` with block ``i`` of ``A xbar``
    taken at ``xbar_i``, and minimizes the block surrogate with quadratic
    weight ``kappa_i beta`` around ``xbar_i``.
    """
    x = tuple(state.x if x_partial is None else x_partial)
    blk = p.blocks[i]
    xi = x[i]
    xbar = xi if zeta == 0.0 else xi + zeta * (xi - state.x_prev[i])
    if Ax_parts is None:
        Ax_parts = [b.A.apply(v) for b, v in zip(p.blocks, x)]
    r = p.B.apply(state.y) - p.b
    for j, part in enumerate(Ax_parts):
        r = r + (blk.A.apply(xbar) if (j == i and zeta != 0.0) else part)
    lin = blk.A.adjoint_apply(state.w + d.beta * r)
    try:
        out = blk.surrogate.solve(x, lin, d.kappa[i] * d.beta, xbar, blk.g_prox)
    except NumericError as exc:
        raise NumericError(f"block {i + 1}: {exc}") from exc
    out = np.asarray(out, dtype=float)
    if not np.all(np.isfinite(out)):
        raise NumericError(f"block {i + 1}: subproblem returned non-finite values")
    return out


def _solve_y_system(p, d, rhs):
    B = p.B
    if B.is_scaled_identity():
        return rhs / (d.beta * B.scale ** 2 + d.L_h)
    shape = rhs.shape
    n = rhs.size

    def matvec(v):
        v = v.reshape(shape)
        return (d.beta * B.adjoint_apply(B.apply(v)) + d.L_h * v).ravel()

    op = LinearOperator((n, n), matvec=matvec, dtype=float)
    sol, info = cg(op, rhs.ravel(), rtol=1e-12, atol=0.0, maxiter=10 * n)
    if info != 0:
        raise NumericError(f"conjugate gradient did not converge in {10 * n} iterations")
    return sol.reshape(shape)


def step_y(state, p, c, d, x_new, delta=0.0, Ax=None):
    """Linearized ``y`` update at ``yhat = y + delta (y - y_prev)``.

    Solves ``(beta B^*B + L_h I) y = L_h yhat - grad h(yhat) - B^* omega - beta B^*(A x - b)``,
    in closed form for a scaled-identity ``B`` and by conjugate gradients
    otherwise.
    """
    y = state.y
    yhat = y if delta == 0.0 else y + delta * (y - state.y_prev)
    if Ax is None:
        Ax = p.A.apply(tuple(x_new))
    rhs = (d.L_h * yhat - p.h.grad(yhat) - p.B.adjoint_apply(state.w)
           - d.beta * p.B.adjoint_apply(Ax - p.b))
    out = _solve_y_system(p, d, rhs)
    if not np.all(np.isfinite(out)):
        raise NumericError("y update produced non-finite values")
    return out


def step_omega(state, p, c, d, x_new, y_new, Ax=None):
    """``omega + alpha beta (A x + B y - b)``."""
    if Ax is None:
        Ax = p.A.apply(tuple(x_new))
    return state.w + c.alpha * d.beta * (Ax + p.B.apply(y_new) - p.b)


def run(p, c, callbacks=()):
    """Run the engine until the stopping test passes or the budget is spent.

    Parameters are validated first in ``c.mode``; a failure raises
    :class:`InvalidParametersError` unless ``c.enforce`` is false, in which
    case a warning is issued.  Each callback is called as ``cb(record,
    state)`` after every outer iteration and may return ``True`` to stop.

    Stopping: relative feasibility ``||r|| / (1 + ||b||) <= tol_feas`` and,
    for every block and for ``y``, a step ``||v^{k+1} - v^k||`` of at most
    ``tol_delta`` times the largest step of that variable so far.

    Returns
    -------
    RunResult
        Final state, list of :class:`~iadmm.diagnostics.IterationRecord`,
        convergence flag, constants, validation report and wall time.
    """
    t0 = time.perf_counter()
    d = derive_constants(p, c, strict=False)
    report = validate_parameters(d, c, c.mode)
    if not report.passed:
        names = [f.name for f in report.failures()]
        msg = "invalid parameters: " + "; ".join(names)
        if c.enforce:
            raise InvalidParametersError(msg, names)
        warnings.warn(msg, RuntimeWarning)

    s = p.s
    beta = d.beta
    scheds = [iter(sc) for sc in c.schedules(s)]
    rng = np.random.default_rng(c.seed)
    b_norm = math.sqrt(_sq(p.b))

    state = initial_state(p)
    x = list(state.x)
    Ax_parts = [blk.A.apply(v) for blk, v in zip(p.blocks, x)]
    By = p.B.apply(state.y)
    F_val = p.F(x)
    L_k = augmented_lagrangian(p, beta, x, state.y, state.w, F_val)
    state.lagrangian = L_k

    trace = []
    converged = False
    dx_old_sq = [0.0] * s
    dy_old_sq = 0.0
    dy_older_sq = 0.0
    Bdw_old_sq = 0.0
    peak = [0.0] * (s + 1)

    def lagr(F, y_by, w):
        r = sum(Ax_parts) + y_by - p.b
        return F + float(p.h.value(cur_y)) + inner(w, r) + 0.5 * beta * _sq(r)

    for k in range(c.max_outer):
        try:
            zetas = [0.0 if k == 0 else next(sc) for sc in scheds]
            x_k = tuple(x)
            block_vals = []
            cur_y = state.y
            L_cur = L_k
            for i in range(s):
                new = step_block_x(state, p, c, d, i, zetas[i], x, Ax_parts)
                if c.fault_inject:
                    new = new + c.fault_inject * rng.standard_normal(new.shape)
                dn = _sq(new - x_k[i])
                x[i] = new
                Ax_parts[i] = p.blocks[i].A.apply(new)
                if c.audit:
                    F_val = p.F(x)
                    L_after = lagr(F_val, By, state.w)
                    block_vals.append((L_cur, L_after, dn, dx_old_sq[i]))
                    L_cur = L_after
                else:
                    block_vals.append((math.nan, math.nan, dn, dx_old_sq[i]))
            if not c.audit:
                F_val = p.F(x)
            Ax = sum(Ax_parts)
            delta = c.delta if k > 0 else 0.0
            y_new = step_y(state, p, c, d, x, delta, Ax)
            dy_new_sq = _sq(y_new - state.y)
            By_new = p.B.apply(y_new)
            if c.audit:
                L_y_before = L_cur
                cur_y = y_new
                L_y_after = lagr(F_val, By_new, state.w)
            w_new = step_omega(state, p, c, d, x, y_new, Ax)
            cur_y = y_new
            r = Ax + By_new - p.b
            L_next = F_val + float(p.h.value(y_new)) + inner(w_new, r) + 0.5 * beta * _sq(r)
            if not math.isfinite(L_next):
                raise NumericError("augmented Lagrangian is not finite")
            dw = w_new - state.w
            Bdw_new_sq = _sq(p.B.adjoint_apply(dw))

            new_state = IterState(
                x=tuple(x), x_prev=x_k, y=y_new, y_prev=state.y, w=w_new,
                w_prev=state.w, k=k + 1, residual=r, lagrangian=L_next,
            )
            rec = diag.IterationRecord(
                k=k + 1,
                lagrangian=L_next,
                objective=F_val + float(p.h.value(y_new)),
                feas=math.sqrt(_sq(r)) / (1.0 + b_norm),
                dx=[math.sqrt(v[2]) for v in block_vals],
                dy=math.sqrt(dy_new_sq),
                dw=math.sqrt(_sq(dw)),
                zeta=zetas,
                delta=delta,
            )
            if c.audit:
                p1, p2, ly = diag.audit_descent(
                    block_vals,
                    (L_y_before, L_y_after, dy_new_sq, dy_old_sq),
                    dict(L_k=L_k, L_next=L_next, dy_older_sq=dy_older_sq,
                         Bdw_new_sq=Bdw_new_sq, Bdw_old_sq=Bdw_old_sq),
                    d, zetas, delta, c.C_x,
                )
                rec.prop1 = p1
                rec.tol_prop1 = [diag.audit_tolerance(v[0]) for v in block_vals]
                rec.prop2 = p2
                rec.tol_prop2 = diag.audit_tolerance(L_y_before)
                rec.lyap = ly
                rec.tol_lyap = diag.audit_tolerance(L_k)
            if c.kkt or c.audit:
                rec.kkt = diag.kkt_residuals(new_state, p, d)
        except (NumericError, FloatingPointError) as exc:
            raise SolverAbort(f"iteration {k + 1}: {exc}", k + 1, trace) from exc

        trace.append(rec)
        dx_old_sq = [v[2] for v in block_vals]
        dy_older_sq, dy_old_sq = dy_old_sq, dy_new_sq
        Bdw_old_sq = Bdw_new_sq
        By = By_new
        L_k = L_next
        state = new_state

        steps = rec.dx + [rec.dy]
        peak = [max(a, b) for a, b in zip(peak, steps)]
        rel_step = max(st / pk if pk > 0 else 0.0 for st, pk in zip(steps, peak))
        stop = False
        for cb in callbacks:
            if cb(rec, state):
                stop = True
        if rec.feas <= c.tol_feas and rel_step <= c.tol_delta:
            converged = True
            break
        if stop:
            break
        if c.max_seconds is not None and time.perf_counter() - t0 >= c.max_seconds:
            break

    return RunResult(state, trace, converged, d, report, time.perf_counter() - t0)
