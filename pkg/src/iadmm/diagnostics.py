"""Descent audits, KKT residuals and trace persistence."""

import csv
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import AuditError

__all__ = [
    "IterationRecord",
    "AuditRecord",
    "KKTResiduals",
    "prop1_margin",
    "prop2_margin",
    "lyapunov_margin",
    "audit_descent",
    "audit_tolerance",
    "kkt_residuals",
    "first_violation",
    "assert_audit",
    "delta_tail_fraction",
    "trace_header",
    "write_trace",
    "read_trace",
]

AUDIT_RTOL = 1e-9


def audit_tolerance(value, rtol=AUDIT_RTOL):
    """Absolute slack ``rtol * (1 + |value|)`` for rounding in audited inequalities."""
    return rtol * (1.0 + abs(value))


@dataclass
class KKTResiduals:
    """Norms of the block, ``y`` and multiplier stationarity residuals."""

    blocks: List[float]
    y: float
    omega: float

    def max(self):
        return max([self.y, self.omega, *self.blocks])


@dataclass
class IterationRecord:
    """One outer iteration of the engine.

    Margins are ``rhs - lhs`` of the audited inequalities (nonnegative means
    the inequality holds); they are ``nan`` when auditing is off.  The
    Lyapunov inequality only applies from the second iteration on, so at
    ``k == 1`` its margin is still reported but never counts as a failure.
    """

    k: int
    lagrangian: float
    objective: float
    feas: float
    dx: List[float]
    dy: float
    dw: float
    zeta: List[float]
    delta: float
    prop1: List[float] = field(default_factory=list)
    prop2: float = math.nan
    lyap: float = math.nan
    tol_prop1: List[float] = field(default_factory=list)
    tol_prop2: float = math.nan
    tol_lyap: float = math.nan
    kkt: Optional[KKTResiduals] = None

    @property
    def prop1_min_margin(self):
        return min(self.prop1) if self.prop1 else math.nan

    def violations(self):
        """Names of audited inequalities that fail beyond their tolerance."""
        out = []
        for i, (m, t) in enumerate(zip(self.prop1, self.tol_prop1)):
            if m < -t:
                out.append(f"block {i + 1} descent")
        if self.prop2 < -self.tol_prop2:
            out.append("y descent")
        if self.k > 1 and self.lyap < -self.tol_lyap:
            out.append("Lyapunov recursion")
        return out

    @property
    def passed(self):
        finite = all(math.isfinite(m) for m in self.prop1)
        return finite and not self.violations()


AuditRecord = IterationRecord


def prop1_margin(L_before, L_after, eta, gamma, dx_new_sq, dx_old_sq):
    """Block descent: ``L_before + gamma ||dx_old||^2 - (L_after + eta ||dx_new||^2)``."""
    return (L_before + gamma * dx_old_sq) - (L_after + eta * dx_new_sq)


def prop2_margin(L_before, L_after, eta_y, gamma_y, dy_new_sq, dy_old_sq):
    """``y`` descent, same layout as :func:`prop1_margin`."""
    return (L_before + gamma_y * dy_old_sq) - (L_after + eta_y * dy_new_sq)


def lyapunov_margin(L_k, L_next, mu, etas, dx_new_sq, dx_old_sq, dy_new_sq, dy_old_sq,
                    dy_older_sq, C_x, C1, C2, a1_over_beta, Bdw_new_sq, Bdw_old_sq):
    """Margin of the one-step Lyapunov recursion::

        L^{k+1} + mu|dy^{k+1}|^2 + sum eta_i |dx_i^{k+1}|^2 + (alpha1/beta)|B^* dw^{k+1}|^2
          <= L^k + C1 mu |dy^k|^2 + C2 mu |dy^{k-1}|^2 + C_x sum eta_i |dx_i^k|^2
             + (alpha1/beta)|B^* dw^k|^2
    """
    lhs = L_next + mu * dy_new_sq + sum(e * d for e, d in zip(etas, dx_new_sq)) + a1_over_beta * Bdw_new_sq
    rhs = (L_k + C1 * mu * dy_old_sq + C2 * mu * dy_older_sq
           + C_x * sum(e * d for e, d in zip(etas, dx_old_sq)) + a1_over_beta * Bdw_old_sq)
    return rhs - lhs


def audit_descent(block_values, y_values, lyap_values, d, zetas, delta, C_x):
    """Evaluate all three margins for one outer iteration.

    ``block_values`` is a list of ``(L_before, L_after, dx_new_sq, dx_old_sq)``
    per block, ``y_values`` is ``(L_before, L_after, dy_new_sq, dy_old_sq)``
    and ``lyap_values`` is a dict with keys ``L_k, L_next, dy_older_sq,
    Bdw_new_sq, Bdw_old_sq``.  ``d`` holds the derived constants.
    """
    p1 = [
        prop1_margin(Lb, La, d.eta_x[i], d.gamma_x(i, zetas[i]), dn, do)
        for i, (Lb, La, dn, do) in enumerate(block_values)
    ]
    Lb, La, dyn, dyo = y_values
    p2 = prop2_margin(Lb, La, d.eta_y, d.gamma_y(delta), dyn, dyo)
    lv = lyap_values
    ly = lyapunov_margin(
        lv["L_k"], lv["L_next"], d.mu, d.eta_x,
        [b[2] for b in block_values], [b[3] for b in block_values],
        dyn, dyo, lv["dy_older_sq"], C_x, d.C1, d.C2, d.alpha1 / d.beta,
        lv["Bdw_new_sq"], lv["Bdw_old_sq"],
    )
    return p1, p2, ly


def kkt_residuals(state, p, d):
    """Stationarity residuals of the augmented Lagrangian at ``state``.

    ``omega``: ``(omega^{k+1} - omega^k) / (alpha beta)``, which equals the
    constraint residual.  ``y``: ``grad h(y) + B^*(omega + beta r)``.  Blocks:
    the prox-gradient mapping in gradient units,
    ``kappa_i beta ||x_i - S_i(x)||`` where ``S_i`` is the block's own
    surrogate step taken from the current point with no extrapolation; it is
    zero exactly at block-stationary points.
    """
    beta = d.beta
    x = tuple(state.x)
    r = p.A.apply(x) + p.B.apply(state.y) - p.b
    shifted = state.w + beta * r
    blocks = []
    for i, blk in enumerate(p.blocks):
        weight = d.kappa[i] * beta
        lin = blk.A.adjoint_apply(shifted)
        s_i = blk.surrogate.solve(x, lin, weight, x[i], blk.g_prox)
        blocks.append(float(weight * np.linalg.norm(s_i - x[i])))
    dy = p.h.grad(state.y) + p.B.adjoint_apply(shifted)
    dw = (state.w - state.w_prev) / (d.alpha * beta)
    return KKTResiduals(blocks, float(np.linalg.norm(dy)), float(np.linalg.norm(dw)))


def first_violation(trace):
    """``(k, inequality_name)`` of the first failing audited inequality, or ``None``."""
    for rec in trace:
        v = rec.violations()
        if v:
            return rec.k, v[0]
    return None


def assert_audit(trace):
    """Raise :class:`AuditError` naming the first violated inequality."""
    hit = first_violation(trace)
    if hit is not None:
        k, name = hit
        raise AuditError(f"{name} violated at iteration {k}", iteration=k, inequality=name)


def delta_tail_fraction(trace, tail=0.1):
    """Share of ``sum_k (|dx^k|^2 + |dy^k|^2 + |dw^k|^2)`` carried by the last ``tail`` of the run."""
    terms = np.array([sum(v * v for v in r.dx) + r.dy ** 2 + r.dw ** 2 for r in trace])
    total = terms.sum()
    if total == 0.0:
        return 0.0
    n_tail = max(1, int(math.ceil(tail * len(terms))))
    return float(terms[-n_tail:].sum() / total)


def trace_header(s):
    cols = ["k", "lagrangian", "objective", "feas"]
    cols += [f"dx_{i}" for i in range(1, s + 1)]
    cols += ["dy", "dw"]
    cols += [f"zeta_{i}" for i in range(1, s + 1)]
    cols += ["delta", "prop1_min_margin", "prop2_margin", "lyap_margin"]
    return cols


def _fmt(v):
    return "%.17g" % v


def write_trace(records, path, s=None):
    """Write the per-iteration trace as CSV with 17 significant digits.

    ``s`` (number of blocks) is needed only for an empty record list.
    """
    records = list(records)
    if s is None:
        s = len(records[0].dx) if records else 1
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace_header(s))
        for r in records:
            row = [str(r.k), _fmt(r.lagrangian), _fmt(r.objective), _fmt(r.feas)]
            row += [_fmt(v) for v in r.dx]
            row += [_fmt(r.dy), _fmt(r.dw)]
            row += [_fmt(v) for v in r.zeta]
            row += [_fmt(r.delta), _fmt(r.prop1_min_margin), _fmt(r.prop2), _fmt(r.lyap)]
            w.writerow(row)


def read_trace(path):
    """Read a trace CSV back into a list of dicts of floats (``k`` as int)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        out.append({key: (int(v) if key == "k" else float(v)) for key, v in row.items()})
    return out
