"""Linear maps with adjoints, operator-norm estimates and small dense helpers.

Every map acts on numpy arrays of a declared shape.  ``HStack`` takes a tuple
of block arrays and sums the block images, which is how the coupling operator
``A x = sum_i A_i x_i`` is represented.
"""

import warnings

import numpy as np

from .errors import DimensionError, EmptyBasisError, NumericError

__all__ = [
    "LinearMap",
    "DenseMap",
    "IdentityMap",
    "LeftMultiply",
    "RightMultiply",
    "HStack",
    "apply",
    "adjoint_apply",
    "inner",
    "power_iteration",
    "gram_norm",
    "svd",
    "qr_orthonormalize",
]


def _check_shape(v, shape, what):
    v = np.asarray(v, dtype=float)
    if v.shape != tuple(shape):
        raise DimensionError(f"{what}: expected shape {tuple(shape)}, got {v.shape}")
    return v


def inner(a, b):
    """Frobenius inner product, also for tuples of blocks."""
    if isinstance(a, tuple):
        return float(sum(inner(ai, bi) for ai, bi in zip(a, b)))
    return float(np.vdot(a, b))


class LinearMap:
    """Base class.  Subclasses implement ``_apply`` and ``_adjoint``."""

    kind = "abstract"
    in_shape = ()
    out_shape = ()

    def apply(self, v):
        v = _check_shape(v, self.in_shape, f"{self.kind} apply")
        return self._apply(v)

    def adjoint_apply(self, w):
        w = _check_shape(w, self.out_shape, f"{self.kind} adjoint")
        return self._adjoint(w)

    @property
    def H(self):
        """The adjoint as a map object."""
        raise NotImplementedError

    def __call__(self, v):
        return self.apply(v)

    def is_scaled_identity(self):
        return False


class DenseMap(LinearMap):
    """Plain matrix acting on vectors."""

    kind = "dense"

    def __init__(self, matrix):
        self.matrix = np.array(matrix, dtype=float)
        if self.matrix.ndim != 2:
            raise DimensionError("dense map needs a 2-D matrix")
        self.matrix.setflags(write=False)
        self.in_shape = (self.matrix.shape[1],)
        self.out_shape = (self.matrix.shape[0],)

    def _apply(self, v):
        return self.matrix @ v

    def _adjoint(self, w):
        return self.matrix.T @ w

    @property
    def H(self):
        return DenseMap(self.matrix.T)


class IdentityMap(LinearMap):
    """``v -> scale * v`` on arrays of a fixed shape."""

    kind = "identity"

    def __init__(self, shape, scale=1.0):
        shape = tuple(shape) if isinstance(shape, (tuple, list)) else (int(shape),)
        self.in_shape = self.out_shape = shape
        self.scale = float(scale)

    def _apply(self, v):
        return v.copy() if self.scale == 1.0 else self.scale * v

    _adjoint = _apply

    @property
    def H(self):
        return self

    def is_scaled_identity(self):
        return True


class LeftMultiply(LinearMap):
    """``X -> A @ X`` for ``X`` with ``cols`` columns."""

    kind = "left-multiply"

    def __init__(self, A, cols):
        self.A = np.array(A, dtype=float)
        self.A.setflags(write=False)
        self.cols = int(cols)
        self.in_shape = (self.A.shape[1], self.cols)
        self.out_shape = (self.A.shape[0], self.cols)

    def _apply(self, v):
        return self.A @ v

    def _adjoint(self, w):
        return self.A.T @ w

    @property
    def H(self):
        return LeftMultiply(self.A.T, self.cols)


class RightMultiply(LinearMap):
    """``X -> X @ A`` for ``X`` with ``rows`` rows."""

    kind = "right-multiply"

    def __init__(self, A, rows):
        self.A = np.array(A, dtype=float)
        self.A.setflags(write=False)
        self.rows = int(rows)
        self.in_shape = (self.rows, self.A.shape[0])
        self.out_shape = (self.rows, self.A.shape[1])

    def _apply(self, v):
        return v @ self.A

    def _adjoint(self, w):
        return w @ self.A.T

    @property
    def H(self):
        return RightMultiply(self.A.T, self.rows)


class HStack(LinearMap):
    """``(x_1, ..., x_s) -> sum_i M_i x_i``; all maps share one output shape."""

    kind = "horizontal-stack"

    def __init__(self, maps):
        self.maps = tuple(maps)
        if not self.maps:
            raise DimensionError("hstack needs at least one map")
        out = self.maps[0].out_shape
        for m in self.maps:
            if tuple(m.out_shape) != tuple(out):
                raise DimensionError("hstack maps must share an output shape")
        self.in_shape = tuple(tuple(m.in_shape) for m in self.maps)
        self.out_shape = tuple(out)

    def apply(self, v):
        if len(v) != len(self.maps):
            raise DimensionError(f"hstack expects {len(self.maps)} blocks, got {len(v)}")
        out = self.maps[0].apply(v[0])
        for m, vi in zip(self.maps[1:], v[1:]):
            out = out + m.apply(vi)
        return out

    def adjoint_apply(self, w):
        w = _check_shape(w, self.out_shape, "hstack adjoint")
        return tuple(m._adjoint(w) for m in self.maps)

    @property
    def H(self):
        return _VStack(self)


class _VStack(LinearMap):
    """Adjoint of an ``HStack``: ``w -> (M_1^* w, ..., M_s^* w)``."""

    kind = "vertical-stack"

    def __init__(self, hstack):
        self._h = hstack
        self.in_shape = hstack.out_shape
        self.out_shape = hstack.in_shape

    def apply(self, w):
        return self._h.adjoint_apply(w)

    def adjoint_apply(self, v):
        return self._h.apply(v)

    @property
    def H(self):
        return self._h


def apply(map_, v):
    """Apply ``map_`` to ``v``; raises :class:`DimensionError` on a shape mismatch."""
    return map_.apply(v)


def adjoint_apply(map_, w):
    """Apply the adjoint of ``map_`` to ``w``."""
    return map_.adjoint_apply(w)


def _ones_like_input(map_):
    if isinstance(map_.in_shape[0], tuple):
        return tuple(np.ones(s) for s in map_.in_shape)
    return np.ones(map_.in_shape)


def _norm(v):
    return np.sqrt(inner(v, v))


def _scale(v, a):
    if isinstance(v, tuple):
        return tuple(a * vi for vi in v)
    return a * v


def power_iteration(map_, tol=1e-10, max_iter=1000):
    """Estimate the largest eigenvalue of ``M^* M`` by power iteration.

    Starts from the all-ones input, so the result is deterministic.

    Returns
    -------
    value : float
        Rayleigh-quotient estimate of ``||M^* M||``.
    n_iter : int
        Iterations performed.
    converged : bool
        ``False`` when ``max_iter`` was reached before the relative change fell
        below ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    # The all-ones matrix start makes every column follow the same vector
    # iteration, so multiplication maps reduce to their small factor.
    if isinstance(map_, LeftMultiply):
        return power_iteration(DenseMap(map_.A), tol, max_iter)
    if isinstance(map_, RightMultiply):
        return power_iteration(DenseMap(map_.A.T), tol, max_iter)
    if isinstance(map_, IdentityMap):
        return map_.scale ** 2, 0, True

    _restarted = False
    v = _ones_like_input(map_)
    v = _scale(v, 1.0 / _norm(v))
    value = 0.0
    for it in range(1, max_iter + 1):
        w = map_.adjoint_apply(map_.apply(v))
        new_value = inner(v, w)
        nw = _norm(w)
        if nw == 0.0:
            if it == 1 and not _restarted:
                # all-ones start in the null space; retry from a fixed random start
                rng = np.random.default_rng(0)
                if isinstance(v, tuple):
                    v = tuple(rng.standard_normal(vi.shape) for vi in v)
                else:
                    v = rng.standard_normal(v.shape)
                _restarted = True
                v = _scale(v, 1.0 / _norm(v))
                continue
            return 0.0, it, True
        if not np.isfinite(nw):
            raise NumericError("power iteration diverged")
        v = _scale(w, 1.0 / nw)
        if it > 1 and abs(new_value - value) <= tol * abs(new_value):
            return new_value, it, True
        value = new_value
    return value, max_iter, False


def gram_norm(map_, tol=1e-10, max_iter=1000):
    """``||M^* M||`` via :func:`power_iteration`; warns when it hits ``max_iter``."""
    value, n_iter, converged = power_iteration(map_, tol, max_iter)
    if not converged:
        warnings.warn(f"gram_norm did not converge in {n_iter} iterations", RuntimeWarning)
    return float(value)


def svd(m):
    """Thin SVD ``m = U diag(S) V^T`` with a fixed sign convention.

    In each left singular vector the entry of largest magnitude (first one on
    ties) is made nonnegative; the matching right vector is flipped with it.
    """
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise NumericError("svd: non-finite entries")
    U, S, Vt = np.linalg.svd(m, full_matrices=False)
    V = Vt.T
    if U.size:
        idx = np.argmax(np.abs(U), axis=0)
        signs = np.sign(U[idx, np.arange(U.shape[1])])
        signs[signs == 0] = 1.0
        U = U * signs
        V = V * signs
    return U, S, V


def qr_orthonormalize(m, rtol=1e-12):
    """Orthonormal basis of the column space of ``m``.

    Columns are processed left to right with classical Gram-Schmidt applied
    twice; a column whose residual norm is below ``rtol`` times the largest
    input column norm is dropped.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise DimensionError("qr_orthonormalize needs a 2-D array")
    if not np.all(np.isfinite(m)):
        raise NumericError("qr_orthonormalize: non-finite entries")
    col_norms = np.linalg.norm(m, axis=0)
    scale = col_norms.max() if col_norms.size else 0.0
    if scale == 0.0:
        raise EmptyBasisError("cannot orthonormalize a zero matrix")
    thresh = rtol * scale
    Q = np.empty((m.shape[0], 0))
    for j in range(m.shape[1]):
        v = m[:, j].copy()
        for _ in range(2):
            v -= Q @ (Q.T @ v)
        nv = np.linalg.norm(v)
        if nv > thresh:
            Q = np.column_stack([Q, v / nv])
    if Q.shape[1] == 0:
        raise EmptyBasisError("matrix is numerically zero")
    return Q
