"""Matrix text files and a seeded synthetic generator for the low-rank model.

Matrix format: first line ``rows cols``, then ``rows`` lines of ``cols``
whitespace-separated decimals.  Values are written with 17 significant
digits so a write/read round trip is exact.

The generator uses a fixed 64-bit linear congruential recurrence so that the
same seed yields the same data on every platform and in every language::

    state <- (6364136223846793005 * state + 1442695040888963407) mod 2**64
    u     =  (state >> 11) / 2**53
"""

import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import MatrixFormatError

__all__ = [
    "read_matrix",
    "write_matrix",
    "format_matrix",
    "parse_matrix",
    "SyntheticSpec",
    "SyntheticData",
    "LCG",
    "synth_lrr",
    "draws_digest",
    "parse_synthetic",
]

_MASK = (1 << 64) - 1
_MULT = 6364136223846793005
_INC = 1442695040888963407


def parse_matrix(text):
    """Parse the matrix text format; errors carry 1-based line numbers."""
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise MatrixFormatError("missing header 'rows cols'", 1)
    head = lines[0].split()
    if len(head) != 2:
        raise MatrixFormatError(f"header must be 'rows cols', got {lines[0]!r}", 1)
    try:
        rows, cols = int(head[0]), int(head[1])
    except ValueError:
        raise MatrixFormatError(f"header must hold two integers, got {lines[0]!r}", 1) from None
    if rows < 0 or cols < 0:
        raise MatrixFormatError("negative dimension in header", 1)
    body = lines[1:]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != rows:
        raise MatrixFormatError(f"expected {rows} data rows, found {len(body)}", min(len(lines), 2 + len(body)))
    out = np.empty((rows, cols))
    for r, line in enumerate(body):
        lineno = r + 2
        toks = line.split()
        if len(toks) != cols:
            raise MatrixFormatError(f"expected {cols} values, found {len(toks)}", lineno)
        for c, tok in enumerate(toks):
            try:
                v = float(tok)
            except ValueError:
                raise MatrixFormatError(f"non-numeric token {tok!r}", lineno) from None
            if not np.isfinite(v):
                raise MatrixFormatError(f"non-finite value {tok!r}", lineno)
            out[r, c] = v
    return out


def read_matrix(path):
    with open(path) as fh:
        return parse_matrix(fh.read())


def format_matrix(m):
    m = np.asarray(m, dtype=float)
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2:
        raise ValueError("only 2-D arrays can be written")
    lines = [f"{m.shape[0]} {m.shape[1]}"]
    lines += [" ".join("%.17g" % v for v in row) for row in m]
    return "\n".join(lines) + "\n"


def write_matrix(m, path):
    with open(path, "w") as fh:
        fh.write(format_matrix(m))


class LCG:
    """64-bit linear congruential generator with uniform and normal draws.

    Normals come from Box-Muller on ``(1 - u1, u2)``; both outputs of a pair
    are used, cosine first.
    """

    def __init__(self, seed):
        self.state = int(seed) & _MASK
        self._spare = None

    def next_u64(self):
        self.state = (self.state * _MULT + _INC) & _MASK
        return self.state

    def uniform(self):
        """Uniform on ``[0, 1)`` from the top 53 bits."""
        return (self.next_u64() >> 11) / 9007199254740992.0

    def normal(self):
        if self._spare is not None:
            v, self._spare = self._spare, None
            return v
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        rad = math.sqrt(-2.0 * math.log(u1))
        ang = 2.0 * math.pi * u2
        self._spare = rad * math.sin(ang)
        return rad * math.cos(ang)

    def normals(self, shape):
        n = int(np.prod(shape))
        return np.array([self.normal() for _ in range(n)]).reshape(shape)

    def uniforms(self, shape):
        n = int(np.prod(shape))
        return np.array([self.uniform() for _ in range(n)]).reshape(shape)

    def randbelow(self, n):
        return min(int(self.uniform() * n), n - 1)


def draws_digest(seed, count=1000):
    """SHA-256 hex digest of the first ``count`` uniform draws as big-endian doubles."""
    g = LCG(seed)
    buf = b"".join(struct.pack(">d", g.uniform()) for _ in range(count))
    return hashlib.sha256(buf).hexdigest()


@dataclass(frozen=True)
class SyntheticSpec:
    d: int = 100
    n: int = 100
    r: int = 5
    s_cols: int = 5
    sigma: float = 0.01
    seed: int = 42

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise ValueError("d and n must be positive")
        if not 0 <= self.r <= min(self.d, self.n):
            raise ValueError("need 0 <= r <= min(d, n)")
        if not 0 <= self.s_cols <= self.n:
            raise ValueError("need 0 <= s_cols <= n")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")


@dataclass(frozen=True)
class SyntheticData:
    """``D = low_rank + sparse + noise`` and the ground-truth pieces."""

    D: np.ndarray
    low_rank: np.ndarray
    sparse: np.ndarray
    noise: np.ndarray
    sparse_columns: tuple

    def __iter__(self):
        return iter((self.D, self.low_rank, self.sparse, self.noise))


def synth_lrr(spec):
    """Draw ``D = G H^T + S + N`` from the seeded generator.

    Draw order: ``G`` (``d x r``) and ``H`` (``n x r``) standard normal in
    row-major order; ``s_cols`` distinct columns by partial Fisher-Yates;
    their entries uniform on ``[-1, 1]`` column by column; noise
    ``sigma * N(0, 1)`` in row-major order (skipped when ``sigma = 0``).
    """
    g = LCG(spec.seed)
    G = g.normals((spec.d, spec.r))
    H = g.normals((spec.n, spec.r))
    L = G @ H.T
    perm = list(range(spec.n))
    for i in range(spec.s_cols):
        j = i + g.randbelow(spec.n - i)
        perm[i], perm[j] = perm[j], perm[i]
    cols = tuple(perm[:spec.s_cols])
    S = np.zeros((spec.d, spec.n))
    for c in cols:
        S[:, c] = 2.0 * g.uniforms((spec.d,)) - 1.0
    if spec.sigma > 0:
        N = spec.sigma * g.normals((spec.d, spec.n))
    else:
        N = np.zeros((spec.d, spec.n))
    return SyntheticData(L + S + N, L, S, N, cols)


_SYNTH_KEYS = {"d": int, "n": int, "r": int, "scols": int, "s_cols": int, "sigma": float, "seed": int}


def parse_synthetic(text):
    """Parse ``"d=100,n=100,r=5,scols=5,sigma=0.01,seed=42"`` into a :class:`SyntheticSpec`."""
    kw = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise ValueError(f"expected key=value, got {part!r}")
        key, val = (s.strip() for s in part.split("=", 1))
        if key not in _SYNTH_KEYS:
            raise ValueError(f"unknown synthetic key {key!r}")
        kw["s_cols" if key == "scols" else key] = _SYNTH_KEYS[key](val)
    return SyntheticSpec(**kw)
