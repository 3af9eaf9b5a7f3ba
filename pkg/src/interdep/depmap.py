"""Dependency maps between two layers and fixed-point combinatorics.

A map is a permutation ``pi``: node ``i`` of layer A depends on node
``pi[i]`` of layer B (and, mutually, ``pi[i]`` depends on ``i``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import InvalidParameterError

EXACT_FIXED_POINT_LIMIT = 20


@dataclass(frozen=True, eq=False)
class DependencyMap:
    pi: np.ndarray
    kind: str = "identity"
    q: float | None = None
    r: int | None = None
    seed: int | None = None

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=np.int64)
        if not is_permutation(pi):
            raise InvalidParameterError("dependency map is not a permutation")
        pi.setflags(write=False)
        object.__setattr__(self, "pi", pi)

    @property
    def size(self) -> int:
        return int(self.pi.shape[0])

    @property
    def tag(self) -> str:
        if self.kind == "rewired":
            return f"rewired({self.q:g})"
        if self.kind in ("block_local", "linear", "linear_axis"):
            return f"{self.kind}({self.r})"
        return self.kind

    def inverse(self) -> np.ndarray:
        inv = np.empty_like(self.pi)
        inv[self.pi] = np.arange(self.size)
        return inv

    def fixed_points(self) -> int:
        return int(np.count_nonzero(self.pi == np.arange(self.size)))

    def __eq__(self, other):
        return isinstance(other, DependencyMap) and np.array_equal(self.pi, other.pi)

    __hash__ = None


def is_permutation(pi) -> bool:
    pi = np.asarray(pi)
    n = pi.shape[0]
    if pi.ndim != 1 or n == 0:
        return False
    if pi.min() < 0 or pi.max() >= n:
        return False
    return bool(np.all(np.bincount(pi, minlength=n) == 1))


def identity_map(N: int) -> DependencyMap:
    if N < 1:
        raise InvalidParameterError(f"N must be >= 1, got {N}")
    return DependencyMap(np.arange(N), "identity")


def rewire_map(base: DependencyMap, q: float, rng_seed) -> DependencyMap:
    """Mark each link independently with probability ``q`` and shuffle the
    targets of the marked links among themselves."""
    if not 0.0 <= q <= 1.0:
        raise InvalidParameterError(f"q must lie in [0, 1], got {q}")
    rng = np.random.default_rng(rng_seed)
    pi = base.pi.copy()
    marked = np.flatnonzero(rng.random(base.size) < q)
    pi[marked] = pi[marked][rng.permutation(marked.size)]
    seed = rng_seed if isinstance(rng_seed, (int, np.integer)) else None
    return DependencyMap(pi, "rewired", q=q, seed=seed)


def rewired_marks(N: int, q: float, rng_seed) -> np.ndarray:
    """The marked indices :func:`rewire_map` would draw for the same seed."""
    rng = np.random.default_rng(rng_seed)
    return np.flatnonzero(rng.random(N) < q)


def block_local_map(L: int, r: int, rng_seed) -> DependencyMap:
    """Uniform random dependency inside each r x r block of an L x L lattice.

    Blocks are axis aligned from the origin; when ``r`` does not divide ``L``
    the last row and column of blocks are truncated.
    """
    if r < 1 or r > L:
        raise InvalidParameterError(f"block side must satisfy 1 <= r <= L, got r={r}, L={L}")
    rng = np.random.default_rng(rng_seed)
    n = L * L
    idx = np.arange(n)
    block = (idx % L) // r + ((idx // L) // r) * (-(-L // r))
    order = np.argsort(block, kind="stable")
    bounds = np.flatnonzero(np.diff(block[order])) + 1
    pi = np.empty(n, dtype=np.int64)
    for members in np.split(order, bounds):
        pi[members] = members[rng.permutation(members.size)]
    seed = rng_seed if isinstance(rng_seed, (int, np.integer)) else None
    return DependencyMap(pi, "block_local", r=r, seed=seed)


def linear_map(L: int, r: int, axis_only: bool = False) -> DependencyMap:
    """Rigid toroidal shift by (r, r), or by (r, 0) with ``axis_only``."""
    if not 0 <= r <= L:
        raise InvalidParameterError(f"shift must satisfy 0 <= r <= L, got r={r}, L={L}")
    idx = np.arange(L * L)
    x, y = idx % L, idx // L
    dy = 0 if axis_only else r
    pi = (x + r) % L + L * ((y + dy) % L)
    return DependencyMap(pi, "linear_axis" if axis_only else "linear", r=r)


@lru_cache(maxsize=None)
def derangements(n: int) -> int:
    """Number of fixed-point-free permutations of ``n`` items."""
    if n < 0:
        raise InvalidParameterError(f"n must be >= 0, got {n}")
    a, b = 1, 0  # D(0), D(1)
    if n == 0:
        return a
    for k in range(2, n + 1):
        a, b = b, (k - 1) * (a + b)
    return b


def derangements_rounded(n: int) -> int:
    """``floor(n!/e + 1/2)`` evaluated with enough precision to be exact."""
    from mpmath import mp, mpf, e, factorial, floor
    with mp.workdps(len(str(math.factorial(n))) + 20):
        return int(floor(factorial(n) / e + mpf(1) / 2))


def expected_fixed_points_exact(n: int) -> Fraction:
    """Mean fixed-point count of a uniform permutation of ``n`` items, summed exactly."""
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    total = sum(m * math.comb(n, m) * derangements(n - m) for m in range(n + 1))
    return Fraction(total, math.factorial(n))


def expected_fixed_points(n) -> float:
    """Mean number of fixed points of a uniform random permutation of ``n`` items.

    Summed exactly for ``n <= 20``; the sum is identically one, which is
    returned directly beyond that.
    """
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    if float(n).is_integer() and n <= EXACT_FIXED_POINT_LIMIT:
        return float(expected_fixed_points_exact(int(n)))
    return 1.0


def p_same(q: float, p: float, n: int) -> float:
    """Probability that a surviving node of A depends on its own copy in B.

    ``(1 - q) * p`` from the untouched links plus ``p * E(qn) / (qn)`` from
    rewired links that happen to land back on themselves.
    """
    if not 0.0 <= q <= 1.0 or not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"q and p must lie in [0, 1], got q={q}, p={p}")
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    if q == 0.0:
        return p
    qn = q * n
    return min(p, (1.0 - q) * p + p * expected_fixed_points(qn) / qn)


def write_map(m: DependencyMap, path) -> Path:
    path = Path(path)
    fmt = lambda v: "none" if v is None else f"{v:g}" if isinstance(v, float) else str(v)
    header = f"N={m.size} tag={m.kind} q={fmt(m.q)} r={fmt(m.r)} seed={fmt(m.seed)}"
    np.savetxt(path, m.pi, fmt="%d", header=header)
    return path


def read_map(path) -> DependencyMap:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline()
    fields = dict(tok.split("=", 1) for tok in header.lstrip("#").split())
    pi = np.loadtxt(path, dtype=np.int64, comments="#", ndmin=1)
    if pi.size != int(fields["N"]):
        raise InvalidParameterError(f"{path}: header says N={fields['N']} but found {pi.size} entries")
    parse = lambda v, cast: None if v in (None, "none") else cast(v)
    return DependencyMap(pi, fields.get("tag", "identity"), q=parse(fields.get("q"), float),
                         r=parse(fields.get("r"), int), seed=parse(fields.get("seed"), int))
