"""Network generators and masked giant-component queries.

Every graph is stored as an immutable CSR adjacency (``indptr``, ``indices``)
so the numba kernels can walk it directly. Generators take an integer seed
and are bit-reproducible for equal parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from ._kernels import giant_mask
from .errors import InvalidParameterError

TOPOLOGIES = ("lattice", "erdos_renyi", "watts_strogatz", "scale_free")


@dataclass(frozen=True, eq=False)
class Graph:
    """Static undirected network in CSR form.

    ``lattice_side`` is set only for square lattices, whose neighbour slots
    are ordered (+x, -x, +y, -y) for every node.
    """

    node_count: int
    indptr: np.ndarray
    indices: np.ndarray
    topology: str
    lattice_side: int | None = None
    seed: int | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def edge_count(self) -> int:
        return int(self.indptr[-1]) // 2

    @property
    def mean_degree(self) -> float:
        return float(self.indptr[-1]) / self.node_count

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def edges(self) -> np.ndarray:
        """Each undirected edge once as an ``(E, 2)`` array with ``u <= v``.

        Parallel edges (only possible on the L=2 lattice) are kept.
        """
        src = np.repeat(np.arange(self.node_count), self.degrees)
        dst = self.indices.astype(np.int64)
        keep = src < dst
        pairs = np.stack([src[keep], dst[keep]], axis=1)
        return pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]

    def full_mask(self) -> np.ndarray:
        return np.ones(self.node_count, dtype=np.uint8)


def _from_edges(n, u, v, topology, seed, params, lattice_side=None):
    """Build a simple graph from endpoint arrays, dropping loops and duplicates."""
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    keep = u != v
    a = np.minimum(u[keep], v[keep])
    b = np.maximum(u[keep], v[keep])
    key = np.unique(a * n + b)
    a, b = key // n, key % n
    src = np.concatenate([a, b])
    dst = np.concatenate([b, a])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return Graph(n, indptr, dst.astype(np.int32), topology, lattice_side, seed, params)


def generate_square_lattice(L: int) -> Graph:
    """Periodic L x L square lattice; node (x, y) has index ``x + L*y``."""
    if L < 2:
        raise InvalidParameterError(f"lattice side must be >= 2, got {L}")
    n = L * L
    idx = np.arange(n, dtype=np.int64)
    x, y = idx % L, idx // L
    nb = np.stack(
        [(x + 1) % L + L * y, (x - 1) % L + L * y, x + L * ((y + 1) % L), x + L * ((y - 1) % L)],
        axis=1,
    )
    indptr = np.arange(0, 4 * n + 1, 4, dtype=np.int64)
    return Graph(n, indptr, nb.ravel().astype(np.int32), "lattice", L, None, {"L": L})


def generate_er(N: int, mean_degree: float, rng_seed: int) -> Graph:
    """Erdos-Renyi G(N, p) with ``p = mean_degree / (N - 1)``.

    The edge count is drawn from its binomial law and that many distinct
    pairs are then sampled uniformly, which is exactly G(N, p).
    """
    complete = N >= 2 and mean_degree == N - 1
    if not complete and (N < 10 or not 0 < mean_degree < N - 1):
        raise InvalidParameterError(
            f"need N >= 10 and 0 < mean_degree < N-1, got N={N}, mean_degree={mean_degree}")
    rng = np.random.default_rng(rng_seed)
    p_edge = mean_degree / (N - 1)
    total = N * (N - 1) // 2
    params = {"N": N, "mean_degree": mean_degree}
    if p_edge >= 1.0:
        iu, ju = np.triu_indices(N, k=1)
        return _from_edges(N, iu, ju, "erdos_renyi", rng_seed, params)
    m = int(rng.binomial(total, p_edge))
    keys = np.empty(0, dtype=np.int64)
    while keys.size < m:
        need = m - keys.size
        draw = rng.integers(0, total, size=need + need // 10 + 16)
        keys = np.unique(np.concatenate([keys, draw]))
    keys = rng.permutation(keys)[:m]
    # unrank pair index k -> (i, j), i < j, row-major over the upper triangle
    i = (N - 2 - np.floor(np.sqrt(-8.0 * keys + 4.0 * N * (N - 1) - 7) / 2.0 - 0.5)).astype(np.int64)
    j = keys + i + 1 - total + (N - i) * (N - i - 1) // 2
    return _from_edges(N, i, j, "erdos_renyi", rng_seed, params)


def generate_ws(N: int, mean_degree: int, beta: float, rng_seed: int) -> Graph:
    """Watts-Strogatz ring with each edge's far end rewired with probability ``beta``.

    Rewiring follows the usual procedure: an edge (u, u+j) is redirected to a
    uniformly chosen node w, skipping choices that would create a self-loop
    or duplicate edge, so the edge count is preserved.
    """
    if mean_degree % 2 != 0 or mean_degree < 2:
        raise InvalidParameterError(f"mean_degree must be even and >= 2, got {mean_degree}")
    if not 0.0 <= beta <= 1.0:
        raise InvalidParameterError(f"beta must lie in [0, 1], got {beta}")
    if N <= mean_degree:
        raise InvalidParameterError(f"N must exceed mean_degree, got N={N}")
    rng = np.random.default_rng(rng_seed)
    half = mean_degree // 2
    nodes = np.arange(N, dtype=np.int64)
    adj = [set() for _ in range(N)]
    for j in range(1, half + 1):
        for u, v in zip(nodes, (nodes + j) % N):
            adj[u].add(int(v))
            adj[int(v)].add(int(u))
    for j in range(1, half + 1):
        flips = rng.random(N) < beta
        for u in np.flatnonzero(flips):
            u = int(u)
            v = (u + j) % N
            if v not in adj[u] or len(adj[u]) >= N - 1:
                continue
            w = int(rng.integers(N))
            while w == u or w in adj[u]:
                w = int(rng.integers(N))
            adj[u].remove(v)
            adj[v].remove(u)
            adj[u].add(w)
            adj[w].add(u)
    src = np.fromiter((u for u in range(N) for _ in adj[u]), dtype=np.int64)
    dst = np.fromiter((w for u in range(N) for w in adj[u]), dtype=np.int64)
    return _from_edges(N, src, dst, "watts_strogatz", rng_seed,
                       {"N": N, "mean_degree": mean_degree, "beta": beta})


def _floor_pareto_mean(scale, exponent, k_max):
    # E[min(floor(X), k_max)] for X ~ Pareto(scale, exponent - 1)
    a = exponent - 1.0
    ks = np.arange(int(np.floor(scale)), k_max + 1, dtype=np.float64)
    upper = np.minimum(1.0, (scale / (ks + 1.0)) ** a)
    lower = np.minimum(1.0, (scale / ks) ** a)
    probs = lower - upper
    probs[-1] = lower[-1]
    return float(np.sum(ks * probs))


def sf_degree_scale(exponent: float, mean_degree: float, k_max: int) -> float:
    """Pareto scale whose floored, capped degrees have the requested mean."""
    f = lambda s: _floor_pareto_mean(s, exponent, k_max) - mean_degree
    return float(optimize.brentq(f, 1.0, mean_degree + 1.0, xtol=1e-10))


def generate_sf(N: int, exponent: float, mean_degree: float, rng_seed: int) -> Graph:
    """Configuration-model graph with a power-law degree sequence.

    Degrees are ``floor(X)`` for ``X`` Pareto-distributed with tail
    ``k**-exponent``, capped at ``sqrt(N)``; the Pareto scale is solved so
    the expected degree equals ``mean_degree``. If the stub total is odd, one
    stub is added to a random node. Self-loops and multi-edges are dropped.
    """
    if exponent <= 2:
        raise InvalidParameterError(f"exponent must exceed 2, got {exponent}")
    if N < 100:
        raise InvalidParameterError(f"N must be >= 100, got {N}")
    if mean_degree <= 1:
        raise InvalidParameterError(f"mean_degree must exceed 1, got {mean_degree}")
    rng = np.random.default_rng(rng_seed)
    k_max = max(int(np.sqrt(N)), int(np.ceil(mean_degree)) + 2)
    scale = sf_degree_scale(exponent, mean_degree, k_max)
    x = scale * rng.random(N) ** (-1.0 / (exponent - 1.0))
    deg = np.minimum(np.floor(x), k_max).astype(np.int64)
    if deg.sum() % 2 == 1:
        deg[rng.integers(N)] += 1
    stubs = np.repeat(np.arange(N, dtype=np.int64), deg)
    stubs = rng.permutation(stubs)
    return _from_edges(N, stubs[0::2], stubs[1::2], "scale_free", rng_seed,
                       {"N": N, "exponent": exponent, "mean_degree": mean_degree,
                        "degree_scale": scale, "k_max": k_max})


def generate(topology: str, N: int, *, seed: int = 0, mean_degree: float = 4.0,
             beta: float = 0.1, exponent: float = 3.0) -> Graph:
    """Dispatch to a generator by topology tag; lattices need a square ``N``."""
    if topology == "lattice":
        L = int(round(np.sqrt(N)))
        if L * L != N:
            raise InvalidParameterError(f"lattice needs a square node count, got {N}")
        return generate_square_lattice(L)
    if topology == "erdos_renyi":
        return generate_er(N, mean_degree, seed)
    if topology == "watts_strogatz":
        return generate_ws(N, int(mean_degree), beta, seed)
    if topology == "scale_free":
        return generate_sf(N, exponent, mean_degree, seed)
    raise InvalidParameterError(f"unknown topology {topology!r}; expected one of {TOPOLOGIES}")


def _as_mask(g: Graph, mask) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.shape != (g.node_count,):
        raise InvalidParameterError(
            f"mask length {mask.shape} does not match node count {g.node_count}")
    return mask.astype(np.uint8, copy=False)


def giant_component(g: Graph, mask=None) -> np.ndarray:
    """Sorted node indices of the largest alive component.

    Ties go to the component containing the lowest node index.
    """
    alive = g.full_mask() if mask is None else _as_mask(g, mask)
    out = np.empty(g.node_count, dtype=np.uint8)
    giant_mask(g.indptr, g.indices, alive, out)
    return np.flatnonzero(out)


def giant_fraction(g: Graph, mask=None) -> float:
    alive = g.full_mask() if mask is None else _as_mask(g, mask)
    out = np.empty(g.node_count, dtype=np.uint8)
    return giant_mask(g.indptr, g.indices, alive, out) / g.node_count


def write_edgelist(g: Graph, path) -> Path:
    path = Path(path)
    seed = "none" if g.seed is None else g.seed
    with path.open("w") as fh:
        fh.write(f"# N={g.node_count} topology={g.topology} seed={seed}\n")
        np.savetxt(fh, g.edges(), fmt="%d")
    return path


def read_edgelist(path) -> Graph:
    """Inverse of :func:`write_edgelist`; lattices are rebuilt with their slot order."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline()
    fields = dict(tok.split("=", 1) for tok in header.lstrip("#").split())
    n = int(fields["N"])
    topology = fields["topology"]
    seed = None if fields.get("seed", "none") == "none" else int(fields["seed"])
    if topology == "lattice":
        return generate_square_lattice(int(round(np.sqrt(n))))
    pairs = np.loadtxt(path, dtype=np.int64, comments="#", ndmin=2)
    if pairs.size == 0:
        pairs = np.empty((0, 2), dtype=np.int64)
    return _from_edges(n, pairs[:, 0], pairs[:, 1], topology, seed, {"N": n})
