"""Initial attack and the mutual-percolation cascade between two layers."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ._kernels import lattice_wraps, mutual_cascade
from .depmap import DependencyMap
from .errors import InvalidParameterError
from .graphs import Graph


@dataclass
class SystemState:
    """Two layers, their dependency map, and the current alive masks.

    Masks are owned by the state and mutated by the cascade; graphs and map
    are shared read-only.
    """

    graph_a: Graph
    graph_b: Graph
    dmap: DependencyMap
    alive_a: np.ndarray = None
    alive_b: np.ndarray = None

    def __post_init__(self):
        n = self.graph_a.node_count
        if self.graph_b.node_count != n or self.dmap.size != n:
            raise InvalidParameterError(
                f"layer sizes differ: A={n}, B={self.graph_b.node_count}, map={self.dmap.size}")
        if self.alive_a is None:
            self.alive_a = np.ones(n, dtype=np.uint8)
        if self.alive_b is None:
            self.alive_b = np.ones(n, dtype=np.uint8)
        self._pinv = self.dmap.inverse()

    @classmethod
    def coupled(cls, graph: Graph, dmap: DependencyMap) -> "SystemState":
        """Both layers share one topology, as in a network and its copy."""
        return cls(graph, graph, dmap)

    @property
    def N(self) -> int:
        return self.graph_a.node_count

    @property
    def pinv(self) -> np.ndarray:
        return self._pinv

    def copy(self) -> "SystemState":
        return replace(self, alive_a=self.alive_a.copy(), alive_b=self.alive_b.copy())

    def reset(self) -> None:
        self.alive_a[:] = 1
        self.alive_b[:] = 1

    def swapped(self) -> "SystemState":
        """Same system seen from B: layers exchanged and the map inverted."""
        inv = DependencyMap(self._pinv, self.dmap.kind, self.dmap.q, self.dmap.r, self.dmap.seed)
        return SystemState(self.graph_b, self.graph_a, inv,
                           self.alive_b.copy(), self.alive_a.copy())


@dataclass(frozen=True)
class AttackSpec:
    """Keep a fraction ``p`` of nodes; remove ``floor((1-p)N)`` chosen by ``seed``
    unless ``explicit_set`` names the removed nodes directly."""

    p: float = 1.0
    seed: int | None = 0
    explicit_set: tuple | None = None

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise InvalidParameterError(f"p must lie in [0, 1], got {self.p}")

    def removed(self, N: int, order: np.ndarray | None = None) -> np.ndarray:
        """Indices of the removed nodes.

        ``order`` is a precomputed random permutation; taking its prefix makes
        attacks at different ``p`` nested for a fixed realization.
        """
        if self.explicit_set is not None:
            nodes = np.asarray(self.explicit_set, dtype=np.int64)
            if nodes.size and (nodes.min() < 0 or nodes.max() >= N):
                raise InvalidParameterError(f"attack index out of range [0, {N})")
            if np.unique(nodes).size != nodes.size:
                raise InvalidParameterError("attack indices must be distinct")
            return nodes
        m = removal_count(self.p, N)
        if order is None:
            order = np.random.default_rng(self.seed).permutation(N)
        return order[:m]


def removal_count(p: float, N: int) -> int:
    # the epsilon keeps p = k/N exact under binary rounding
    return min(N, int(np.floor((1.0 - p) * N + 1e-9)))


@dataclass
class CascadeResult:
    p_infinity: float
    noi: int
    trace: np.ndarray
    trace_b: np.ndarray
    final_alive: np.ndarray = field(repr=False)

    def wraps(self, graph: Graph) -> tuple[bool, bool]:
        """Whether the surviving giant of A winds around the lattice torus."""
        if graph.lattice_side is None:
            raise InvalidParameterError("wrapping is defined only for lattices")
        mask = np.zeros(graph.node_count, dtype=np.uint8)
        mask[self.final_alive] = 1
        return lattice_wraps(graph.indptr, graph.indices, mask, graph.lattice_side)


ATTACK_TARGETS = ("partners", "same")


def attack(state: SystemState, spec: AttackSpec, order: np.ndarray | None = None,
           target_b: str = "partners") -> SystemState:
    """Kill the removed nodes in A and, in B, their partners (default) or the
    nodes at the same positions (``target_b="same"``). Updates in place."""
    if target_b not in ATTACK_TARGETS:
        raise InvalidParameterError(f"target_b must be one of {ATTACK_TARGETS}, got {target_b!r}")
    nodes = spec.removed(state.N, order)
    state.alive_a[nodes] = 0
    state.alive_b[state.dmap.pi[nodes] if target_b == "partners" else nodes] = 0
    return state


CASCADE_MODES = ("simultaneous", "sequential")


def _run(state, dep_a, dep_b, mode):
    if mode not in CASCADE_MODES:
        raise InvalidParameterError(f"mode must be one of {CASCADE_MODES}, got {mode!r}")
    rounds, ta, tb = mutual_cascade(
        state.graph_a.indptr, state.graph_a.indices,
        state.graph_b.indptr, state.graph_b.indices,
        state.dmap.pi, state.pinv, dep_a, dep_b,
        state.alive_a, state.alive_b, state.N + 2, mode == "simultaneous")
    n = state.N
    return CascadeResult(
        p_infinity=ta[-1] / n, noi=int(rounds), trace=ta / n, trace_b=tb / n,
        final_alive=np.flatnonzero(state.alive_a))


def run_cascade(state: SystemState, mode: str = "simultaneous") -> CascadeResult:
    """Prune both layers to their giant components until no more nodes fail.

    One iteration (the NOI unit) prunes each layer once and removes the
    nodes whose partner did not survive. In the default ``simultaneous``
    mode both layers are pruned before any failure crosses over, which
    treats the layers symmetrically; ``sequential`` prunes A and propagates
    before pruning B. ``trace[k]`` is the alive fraction of A after
    iteration ``k`` and ``trace[0]`` the fraction right after the attack.
    """
    dep = np.ones(state.N, dtype=np.uint8)
    return _run(state, dep, dep, mode)


def run_cascade_partial(state: SystemState, dependent_fraction: float | None,
                        spec: AttackSpec, *, dependent=None, seed=None,
                        mode: str = "simultaneous", target_b: str = "partners") -> CascadeResult:
    """Cascade where only some node pairs are coupled; the rest are autonomous.

    Dependent A nodes are ``dependent`` if given, otherwise a random
    ``round(dependent_fraction * N)`` of them drawn from ``seed``. A dependent
    node ``i`` is paired with ``pi[i]``. The attack removes the chosen nodes
    from A and, through dependent pairs only, their partners from B. With
    ``target_b="same"`` it instead removes the same positions from B.
    """
    if target_b not in ATTACK_TARGETS:
        raise InvalidParameterError(f"target_b must be one of {ATTACK_TARGETS}, got {target_b!r}")
    n = state.N
    if dependent is None:
        if dependent_fraction is None or not 0.0 <= dependent_fraction <= 1.0:
            raise InvalidParameterError(
                f"dependent_fraction must lie in [0, 1], got {dependent_fraction}")
        rng = np.random.default_rng(seed)
        dependent = rng.permutation(n)[:int(round(dependent_fraction * n))]
    dep_a = np.zeros(n, dtype=np.uint8)
    dep_a[np.asarray(dependent, dtype=np.int64)] = 1
    dep_b = np.zeros(n, dtype=np.uint8)
    dep_b[state.dmap.pi[dep_a == 1]] = 1
    nodes = spec.removed(n)
    state.alive_a[nodes] = 0
    if target_b == "same":
        state.alive_b[nodes] = 0
    else:
        state.alive_b[state.dmap.pi[nodes[dep_a[nodes] == 1]]] = 0
    return _run(state, dep_a, dep_b, mode)


def single_layer_fraction(graph: Graph, removed) -> float:
    """Giant-component fraction of one network after removing ``removed``."""
    from .graphs import giant_fraction
    mask = graph.full_mask()
    mask[np.asarray(removed, dtype=np.int64)] = 0
    return giant_fraction(graph, mask)


def write_trace(result: CascadeResult, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "alive_fraction_a", "alive_fraction_b"])
        for k, (a, b) in enumerate(zip(result.trace, result.trace_b)):
            w.writerow([k, repr(float(a)), repr(float(b))])
    return path
