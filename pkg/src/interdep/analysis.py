"""Percolation sweeps, critical-point search and the mean-field fixed point.

Every realization draws its own graph (for random topologies), dependency
map and attack order from a seed derived from the master seed, the system
description and the realization index. The seed does not depend on ``p``,
so for one realization the attacked sets at different ``p`` are nested and
its surviving fraction is a step function of ``p``. Thresholds are located
per realization and then pooled, which keeps the sample-to-sample scatter
of the threshold from smearing a discontinuous drop.
"""

from __future__ import annotations

import contextlib
import csv
import itertools
import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import isotonic_regression

from . import depmap as dm
from .cascade import AttackSpec, SystemState, attack, removal_count, run_cascade, run_cascade_partial
from .errors import InvalidParameterError, NoTransitionError
from .graphs import Graph, generate, generate_square_lattice, giant_fraction

log = logging.getLogger(__name__)

JUMP_THRESHOLD = 0.1
TOL_P = 0.002
TOL_Q = 0.01
MAP_KINDS = ("identity", "rewired", "block_local", "linear", "linear_axis")


def survival_threshold(N: int) -> float:
    """Smallest giant fraction that counts as a surviving system."""
    return max(10.0 / N, 0.005)


def derive_seed(master_seed: int, *keys) -> np.random.SeedSequence:
    """Seed sequence keyed by the master seed and a tuple of labels.

    Strings are hashed with CRC32 and floats are scaled to integers, so the
    result is stable across processes and Python versions.
    """
    words = []
    for k in keys:
        if isinstance(k, str):
            words.append(zlib.crc32(k.encode()))
        elif isinstance(k, float):
            words.append(int(round(k * 1_000_000_000)))
        elif k is None:
            words.append(0)
        else:
            words.append(int(k))
    return np.random.SeedSequence(int(master_seed), spawn_key=tuple(words))


@dataclass(frozen=True)
class MapSpec:
    """Which dependency map a realization uses."""

    kind: str = "rewired"
    q: float = 0.0
    r: int | None = None

    def __post_init__(self):
        if self.kind not in MAP_KINDS:
            raise InvalidParameterError(f"unknown map kind {self.kind!r}; expected one of {MAP_KINDS}")
        if self.kind == "rewired" and not 0.0 <= self.q <= 1.0:
            raise InvalidParameterError(f"q must lie in [0, 1], got {self.q}")
        if self.kind in ("block_local", "linear", "linear_axis") and self.r is None:
            raise InvalidParameterError(f"map kind {self.kind!r} needs r")

    @property
    def label(self) -> float:
        """Value reported in the ``q`` column of output tables."""
        if self.kind == "rewired":
            return self.q
        if self.kind == "identity":
            return 0.0
        return float(self.r)

    def build(self, N: int, lattice_side: int | None, seed) -> dm.DependencyMap:
        if self.kind == "identity":
            return dm.identity_map(N)
        if self.kind == "rewired":
            return dm.rewire_map(dm.identity_map(N), self.q, seed)
        if lattice_side is None:
            raise InvalidParameterError(f"map kind {self.kind!r} needs a lattice")
        if self.kind == "block_local":
            return dm.block_local_map(lattice_side, self.r, seed)
        return dm.linear_map(lattice_side, self.r, axis_only=self.kind == "linear_axis")


@dataclass(frozen=True)
class SystemSpec:
    """Everything needed to draw one realization of the coupled system."""

    topology: str
    N: int
    dependency: MapSpec = MapSpec()
    mean_degree: float = 4.0
    beta: float = 0.1
    exponent: float = 3.0
    mode: str = "simultaneous"

    def graph(self, seed: int) -> Graph:
        if self.topology == "lattice":
            return _lattice(self.N)
        return generate(self.topology, self.N, seed=seed, mean_degree=self.mean_degree,
                        beta=self.beta, exponent=self.exponent)


_LATTICES: dict[int, Graph] = {}


def _lattice(N: int) -> Graph:
    # lattices carry no randomness; one instance per size is shared
    if N not in _LATTICES:
        L = int(round(math.sqrt(N)))
        if L * L != N:
            raise InvalidParameterError(f"lattice needs a square node count, got {N}")
        _LATTICES[N] = generate_square_lattice(L)
    return _LATTICES[N]


@dataclass
class Outcome:
    p_infinity: float
    noi: int
    survives: bool


class Realization:
    """One quenched system: graph, map and attack order, evaluated at many ``p``."""

    def __init__(self, spec: SystemSpec, master_seed: int, index: int):
        self.spec = spec
        ss = derive_seed(master_seed, spec.topology, spec.N, spec.dependency.kind,
                         spec.dependency.label, index)
        graph_seed, map_seed, attack_seed = (int(s) for s in ss.generate_state(3, dtype=np.uint32))
        self.graph = spec.graph(graph_seed)
        self.dmap = spec.dependency.build(spec.N, self.graph.lattice_side, map_seed)
        self.order = np.random.default_rng(attack_seed).permutation(spec.N)
        self.state = SystemState.coupled(self.graph, self.dmap)
        self.eps = survival_threshold(spec.N)
        self._cache: dict[int, Outcome] = {}

    def evaluate(self, p: float) -> Outcome:
        m = removal_count(p, self.spec.N)
        if m not in self._cache:
            self.state.reset()
            attack(self.state, AttackSpec(p), self.order)
            res = run_cascade(self.state, self.spec.mode)
            survives = res.p_infinity >= self.eps
            if survives and self.graph.lattice_side is not None:
                survives = any(res.wraps(self.graph))
            self._cache[m] = Outcome(res.p_infinity, res.noi, survives)
        return self._cache[m]


@dataclass
class Threshold:
    """Bracket ``[lo, hi]`` around one realization's threshold, ``hi - lo <= tol``."""

    lo: float
    hi: float
    pinf_lo: float
    pinf_hi: float
    noi_lo: int
    noi_hi: int
    collapsed: bool

    @property
    def p_c(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def jump(self) -> float:
        """Drop across the threshold, counted only when it empties the system."""
        return self.pinf_hi - self.pinf_lo if self.collapsed else 0.0


def _threshold(args) -> Threshold:
    spec, master_seed, index, tol = args
    real = Realization(spec, master_seed, index)
    top = real.evaluate(1.0)
    if not top.survives:
        raise NoTransitionError(
            f"realization {index} of {spec.topology} N={spec.N} does not survive at p=1")
    lo, hi = 0.0, 1.0
    out_lo, out_hi = Outcome(0.0, 0, False), top
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        out = real.evaluate(mid)
        if out.survives:
            hi, out_hi = mid, out
        else:
            lo, out_lo = mid, out
    return Threshold(lo, hi, out_lo.p_infinity, out_hi.p_infinity, out_lo.noi, out_hi.noi,
                     collapsed=out_lo.p_infinity < real.eps)


def _sweep(args):
    spec, master_seed, index, p_grid = args
    real = Realization(spec, master_seed, index)
    outs = [real.evaluate(p) for p in p_grid]
    return [o.p_infinity for o in outs], [o.noi for o in outs]


def _pmap(fn, items, threads):
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class PercolationCurve:
    topology: str
    q: float
    samples: list  # (p, mean_pinf, std_pinf, mean_noi)
    realizations: int
    N: int
    pinf: np.ndarray = field(default=None, repr=False)  # (realizations, len(grid))
    noi: np.ndarray = field(default=None, repr=False)

    @property
    def p(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    @property
    def mean_pinf(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples])

    @property
    def std_pinf(self) -> np.ndarray:
        return np.array([s[2] for s in self.samples])

    @property
    def mean_noi(self) -> np.ndarray:
        return np.array([s[3] for s in self.samples])


@dataclass
class CriticalPoint:
    topology: str
    q: float
    p_c: float
    order: str
    jump_size: float
    noi_at_pc: float
    thresholds: list = field(default_factory=list, repr=False)

    @property
    def spread(self) -> float:
        return float(np.std([t.p_c for t in self.thresholds]))

    @property
    def collapse_fraction(self) -> float:
        return float(np.mean([t.collapsed for t in self.thresholds]))


def _spec(topology, N, q, dependency, mode, graph_kw):
    if dependency is None:
        dependency = MapSpec("rewired", q)
    return SystemSpec(topology, N, dependency, mode=mode, **graph_kw)


def sweep_p(topology: str, q: float, p_grid, realizations: int, N: int, seed: int = 0, *,
            dependency: MapSpec | None = None, mode: str = "simultaneous",
            threads: int = 1, **graph_kw) -> PercolationCurve:
    """Mean and spread of the surviving fraction and NOI over a grid of ``p``."""
    p_grid = [float(p) for p in p_grid]
    if not p_grid:
        raise InvalidParameterError("p_grid is empty")
    if any(not 0.0 <= p <= 1.0 for p in p_grid) or p_grid != sorted(p_grid):
        raise InvalidParameterError("p_grid must be sorted inside [0, 1]")
    if realizations < 1:
        raise InvalidParameterError(f"realizations must be >= 1, got {realizations}")
    spec = _spec(topology, N, q, dependency, mode, graph_kw)
    rows = _pmap(_sweep, [(spec, seed, r, p_grid) for r in range(realizations)], threads)
    pinf = np.array([r[0] for r in rows])
    noi = np.array([r[1] for r in rows], dtype=float)
    samples = [(p, float(pinf[:, k].mean()), float(pinf[:, k].std()), float(noi[:, k].mean()))
               for k, p in enumerate(p_grid)]
    return PercolationCurve(topology, spec.dependency.label, samples, realizations, N, pinf, noi)


def find_pc(topology: str, q: float, N: int, realizations: int, tol: float = TOL_P, *,
            seed: int = 0, dependency: MapSpec | None = None,
            jump_threshold: float = JUMP_THRESHOLD, mode: str = "simultaneous",
            threads: int = 1, **graph_kw) -> CriticalPoint:
    """Locate the critical surviving fraction and classify the transition.

    Each realization's threshold is bracketed by bisection on ``p`` to within
    ``tol``: above it the system survives (its giant holds at least
    :func:`survival_threshold` of the nodes and, on a lattice, winds around
    the torus). ``p_c`` is the median of the per-realization thresholds.

    The transition is first order when the mean collapse jump exceeds
    ``jump_threshold``. A realization contributes its drop across the
    bracket only when the state just below it has collapsed (giant under the
    survival threshold); a drop that leaves an extended remnant is one step
    of a multi-step decrease and contributes nothing. ``noi_at_pc`` is the
    mean over realizations of the larger NOI at the two bracket ends.
    """
    if tol < 1.0 / N:
        raise InvalidParameterError(f"tol must be >= 1/N = {1.0 / N:g}, got {tol}")
    spec = _spec(topology, N, q, dependency, mode, graph_kw)
    ths = _pmap(_threshold, [(spec, seed, r, tol) for r in range(realizations)], threads)
    p_c = float(np.median([t.p_c for t in ths]))
    jump = float(np.mean([t.jump for t in ths]))
    noi = float(np.mean([max(t.noi_lo, t.noi_hi) for t in ths]))
    order = "first" if jump > jump_threshold else "second"
    log.info("%s %s: p_c=%.4f order=%s jump=%.3f noi=%.1f", topology, spec.dependency,
             p_c, order, jump, noi)
    return CriticalPoint(topology, spec.dependency.label, p_c, order, jump, noi, ths)


@dataclass
class QcEstimate:
    """Boundary between second- and first-order regimes along a map family.

    ``lower`` is the largest parameter classified second order and ``upper``
    the smallest classified first order; ``upper`` is ``inf`` when no
    first-order point was found and ``lower`` is ``-inf`` when the whole
    range is first order.
    """

    q_c: float
    lower: float
    upper: float
    points: list = field(default_factory=list, repr=False)


def find_qc(topology: str, N: int, realizations: int, *, q_lo: float = 0.0, q_hi: float = 1.0,
            tol_q: float = TOL_Q, tol_p: float = TOL_P, seed: int = 0, kind: str = "rewired",
            integer: bool = False, **kw) -> QcEstimate:
    """Bisect the map parameter for the change of transition order.

    ``kind`` selects the family (``rewired`` bisects ``q``; ``block_local``
    bisects the block side ``r``, with ``integer=True``).
    """
    def classify(x):
        dep = MapSpec(kind, q=x) if kind == "rewired" else MapSpec(kind, r=int(x))
        cp = find_pc(topology, x, N, realizations, tol_p, seed=seed, dependency=dep, **kw)
        points.append(cp)
        return cp.order == "first"

    points: list = []
    if classify(q_lo):
        return QcEstimate(q_lo, -math.inf, q_lo, points)
    if not classify(q_hi):
        return QcEstimate(q_hi, q_hi, math.inf, points)
    lo, hi = q_lo, q_hi
    step = 1 if integer else tol_q
    while hi - lo > step:
        mid = (lo + hi) // 2 if integer else 0.5 * (lo + hi)
        if classify(mid):
            hi = mid
        else:
            lo = mid
    return QcEstimate(0.5 * (lo + hi), lo, hi, points)


def noi_vs_q(topology: str, q_grid, N: int, realizations: int, **kw) -> list:
    """NOI at the critical point for each ``q``."""
    return [(float(q), find_pc(topology, q, N, realizations, **kw).noi_at_pc) for q in q_grid]


@dataclass
class PinfTable:
    """Giant fraction of a single network after random removal of ``1 - x``."""

    x: np.ndarray
    pinf: np.ndarray
    topology: str
    N: int

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.pinf = np.asarray(self.pinf, dtype=float)
        if np.any(np.diff(self.x) <= 0):
            raise InvalidParameterError("x grid must be strictly increasing")

    def __call__(self, x):
        return np.interp(x, self.x, self.pinf)


def tabulate_pinf(topology: str, N: int, x_grid, realizations: int, seed: int = 0,
                  **graph_kw) -> PinfTable:
    """Single-network giant fraction on ``x_grid``, averaged and made monotone."""
    x_grid = np.asarray(sorted(float(x) for x in x_grid))
    if x_grid.size == 0 or x_grid[0] < 0 or x_grid[-1] > 1:
        raise InvalidParameterError("x_grid must be a non-empty subset of [0, 1]")
    spec = SystemSpec(topology, N, MapSpec("identity"), **graph_kw)
    acc = np.zeros(x_grid.size)
    for r in range(realizations):
        ss = derive_seed(seed, "pinf", topology, N, r)
        graph_seed, attack_seed = (int(s) for s in ss.generate_state(2, dtype=np.uint32))
        g = spec.graph(graph_seed)
        order = np.random.default_rng(attack_seed).permutation(N)
        for k, x in enumerate(x_grid):
            mask = g.full_mask()
            mask[order[:removal_count(x, N)]] = 0
            acc[k] += giant_fraction(g, mask)
    mean = acc / realizations
    mono = np.clip(isotonic_regression(mean).x, 0.0, 1.0)
    return PinfTable(x_grid, mono, topology, N)


FIXED_POINT_FORMS = ("sqrt", "graphical")


def solve_fixed_point(p: float, table: PinfTable, form: str = "sqrt") -> float:
    """Largest positive root of the steady-state equation, or 0 on collapse.

    ``sqrt`` solves ``x**2 = p * P(x)`` (equivalently ``x = p * P(x) / x``),
    the fixed point of the alternating-layer recursion. ``graphical`` solves
    ``x = p * P(x)``. The table is scanned from the top with linear
    interpolation between grid points.
    """
    if form not in FIXED_POINT_FORMS:
        raise InvalidParameterError(f"form must be one of {FIXED_POINT_FORMS}, got {form!r}")
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"p must lie in [0, 1], got {p}")
    x = table.x
    g = p * table.pinf - (x ** 2 if form == "sqrt" else x)
    ok = np.flatnonzero((g >= 0.0) & (x > 0.0))
    if ok.size == 0:
        return 0.0
    k = ok[-1]
    if k == x.size - 1 or g[k] == 0.0:
        return float(x[k])
    # g changes sign between x[k] and x[k + 1]
    x0, x1, g0, g1 = x[k], x[k + 1], g[k], g[k + 1]
    return float(x0 + (x1 - x0) * g0 / (g0 - g1))


def predict_pinf(p: float, table: PinfTable, form: str = "sqrt") -> float:
    """Steady-state giant fraction ``P(x*)`` at the fixed point ``x*``."""
    x = solve_fixed_point(p, table, form)
    return float(table(x)) if x > 0 else 0.0


def predict_pc(table: PinfTable, form: str = "sqrt", resolution: float = 1e-4) -> float:
    """Smallest ``p`` with a positive fixed point, by bisection."""
    lo, hi = 0.0, 1.0
    if solve_fixed_point(hi, table, form) == 0.0:
        raise NoTransitionError("no positive fixed point even at p=1")
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if solve_fixed_point(mid, table, form) > 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def effective_occupations(p: float, table: PinfTable, rounds: int) -> np.ndarray:
    """Random-map recursion ``y_0 = p``, ``y_k = p * P(y_{k-1}) / y_{k-1}``.

    ``y_k`` is the density of a random occupation of one layer equivalent,
    for its giant component, to all failures accumulated before round ``k``.
    """
    y = [float(p)]
    for _ in range(rounds):
        prev = y[-1]
        y.append(p * float(table(prev)) / prev if prev > 0 else 0.0)
    return np.array(y)


def recursion_trace(p: float, table: PinfTable, rounds: int) -> np.ndarray:
    """Predicted alive fraction of A after each cascade round for a random map.

    Round ``k`` prunes A to ``P(y_{k-1})`` and then keeps the share
    ``y_k / y_{k-1}`` of it whose partners survive, so entry ``k`` is
    ``P(y_{k-1}) * y_k / y_{k-1}``; entry 0 is ``p``.
    """
    y = effective_occupations(p, table, rounds)
    out = [float(p)]
    for k in range(1, rounds + 1):
        out.append(float(table(y[k - 1])) * y[k] / y[k - 1] if y[k - 1] > 0 else 0.0)
    return np.array(out)


@dataclass
class ContrastConfiguration:
    dependent: tuple
    pi: np.ndarray
    removed: tuple
    full_giant: int
    partial_giant: int


def find_contrast_configuration(L: int = 3, n_dependent: int = 5, n_removed: int = 5,
                                full_giant: int = 0, partial_giant: int = 4,
                                mode: str = "simultaneous") -> ContrastConfiguration | None:
    """Exhaustively search a small lattice for a map and attack on which the
    rewired model and the partially interdependent model end with the given
    giant sizes.

    In the rewired model the ``n_dependent`` chosen nodes have their partners
    permuted among themselves without fixed points and every other node
    depends on its own copy. In the partially interdependent model the same
    nodes depend on their own copies and the others are autonomous. Both
    attacks remove the chosen positions from both layers. The partial
    outcome does not depend on the permutation, so it is checked first.
    Enumeration is lexicographic and the first hit is returned.
    """
    g = generate_square_lattice(L)
    n = g.node_count
    ident = dm.identity_map(n)
    for dep in itertools.combinations(range(n), n_dependent):
        perms = [p for p in itertools.permutations(dep) if all(a != b for a, b in zip(dep, p))]
        for removed in itertools.combinations(range(n), n_removed):
            spec = AttackSpec(explicit_set=removed)
            part = run_cascade_partial(SystemState.coupled(g, ident), None, spec,
                                       dependent=dep, mode=mode, target_b="same")
            if round(part.p_infinity * n) != partial_giant:
                continue
            for perm in perms:
                pi = np.arange(n)
                pi[list(dep)] = perm
                dmap = dm.DependencyMap(pi, "rewired")
                full = run_cascade(attack(SystemState.coupled(g, dmap), spec, target_b="same"), mode)
                if round(full.p_infinity * n) == full_giant:
                    return ContrastConfiguration(dep, pi, removed, full_giant, partial_giant)
    return None


def _header(fh, meta: dict):
    for k, v in meta.items():
        fh.write(f"# {k}={v}\n")


@contextlib.contextmanager
def _target(dest):
    # accept an open text stream or a path
    if hasattr(dest, "write"):
        yield dest
    else:
        with Path(dest).open("w", newline="") as fh:
            yield fh


def write_curves(curves, dest, meta: dict | None = None):
    """CSV of ``q,p,mean_pinf,std_pinf,mean_noi,realizations,N`` after ``# key=value`` lines."""
    with _target(dest) as fh:
        _header(fh, meta or {})
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["q", "p", "mean_pinf", "std_pinf", "mean_noi", "realizations", "N"])
        for c in curves:
            for p, mean, std, noi in c.samples:
                w.writerow([f"{c.q:g}", f"{p:.6g}", f"{mean:.6f}", f"{std:.6f}", f"{noi:.4f}",
                            c.realizations, c.N])
    return dest


def write_critical(points, dest, meta: dict | None = None):
    """CSV of ``topology,q,p_c,order,jump,noi_at_pc`` after ``# key=value`` lines."""
    with _target(dest) as fh:
        _header(fh, meta or {})
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["topology", "q", "p_c", "order", "jump", "noi_at_pc"])
        for cp in points:
            w.writerow([cp.topology, f"{cp.q:g}", f"{cp.p_c:.6f}", cp.order,
                        f"{cp.jump_size:.6f}", f"{cp.noi_at_pc:.4f}"])
    return dest
