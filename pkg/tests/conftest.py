"""Independent reference implementations used as test oracles."""

from collections import deque

import numpy as np
import pytest
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


def flood_fill_giant(adj, alive):
    """Largest alive component by plain BFS over adjacency lists.

    Ties go to the component whose smallest node index is lowest.
    """
    n = len(adj)
    seen = [False] * n
    best = []
    for s in range(n):
        if not alive[s] or seen[s]:
            continue
        comp, queue = [s], deque([s])
        seen[s] = True
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if alive[v] and not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    queue.append(v)
        if len(comp) > len(best):
            best = comp
    return sorted(best)


def torus_giant_fraction(L, alive):
    """Giant-component fraction of the periodic L x L lattice via scipy.

    The adjacency is rebuilt here from array shifts, independently of the
    package's lattice generator.
    """
    grid = np.arange(L * L).reshape(L, L)  # grid[y, x] = x + L*y
    rows = np.concatenate([grid.ravel(), grid.ravel()])
    cols = np.concatenate([np.roll(grid, -1, axis=1).ravel(), np.roll(grid, -1, axis=0).ravel()])
    keep = alive[rows].astype(bool) & alive[cols].astype(bool)
    a = coo_matrix((np.ones(keep.sum()), (rows[keep], cols[keep])), shape=(L * L, L * L))
    _, labels = connected_components(a, directed=False)
    labels = labels[alive.astype(bool)]
    if labels.size == 0:
        return 0.0
    return np.bincount(labels).max() / (L * L)


def adjacency_lists(g):
    return [list(map(int, g.neighbors(u))) for u in range(g.node_count)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
