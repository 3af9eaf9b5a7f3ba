"""Numba kernels for masked component labelling and the mutual cascade.

Graphs are passed as CSR pairs ``(indptr, indices)``; alive masks are
``uint8`` arrays that the cascade kernel mutates in place.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def giant_mask(indptr, indices, alive, out):
    """Write the largest alive component into ``out`` and return its size.

    Components are discovered in increasing order of their smallest node
    index, and only a strictly larger component replaces the incumbent, so
    ties go to the component with the lowest minimum index.
    """
    n = alive.shape[0]
    comp = np.full(n, -1, dtype=np.int32)
    queue = np.empty(n, dtype=np.int32)
    best_label = -1
    best_size = 0
    label = 0
    for s in range(n):
        if alive[s] == 0 or comp[s] >= 0:
            continue
        comp[s] = label
        head = 0
        tail = 1
        queue[0] = s
        while head < tail:
            u = queue[head]
            head += 1
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if alive[v] != 0 and comp[v] < 0:
                    comp[v] = label
                    queue[tail] = v
                    tail += 1
        if tail > best_size:
            best_size = tail
            best_label = label
        label += 1
    for i in range(n):
        out[i] = 1 if (best_label >= 0 and comp[i] == best_label) else 0
    return best_size


@njit(cache=True)
def component_labels(indptr, indices, alive):
    """Label alive components 0, 1, ... in order of their smallest node; dead nodes get -1."""
    n = alive.shape[0]
    comp = np.full(n, -1, dtype=np.int32)
    queue = np.empty(n, dtype=np.int32)
    label = 0
    for s in range(n):
        if alive[s] == 0 or comp[s] >= 0:
            continue
        comp[s] = label
        head = 0
        tail = 1
        queue[0] = s
        while head < tail:
            u = queue[head]
            head += 1
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if alive[v] != 0 and comp[v] < 0:
                    comp[v] = label
                    queue[tail] = v
                    tail += 1
        label += 1
    return comp


@njit(cache=True)
def mutual_cascade(indptr_a, indices_a, indptr_b, indices_b, pi, pinv,
                   dep_a, dep_b, alive_a, alive_b, max_rounds, simultaneous):
    """Alternate giant-component pruning and dependency failures until stable.

    A node of A that dies kills ``pi[i]`` in B when ``dep_a[i]`` is set, and
    a node of B that dies kills ``pinv[j]`` in A when ``dep_b[j]`` is set.

    With ``simultaneous`` both layers are pruned to their giant components
    first and only then do failures cross over; the loop stops after the
    first round in which no node loses its partner. Otherwise A is pruned
    (killing partners in B) before B is pruned (killing partners in A), and
    the loop stops after the first round whose B-side pruning kills no node
    of A.

    Returns ``(rounds, trace_a, trace_b)`` where the traces hold alive counts,
    entry 0 being the state on entry.
    """
    n = alive_a.shape[0]
    trace_a = np.empty(max_rounds + 1, dtype=np.int64)
    trace_b = np.empty(max_rounds + 1, dtype=np.int64)
    giant_a = np.empty(n, dtype=np.uint8)
    giant_b = np.empty(n, dtype=np.uint8)
    count_a = 0
    count_b = 0
    for i in range(n):
        count_a += alive_a[i]
        count_b += alive_b[i]
    trace_a[0] = count_a
    trace_b[0] = count_b
    rounds = 0
    while rounds < max_rounds:
        rounds += 1
        crossed = 0
        if simultaneous:
            giant_mask(indptr_a, indices_a, alive_a, giant_a)
            giant_mask(indptr_b, indices_b, alive_b, giant_b)
            for i in range(n):
                if alive_a[i] != 0 and giant_a[i] == 0:
                    alive_a[i] = 0
                    count_a -= 1
            for j in range(n):
                if alive_b[j] != 0 and giant_b[j] == 0:
                    alive_b[j] = 0
                    count_b -= 1
            # failures cross over using the pruned sets of both layers
            for i in range(n):
                if alive_a[i] != 0 and dep_a[i] and giant_b[pi[i]] == 0:
                    alive_a[i] = 0
                    count_a -= 1
                    crossed += 1
            for j in range(n):
                if alive_b[j] != 0 and dep_b[j] and giant_a[pinv[j]] == 0:
                    alive_b[j] = 0
                    count_b -= 1
                    crossed += 1
        else:
            giant_mask(indptr_a, indices_a, alive_a, giant_a)
            for i in range(n):
                if alive_a[i] != 0 and giant_a[i] == 0:
                    alive_a[i] = 0
                    count_a -= 1
                    if dep_a[i]:
                        j = pi[i]
                        if alive_b[j] != 0:
                            alive_b[j] = 0
                            count_b -= 1
            giant_mask(indptr_b, indices_b, alive_b, giant_b)
            for j in range(n):
                if alive_b[j] != 0 and giant_b[j] == 0:
                    alive_b[j] = 0
                    count_b -= 1
                    if dep_b[j]:
                        i = pinv[j]
                        if alive_a[i] != 0:
                            alive_a[i] = 0
                            count_a -= 1
                            crossed += 1
        trace_a[rounds] = count_a
        trace_b[rounds] = count_b
        if crossed == 0:
            break
    return rounds, trace_a[:rounds + 1].copy(), trace_b[:rounds + 1].copy()


# neighbour slot order used by the lattice generator: +x, -x, +y, -y
_LATTICE_DX = np.array([1, -1, 0, 0], dtype=np.int64)
_LATTICE_DY = np.array([0, 0, 1, -1], dtype=np.int64)


@njit(cache=True)
def lattice_wraps(indptr, indices, alive, side):
    """Return ``(wraps_x, wraps_y)`` for the alive set of a periodic lattice.

    Every alive component is walked with unwrapped coordinates; reaching a
    visited node at a different unwrapped position means the component
    winds around the torus along that axis.
    """
    n = alive.shape[0]
    seen = np.zeros(n, dtype=np.uint8)
    ux = np.zeros(n, dtype=np.int64)
    uy = np.zeros(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int32)
    wx = False
    wy = False
    for s in range(n):
        if alive[s] == 0 or seen[s] != 0:
            continue
        seen[s] = 1
        ux[s] = s % side
        uy[s] = s // side
        head = 0
        tail = 1
        queue[0] = s
        while head < tail:
            u = queue[head]
            head += 1
            base = indptr[u]
            for k in range(base, indptr[u + 1]):
                v = indices[k]
                if alive[v] == 0:
                    continue
                ex = ux[u] + _LATTICE_DX[k - base]
                ey = uy[u] + _LATTICE_DY[k - base]
                if seen[v] == 0:
                    seen[v] = 1
                    ux[v] = ex
                    uy[v] = ey
                    queue[tail] = v
                    tail += 1
                else:
                    if ux[v] != ex:
                        wx = True
                    if uy[v] != ey:
                        wy = True
        if wx and wy:
            break
    return wx, wy


@njit(cache=True)
def apen_counts(u, m, tol):
    """Return ``(phi_m, phi_m1)`` for approximate entropy with self-matches.

    Window starts are sorted by their first coordinate so each window only
    scans partners whose first value lies within ``tol``.
    """
    n = u.shape[0]
    nm = n - m + 1
    nm1 = n - m
    first = u[:nm].copy()
    order = np.argsort(first, kind="mergesort")
    sorted_first = first[order]
    count_m = np.zeros(nm, dtype=np.int64)
    count_m1 = np.zeros(nm, dtype=np.int64)
    for a in range(nm):
        i = order[a]
        # widened candidate range; the exact strict test is applied below
        slack = 1e-9 * (abs(u[i]) + tol)
        lo = np.searchsorted(sorted_first, u[i] - tol - slack, side="left")
        hi = np.searchsorted(sorted_first, u[i] + tol + slack, side="right")
        cm = 0
        cm1 = 0
        for b in range(lo, hi):
            j = order[b]
            ok = True
            for k in range(m):
                if abs(u[i + k] - u[j + k]) >= tol:
                    ok = False
                    break
            if ok:
                cm += 1
                if i < nm1 and j < nm1 and abs(u[i + m] - u[j + m]) < tol:
                    cm1 += 1
        count_m[i] = cm
        count_m1[i] = cm1
    phi_m = 0.0
    for i in range(nm):
        phi_m += np.log(count_m[i] / nm)
    phi_m /= nm
    phi_m1 = 0.0
    for i in range(nm1):
        phi_m1 += np.log(count_m1[i] / nm1)
    phi_m1 /= nm1
    return phi_m, phi_m1
