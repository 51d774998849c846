"""Compiled inner loops (numba) with pure-python fallbacks.

Only three things are hot enough to need this: random-walk trajectories,
batched Dyck-path areas, and batched tilted-tree proposals.  Each kernel is
mirrored by a `_py` reference used in tests and as a fallback when numba is
unavailable.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    NUMBA_OK = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_OK = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def _walk_visited_nb(indptr, nbrs, start, steps, rand_bits):
    n = indptr.size - 1
    visited = np.zeros(n, dtype=np.bool_)
    x = start
    visited[x] = True
    for t in range(steps):
        deg = indptr[x + 1] - indptr[x]
        x = nbrs[indptr[x] + rand_bits[t] % deg]
        visited[x] = True
    return visited


def _walk_visited_py(indptr, nbrs, start, steps, rand_bits):
    n = indptr.size - 1
    visited = np.zeros(n, dtype=np.bool_)
    x = int(start)
    visited[x] = True
    for t in range(steps):
        deg = indptr[x + 1] - indptr[x]
        x = int(nbrs[indptr[x] + rand_bits[t] % deg])
        visited[x] = True
    return visited


def walk_visited(indptr, nbrs, start, steps, rng):
    """Visited set of a `steps`-step half-edge-uniform walk from `start`.

    Picks a uniform incident half-edge each step; loops appear twice in the
    neighbor table so a loop is a stay-put step with the right weight.  The
    64-bit draws make the modulo slot choice exact for any degree below 2^40
    to within negligible (<1e-12) bias.
    """
    rand_bits = rng.integers(0, np.iinfo(np.int64).max, size=steps,
                             dtype=np.int64)
    fn = _walk_visited_nb if NUMBA_OK else _walk_visited_py
    return fn(indptr, nbrs, np.int64(start), np.int64(steps), rand_bits)


@njit(inline="always")
def _xs_next(state):
    # xorshift64*: fast in-loop generator for shuffle indices
    state ^= state >> np.uint64(12)
    state ^= (state << np.uint64(25)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    state ^= state >> np.uint64(27)
    return state, (state * np.uint64(2685821657736338717)) & np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(inline="always")
def _xs_seed(seed):
    s = (np.uint64(seed) * np.uint64(0x9E3779B97F4A7C15) + np.uint64(1)) & np.uint64(
        0xFFFFFFFFFFFFFFFF)
    return s | np.uint64(1)


@njit(cache=True)
def _dyck_areas_nb(half_n, samples, seed):
    state = _xs_seed(seed)
    out = np.empty(samples)
    two_n = 2 * half_n
    steps = np.empty(two_n, dtype=np.int64)
    denom = (2.0 * half_n) ** 1.5
    for s in range(samples):
        for i in range(half_n):
            steps[i] = 1
        for i in range(half_n, two_n):
            steps[i] = -1
        for i in range(two_n - 1, 0, -1):
            state, r = _xs_next(state)
            j = r % np.uint64(i + 1)
            tmp = steps[i]
            steps[i] = steps[j]
            steps[j] = tmp
        acc = 0
        total = 0
        mn = 0
        for i in range(two_n):
            acc += steps[i]
            total += acc
            if acc < mn:
                mn = acc
        out[s] = (total - two_n * mn) / denom
    return out


def _dyck_areas_py(half_n, samples, seed):
    rng = np.random.default_rng(seed)
    out = np.empty(samples)
    two_n = 2 * half_n
    base = np.concatenate([np.ones(half_n, dtype=np.int64),
                           -np.ones(half_n, dtype=np.int64)])
    denom = (2.0 * half_n) ** 1.5
    for s in range(samples):
        walk = np.cumsum(base[rng.permutation(two_n)])
        out[s] = (walk.sum() - two_n * min(0, walk.min())) / denom
    return out


def dyck_areas(half_n, samples, seed):
    """Areas of `samples` excursions built from +-1 bridges of length 2*half_n.

    Uses the rotation identity: the rotated-at-first-minimum path has sum
    sum(S) - 2N*min(S), so the area integral needs no explicit rotation.
    Values approximate the Brownian excursion area on the 1/sqrt(2N) scale.
    """
    fn = _dyck_areas_nb if NUMBA_OK else _dyck_areas_py
    return fn(int(half_n), int(samples), int(seed) & 0x7FFFFFFF)


@njit(cache=True)
def _tilt_proposals_nb(counts, batch, seed):
    state = _xs_seed(seed)
    m = counts.size
    parents = np.empty((batch, m), dtype=np.int64)
    totals = np.empty(batch, dtype=np.int64)
    work = counts.copy()
    walk = np.empty(m, dtype=np.int64)
    stack = np.empty(m, dtype=np.int64)
    remaining = np.empty(m, dtype=np.int64)
    suffix_leaf = np.empty(m, dtype=np.int64)
    acc = np.empty(m, dtype=np.int64)
    leaf_kids = np.empty(m, dtype=np.int64)
    g = np.empty(m, dtype=np.int64)
    for b in range(batch):
        # uniform shuffle of the children multiset
        for i in range(m - 1, 0, -1):
            state, r = _xs_next(state)
            j = r % np.uint64(i + 1)
            tmp = work[i]
            work[i] = work[j]
            work[j] = tmp
        # rotate to start right after the first minimum of the walk
        s = 0
        mn = np.int64(1 << 60)
        arg = -1
        for i in range(m):
            s += work[i] - 1
            walk[i] = s
            if s < mn:
                mn = s
                arg = i
        shift = arg + 1
        par = parents[b]
        # decode the rotated word: vertex v reads work[(shift+v) % m]
        top = 0
        stack[0] = 0
        remaining[0] = work[shift % m]
        par[0] = -1
        for v in range(1, m):
            while remaining[top] == 0:
                top -= 1
            p = stack[top]
            remaining[top] -= 1
            par[v] = p
            top += 1
            stack[top] = v
            remaining[top] = work[(shift + v) % m]
        # leaf children per vertex, then the suffix over later siblings'
        # leaf-child counts, then the running ancestor sum
        for v in range(m):
            acc[v] = 0
            leaf_kids[v] = 0
        for v in range(1, m):
            if work[(shift + v) % m] == 0:
                leaf_kids[par[v]] += 1
        for v in range(m - 1, 0, -1):
            p = par[v]
            suffix_leaf[v] = acc[p]
            acc[p] += leaf_kids[v]
        g[0] = 0
        total = 0
        for v in range(1, m):
            g[v] = g[par[v]] + suffix_leaf[v]
            if work[(shift + v) % m] == 0:
                total += g[par[v]]
        totals[b] = total
    return parents, totals


def _tilt_proposals_py(counts, batch, seed):
    rng = np.random.default_rng(seed)
    m = counts.size
    parents = np.empty((batch, m), dtype=np.int64)
    totals = np.empty(batch, dtype=np.int64)
    for b in range(batch):
        shuffled = counts[rng.permutation(m)]
        walk = np.cumsum(shuffled - 1)
        rot = np.roll(shuffled, -(int(np.argmin(walk)) + 1))
        par = np.full(m, -1, dtype=np.int64)
        stack = [(0, int(rot[0]))]
        for v in range(1, m):
            while stack[-1][1] == 0:
                stack.pop()
            p, rem = stack[-1]
            stack[-1] = (p, rem - 1)
            par[v] = p
            stack.append((v, int(rot[v])))
        leaf_kids = np.zeros(m, dtype=np.int64)
        for v in range(1, m):
            if rot[v] == 0:
                leaf_kids[par[v]] += 1
        acc = np.zeros(m, dtype=np.int64)
        suffix = np.zeros(m, dtype=np.int64)
        for v in range(m - 1, 0, -1):
            suffix[v] = acc[par[v]]
            acc[par[v]] += leaf_kids[v]
        g = np.zeros(m, dtype=np.int64)
        total = 0
        for v in range(1, m):
            g[v] = g[par[v]] + suffix[v]
            if rot[v] == 0:
                total += g[par[v]]
        parents[b] = par
        totals[b] = total
    return parents, totals


def tilt_proposals(counts, batch, seed):
    """Batch of uniform trees with their admissible-pair totals.

    Returns (parents, totals): per proposal the parent array of a uniform
    plane tree with the given children multiset and the number of admissible
    ordered leaf pairs in it.  The children count of vertex v is recoverable
    as the number of v entries in its parent row.
    """
    counts = np.ascontiguousarray(counts, dtype=np.int64)
    fn = _tilt_proposals_nb if NUMBA_OK else _tilt_proposals_py
    return fn(counts, int(batch), int(seed) & 0x7FFFFFFF)
