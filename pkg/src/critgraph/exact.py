"""Exhaustive enumeration oracles and the exact counting identities.

Everything here is exact integer / rational arithmetic on small inputs.  The
samplers elsewhere are validated against these counts, and the counting
identity ties the connected-graph count to the tilted-tree count.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .degrees import ChildSequence, ecd_from_degrees
from .plane_tree import PlaneTree, count_trees, decode_counts
from .surgery import admissible_pairs, _valid_pair_set

__all__ = [
    "all_plane_trees",
    "count_pair_sets",
    "enumerate_tilted",
    "connected_graphs",
    "enumerate_connected",
    "verify_counting_identity",
    "IdentityReport",
    "WrightRatio",
    "wright_ratio",
]

_TREE_BUDGET = 14
_GRAPH_BUDGET = 10


def all_plane_trees(ecd):
    """Yield every plane tree with the given children census, each once.

    Trees are generated as the distinct valid depth-first children words:
    prefix sums of (count - 1) stay nonnegative until the final -1.
    """
    cs = ecd if isinstance(ecd, ChildSequence) else ChildSequence(np.asarray(ecd))
    if not cs.is_tree_tenable:
        raise ValueError("not a tree-tenable children sequence")
    if cs.m > _TREE_BUDGET:
        raise ValueError(f"plane-tree enumeration capped at m={_TREE_BUDGET}")
    s = cs.ecd
    values = np.flatnonzero(s)
    remaining = {int(v): int(s[v]) for v in values}
    m = cs.m
    word = np.empty(m, dtype=np.int64)

    def rec(pos, height):
        # height = 1 + walk value; must stay positive before the last step
        if pos == m:
            yield word.copy()
            return
        for v in sorted(remaining):
            if remaining[v] == 0:
                continue
            nh = height + v - 1
            # the walk must stay nonnegative before its final step to -1
            if nh <= 0 and pos != m - 1:
                continue
            if pos == m - 1 and nh != 0:
                continue
            remaining[v] -= 1
            word[pos] = v
            yield from rec(pos + 1, nh)
            remaining[v] += 1

    for w in rec(0, 1):
        yield decode_counts(w)


def count_pair_sets(t: PlaneTree, k: int) -> int:
    """Number of valid k-sets of admissible pairs in one tree.

    Valid means 2k distinct leaves and pairwise-distinct parent slots, the
    sets a strict ranking and a simple surgery output exist for.
    """
    if k == 0:
        return 1
    pairs, _ = admissible_pairs(t)
    if len(pairs) < k:
        return 0
    total = 0
    for combo in itertools.combinations(pairs, k):
        if _valid_pair_set(t, combo):
            total += 1
    return total


def enumerate_tilted(ecd, k: int) -> int:
    """Total count of (tree, k disjoint admissible pairs) for the census."""
    if k == 0:
        return count_trees(ecd)
    return sum(count_pair_sets(t, k) for t in all_plane_trees(ecd))


def connected_graphs(degrees):
    """All labeled connected simple graphs with the given degrees.

    Backtracking over the neighbor sets of the lowest-index vertex with
    residual degree, with a union-find prune: a component that closes while
    vertices remain outside it kills the branch.  Yields sorted edge tuples.
    """
    d = np.asarray(degrees, dtype=np.int64)
    n = d.size
    if n > _GRAPH_BUDGET:
        raise ValueError(f"connected enumeration capped at n={_GRAPH_BUDGET}")
    if d.sum() % 2 or (d < 0).any():
        return
    if n == 1:
        if d[0] == 0:
            yield ()
        return

    res = d.copy()
    edges: list[tuple[int, int]] = []
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def rec(v):
        while v < n and res[v] == 0:
            v += 1
        if v == n:
            roots = {find(i) for i in range(n)}
            if len(roots) == 1:
                yield tuple(sorted(edges))
            return
        cands = [w for w in range(v + 1, n) if res[w] > 0]
        need = int(res[v])
        if len(cands) < need:
            return
        for combo in itertools.combinations(cands, need):
            res[v] = 0
            for w in combo:
                res[w] -= 1
                edges.append((v, w))
            saved = parent.copy()
            for w in combo:
                ra, rb = find(v), find(w)
                if ra != rb:
                    parent[ra] = rb
            # prune: if v's component is closed but incomplete, give up
            comp_root = find(v)
            open_left = any(res[i] > 0 for i in range(n))
            comp = [i for i in range(n) if find(i) == comp_root]
            closed = all(res[i] == 0 for i in comp)
            if not (closed and open_left and len(comp) < n):
                yield from rec(v + 1)
            parent[:] = saved
            for w in combo:
                res[w] += 1
                edges.pop()
            res[v] = need

    yield from rec(0)


def enumerate_connected(degrees) -> int:
    """Exact count of labeled connected simple graphs with these degrees."""
    return sum(1 for _ in connected_graphs(degrees))


@dataclass
class IdentityReport:
    degrees: tuple
    k: int
    count_connected: int
    count_trees: int
    count_tilted: int
    lhs: int
    rhs: int

    @property
    def holds(self) -> bool:
        return self.lhs == self.rhs


def verify_counting_identity(degrees, k: int) -> IdentityReport:
    """Exact check of the connected-count / tilted-tree-count identity.

    count_connected * prod (d_j - 1)!  ==  count_tilted * (s0 - 2k)! *
    prod_{i>=1} s_i!, with s the children census derived from the degrees.
    """
    d = np.asarray(degrees, dtype=np.int64)
    cs, _ = ecd_from_degrees(d, k)
    s = cs.ecd
    n_con = enumerate_connected(d)
    n_tilt = enumerate_tilted(cs, k)
    lhs = n_con * math.prod(math.factorial(int(x) - 1) for x in d)
    rhs = n_tilt * math.factorial(int(s[0]) - 2 * k)
    for i in range(1, s.size):
        rhs *= math.factorial(int(s[i]))
    return IdentityReport(tuple(int(x) for x in d), k, n_con,
                          count_trees(cs), n_tilt, lhs, rhs)


@dataclass
class WrightRatio:
    """count_connected * prod (d-1)! * m**(k/2) / (m + 2k - 2)!.

    The square-root factor is kept symbolic: value = rational * m**(k/2).
    The k = 0 case is exactly 1 for every tree-realizable degree sequence
    (the labeled-tree multinomial count).
    """

    degrees: tuple
    k: int
    count_connected: int
    rational: Fraction

    @property
    def m(self) -> int:
        return len(self.degrees)

    @property
    def value(self) -> float:
        return float(self.rational) * self.m ** (self.k / 2.0)


def wright_ratio(degrees, k: int) -> WrightRatio:
    d = np.asarray(degrees, dtype=np.int64)
    mt = d.size
    if d.sum() != 2 * (mt - 1) + 2 * k:
        raise ValueError("degree sum must equal 2*(m-1) + 2k")
    n_con = enumerate_connected(d)
    num = n_con * math.prod(math.factorial(int(x) - 1) for x in d)
    rat = Fraction(num, math.factorial(mt + 2 * k - 2))
    return WrightRatio(tuple(int(x) for x in d), int(k), n_con, rat)
