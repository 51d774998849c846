"""Admissible leaf pairs, tilted tree sampling, and the two surgery maps.

An ordered leaf pair (u, v) is admissible when v's grandparent lies strictly
on the root path below u's parent and u's parent precedes v's parent in
depth-first order.  Adding the edge parent(u)-parent(v) and deleting u, v
creates one surplus edge; k disjoint pairs create k of them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels
from ._rng import ensure_rng, randbelow
from .degrees import ChildSequence
from .mmspace import FiniteMMSpace
from .plane_tree import PlaneTree, sample_tree

__all__ = [
    "AdmissiblePair",
    "TiltedTreePair",
    "SurgeryError",
    "admissible_pairs",
    "admissible_f",
    "admissible_pairs_slow",
    "leaf_gluing_measure",
    "sample_tilted",
    "identify_I",
    "identify_Q",
]


class SurgeryError(RuntimeError):
    pass


class AdmissiblePair(NamedTuple):
    u: int
    v: int


def admissible_f(t: PlaneTree) -> np.ndarray:
    """Per-vertex count of admissible partners: f[u] = #{v : (u,v) admissible}.

    Nonzero only at leaves.  Computed in O(m): a partner of u is a leaf
    grandchild of a strict ancestor w of u's parent, through a child of w
    later in plane order than the one leading to u.  So accumulate, down
    the tree, the number of leaf children carried by later siblings; the
    running sum evaluated at u's parent is f[u].
    """
    m = t.m
    par = t.parent
    counts = t.counts
    leaf_kids = np.zeros(m, dtype=np.int64)
    for v in range(1, m):
        if counts[v] == 0:
            leaf_kids[par[v]] += 1
    acc = np.zeros(m, dtype=np.int64)
    suffix = np.zeros(m, dtype=np.int64)
    for v in range(m - 1, 0, -1):
        p = par[v]
        suffix[v] = acc[p]
        acc[p] += leaf_kids[v]
    g = np.zeros(m, dtype=np.int64)
    f = np.zeros(m, dtype=np.int64)
    for v in range(1, m):
        g[v] = g[par[v]] + suffix[v]
        if counts[v] == 0:
            f[v] = g[par[v]]
    return f


def admissible_pairs(t: PlaneTree):
    """All admissible pairs sorted by (parent(u), parent(v), u, v), plus f.

    The primary order is the one used to rank a pair set before labeling:
    by u's parent, then v's parent, both in depth-first order; the leaf ids
    only break the remaining ties deterministically.
    """
    pairs: list[AdmissiblePair] = []
    kids = t.children
    counts = t.counts
    for u in t.leaves:
        path = t.path_to_root(int(u))  # u, parent, ..., root
        # w runs over strict ancestors of u's parent; child_on_path is the
        # next vertex down toward u
        for i in range(2, path.size):
            w = int(path[i])
            child_on_path = int(path[i - 1])
            for b in kids[w]:
                if b <= child_on_path:
                    continue
                for v in kids[int(b)]:
                    if counts[v] == 0:
                        pairs.append(AdmissiblePair(int(u), int(v)))
    pairs.sort(key=lambda p: (t.parent[p.u], t.parent[p.v], p.u, p.v))
    return pairs, admissible_f(t)


def admissible_pairs_slow(t: PlaneTree) -> list[AdmissiblePair]:
    """Definition-chasing quadratic enumeration; validation oracle for tests."""
    out = []
    leaves = t.leaves
    for u in leaves:
        pu = int(t.parent[u])
        if pu < 0:
            continue
        # root path below u's parent: its strict ancestors, root included
        strict_anc = set(int(x) for x in t.path_to_root(pu)[1:])
        for v in leaves:
            pv = int(t.parent[v])
            if pv < 0 or not pu < pv:
                continue
            gv = int(t.parent[pv])
            if gv >= 0 and gv in strict_anc:
                out.append(AdmissiblePair(int(u), int(v)))
    out.sort(key=lambda p: (t.parent[p.u], t.parent[p.v], p.u, p.v))
    return out


def leaf_gluing_measure(t: PlaneTree, u: int):
    """Gluing measure of leaf u: heights of admissible grandparents, weighted.

    Mass at height h is the fraction of u's admissible partners whose
    grandparent is the root-path vertex at height h.  Empty when u has no
    admissible partner.
    """
    kids = t.children
    counts = t.counts
    path = t.path_to_root(int(u))
    heights, masses = [], []
    for i in range(2, path.size):
        w = int(path[i])
        child_on_path = int(path[i - 1])
        c = 0
        for b in kids[w]:
            if b > child_on_path and kids[int(b)].size:
                c += int((counts[kids[int(b)]] == 0).sum())
        if c > 0:
            heights.append(float(t.height[w]))
            masses.append(float(c))
    if not heights:
        return np.zeros(0), np.zeros(0)
    h = np.array(heights)
    m = np.array(masses)
    return h, m / m.sum()


def _pair_by_index(t: PlaneTree, f: np.ndarray, r: int) -> AdmissiblePair:
    """The r-th admissible pair in (leaf id, then root-down partner) order."""
    leaves = t.leaves
    fl = f[leaves]
    cum = np.cumsum(fl)
    li = int(np.searchsorted(cum, r, side="right"))
    u = int(leaves[li])
    j = r - (int(cum[li - 1]) if li > 0 else 0)
    kids = t.children
    counts = t.counts
    path = t.path_to_root(u)
    for i in range(2, path.size):
        w = int(path[i])
        child_on_path = int(path[i - 1])
        for b in kids[w]:
            if b <= child_on_path:
                continue
            for v in kids[int(b)]:
                if counts[v] == 0:
                    if j == 0:
                        return AdmissiblePair(u, int(v))
                    j -= 1
    raise AssertionError("pair index out of range")


def _pair_sort_key(t: PlaneTree):
    return lambda p: (int(t.parent[p.u]), int(t.parent[p.v]), p.u, p.v)


def _valid_pair_set(t: PlaneTree, pairs) -> bool:
    """2k distinct leaves and pairwise-distinct (parent(u), parent(v)) slots.

    Distinct parent slots keep the k new edges distinct, which is what makes
    the surgery output simple and the set strictly rankable.
    """
    leaves = [x for p in pairs for x in p]
    if len(set(leaves)) != len(leaves):
        return False
    slots = {(int(t.parent[p.u]), int(t.parent[p.v])) for p in pairs}
    return len(slots) == len(pairs)


@dataclass
class TiltedTreePair:
    tree: PlaneTree
    pairs: list[AdmissiblePair]
    method: str
    attempts: int
    exact: bool
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "tree": self.tree.to_json(),
            "pairs": [[p.u + 1, p.v + 1] for p in self.pairs],
            "method": self.method,
            "acceptance_stats": {"attempts": self.attempts,
                                 "exact": self.exact, **self.metadata},
        }


def sample_tilted(ecd, k: int, rng, method: str = "rejection",
                  max_attempts: int = 2_000_000, pool_size: int = 10_000,
                  batch: int | None = None) -> TiltedTreePair:
    """Tree plus k disjoint admissible pairs, uniform over all such pairs.

    rejection: propose a uniform tree together with k independent virtual
    pair indices below s0*m each; accepting exactly when all indices land in
    the pair list and form a valid disjoint set makes every (tree, pair-set)
    equally likely.  Acceptance decays like m**(-k/2), so this is for exact
    work at moderate size; ``pool`` reweights a fixed pool of trees by the
    k-th power of their pair count and is flagged approximate.
    """
    rng = ensure_rng(rng)
    cs = ecd if isinstance(ecd, ChildSequence) else ChildSequence(np.asarray(ecd))
    if not cs.is_tree_tenable:
        raise ValueError("children sequence is not tree-tenable")
    k = int(k)
    s0 = int(cs.ecd[0])
    m = cs.m
    if 2 * k > s0:
        raise ValueError(f"need s0 >= 2k distinct leaves: s0={s0}, k={k}")
    if k == 0:
        return TiltedTreePair(sample_tree(cs, rng), [], method, 1, True)

    if method == "rejection":
        bound = s0 * m
        small_bound = bound <= 1 << 62
        attempts = 0
        # proposal batches grow as rejections accumulate, so cheap draws do
        # not overpay and hard ones amortize the per-call overhead
        grow = batch if batch is not None else 32
        while attempts < max_attempts:
            seed = int(rng.integers(0, 2**31 - 1))
            nb = min(grow, max_attempts - attempts)
            if batch is None:
                grow = min(2 * grow, 4096)
            parents, totals = _kernels.tilt_proposals(cs.counts, nb, seed)
            if small_bound:
                idx_all = rng.integers(0, bound, size=(nb, k))
                hit = (idx_all < totals[:, None]).all(axis=1)
            else:
                idx_all = np.array(
                    [[randbelow(rng, bound) for _ in range(k)] for _ in range(nb)],
                    dtype=object)
                hit = np.array([(row < totals[b]).all()
                                for b, row in enumerate(idx_all)])
            for b in range(nb):
                attempts += 1
                if not hit[b]:
                    continue
                tree = _tree_from_parent(parents[b])
                f = admissible_f(tree)
                pairs = [_pair_by_index(tree, f, int(r)) for r in idx_all[b]]
                if len({tuple(p) for p in pairs}) != k:
                    continue
                if not _valid_pair_set(tree, pairs):
                    continue
                pairs.sort(key=_pair_sort_key(tree))
                return TiltedTreePair(tree, pairs, "rejection", attempts, True,
                                      {"acceptance_rate": 1.0 / attempts})
        raise SurgeryError(
            f"no tilted sample accepted in {max_attempts} attempts "
            f"(the tilt may be zero for this children sequence at k={k})"
        )

    if method == "pool":
        seed = int(rng.integers(0, 2**31 - 1))
        parents, totals = _kernels.tilt_proposals(cs.counts, pool_size, seed)
        weights = totals.astype(np.float64) ** k
        wsum = weights.sum()
        if wsum <= 0:
            raise SurgeryError("all pool trees have zero admissible pairs")
        ess = wsum**2 / (weights**2).sum()
        probs = weights / wsum
        b = int(rng.choice(pool_size, p=probs))
        tree = _tree_from_parent(parents[b])
        f = admissible_f(tree)
        total = int(totals[b])
        for _ in range(10_000):
            pairs = [_pair_by_index(tree, f, randbelow(rng, total))
                     for _ in range(k)]
            if len({tuple(p) for p in pairs}) == k and _valid_pair_set(tree, pairs):
                pairs.sort(key=_pair_sort_key(tree))
                return TiltedTreePair(
                    tree, pairs, "pool", pool_size, False,
                    {"effective_sample_size": float(ess), "approximate": True})
        raise SurgeryError("could not draw a disjoint pair set from the pool tree")

    raise ValueError(f"unknown method {method!r}")


def _tree_from_parent(parent: np.ndarray) -> PlaneTree:
    """Rebuild a PlaneTree from a parent array in depth-first vertex order."""
    m = parent.size
    if m > 1:
        counts = np.bincount(parent[1:], minlength=m)
    else:
        counts = np.zeros(1, dtype=np.int64)
    height = np.zeros(m, dtype=np.int64)
    for v in range(1, m):
        height[v] = height[parent[v]] + 1
    return PlaneTree(counts.astype(np.int64), parent.astype(np.int64), height)


def identify_I(t: PlaneTree, pairs, labels=None, n_out: int | None = None):
    """Surgery to a labeled simple connected graph on m - 2k vertices.

    For each pair, connect the two parents and delete the paired leaves.
    ``labels`` optionally maps tree vertex -> output label (0-based); by
    default surviving vertices are compacted in depth-first order.  ``n_out``
    sets the output vertex count when labels do not start at 0.  Raises
    SurgeryError if a repeated edge or a loop appears, which signals an
    invalid pair set upstream.
    """
    from .graphs import MultiGraph

    pairs = [AdmissiblePair(int(u), int(v)) for u, v in pairs]
    removed = {x for p in pairs for x in p}
    if len(removed) != 2 * len(pairs):
        raise SurgeryError("pairs must use distinct leaves")
    for p in pairs:
        if t.counts[p.u] != 0 or t.counts[p.v] != 0:
            raise SurgeryError("pair members must be leaves")
    survivors = [v for v in range(t.m) if v not in removed]
    if labels is None:
        lab = {v: i for i, v in enumerate(survivors)}
    else:
        lab = {v: int(labels[v]) for v in survivors}
    edges = []
    for v in survivors:
        p = int(t.parent[v])
        if p >= 0 and p not in removed:
            edges.append((lab[v], lab[p]))
    for p in pairs:
        edges.append((lab[int(t.parent[p.u])], lab[int(t.parent[p.v])]))
    e = np.sort(np.asarray(edges, dtype=np.int64).reshape(-1, 2), axis=1)
    if (e[:, 0] == e[:, 1]).any():
        raise SurgeryError("surgery produced a loop")
    if e.size and np.unique(e, axis=0).shape[0] != e.shape[0]:
        raise SurgeryError("surgery produced a repeated edge")
    n = len(survivors) if n_out is None else int(n_out)
    return MultiGraph(n, e)


def identify_Q(t: PlaneTree, pairs) -> FiniteMMSpace:
    """Quotient mm-space gluing each pair's u-leaf to v's grandparent.

    ``pairs`` is a tuple from the k-fold product of the admissible pair set
    (repeats allowed).  The tree metric descends to the quotient and the
    uniform measure pushes forward, merged classes carrying summed mass.
    """
    m = t.m
    cls = np.arange(m)

    def find(a):
        while cls[a] != a:
            cls[a] = cls[cls[a]]
            a = cls[a]
        return a

    for u, v in pairs:
        gp = int(t.parent[int(t.parent[v])])
        if gp < 0:
            raise ValueError("pair's second leaf has no grandparent")
        ra, rb = find(int(u)), find(gp)
        if ra != rb:
            cls[ra] = rb
    roots = np.array(sorted({find(v) for v in range(m)}))
    index = {r: i for i, r in enumerate(roots)}
    node = np.array([index[find(v)] for v in range(m)])
    nq = roots.size
    adj: list[set[int]] = [set() for _ in range(nq)]
    for v in range(1, m):
        a, b = node[v], node[int(t.parent[v])]
        if a != b:
            adj[a].add(b)
            adj[b].add(a)
    dist = np.full((nq, nq), np.inf)
    for s in range(nq):
        dist[s, s] = 0.0
        frontier = [s]
        d = 0
        seen = {s}
        while frontier:
            d += 1
            nxt = []
            for a in frontier:
                for b in adj[a]:
                    if b not in seen:
                        seen.add(b)
                        dist[s, b] = d
                        nxt.append(b)
            frontier = nxt
    mass = np.bincount(node, minlength=nq) / m
    return FiniteMMSpace(dist, mass, root=int(node[0]))
