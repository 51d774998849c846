"""Plane rooted trees: encoding, uniform sampling, ancestor machinery.

A tree on m vertices is stored with vertex ids equal to depth-first preorder
ranks (leftmost child first), so the id order *is* the depth-first order and
``counts`` read in id order is the tree's Łukasiewicz word.  Children of a
vertex therefore appear in increasing id order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._rng import ensure_rng
from .degrees import ChildSequence

__all__ = [
    "PlaneTree",
    "BOUNDARY",
    "AncestralSets",
    "SubtreeView",
    "ReducedTree",
    "sample_tree",
    "count_trees",
    "decode_counts",
    "lukasiewicz_walk",
    "ancestral_sets",
    "reduced_subtree",
    "permutation_concentration_stat",
    "coupled_leaf_vertex",
]


class _Boundary:
    """Sentinel for a spanned subtree without the required distinct leaves."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "BOUNDARY"


BOUNDARY = _Boundary()


@dataclass(frozen=True)
class PlaneTree:
    """Immutable plane tree; vertex ids are DFS preorder ranks, root is 0."""

    counts: np.ndarray   # children count per vertex
    parent: np.ndarray   # parent id, -1 for the root
    height: np.ndarray   # root distance

    @property
    def m(self) -> int:
        return self.counts.size

    @cached_property
    def children(self) -> list[np.ndarray]:
        """Children of each vertex, in plane (= id) order."""
        kids: list[list[int]] = [[] for _ in range(self.m)]
        for v in range(1, self.m):
            kids[self.parent[v]].append(v)
        return [np.array(k, dtype=np.int64) for k in kids]

    @cached_property
    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.counts == 0)

    def path_to_root(self, v: int) -> np.ndarray:
        """Vertices from v up to the root, inclusive."""
        out = [v]
        while self.parent[out[-1]] >= 0:
            out.append(int(self.parent[out[-1]]))
        return np.array(out, dtype=np.int64)

    def lca(self, u: int, v: int) -> int:
        hu, hv = int(self.height[u]), int(self.height[v])
        while hu > hv:
            u = int(self.parent[u]); hu -= 1
        while hv > hu:
            v = int(self.parent[v]); hv -= 1
        while u != v:
            u = int(self.parent[u])
            v = int(self.parent[v])
        return u

    def distance(self, u: int, v: int) -> int:
        a = self.lca(u, v)
        return int(self.height[u] + self.height[v] - 2 * self.height[a])

    def ecd(self) -> np.ndarray:
        return np.bincount(self.counts)

    def to_json(self) -> dict:
        """Serializable form with 1-based labels; root's parent is 0."""
        return {
            "ecd": [int(x) for x in self.ecd()],
            "parent_array": [int(p) + 1 for p in self.parent],
            "dfs_order": list(range(1, self.m + 1)),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PlaneTree":
        order = np.asarray(obj["dfs_order"], dtype=np.int64) - 1
        parent1 = np.asarray(obj["parent_array"], dtype=np.int64) - 1
        rank = np.empty_like(order)
        rank[order] = np.arange(order.size)
        counts = np.zeros(order.size, dtype=np.int64)
        parent = np.full(order.size, -1, dtype=np.int64)
        for v_old, p_old in enumerate(parent1):
            if p_old >= 0:
                parent[rank[v_old]] = rank[p_old]
                counts[rank[p_old]] += 1
        tree = decode_counts(counts)
        if (tree.parent != parent).any():
            raise ValueError("parent_array inconsistent with dfs_order")
        return tree


def decode_counts(counts) -> PlaneTree:
    """Tree whose Łukasiewicz word is the given DFS children-count sequence."""
    c = np.asarray(counts, dtype=np.int64)
    m = c.size
    walk = np.cumsum(c - 1)
    if walk[-1] != -1 or (walk[:-1] < 0).any():
        raise ValueError("counts are not a valid depth-first children sequence")
    parent = np.full(m, -1, dtype=np.int64)
    height = np.zeros(m, dtype=np.int64)
    stack = [0]
    remaining = [int(c[0])]
    for v in range(1, m):
        while remaining[-1] == 0:
            stack.pop()
            remaining.pop()
        p = stack[-1]
        remaining[-1] -= 1
        parent[v] = p
        height[v] = height[p] + 1
        stack.append(v)
        remaining.append(int(c[v]))
    return PlaneTree(c, parent, height)


def lukasiewicz_walk(tree_or_counts) -> np.ndarray:
    """Partial sums of (children - 1) in depth-first order; ends at -1."""
    c = tree_or_counts.counts if isinstance(tree_or_counts, PlaneTree) else tree_or_counts
    return np.cumsum(np.asarray(c, dtype=np.int64) - 1)


def _counts_of(ecd) -> np.ndarray:
    if isinstance(ecd, ChildSequence):
        return ecd.counts
    return ChildSequence(np.asarray(ecd, dtype=np.int64)).counts


def rotate_to_excursion(shuffled_counts: np.ndarray) -> np.ndarray:
    """Cycle the word to start right after the first minimum of its walk.

    For words summing to -1 this is the unique rotation that is a valid
    depth-first children sequence (the walk stays nonnegative before the
    final step down).
    """
    walk = np.cumsum(shuffled_counts - 1)
    j = int(np.argmin(walk))  # argmin returns the first minimum
    return np.roll(shuffled_counts, -(j + 1))


def sample_tree(ecd, rng) -> PlaneTree:
    """Uniform plane tree with the given children sequence.

    Uniformly permute the multiset of children counts, rotate at the first
    minimum of the walk, and decode.  Each unlabeled tree corresponds to the
    same number of (permutation, rotation) classes, which gives exact
    uniformity.
    """
    rng = ensure_rng(rng)
    cs = ecd if isinstance(ecd, ChildSequence) else ChildSequence(np.asarray(ecd, dtype=np.int64))
    counts = cs.counts
    if not cs.is_tree_tenable:
        raise ValueError(f"not a tree-tenable children sequence: {cs!r}")
    shuffled = counts[rng.permutation(counts.size)]
    return decode_counts(rotate_to_excursion(shuffled))


def count_trees(ecd) -> int:
    """Exact number of plane forests (ranked roots) with this children census.

    Equals z * (m-1)! / prod_i s_i! where z is the number of roots; z = 1
    counts plane trees.  Arbitrary precision: (m-1)! overflows 64 bits well
    before m = 25.
    """
    cs = ecd if isinstance(ecd, ChildSequence) else ChildSequence(_counts_of(ecd))
    z = cs.forest_roots
    if z < 1:
        raise ValueError("children sequence is not forest-tenable")
    num = z * math.factorial(cs.m - 1)
    for s in cs.ecd:
        num //= math.factorial(int(s))
    return num


@dataclass(frozen=True)
class SubtreeView:
    """A plane subtree given by a vertex subset of a host tree.

    ``vertices`` are host ids in depth-first order; ``parent`` maps a host id
    to its subtree parent (-1 for the subtree root).  ``mark`` is the
    distinguished vertex the subtree was grown around.
    """

    vertices: np.ndarray
    parent: dict
    mark: int


@dataclass(frozen=True)
class AncestralSets:
    """Vertex sets hanging off the root path of a marked vertex u.

    b1 holds vertices whose parent lies on the root path below u (u itself
    is in b1 whenever u is not the root); b1_plus / b1_minus split the ones
    strictly before / after u in depth-first order.  b2 uses grandparents.
    anc1 spans the root path plus b1; anc2 additionally includes b2.
    """

    b1_minus: np.ndarray
    b1_plus: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    anc1: SubtreeView
    anc2: SubtreeView


def ancestral_sets(t: PlaneTree, u: int) -> AncestralSets:
    path = t.path_to_root(u)            # u .. root
    strict = set(int(x) for x in path[1:])   # root path excluding u itself
    b1, b2 = [], []
    for v in range(t.m):
        p = int(t.parent[v])
        if p >= 0 and p in strict:
            b1.append(v)
        if p >= 0:
            gp = int(t.parent[p])
            if gp >= 0 and gp in strict:
                b2.append(v)
    b1 = np.array(b1, dtype=np.int64)
    b2 = np.array(b2, dtype=np.int64)
    b1_minus = b1[b1 > u]
    b1_plus = b1[b1 < u]
    on_path = set(int(x) for x in path)
    v1 = sorted(on_path | set(int(x) for x in b1))
    v2 = sorted(on_path | set(int(x) for x in b1) | set(int(x) for x in b2))

    def view(verts):
        vs = set(verts)
        par = {v: (int(t.parent[v]) if int(t.parent[v]) in vs else -1) for v in verts}
        return SubtreeView(np.array(verts, dtype=np.int64), par, u)

    return AncestralSets(b1_minus, b1_plus, b1, b2, view(v1), view(v2))


@dataclass(frozen=True)
class ReducedTree:
    """Subtree spanned by the root and marked vertices, with edge lengths.

    Node 0 is the root; branch vertices of degree >= 3 survive, everything
    else is contracted into edge lengths.  ``leaf_nodes[i]`` is the node of
    the i-th mark; the first ``k`` marks carry a weight and a measure on
    their root path, the rest carry weight 0 and a point mass at the root.
    Measures are given as (positions from the root, masses).
    """

    parent: np.ndarray        # per node, -1 for root
    edge_len: np.ndarray      # length of edge to parent (0 at root)
    node_height: np.ndarray   # distance from root
    leaf_nodes: np.ndarray    # node index per mark, in mark order
    k: int                    # number of weighted marks
    leaf_weights: np.ndarray  # per mark
    leaf_measures: list       # per mark: (positions, masses)

    @property
    def n_nodes(self) -> int:
        return self.parent.size

    def root_path_nodes(self, leaf_node: int) -> list[int]:
        out = [int(leaf_node)]
        while self.parent[out[-1]] >= 0:
            out.append(int(self.parent[out[-1]]))
        out.reverse()
        return out


def reduced_subtree(t: PlaneTree, leaves_u, vertices_v, f_values,
                    leaf_measures=None):
    """Span root + marks, contract non-branch vertices, attach mark data.

    ``f_values[i]`` is the admissible-partner count of the i-th u-mark; the
    stored weight is f / sqrt(m).  ``leaf_measures[i]`` is an optional
    (heights, masses) pair giving the gluing measure on the root path of the
    i-th u-mark; by default a point mass at the root.  Returns ``BOUNDARY``
    when the marks are not exactly k+l distinct leaves of the span (a
    duplicated mark, a mark equal to the root, or a mark on another mark's
    root path).
    """
    marks = [int(x) for x in leaves_u] + [int(x) for x in vertices_v]
    k = len(leaves_u)
    f_values = list(f_values)
    if len(f_values) != k:
        raise ValueError("need one f value per u-mark")
    for v in marks:
        if not (0 <= v < t.m):
            raise ValueError(f"marked vertex {v} not in the tree")
    if len(set(marks)) != len(marks) or 0 in marks:
        return BOUNDARY

    paths = {v: t.path_to_root(v) for v in set(marks)}
    span: set[int] = set()
    for v in marks:
        span.update(int(x) for x in paths[v])
    mark_set = set(marks)
    for v in marks:
        # another mark strictly on this mark's root path => not a span leaf
        if any(int(x) in mark_set for x in paths[v][1:]):
            return BOUNDARY

    # branch vertices: >= 2 children inside the span
    nkids = {v: 0 for v in span}
    for v in span:
        p = int(t.parent[v])
        if p >= 0:
            nkids[p] += 1
    special = {0} | mark_set | {v for v, c in nkids.items() if c >= 2}

    order = sorted(special, key=lambda v: (int(t.height[v]), v))
    node_of = {v: i for i, v in enumerate(order)}
    parent = np.full(len(order), -1, dtype=np.int64)
    edge_len = np.zeros(len(order), dtype=np.float64)
    node_h = np.zeros(len(order), dtype=np.float64)
    for v in order:
        if v == 0:
            continue
        w = int(t.parent[v])
        while w not in special:
            w = int(t.parent[w])
        parent[node_of[v]] = node_of[w]
        edge_len[node_of[v]] = float(t.height[v] - t.height[w])
        node_h[node_of[v]] = float(t.height[v])

    leaf_nodes = np.array([node_of[v] for v in marks], dtype=np.int64)
    m = t.m
    weights = np.zeros(len(marks), dtype=np.float64)
    weights[:k] = np.asarray(f_values, dtype=np.float64) / math.sqrt(m)
    measures = []
    for i in range(len(marks)):
        given = leaf_measures[i] if (leaf_measures is not None and i < k) else None
        if given is None:
            measures.append((np.zeros(1), np.ones(1)))
        else:
            pos, mass = (np.asarray(given[0], dtype=np.float64),
                         np.asarray(given[1], dtype=np.float64))
            if pos.size == 0:
                measures.append((np.zeros(1), np.ones(1)))
            else:
                tot = mass.sum()
                if tot <= 0:
                    measures.append((np.zeros(1), np.ones(1)))
                else:
                    measures.append((pos, mass / tot))
    return ReducedTree(parent, edge_len, node_h, leaf_nodes, k, weights, measures)


def permutation_concentration_stat(p, rng, reps: int = 1000,
                                   qs=(0.5, 0.9, 0.95, 0.99)) -> np.ndarray:
    """Quantiles of max_j |sum_{i<=j} p_pi(i) - j/m| / sqrt(sum p_i^2).

    The normalized prefix-sum deviation of a probability vector under a
    uniform permutation; used to check the concentration bound behind the
    leaf-measure arguments.  Uniform p gives identically zero.
    """
    rng = ensure_rng(rng)
    p = np.asarray(p, dtype=np.float64)
    if abs(p.sum() - 1.0) > 1e-9 or (p < 0).any():
        raise ValueError("p must be a probability vector")
    m = p.size
    sigma = float(np.sqrt((p * p).sum()))
    grid = np.arange(1, m + 1) / m
    stats = np.empty(reps)
    for r in range(reps):
        dev = np.abs(np.cumsum(p[rng.permutation(m)]) - grid).max()
        stats[r] = dev / sigma
    return np.quantile(stats, np.asarray(qs, dtype=np.float64))


def coupled_leaf_vertex(t: PlaneTree, rng) -> tuple[int, int]:
    """A (uniform leaf, uniform vertex) pair coupled to be metrically close.

    Both points come from a single uniform variate X: the vertex is the one
    at exploration position floor(mX), the leaf is read off the
    right-continuous inverse of the cumulative leaf-indicator measure at X.
    The tree distance between the two is o(sqrt(m)) for regular families.
    """
    rng = ensure_rng(rng)
    m = t.m
    is_leaf = (t.counts == 0).astype(np.float64)
    g = np.cumsum(is_leaf / is_leaf.sum())
    x = rng.random()
    while x == 0.0:
        x = rng.random()
    v = min(int(m * x), m - 1)
    u = int(np.searchsorted(g, x, side="left"))
    return u, v
