"""Multigraphs, configuration-model sampling, and the connected-graph sampler.

The configuration model pairs half-edges by an in-place shuffle of the flat
half-edge array, which is a uniform perfect matching.  Conditioning on
simplicity (rejection) gives the uniform simple graph; the connected sampler
goes through tilted plane trees and surgery instead and is exactly uniform on
connected simple graphs with the prescribed degrees.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ._rng import ensure_rng
from .degrees import ecd_from_degrees
from .surgery import AdmissiblePair, identify_I, sample_tilted

__all__ = [
    "MultiGraph",
    "ComponentCensus",
    "sample_cm",
    "cm_pmf",
    "sample_simple",
    "sample_connected",
    "component_census",
    "depth_first_encode",
    "build_adjacency",
]


@dataclass(frozen=True)
class MultiGraph:
    """Labeled multigraph: vertex count plus an edge multiset.

    Edges are rows (u, v) with u <= v; loops are (v, v) and contribute two to
    the degree.  Vertices are 0-based in memory and 1-based in serialized
    artifacts.
    """

    n: int
    edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        e = np.sort(e, axis=1)
        if e.size and (e.min() < 0 or e.max() >= self.n):
            raise ValueError("edge endpoint out of range")
        order = np.lexsort((e[:, 1], e[:, 0])) if e.size else np.empty(0, np.int64)
        object.__setattr__(self, "edges", e[order])

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    def degrees(self) -> np.ndarray:
        d = np.bincount(self.edges.ravel(), minlength=self.n)
        return d

    def loop_count(self) -> int:
        return int((self.edges[:, 0] == self.edges[:, 1]).sum())

    def is_simple(self) -> bool:
        e = self.edges
        if (e[:, 0] == e[:, 1]).any():
            return False
        return np.unique(e, axis=0).shape[0] == e.shape[0]

    def canonical_key(self) -> tuple:
        """Hashable identity of the labeled multigraph."""
        return tuple(map(tuple, self.edges))

    def to_json(self) -> dict:
        return {"n": self.n,
                "edges": [[int(u) + 1, int(v) + 1] for u, v in self.edges]}

    @classmethod
    def from_json(cls, obj) -> "MultiGraph":
        e = np.asarray(obj["edges"], dtype=np.int64).reshape(-1, 2) - 1
        return cls(int(obj["n"]), e)

    def to_edge_csv(self) -> str:
        lines = ["u,v"]
        lines += [f"{int(u) + 1},{int(v) + 1}" for u, v in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_csv(cls, text: str, n: int | None = None) -> "MultiGraph":
        rows = [ln for ln in text.strip().splitlines()[1:] if ln]
        e = np.array([[int(a) - 1, int(b) - 1]
                      for a, b in (ln.split(",") for ln in rows)],
                     dtype=np.int64).reshape(-1, 2)
        if n is None:
            n = int(e.max()) + 1 if e.size else 0
        return cls(n, e)


def sample_cm(degrees, rng) -> MultiGraph:
    """Configuration-model multigraph: uniform pairing of half-edges."""
    rng = ensure_rng(rng)
    d = np.asarray(degrees, dtype=np.int64)
    if (d < 0).any():
        raise ValueError("degrees must be nonnegative")
    total = int(d.sum())
    if total % 2:
        raise ValueError("degree sum must be even")
    half = np.repeat(np.arange(d.size, dtype=np.int64), d)
    rng.shuffle(half)
    return MultiGraph(d.size, half.reshape(-1, 2))


def cm_pmf(g: MultiGraph) -> Fraction:
    """Exact probability of this multigraph under half-edge matching.

    (1 / (l-1)!!) * prod_i d_i! / (prod_i 2**loops_i * prod_{i<=j} mult_ij!),
    with l the number of half-edges.
    """
    d = g.degrees()
    ell = int(d.sum())
    dd = 1
    for x in range(ell - 1, 0, -2):
        dd *= x
    num = math.prod(math.factorial(int(x)) for x in d)
    den = dd
    mult: dict[tuple, int] = {}
    for u, v in g.edges:
        mult[(int(u), int(v))] = mult.get((int(u), int(v)), 0) + 1
    for (u, v), c in mult.items():
        den *= math.factorial(c)
        if u == v:
            den *= 2**c
    return Fraction(num, den)


def sample_simple(degrees, rng, max_attempts: int = 100_000):
    """Uniform simple graph with the given degrees, by rejection of CM draws.

    Returns (graph, attempts).  The attempt count is the empirical handle on
    the simplicity probability; an exhausted budget signals that this
    probability is vanishing for the input sequence.
    """
    rng = ensure_rng(rng)
    for attempt in range(1, max_attempts + 1):
        g = sample_cm(degrees, rng)
        if g.is_simple():
            return g, attempt
    raise RuntimeError(f"no simple graph in {max_attempts} attempts")


@dataclass
class ConnectedSampleInfo:
    attempts: int
    method: str
    exact: bool
    pairs: list
    metadata: dict = field(default_factory=dict)


def sample_connected(degrees, k: int, rng, method: str = "rejection",
                     **tilt_kwargs):
    """Exactly uniform connected simple graph with the given degrees.

    Builds the children sequence (lowest degree-1 vertex becomes the pendant
    vertex), draws a uniform (tree, k disjoint admissible pairs), labels the
    pair leaves in rank order and everything else uniformly within its
    children-count class, performs the surgery, attaches the pendant vertex
    to the root, and maps labels back to the caller's order.  Returns
    (MultiGraph, ConnectedSampleInfo).
    """
    rng = ensure_rng(rng)
    d = np.asarray(degrees, dtype=np.int64)
    cs, perm = ecd_from_degrees(d, k)
    mt = d.size
    if mt == 1:
        return MultiGraph(1, np.empty((0, 2), dtype=np.int64)), \
            ConnectedSampleInfo(0, method, True, [])
    d_rel = d[perm]  # d_rel[0] == 1 by construction

    tilt = sample_tilted(cs, k, rng, method=method, **tilt_kwargs)
    t = tilt.tree
    m = t.m

    # labels: relabeled positions 1..mt-1 for ordinary vertices, the pair
    # leaves take mt, mt+1, ... in rank order (0-based internal labels)
    labels = np.full(m, -1, dtype=np.int64)
    paired = []
    for j, p in enumerate(tilt.pairs):
        labels[p.u] = mt + 2 * j
        labels[p.v] = mt + 2 * j + 1
        paired.extend((p.u, p.v))
    paired_set = set(paired)

    by_count: dict[int, list[int]] = {}
    for v in range(m):
        if v not in paired_set:
            by_count.setdefault(int(t.counts[v]), []).append(v)
    label_pool: dict[int, list[int]] = {}
    for pos in range(1, mt):
        label_pool.setdefault(int(d_rel[pos]) - 1, []).append(pos)
    for c, verts in by_count.items():
        pool = label_pool.get(c, [])
        if len(pool) != len(verts):
            raise AssertionError("label classes out of sync with tree counts")
        assign = rng.permutation(len(pool))
        for v, i in zip(verts, assign):
            labels[v] = pool[i]

    h = identify_I(t, tilt.pairs, labels=labels, n_out=mt)
    edges = np.vstack([h.edges, [[0, int(labels[0])]]])
    # back to the caller's vertex order
    out_edges = perm[edges]
    return MultiGraph(mt, out_edges), ConnectedSampleInfo(
        tilt.attempts, tilt.method, tilt.exact,
        [(int(labels[p.u]), int(labels[p.v])) for p in tilt.pairs],
        tilt.metadata)


def build_adjacency(g: MultiGraph):
    """Half-edge adjacency in CSR form: loops list the vertex itself twice."""
    d = g.degrees()
    indptr = np.concatenate(([0], np.cumsum(d)))
    nbrs = np.empty(int(d.sum()), dtype=np.int64)
    cursor = indptr[:-1].copy()
    for u, v in g.edges:
        nbrs[cursor[u]] = v
        cursor[u] += 1
        nbrs[cursor[v]] = u
        cursor[v] += 1
    return indptr, nbrs


@dataclass
class ComponentCensus:
    """Components sorted by decreasing size, ties by smallest vertex label."""

    sizes: np.ndarray
    surplus: np.ndarray
    sum_deg: np.ndarray
    sum_deg_sq: np.ndarray
    min_label: np.ndarray
    labels: np.ndarray      # per-vertex component index, in census order
    graph_degrees: np.ndarray

    @property
    def n_components(self) -> int:
        return self.sizes.size

    def component(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.labels == i)

    def degree_pmf(self, i: int) -> np.ndarray:
        degs = self.graph_degrees[self.component(i)]
        return np.bincount(degs) / degs.size

    def to_json(self, top: int | None = None) -> list:
        top = self.n_components if top is None else min(top, self.n_components)
        out = []
        for i in range(top):
            out.append({
                "size": int(self.sizes[i]),
                "surplus": int(self.surplus[i]),
                "sum_deg_sq": int(self.sum_deg_sq[i]),
                "degree_pmf": [float(x) for x in self.degree_pmf(i)],
            })
        return out


def component_census(g: MultiGraph) -> ComponentCensus:
    """Connected components with surplus counts and degree statistics.

    Surplus of a component is edges - (size - 1), counting multi-edges and
    loops as edges (a loop adds one edge on one vertex, so a lone looped
    vertex has surplus 1).
    """
    n = g.n
    e = g.edges
    nonloop = e[e[:, 0] != e[:, 1]]
    if nonloop.size:
        data = np.ones(2 * nonloop.shape[0], dtype=np.int8)
        rows = np.concatenate([nonloop[:, 0], nonloop[:, 1]])
        cols = np.concatenate([nonloop[:, 1], nonloop[:, 0]])
        adj = csr_matrix((data, (rows, cols)), shape=(n, n))
    else:
        adj = csr_matrix((n, n), dtype=np.int8)
    _, raw = connected_components(adj, directed=False)

    sizes = np.bincount(raw)
    minlab = np.full(sizes.size, n, dtype=np.int64)
    np.minimum.at(minlab, raw, np.arange(n))
    edge_comp = raw[e[:, 0]] if e.size else np.empty(0, dtype=raw.dtype)
    edge_counts = np.bincount(edge_comp, minlength=sizes.size)
    degs = g.degrees()
    sum_deg = np.bincount(raw, weights=degs.astype(np.float64)).astype(np.int64)
    sum_deg_sq = np.bincount(raw, weights=(degs.astype(np.float64) ** 2)).astype(np.int64)

    order = np.lexsort((minlab, -sizes))
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return ComponentCensus(
        sizes=sizes[order],
        surplus=(edge_counts - (sizes - 1))[order],
        sum_deg=sum_deg[order],
        sum_deg_sq=sum_deg_sq[order],
        min_label=minlab[order],
        labels=rank[raw],
        graph_degrees=degs,
    )


def depth_first_encode(g: MultiGraph, rng):
    """Invert the connected-graph construction: graph -> (tree, pairs, labels).

    Requires vertex 0 to have degree 1 (the pendant).  Roots the graph at
    the pendant's neighbor, explores depth-first with uniformly shuffled
    child order, and replaces each surplus edge found at the current vertex
    by a fresh leaf pair: one leaf under the current vertex, one under the
    already-discovered endpoint.  Returns (tree, pairs, labels): pairs are
    rank-sorted tree-vertex pairs and labels[tree vertex] is the original
    graph vertex (-1 on pair leaves).  Round trip: identify_I(tree, pairs,
    labels) plus the pendant edge reproduces the input graph.
    """
    rng = ensure_rng(rng)
    if not g.is_simple():
        raise ValueError("depth-first encoding expects a simple graph")
    d = g.degrees()
    if d[0] != 1:
        raise ValueError("vertex 0 must have degree 1 (the pendant)")
    n = g.n
    adj: dict[int, set[int]] = {v: set() for v in range(n)}
    for u, v in g.edges:
        adj[int(u)].add(int(v))
        adj[int(v)].add(int(u))
    root = next(iter(adj[0]))
    adj[root].discard(0)

    # tokens: ("vertex", w) | ("uleaf", pair_id) | ("vleaf", pair_id)
    children_tokens: dict[int, list] = {}
    pending_vleaf: dict[int, list] = {}
    status = {root: "discovered"}
    tree_parent = {root: -1}
    pairs_found = 0

    def explore(x):
        nonlocal pairs_found
        status[x] = "explored"
        neigh = [w for w in adj[x] if w != tree_parent[x]]
        fresh = [w for w in neigh if status.get(w) is None]
        back = [w for w in neigh if status.get(w) == "discovered"]
        tokens = []
        for w in back:
            # surplus edge found now; endpoint w is on the discovered fringe
            pid = pairs_found
            pairs_found += 1
            tokens.append(("uleaf", pid))
            pending_vleaf.setdefault(w, []).append(pid)
            adj[w].discard(x)
            adj[x].discard(w)
        for w in fresh:
            status[w] = "discovered"
            tree_parent[w] = x
            tokens.append(("vertex", w))
        tokens.extend(("vleaf", pid) for pid in pending_vleaf.pop(x, []))
        order = rng.permutation(len(tokens))
        mine = [tokens[i] for i in order]
        children_tokens[x] = mine
        for kind, payload in mine:
            if kind == "vertex":
                explore(payload)

    explore(root)

    # assemble the plane tree in depth-first token order
    labels: list[int] = []
    counts: list[int] = []
    parent: list[int] = []
    u_tid = {}
    v_tid = {}

    def emit(token, par):
        tid = len(labels)
        parent.append(par)
        kind, payload = token
        if kind == "vertex":
            labels.append(payload)
            kids = children_tokens.get(payload, [])
            counts.append(len(kids))
            for kid in kids:
                emit(kid, tid)
        else:
            labels.append(-1)
            counts.append(0)
            (u_tid if kind == "uleaf" else v_tid)[payload] = tid

    emit(("vertex", root), -1)
    parent_arr = np.asarray(parent, dtype=np.int64)
    counts_arr = np.asarray(counts, dtype=np.int64)
    height = np.zeros(len(parent), dtype=np.int64)
    for v in range(1, len(parent)):
        height[v] = height[parent_arr[v]] + 1
    from .plane_tree import PlaneTree

    tree = PlaneTree(counts_arr, parent_arr, height)
    pairs = [AdmissiblePair(u_tid[j], v_tid[j]) for j in range(pairs_found)]
    pairs.sort(key=lambda p: (int(parent_arr[p.u]), int(parent_arr[p.v])))
    return tree, pairs, np.asarray(labels, dtype=np.int64)
