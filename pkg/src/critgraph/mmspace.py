"""Finite metric measure spaces and Gromov-style comparison statistics.

Exact Gromov-Hausdorff is enumerated on tiny spaces only; the measure side is
compared through distance-matrix laws (polynomials of sampled points), never
through coupled Gromov-Hausdorff-Prokhorov optimization.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sstats
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from ._rng import ensure_rng
from .plane_tree import BOUNDARY, ReducedTree

__all__ = [
    "FiniteMMSpace",
    "scale",
    "distortion",
    "gh_exact",
    "polynomial",
    "g_phi_k",
    "two_sample_distance_law",
    "TwoSampleResult",
    "kappa_delta",
    "graph_mm_space",
    "sorted_distance_sample",
]


@dataclass(frozen=True)
class FiniteMMSpace:
    """Symmetric distance matrix with a probability mass vector.

    Metric axioms are checked on construction; the O(n^3) triangle-inequality
    scan is skipped above ``_TRIANGLE_CHECK_LIMIT`` points to keep samplers
    cheap (their outputs are path metrics, valid by construction).
    """

    dist: np.ndarray
    mass: np.ndarray
    root: int | None = None

    _TRIANGLE_CHECK_LIMIT = 128

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=np.float64)
        w = np.asarray(self.mass, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("dist must be a square matrix")
        n = d.shape[0]
        if w.shape != (n,):
            raise ValueError("mass length must match dist")
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("mass must be a probability vector")
        if (np.abs(np.diagonal(d)) > 1e-12).any() or (d < 0).any():
            raise ValueError("dist needs a zero diagonal and nonnegative entries")
        if np.abs(d - d.T).max() > 1e-9:
            raise ValueError("dist must be symmetric")
        if n <= self._TRIANGLE_CHECK_LIMIT:
            if (d[:, :, None] + d[None, :, :] - d[:, None, :] < -1e-9).any():
                raise ValueError("triangle inequality violated")
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "mass", w)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def diameter(self) -> float:
        return float(self.dist.max())


def scale(space: FiniteMMSpace, alpha: float) -> FiniteMMSpace:
    """Multiply the metric by alpha > 0; the measure is untouched."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return FiniteMMSpace(space.dist * float(alpha), space.mass, space.root)


def distortion(corr, x: FiniteMMSpace, y: FiniteMMSpace) -> float:
    """sup over pairs in the correspondence of |d_X - d_Y|.

    ``corr`` is an iterable of (i, j) index pairs; it must cover every index
    on both sides.
    """
    pairs = np.asarray(list(corr), dtype=np.int64)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError("correspondence must be a set of index pairs")
    if (set(pairs[:, 0]) != set(range(x.n))) or (set(pairs[:, 1]) != set(range(y.n))):
        raise ValueError("correspondence must cover both spaces")
    dx = x.dist[np.ix_(pairs[:, 0], pairs[:, 0])]
    dy = y.dist[np.ix_(pairs[:, 1], pairs[:, 1])]
    return float(np.abs(dx - dy).max())


def gh_exact(x: FiniteMMSpace, y: FiniteMMSpace, budget: int = 16) -> float:
    """Exact Gromov-Hausdorff distance on tiny spaces.

    Half the minimal distortion over all correspondences.  Any correspondence
    contains one of the form graph(f) ∪ graph(g) for maps f: X→Y, g: Y→X
    with no larger distortion, so minimizing over such unions is exact.
    Requires |X|*|Y| <= budget.
    """
    p, q = x.n, y.n
    if p * q > budget:
        raise ValueError(f"gh_exact budget exceeded: {p}*{q} > {budget}")
    dx, dy = x.dist, y.dist
    fs = list(itertools.product(range(q), repeat=p))
    gs = list(itertools.product(range(p), repeat=q))
    # distortion within each half, precomputed
    df = np.empty(len(fs))
    for a, f in enumerate(fs):
        fi = np.asarray(f)
        df[a] = np.abs(dx - dy[np.ix_(fi, fi)]).max()
    dg = np.empty(len(gs))
    for b, g in enumerate(gs):
        gi = np.asarray(g)
        dg[b] = np.abs(dy - dx[np.ix_(gi, gi)]).max()
    best = math.inf
    for a, f in enumerate(fs):
        if df[a] >= best:
            continue
        fi = np.asarray(f)
        for b, g in enumerate(gs):
            lo = max(df[a], dg[b])
            if lo >= best:
                continue
            gi = np.asarray(g)
            cross = np.abs(dx[:, gi] - dy[fi, :]).max()
            val = max(lo, cross)
            if val < best:
                best = val
    return best / 2.0


def polynomial(space: FiniteMMSpace, phi, l: int, mc_samples: int = 20000,
               rng=None, exact_limit: int = 200_000):
    """Mass-weighted expectation of phi over l-tuples of points.

    phi receives the l x l matrix of pairwise distances.  Exact summation
    when n**l <= exact_limit, otherwise Monte Carlo; returns (value, se)
    with se = 0.0 for the exact path.
    """
    if l < 1:
        raise ValueError("l must be >= 1")
    n = space.n
    d, w = space.dist, space.mass
    if n**l <= exact_limit:
        total = 0.0
        for idx in itertools.product(range(n), repeat=l):
            ii = np.asarray(idx)
            weight = float(np.prod(w[ii]))
            if weight == 0.0:
                continue
            total += weight * float(phi(d[np.ix_(ii, ii)]))
        return total, 0.0
    rng = ensure_rng(rng)
    picks = rng.choice(n, size=(mc_samples, l), p=w)
    vals = np.array([float(phi(d[np.ix_(row, row)])) for row in picks])
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(mc_samples))


def _reduced_tree_base_distances(rt: ReducedTree) -> np.ndarray:
    n = rt.n_nodes
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    for v in range(n):
        p = rt.parent[v]
        if p >= 0:
            d[v, p] = d[p, v] = rt.edge_len[v]
    for mid in range(n):
        d = np.minimum(d, d[:, mid, None] + d[None, mid, :])
    return d


def g_phi_k(rt, phi, mc_samples: int = 200, rng=None) -> float:
    """Expected phi of the surviving-leaf distances after random gluings.

    For each of the first k marks a point y_i is drawn from that mark's root
    path measure and glued to the mark; phi is evaluated on the pairwise
    distances among the remaining marks and averaged over the draws.  Returns
    0.0 on the BOUNDARY sentinel.  With k = 0 the value is deterministic.
    """
    if rt is BOUNDARY:
        return 0.0
    rng = ensure_rng(rng)
    base = _reduced_tree_base_distances(rt)
    k = rt.k
    ell = rt.leaf_nodes.size - k
    vnodes = rt.leaf_nodes[k:]
    if ell == 0:
        return 0.0
    if k == 0:
        return float(phi(base[np.ix_(vnodes, vnodes)]))

    # per weighted mark: root path node chain and its cumulative heights
    chains = [rt.root_path_nodes(rt.leaf_nodes[i]) for i in range(k)]
    acc = 0.0
    nb = rt.n_nodes
    for _ in range(mc_samples):
        daug = np.full((nb + k, nb + k), np.inf)
        daug[:nb, :nb] = base
        np.fill_diagonal(daug, 0.0)
        for i in range(k):
            pos, mass = rt.leaf_measures[i]
            h = float(pos[rng.choice(pos.size, p=mass)])
            chain = chains[i]
            heights = rt.node_height[chain]
            j = int(np.searchsorted(heights, h, side="right")) - 1
            j = max(0, min(j, len(chain) - 2)) if len(chain) > 1 else 0
            a = chain[j]
            b = chain[min(j + 1, len(chain) - 1)]
            y = nb + i
            daug[y, a] = daug[a, y] = max(h - heights[j], 0.0)
            daug[y, b] = daug[b, y] = max(rt.node_height[b] - h, 0.0)
            z = rt.leaf_nodes[i]
            daug[y, z] = daug[z, y] = 0.0
        for mid in range(nb + k):
            daug = np.minimum(daug, daug[:, mid, None] + daug[None, mid, :])
        acc += float(phi(daug[np.ix_(vnodes, vnodes)]))
    return acc / mc_samples


def sorted_distance_sample(space: FiniteMMSpace, l: int, rng) -> np.ndarray:
    """Sorted pairwise distances of l points drawn from the mass measure.

    If the space carries exactly l points they are used as-is (samplers may
    pre-draw their support); otherwise l i.i.d. mass-weighted picks are made.
    Sorting removes the label-alignment ambiguity between independent draws.
    """
    rng = ensure_rng(rng)
    if space.n == l:
        idx = np.arange(l)
    else:
        idx = rng.choice(space.n, size=l, p=space.mass)
    sub = space.dist[np.ix_(idx, idx)]
    iu = np.triu_indices(l, k=1)
    return np.sort(sub[iu])


@dataclass
class TwoSampleResult:
    ks_stat: np.ndarray
    p_value: np.ndarray
    reps: int
    l: int
    threshold: float
    meta: dict = field(default_factory=dict)

    @property
    def min_p(self) -> float:
        return float(self.p_value.min())

    @property
    def rejected(self) -> bool:
        return bool((self.p_value < self.threshold).any())

    def summary(self) -> dict:
        return {
            "l": self.l,
            "reps": self.reps,
            "ks_stat": [float(x) for x in self.ks_stat],
            "p_value": [float(x) for x in self.p_value],
            "min_p": self.min_p,
            "threshold": self.threshold,
            "rejected": self.rejected,
        }


def two_sample_distance_law(sampler_a, sampler_b, l: int, reps: int, rng,
                            threshold: float = 0.001) -> TwoSampleResult:
    """Entrywise KS comparison of sorted distance-matrix laws of two samplers.

    Each sampler is a callable rng -> FiniteMMSpace.  Per replica a fresh
    space is drawn and l points are sampled from its measure; the sorted
    pairwise-distance vectors are compared column by column across replicas
    with two-sample Kolmogorov-Smirnov tests.
    """
    rng = ensure_rng(rng)
    cols = l * (l - 1) // 2
    a = np.empty((reps, cols))
    b = np.empty((reps, cols))
    for r in range(reps):
        a[r] = sorted_distance_sample(sampler_a(rng), l, rng)
        b[r] = sorted_distance_sample(sampler_b(rng), l, rng)
    ks = np.empty(cols)
    pv = np.empty(cols)
    for j in range(cols):
        res = sstats.ks_2samp(a[:, j], b[:, j])
        ks[j], pv[j] = res.statistic, res.pvalue
    return TwoSampleResult(ks, pv, reps, l, threshold)


def kappa_delta(space: FiniteMMSpace, delta: float) -> float:
    """Smallest mass of a closed delta-ball; a lower-mass diagnostic only."""
    within = space.dist <= delta + 1e-12
    return float((within * space.mass[None, :]).sum(axis=1).min())


def graph_mm_space(n: int, edges, size_limit: int = 4096) -> FiniteMMSpace:
    """Graph as an mm-space: unweighted shortest-path metric, uniform mass.

    The edge list must describe a connected graph on [0, n); multi-edges and
    loops do not affect the metric.
    """
    if n > size_limit:
        raise ValueError(f"graph_mm_space limited to {size_limit} vertices")
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    keep = e[:, 0] != e[:, 1]
    e = e[keep]
    data = np.ones(2 * e.shape[0])
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    adj = csr_matrix((data, (rows, cols)), shape=(n, n))
    d = shortest_path(adj, method="D", unweighted=True)
    if np.isinf(d).any():
        raise ValueError("graph is not connected")
    return FiniteMMSpace(d, np.full(n, 1.0 / n))
