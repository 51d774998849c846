"""Random walks on multigraphs, vacant sets, and the critical-window pipeline.

The walk picks a uniform incident half-edge each step (a loop is a stay-put
step of weight two) and runs for floor(n*u) steps from a uniform start, the
start counting as visited.  The vacant graph keeps all n vertices; visited
ones are simply isolated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._rng import ensure_rng
from .graphs import ComponentCensus, MultiGraph, build_adjacency, component_census, sample_cm, sample_simple

__all__ = [
    "WalkTrace",
    "VacantCritical",
    "VacantReplica",
    "random_walk_vacant",
    "vacant_graph",
    "vacant_critical",
    "vacant_degree_pmf",
    "annealed_pipeline",
]


@dataclass(frozen=True)
class WalkTrace:
    start: int
    steps: int
    visited: np.ndarray  # bool per vertex

    @property
    def vacant_count(self) -> int:
        return int((~self.visited).sum())


def random_walk_vacant(g: MultiGraph, u: float, rng) -> WalkTrace:
    """Trace of a floor(n*u)-step walk from a uniform start vertex.

    Requires every vertex reachable by the walk to have positive degree;
    isolated vertices elsewhere are fine (they stay vacant).  u = 0 visits
    only the start.
    """
    if u < 0:
        raise ValueError("u must be nonnegative")
    rng = ensure_rng(rng)
    n = g.n
    steps = int(math.floor(n * u))
    start = int(rng.integers(0, n))
    d = g.degrees()
    if steps > 0 and d[start] == 0:
        # a walk from an isolated vertex never moves
        visited = np.zeros(n, dtype=bool)
        visited[start] = True
        return WalkTrace(start, steps, visited)
    indptr, nbrs = build_adjacency(g)
    visited = _kernels.walk_visited(indptr, nbrs, start, steps, rng)
    return WalkTrace(start, steps, visited)


def vacant_graph(g: MultiGraph, trace: WalkTrace):
    """Subgraph on the unvisited vertices, kept on all n vertices.

    Returns (vacant multigraph, vacant degree sequence); visited vertices
    are isolated with vacant degree 0.
    """
    vac = ~trace.visited
    e = g.edges
    keep = vac[e[:, 0]] & vac[e[:, 1]]
    vg = MultiGraph(g.n, e[keep])
    return vg, vg.degrees()


@dataclass(frozen=True)
class VacantCritical:
    """Critical constants of the vacant set on r-regular graphs."""

    r: int
    u_star: float
    lambda_vac: float
    p_vac: float
    d_vac: np.ndarray  # pmf on {0..r}


def vacant_degree_pmf(r: int) -> np.ndarray:
    """Limit law of a vacant vertex's vacant degree: a zero-inflated binomial.

    With probability 1 - p_vac the vertex is covered (degree 0); otherwise
    the degree is Binomial(r, 1/(r-1)).
    """
    if r < 3:
        raise ValueError("r must be >= 3")
    p_vac = math.exp(-r * math.log(r - 1) / (r - 2))
    q = 1.0 / (r - 1)
    pmf = np.zeros(r + 1)
    for i in range(r + 1):
        pmf[i] = p_vac * math.comb(r, i) * q**i * (1 - q) ** (r - i)
    pmf[0] += 1.0 - p_vac
    return pmf


def vacant_critical(r: int, a0: float = 0.0, n: int | None = None):
    """Critical time, window parameters, and the walk time u_n for size n.

    u_star = r(r-1)ln(r-1)/(r-2)^2; the scale-window location is
    lambda_vac = a0 (r-2)^2 / (r(r-1)) and u_n = u_star - a0 n^(-1/3).
    Returns (VacantCritical, u_n); u_n is None when n is.
    """
    if r < 3:
        raise ValueError("r must be >= 3")
    u_star = r * (r - 1) * math.log(r - 1) / (r - 2) ** 2
    lam = a0 * (r - 2) ** 2 / (r * (r - 1))
    p_vac = math.exp(-r * math.log(r - 1) / (r - 2))
    vc = VacantCritical(r, u_star, lam, p_vac, vacant_degree_pmf(r))
    u_n = None if n is None else u_star - a0 * n ** (-1.0 / 3.0)
    return vc, u_n


@dataclass
class VacantReplica:
    n: int
    r: int
    u: float
    census: ComponentCensus
    vacant_degree_counts: np.ndarray

    @property
    def pmf(self) -> np.ndarray:
        return self.vacant_degree_counts / self.n

    def summary(self) -> dict:
        sizes = self.census.sizes
        return {
            "c1": int(sizes[0]) if sizes.size else 0,
            "c2": int(sizes[1]) if sizes.size > 1 else 0,
            "surplus1": int(self.census.surplus[0]) if sizes.size else 0,
            "pmf": [float(x) for x in self.pmf],
            "u": self.u,
        }


def annealed_pipeline(r: int, a0: float, n: int, rng, model: str = "cm",
                      u: float | None = None) -> VacantReplica:
    """One annealed replica: fresh graph, fresh walk, census of the vacant set.

    The base graph is an r-regular configuration model ("cm") or a uniform
    simple r-regular graph ("simple", by rejection).  The walk runs to
    floor(n * u_n) with u_n from the critical window unless ``u`` overrides
    it.  Resampling the graph every replica is what makes the law annealed.
    """
    if n * r % 2:
        raise ValueError("n*r must be even")
    rng = ensure_rng(rng)
    _, u_n = vacant_critical(r, a0, n)
    u_used = u_n if u is None else float(u)
    deg = np.full(n, r, dtype=np.int64)
    if model == "cm":
        g = sample_cm(deg, rng)
    elif model == "simple":
        g, _ = sample_simple(deg, rng)
    else:
        raise ValueError("model must be 'cm' or 'simple'")
    trace = random_walk_vacant(g, u_used, rng)
    vg, dvac = vacant_graph(g, trace)
    counts = np.bincount(dvac, minlength=r + 1)
    return VacantReplica(n, r, u_used, component_census(vg), counts)
