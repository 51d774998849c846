"""Discretized continuum objects: excursions, tilts, and glued tree spaces.

Unit excursions are Dyck-path approximations: a uniformly shuffled +-1
bridge of length 2N rotated at its first minimum, scaled by 1/sqrt(2N).
Coding a tree by twice the excursion and gluing marked leaves to uniform
points of their root paths discretizes the limit components; a reflected
parabolic-drift diffusion supplies lengths and surplus marks for whole
component sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._rng import ensure_rng
from .mmspace import FiniteMMSpace

__all__ = [
    "ExcursionPath",
    "MarkedExcursionList",
    "LimitSpaceSample",
    "sample_excursion",
    "sample_tilted_excursion",
    "area_moment",
    "reflected_process",
    "build_Mk",
    "build_MD",
    "build_Mvac",
    "binomial_mixture_moments",
]

EXCURSION_AREA_MEAN = math.sqrt(math.pi / 8.0)  # E of the unit excursion area


@dataclass(frozen=True)
class ExcursionPath:
    """Nonnegative path on a uniform grid of [0, 1], zero at both ends."""

    values: np.ndarray
    grid_n: int  # bridge half-length; values has 2*grid_n + 1 entries

    @property
    def dt(self) -> float:
        return 1.0 / (self.values.size - 1)

    @property
    def integral(self) -> float:
        return float(self.values.sum() * self.dt)

    @property
    def maximum(self) -> float:
        return float(self.values.max())


def sample_excursion(grid_n: int, rng) -> ExcursionPath:
    """Dyck-path excursion: shuffled +-1 bridge, rotated at its first minimum.

    The rotation starts the path right after the first minimum, so it stays
    nonnegative and vanishes at both ends; values are scaled by 1/sqrt(2N)
    to approximate the unit Brownian excursion on [0, 1].
    """
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    rng = ensure_rng(rng)
    two_n = 2 * grid_n
    steps = np.concatenate([np.ones(grid_n, dtype=np.int64),
                            -np.ones(grid_n, dtype=np.int64)])
    steps = steps[rng.permutation(two_n)]
    walk = np.cumsum(steps)
    j = int(np.argmin(walk))
    rotated = np.concatenate([steps[j + 1:], steps[:j + 1]])
    values = np.concatenate([[0], np.cumsum(rotated)]).astype(np.float64)
    assert values[-1] == 0.0
    return ExcursionPath(values / math.sqrt(two_n), grid_n)


# Rejection envelope for area tilts: P(unit excursion area > 2.5) < 1e-12,
# so capping the acceptance ratio there leaves no measurable bias.
_TILT_ENVELOPE = 2.5


def sample_tilted_excursion(k: int, grid_n: int, rng, method: str = "rejection",
                            pool_size: int = 4096) -> ExcursionPath:
    """Excursion reweighted by the k-th power of its area.

    rejection: accept a plain excursion with probability (area/c)^k for the
    constant envelope c = 2.5; paths with area beyond c (probability below
    1e-12) are accepted outright, a bias orders of magnitude under Monte
    Carlo resolution.  pool: area^k-weighted pick from a fresh pool of
    plain excursions (approximate, cheaper for large k).
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    rng = ensure_rng(rng)
    if k == 0:
        return sample_excursion(grid_n, rng)
    if method == "rejection":
        while True:
            e = sample_excursion(grid_n, rng)
            ratio = min(1.0, (e.integral / _TILT_ENVELOPE) ** k)
            if rng.random() < ratio:
                return e
    if method == "pool":
        pool = [sample_excursion(grid_n, rng) for _ in range(pool_size)]
        w = np.array([e.integral for e in pool]) ** k
        return pool[int(rng.choice(pool_size, p=w / w.sum()))]
    raise ValueError(f"unknown method {method!r}")


def area_moment(k: int, grid_n: int, samples: int, rng):
    """Monte Carlo estimate of the k-th moment of the excursion area.

    Returns (mean, standard error).  k = 0 is exactly 1.  Uses the rotation
    identity (rotated sum = bridge sum - 2N * bridge minimum) so each sample
    costs one shuffle and one pass.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return 1.0, 0.0
    rng = ensure_rng(rng)
    seed = int(rng.integers(0, 2**31 - 1))
    areas = _kernels.dyck_areas(grid_n, samples, seed) ** k
    return float(areas.mean()), float(areas.std(ddof=1) / math.sqrt(samples))


@dataclass(frozen=True)
class MarkedExcursionList:
    """Excursions of the reflected drifted path, longest first, with marks."""

    lengths: np.ndarray
    areas: np.ndarray
    marks: np.ndarray
    starts: np.ndarray
    ends: np.ndarray
    dt: float
    horizon: float

    @property
    def count(self) -> int:
        return self.lengths.size


def reflected_process(mu, lam: float, T: float = 10.0, mesh: int = 10_000,
                      rng=None, max_doublings: int = 4) -> MarkedExcursionList:
    """Reflected parabolic-drift Brownian path and its marked excursions.

    The path is (sqrt(eta)/alpha) B(s) + lam*s - eta*s^2/(2*alpha^3) minus
    its running minimum, Euler-discretized at step 1/mesh.  Excursions above
    zero are extracted and sorted by decreasing length; each carries a
    Poisson(beta * area) mark count, which is the law of a rate-beta planar
    Poisson process under the excursion.  If the path is still positive at
    the horizon, the horizon doubles (the quadratic drift makes this rare);
    exhausting ``max_doublings`` raises.
    """
    alpha, eta, beta = (float(x) for x in mu)
    if min(alpha, eta, beta) <= 0:
        raise ValueError("mu components must be positive")
    rng = ensure_rng(rng)
    ds = 1.0 / mesh
    vol = math.sqrt(eta) / alpha * math.sqrt(ds)

    def chunk(s0: float, horizon: float) -> np.ndarray:
        steps = int(round((horizon - s0) * mesh))
        s = s0 + np.arange(steps) * ds
        return vol * rng.standard_normal(steps) + (lam - eta * s / alpha**3) * ds

    horizon = float(T)
    w = np.cumsum(chunk(0.0, horizon))
    doublings = 0
    while True:
        runmin = np.minimum(np.minimum.accumulate(w), 0.0)
        refl = w - runmin
        positive = refl > 0.0
        zeros = np.flatnonzero(~positive)
        last_zero = int(zeros[-1]) if zeros.size else -1
        stub = (refl.size - 1 - last_zero) * ds
        completed_max = 0.0
        if last_zero > 0:
            pad = np.concatenate([[False], positive[: last_zero + 1], [False]])
            flips = np.flatnonzero(pad[1:] != pad[:-1])
            if flips.size:
                completed_max = float((flips[1::2] - flips[::2]).max() * ds)
        # the trailing incomplete excursion must be dominated by a completed
        # one, so truncation cannot hide the largest excursion
        if last_zero >= 0 and stub < max(completed_max, ds):
            break
        if doublings >= max_doublings:
            raise RuntimeError(
                f"open excursion of length {stub:g} at horizon {horizon}; "
                "rerun with a larger T")
        doublings += 1
        w = np.concatenate([w, w[-1] + np.cumsum(chunk(horizon, 2 * horizon))])
        horizon *= 2

    refl = refl[: last_zero + 1]
    positive = positive[: last_zero + 1]
    padded = np.concatenate([[False], positive, [False]])
    flips = np.flatnonzero(padded[1:] != padded[:-1])
    starts, ends = flips[::2], flips[1::2]
    lengths = (ends - starts) * ds
    cumarea = np.concatenate([[0.0], np.cumsum(refl)]) * ds
    areas = cumarea[ends] - cumarea[starts]
    order = np.argsort(-lengths, kind="stable")
    lengths, areas = lengths[order], areas[order]
    starts, ends = starts[order], ends[order]
    marks = rng.poisson(beta * areas) if areas.size else np.zeros(0, dtype=np.int64)
    return MarkedExcursionList(lengths, areas, marks.astype(np.int64),
                               starts * ds, ends * ds, ds, horizon)


@dataclass
class LimitSpaceSample:
    space: FiniteMMSpace
    construction: str
    params: dict = field(default_factory=dict)


class _RangeMin:
    """Sparse-table range minimum over a fixed array, O(1) vectorized queries."""

    def __init__(self, values: np.ndarray):
        n = values.size
        levels = max(1, n.bit_length())
        table = [values]
        span = 1
        while 2 * span <= n:
            prev = table[-1]
            table.append(np.minimum(prev[:-span], prev[span:]))
            span *= 2
        self.table = table

    def query(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        """Minimum over inclusive index ranges [min(i,j), max(i,j)]."""
        lo = np.minimum(i, j)
        hi = np.maximum(i, j)
        width = hi - lo + 1
        lev = np.maximum(0, np.floor(np.log2(width)).astype(np.int64))
        lev = np.minimum(lev, len(self.table) - 1)
        out = np.empty(lo.shape, dtype=np.float64)
        for l in np.unique(lev):
            m = lev == l
            t = self.table[int(l)]
            span = 1 << int(l)
            out[m] = np.minimum(t[lo[m]], t[hi[m] - span + 1])
        return out


def _excursion_tree_distance(h: np.ndarray, rmq: _RangeMin,
                             i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Coded-tree distance h(i) + h(j) - 2 min h over [i, j]."""
    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    return h[i] + h[j] - 2.0 * rmq.query(lo, hi)


def build_Mk(k: int, grid_n: int, rng, points: int = 256) -> LimitSpaceSample:
    """Discretized glued tilted tree: the unit-mass limit component.

    Codes a tree by twice an area-tilted excursion, samples k leaves with
    density proportional to height, glues each to a uniform point of its
    root path, and returns the quotient metric restricted to ``points``
    i.i.d. uniform grid times with uniform mass.  ``points`` may be as small
    as the number of sample points a distance-law comparison needs.
    """
    rng = ensure_rng(rng)
    exc = sample_tilted_excursion(k, grid_n, rng)
    h = 2.0 * exc.values
    n = h.size
    rmq = _RangeMin(h)
    support = rng.integers(0, n, size=points)

    glue_a = np.empty(k, dtype=np.int64)  # leaf grid times
    glue_b = np.empty(k, dtype=np.int64)  # glued root-path points
    if k:
        weights = h / h.sum()
        glue_a = rng.choice(n, size=k, p=weights)
        for i in range(k):
            level = rng.random() * h[glue_a[i]]
            below = np.flatnonzero(h[: glue_a[i] + 1] <= level)
            glue_b[i] = below[-1] if below.size else 0

    nodes = np.concatenate([support, glue_a, glue_b])
    ii, jj = np.meshgrid(np.arange(nodes.size), np.arange(nodes.size),
                         indexing="ij")
    base = _excursion_tree_distance(h, rmq, nodes[ii.ravel()],
                                    nodes[jj.ravel()]).reshape(ii.shape)
    glue_tree_dist = [float(base[points + i, points + k + i]) for i in range(k)]
    if k:
        p0 = points
        portal = np.arange(p0, p0 + 2 * k)
        pd = base[np.ix_(portal, portal)].copy()
        for i in range(k):
            a, b = i, k + i
            pd[a, b] = pd[b, a] = 0.0
        for mid in range(2 * k):
            pd = np.minimum(pd, pd[:, mid, None] + pd[None, mid, :])
        to_portal = base[:points, p0:]
        via = to_portal[:, :, None] + pd[None, :, :]
        best = via.min(axis=1)  # best cost point -> each portal
        quot = np.minimum(base[:points, :points],
                          (best[:, None, :] + to_portal[None, :, :]).min(axis=2))
        quot = np.minimum(quot, quot.T)
        np.fill_diagonal(quot, 0.0)
    else:
        quot = base[:points, :points]
    space = FiniteMMSpace(quot, np.full(points, 1.0 / points))
    return LimitSpaceSample(space, "tilted-glued-tree",
                            {"k": k, "grid_n": grid_n, "points": points,
                             "area": exc.integral,
                             "glue_tree_distance": glue_tree_dist})


def build_MD(moments, lam: float, grid_n: int, rng, num_components: int = 1,
             points: int = 256, T: float = 10.0,
             mesh: int | None = None) -> list[LimitSpaceSample]:
    """Limit components for a degree law with the given first three moments.

    Draws (length, marks) for the component sequence from the reflected
    process with alpha = m1, eta = m3*m1 - m2^2, beta = 1/m1, then builds
    each of the ``num_components`` longest components as a glued tree with
    its mark count and rescales distances by alpha*sqrt(length)/sqrt(eta).
    """
    m1, m2, m3 = (float(x) for x in moments)
    alpha, eta, beta = m1, m3 * m1 - m2 * m2, 1.0 / m1
    rng = ensure_rng(rng)
    mex = reflected_process((alpha, eta, beta), lam, T=T,
                            mesh=mesh if mesh is not None else grid_n, rng=rng)
    out = []
    for i in range(min(num_components, mex.count)):
        sample = build_Mk(int(mex.marks[i]), grid_n, rng, points=points)
        factor = alpha * math.sqrt(float(mex.lengths[i])) / math.sqrt(eta)
        space = FiniteMMSpace(sample.space.dist * factor, sample.space.mass)
        out.append(LimitSpaceSample(space, "degree-law-component", {
            "rank": i,
            "length": float(mex.lengths[i]),
            "marks": int(mex.marks[i]),
            "lambda": lam,
            "moments": (m1, m2, m3),
            "grid_n": grid_n,
        }))
    return out


def binomial_mixture_moments(r: int) -> tuple[float, float, float]:
    """First three moments of the zero-inflated binomial vacant-degree law."""
    from .vacant import vacant_degree_pmf

    pmf = vacant_degree_pmf(r)
    i = np.arange(pmf.size, dtype=np.float64)
    return (float((i * pmf).sum()), float((i**2 * pmf).sum()),
            float((i**3 * pmf).sum()))


def build_Mvac(r: int, a0: float, grid_n: int, rng, num_components: int = 1,
               points: int = 256, T: float = 10.0) -> list[LimitSpaceSample]:
    """Limit components of the critical vacant set on r-regular graphs.

    The degree law is the zero-inflated binomial with parameter p_vac, and
    the window location is a0 (r-2)^2 / (r (r-1)); everything else is the
    degree-law construction.
    """
    from .vacant import vacant_critical

    vc, _ = vacant_critical(r, a0)
    moments = binomial_mixture_moments(r)
    out = build_MD(moments, vc.lambda_vac, grid_n, rng,
                   num_components=num_components, points=points, T=T)
    for s in out:
        s.construction = "vacant-set-component"
        s.params.update({"r": r, "a0": a0})
    return out
