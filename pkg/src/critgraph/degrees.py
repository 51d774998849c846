"""Degree sequences, children sequences, tenability, and criticality parameters.

Vertices are labeled 1..n on paper; all arrays here are 0-based, so "vertex
v" in serialized artifacts means index v-1 internally.  The conversion is done
only at the I/O boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ChildSequence",
    "CriticalityParams",
    "AssumptionReport",
    "ecd_from_degrees",
    "criticality",
    "check_assumption",
]


def _as_int_array(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.int64)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("expected a nonempty 1-d integer sequence")
    return a


@dataclass(frozen=True)
class ChildSequence:
    """Children counts of plane-tree (or forest) vertices, plus their census.

    ``counts[j]`` is the number of children of vertex j.  The census
    ``ecd[i]`` counts vertices with exactly i children.  A sequence is
    tree-tenable when sum(ecd) == 1 + sum(i * ecd[i]) and ecd[0] >= 1;
    forest-tenable when the root count ``sum(ecd) - sum(i*ecd[i])`` is >= 1.
    """

    counts: np.ndarray

    def __post_init__(self):
        c = _as_int_array(self.counts)
        if (c < 0).any():
            raise ValueError("children counts must be nonnegative")
        object.__setattr__(self, "counts", c)

    @classmethod
    def from_ecd(cls, ecd) -> "ChildSequence":
        """Build from the census (s_0, s_1, ...); counts come out sorted."""
        s = _as_int_array(ecd)
        if (s < 0).any():
            raise ValueError("census entries must be nonnegative")
        return cls(np.repeat(np.arange(s.size), s))

    @property
    def m(self) -> int:
        return self.counts.size

    @property
    def ecd(self) -> np.ndarray:
        return np.bincount(self.counts)

    @property
    def forest_roots(self) -> int:
        """Number of roots any forest with this children sequence has."""
        return int(self.m - self.counts.sum())

    @property
    def is_tree_tenable(self) -> bool:
        return self.forest_roots == 1 and (self.counts == 0).any()

    @property
    def is_forest_tenable(self) -> bool:
        return self.forest_roots >= 1

    @property
    def max_children(self) -> int:
        return int(self.counts.max())

    def __repr__(self):
        s = self.ecd
        body = ",".join(f"{i}:{v}" for i, v in enumerate(s) if v)
        return f"ChildSequence(m={self.m}, ecd={{{body}}})"


@dataclass(frozen=True)
class CriticalityParams:
    """Scale-window location and the limit-law parameter triple.

    ``mu = (alpha, eta, beta)`` feeds the reflected-process construction:
    alpha is the first moment, eta = sigma3*sigma1 - sigma2**2, beta =
    1/sigma1.  ``lam`` is the finite-n location n**(1/3) * (nu_n - 1).
    """

    n: int
    nu_n: float
    lam: float
    sigma1: float
    sigma2: float
    sigma3: float
    mu: tuple[float, float, float]


def ecd_from_degrees(degrees, k: int):
    """Children sequence for connected-graph sampling with k surplus edges.

    The lowest-labeled degree-1 vertex is moved to the front (it becomes the
    pendant attached to the root at the very end of graph construction); the
    remaining degrees, minus one each, padded with 2k zeros, are the children
    counts.  Returns ``(ChildSequence, perm)`` where ``perm[i]`` is the
    original index of the vertex in relabeled position i, so callers can map
    results back.
    """
    d = _as_int_array(degrees)
    if int(k) < 0:
        raise ValueError("k must be >= 0")
    k = int(k)
    if (d < 1).any():
        raise ValueError("connected sampling needs every degree >= 1")
    mt = d.size
    if d.sum() != 2 * (mt - 1) + 2 * k:
        raise ValueError(
            f"degree sum {int(d.sum())} != 2*(m-1)+2k = {2 * (mt - 1) + 2 * k}"
        )
    ones = np.flatnonzero(d == 1)
    if ones.size == 0:
        raise ValueError("need at least one degree-1 vertex")
    first = ones[0]
    perm = np.concatenate(([first], np.delete(np.arange(mt), first)))
    counts = np.concatenate((d[perm[1:]] - 1, np.zeros(2 * k, dtype=np.int64)))
    cs = ChildSequence(counts)
    assert cs.is_tree_tenable or cs.m == 0
    return cs, perm


def criticality(degrees) -> CriticalityParams:
    """Empirical moments, the criticality ratio, and the limit triple.

    Invariant under permutation of the degree list.  For an r-regular
    sequence nu_n equals r-1 exactly.
    """
    d = _as_int_array(degrees)
    n = d.size
    df = d.astype(np.float64)
    s1, s2, s3 = (float(np.mean(df**r)) for r in (1, 2, 3))
    tot = df.sum()
    nu = float((df * (df - 1)).sum() / tot) if tot > 0 else 0.0
    lam = n ** (1.0 / 3.0) * (nu - 1.0)
    alpha = s1
    eta = s3 * s1 - s2 * s2
    beta = 1.0 / s1 if s1 > 0 else float("inf")
    return CriticalityParams(n, nu, lam, s1, s2, s3, (alpha, eta, beta))


@dataclass
class AssumptionReport:
    m: int
    sup_pmf_deviation: float
    second_moment_deviation: float
    max_entry_ratio: float  # max entry / sqrt(m)


@dataclass
class AssumptionCheck:
    kind: str
    limit_mean: float
    limit_second_moment: float
    limit_variance: float
    reports: list[AssumptionReport] = field(default_factory=list)


def check_assumption(seq_family, limit_pmf, kind: str = "children",
                     tol: float = 1e-6) -> AssumptionCheck:
    """Regularity diagnostics of a sequence family against a limit pmf.

    ``kind`` is "children" (census entries of ChildSequences; mean-1 limit
    law) or "degrees" (degree lists; mean-2 limit law).  The pmf must be
    normalized and have the right mean up to `tol`; infinite-support laws may
    be passed truncated as long as the lost mass is below `tol`.  Per
    sequence: the sup-norm deviation of the empirical pmf, the second-moment
    deviation, and max-entry / sqrt(m).
    """
    p = np.asarray(limit_pmf, dtype=np.float64)
    if (p < 0).any() or abs(p.sum() - 1.0) > tol:
        raise ValueError("limit pmf must be nonnegative and sum to 1")
    idx = np.arange(p.size, dtype=np.float64)
    mean = float((idx * p).sum())
    second = float((idx**2 * p).sum())
    target = {"children": 1.0, "degrees": 2.0}
    if kind not in target:
        raise ValueError("kind must be 'children' or 'degrees'")
    if abs(mean - target[kind]) > tol:
        raise ValueError(
            f"{kind} limit law must have mean {target[kind]:g}, got {mean:g}"
        )
    check = AssumptionCheck(kind, mean, second,
                            second - mean * mean)
    for seq in seq_family:
        if isinstance(seq, ChildSequence):
            hist = seq.ecd.astype(np.float64)
            m = seq.m
            mx = seq.max_children
        else:
            arr = _as_int_array(seq)
            hist = np.bincount(arr).astype(np.float64)
            m = arr.size
            mx = int(arr.max())
        width = max(hist.size, p.size)
        h = np.zeros(width)
        h[: hist.size] = hist / m
        q = np.zeros(width)
        q[: p.size] = p
        i2 = np.arange(width, dtype=np.float64) ** 2
        check.reports.append(
            AssumptionReport(
                m=m,
                sup_pmf_deviation=float(np.abs(h - q).max()),
                second_moment_deviation=float(abs((i2 * h).sum() - second)),
                max_entry_ratio=mx / np.sqrt(m),
            )
        )
    return check
