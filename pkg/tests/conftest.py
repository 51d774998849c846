"""Shared test helpers: random tenable inputs and small oracles."""

import numpy as np
import pytest

from critgraph.degrees import ChildSequence


def random_tree_ecd(rng, m):
    """Uniform-ish tenable children sequence on m vertices.

    Dropping m-1 balls into m bins gives counts summing to m-1 with at
    least one empty bin, which is exactly tree-tenability.
    """
    if m == 1:
        return ChildSequence(np.zeros(1, dtype=np.int64))
    bins = rng.integers(0, m, size=m - 1)
    return ChildSequence(np.bincount(bins, minlength=m))


def ecd_from_pmf(pmf, m):
    """Tenable children sequence of size ~m tracking a mean-1 pmf.

    Rounds m*p and repairs the two tenability constraints by adjusting the
    leaf and one-child counts.
    """
    p = np.asarray(pmf, dtype=np.float64)
    s = np.maximum(np.rint(m * p).astype(np.int64), 0)
    s[0] = max(s[0], 1)
    # fix sum(s) - sum(i s) == 1 by moving mass between s[0] and s[1]
    gap = int(s.sum() - (np.arange(s.size) * s).sum())
    if gap < 1:
        s[0] += 1 - gap
    elif gap > 1:
        s[1] += gap - 1
    cs = ChildSequence.from_ecd(s)
    assert cs.is_tree_tenable
    return cs


def degrees_from_pmf(pmf, m, k, rng):
    """Degree sequence of length ~m with sum 2(m-1)+2k tracking a pmf on >=1.

    Needs a pmf with mean 2 on {1, 2, ...}; the repair swaps degree-1 and
    degree-3 entries to hit the exact total.
    """
    p = np.asarray(pmf, dtype=np.float64)
    counts = np.maximum(np.rint(m * p).astype(np.int64), 0)
    counts[0] = max(counts[0], 1)
    d = np.repeat(np.arange(counts.size), counts)
    target = 2 * (d.size - 1) + 2 * k
    d = d.astype(np.int64)
    while d.sum() < target:
        d[np.flatnonzero(d == 1)[-1]] += 2
    while d.sum() > target:
        idx = np.flatnonzero(d >= 3)
        d[idx[-1]] -= 2
    assert d.sum() == target and (d >= 1).all() and (d == 1).any()
    return d


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
