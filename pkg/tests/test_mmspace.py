import itertools

import numpy as np
import pytest

from critgraph.mmspace import (
    FiniteMMSpace,
    distortion,
    g_phi_k,
    gh_exact,
    graph_mm_space,
    kappa_delta,
    polynomial,
    scale,
    two_sample_distance_law,
)
from critgraph.plane_tree import BOUNDARY, decode_counts, reduced_subtree
from critgraph.surgery import admissible_pairs, identify_Q, leaf_gluing_measure


def two_point(a):
    return FiniteMMSpace(np.array([[0.0, a], [a, 0.0]]), np.array([0.5, 0.5]))


def point():
    return FiniteMMSpace(np.zeros((1, 1)), np.ones(1))


def random_space(rng, n):
    # random points on a line always satisfy the triangle inequality
    xs = np.sort(rng.random(n) * 3)
    d = np.abs(xs[:, None] - xs[None, :])
    w = rng.random(n) + 0.1
    return FiniteMMSpace(d, w / w.sum())


# ------------------------------------------------------------------ basics

def test_validation_rejects_bad_inputs():
    with pytest.raises(ValueError):
        FiniteMMSpace(np.array([[0.0, 1.0], [2.0, 0.0]]), np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        FiniteMMSpace(np.zeros((2, 2)), np.array([0.7, 0.7]))
    with pytest.raises(ValueError):
        FiniteMMSpace(np.array([[0.0, 5.0, 1.0], [5.0, 0.0, 1.0],
                                [1.0, 1.0, 0.0]]), np.full(3, 1 / 3))


def test_scale_identity_and_inverse(rng):
    x = random_space(rng, 5)
    assert np.allclose(scale(x, 1.0).dist, x.dist)
    assert np.allclose(scale(scale(x, 2.0), 0.5).dist, x.dist)
    assert scale(x, 3.0).diameter == pytest.approx(3 * x.diameter)
    with pytest.raises(ValueError):
        scale(x, 0.0)


def test_distortion_examples(rng):
    x = two_point(1.0)
    assert distortion([(0, 0), (1, 1)], x, x) == 0.0
    y = two_point(2.5)
    assert distortion([(0, 0), (0, 1)], point(), y) == 2.5
    for _ in range(20):
        a = random_space(rng, 3)
        b = random_space(rng, 4)
        full = list(itertools.product(range(3), range(4)))
        assert distortion(full, a, b) >= abs(a.diameter - b.diameter) - 1e-12


def test_distortion_requires_cover():
    with pytest.raises(ValueError, match="cover"):
        distortion([(0, 0)], two_point(1.0), two_point(1.0))


# ---------------------------------------------------------------- exact GH

def test_gh_identity(rng):
    for n in (1, 2, 3, 4):
        x = random_space(rng, n)
        assert gh_exact(x, x) == pytest.approx(0.0)


def test_gh_point_vs_two_point(rng):
    for _ in range(20):
        a = float(rng.random() * 4 + 0.1)
        assert gh_exact(point(), two_point(a)) == pytest.approx(a / 2)


def test_gh_two_point_pairs(rng):
    for _ in range(20):
        a, b = rng.random(2) * 3 + 0.1
        assert gh_exact(two_point(a), two_point(b)) == pytest.approx(abs(a - b) / 2)


def test_gh_budget():
    x = random_space(np.random.default_rng(0), 5)
    with pytest.raises(ValueError, match="budget"):
        gh_exact(x, x)


def test_gh_pseudometric_properties(rng):
    spaces = [random_space(rng, int(rng.integers(2, 5))) for _ in range(5)]
    for x, y in itertools.combinations(spaces, 2):
        if x.n * y.n > 16:
            continue
        assert gh_exact(x, y) == pytest.approx(gh_exact(y, x))
    for x, y, z in itertools.combinations(spaces, 3):
        if max(x.n * y.n, y.n * z.n, x.n * z.n) > 16:
            continue
        assert gh_exact(x, z) <= gh_exact(x, y) + gh_exact(y, z) + 1e-9


def test_gh_scaling_bound(rng):
    for _ in range(20):
        x = random_space(rng, 3)
        alpha = float(rng.random() * 2 + 0.2)
        assert gh_exact(x, scale(x, alpha)) <= abs(alpha - 1) * x.diameter / 2 + 1e-9


# ------------------------------------------------------------- polynomials

def test_polynomial_constant_is_one(rng):
    x = random_space(rng, 4)
    val, se = polynomial(x, lambda D: 1.0, 3)
    assert val == pytest.approx(1.0) and se == 0.0


def test_polynomial_mean_distance_two_point():
    x = two_point(1.0)
    val, _ = polynomial(x, lambda D: D[0, 1], 2)
    assert val == pytest.approx(0.5)


def test_polynomial_mc_matches_exact(rng):
    x = random_space(rng, 4)
    phi = lambda D: float(D.sum())
    exact, _ = polynomial(x, phi, 3)
    mc, se = polynomial(x, phi, 3, mc_samples=40000, rng=rng, exact_limit=1)
    assert abs(mc - exact) < 4 * se


def test_polynomial_relabeling_invariant(rng):
    x = random_space(rng, 5)
    perm = rng.permutation(5)
    y = FiniteMMSpace(x.dist[np.ix_(perm, perm)], x.mass[perm])
    phi = lambda D: float(np.sort(D, axis=None)[-2])
    a, _ = polynomial(x, phi, 3)
    b, _ = polynomial(y, phi, 3)
    assert a == pytest.approx(b)


# ------------------------------------------------------------------ g_phi_k

def test_g_phi_boundary_is_zero():
    assert g_phi_k(BOUNDARY, lambda D: 123.0) == 0.0


def test_g_phi_k0_deterministic():
    t = decode_counts([2, 1, 0, 1, 0])
    rt = reduced_subtree(t, [], [2, 4], [])
    val = g_phi_k(rt, lambda D: D[0, 1])
    assert val == pytest.approx(t.distance(2, 4))


def test_g_phi_k1_root_mass_matches_quotient(rng):
    # gluing measure forced to the root: the surviving-leaf distance equals
    # the quotient metric where the weighted leaf is identified with the root
    t = decode_counts([2, 2, 0, 0, 1, 0])
    leaves = [2, 3, 5]
    u, v1, v2 = 2, 3, 5
    rt = reduced_subtree(t, [u], [v1, v2], [1.0],
                         leaf_measures=[(np.zeros(1), np.ones(1))])
    got = g_phi_k(rt, lambda D: D[0, 1], mc_samples=5, rng=rng)
    # oracle: shortest path in the tree with an extra zero-length edge u-root
    best = min(t.distance(v1, v2),
               t.distance(v1, u) + t.distance(0, v2),
               t.distance(v1, 0) + t.distance(u, v2))
    assert got == pytest.approx(best)


def test_g_phi_bounded(rng):
    t = decode_counts([1, 2, 1, 0, 1, 0])
    pairs, f = admissible_pairs(t)
    assert pairs
    u = pairs[0].u
    h, mass = leaf_gluing_measure(t, u)
    rt = reduced_subtree(t, [u], [5] if u != 5 else [3],
                         [float(f[u])], leaf_measures=[(h, mass)])
    if rt is BOUNDARY:
        return
    phi = lambda D: float(np.tanh(D).mean())
    val = g_phi_k(rt, phi, mc_samples=64, rng=rng)
    assert -1.0 <= val <= 1.0


# ----------------------------------------------------- two-sample distance

def test_two_sample_same_law_not_rejected(rng):
    sampler = lambda r: random_space(r, 6)
    res = two_sample_distance_law(sampler, sampler, 3, 400, rng)
    assert not res.rejected


def test_two_sample_scaled_law_rejected(rng):
    a = lambda r: random_space(r, 6)
    b = lambda r: scale(random_space(r, 6), 2.0)
    res = two_sample_distance_law(a, b, 3, 400, rng)
    assert res.rejected


def test_kappa_delta(rng):
    x = two_point(1.0)
    assert kappa_delta(x, 0.5) == pytest.approx(0.5)
    assert kappa_delta(x, 1.5) == pytest.approx(1.0)


def test_graph_mm_space_path():
    x = graph_mm_space(3, [[0, 1], [1, 2]])
    assert x.dist[0, 2] == 2.0
    with pytest.raises(ValueError, match="connected"):
        graph_mm_space(3, [[0, 1]])


def test_quotient_space_matches_graph_space(rng):
    # identify_Q with no pairs equals the graph space of the tree
    t = decode_counts([2, 1, 0, 0])
    q = identify_Q(t, [])
    edges = [[v, int(t.parent[v])] for v in range(1, t.m)]
    g = graph_mm_space(t.m, edges)
    assert np.allclose(q.dist, g.dist)
