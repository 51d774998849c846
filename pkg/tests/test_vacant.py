import math

import numpy as np
import pytest

from critgraph._rng import replica_rng
from critgraph.graphs import MultiGraph
from critgraph.vacant import (
    annealed_pipeline,
    random_walk_vacant,
    vacant_critical,
    vacant_degree_pmf,
    vacant_graph,
)


def test_critical_constants_r3():
    vc, u_n = vacant_critical(3, a0=1.0, n=1000)
    assert vc.u_star == pytest.approx(6 * math.log(2))
    assert vc.p_vac == pytest.approx(1 / 8)
    assert vc.lambda_vac == pytest.approx(1 / 6)
    assert u_n == pytest.approx(vc.u_star - 1000 ** (-1 / 3))


def test_critical_constants_r4():
    vc, _ = vacant_critical(4)
    assert vc.u_star == pytest.approx(3 * math.log(3))
    assert vc.p_vac == pytest.approx(1 / 9)


def test_u_n_equals_u_star_at_a0_zero():
    vc, u_n = vacant_critical(5, a0=0.0, n=12345)
    assert u_n == vc.u_star


def test_vacant_degree_pmf_r3():
    pmf = vacant_degree_pmf(3)
    assert pmf.sum() == pytest.approx(1.0)
    assert pmf[0] == pytest.approx(7 / 8 + (1 / 8) * (1 / 2) ** 3)
    assert pmf[3] == pytest.approx((1 / 8) * (1 / 2) ** 3)
    # the law is exactly critical: E D(D-1) == E D
    i = np.arange(4)
    assert (i * (i - 1) * pmf).sum() == pytest.approx((i * pmf).sum())


def test_rejects_small_r():
    with pytest.raises(ValueError):
        vacant_critical(2)


def test_walk_u0_leaves_all_but_start(rng):
    g = MultiGraph(5, [[0, 1], [1, 2], [2, 3], [3, 4], [0, 4]])
    tr = random_walk_vacant(g, 0.0, rng)
    assert tr.steps == 0
    assert tr.vacant_count == 4
    assert tr.visited[tr.start]


def test_walk_covers_triangle(rng):
    g = MultiGraph(3, [[0, 1], [1, 2], [0, 2]])
    tr = random_walk_vacant(g, 300.0, rng)
    assert tr.vacant_count == 0


def test_walk_loop_vertex(rng):
    g = MultiGraph(1, [[0, 0]])
    tr = random_walk_vacant(g, 5.0, rng)
    assert tr.vacant_count == 0


def test_walk_stays_in_component(rng):
    # two disjoint triangles; the other one stays vacant
    g = MultiGraph(6, [[0, 1], [1, 2], [0, 2], [3, 4], [4, 5], [3, 5]])
    tr = random_walk_vacant(g, 100.0, rng)
    assert tr.vacant_count == 3


def test_vacant_graph_examples(rng):
    g = MultiGraph(3, [[0, 1], [1, 2], [0, 2]])
    visited = np.array([True, False, False])
    tr = type("T", (), {"visited": visited})
    vg, d = vacant_graph(g, tr)
    assert vg.n == 3
    assert vg.canonical_key() == ((1, 2),)
    assert list(d) == [0, 1, 1]


def test_vacant_monotone_in_u():
    g = MultiGraph(8, [[i, (i + 1) % 8] for i in range(8)])
    # same stream: the longer walk's visits contain the shorter walk's
    t1 = random_walk_vacant(g, 0.5, replica_rng(7, 0))
    t2 = random_walk_vacant(g, 2.0, replica_rng(7, 0))
    assert (t1.visited <= t2.visited).all()


def test_annealed_pipeline_small(rng):
    rep = annealed_pipeline(3, 0.0, 200, rng, model="cm")
    assert rep.pmf.sum() == pytest.approx(1.0)
    assert rep.pmf.size == 4
    assert rep.census.sizes.sum() == 200
    rep2 = annealed_pipeline(3, 0.0, 200, rng, model="simple", u=0.1)
    assert rep2.u == 0.1


def test_annealed_pipeline_parity_check(rng):
    with pytest.raises(ValueError, match="even"):
        annealed_pipeline(3, 0.0, 201, rng)
