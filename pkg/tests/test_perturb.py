import itertools

import numpy as np
import pytest

from epinet.generators import local_geometric, ring_of_cliques
from epinet.graph import check_invariants, from_edges, giant_component, pair_counts, triangles
from epinet.perturb import (RejectionCapError, RewireSchedule, intra_community_shuffle, rewire_cm,
                            rewire_gnp, rewire_schedule, rewire_series, shuffle_triangles,
                            sparsify_common_neighbors)


def _clique(n):
    return from_edges(n, list(itertools.combinations(range(n), 2)))


@pytest.fixture(scope="module")
def geo():
    return local_geometric(300, np.random.default_rng(0), kmin=2, kmax=10)


# ---------------------------------------------------------------- rewiring


def test_zero_count_is_identity(geo):
    assert rewire_cm(geo, 0, 1) == geo
    assert rewire_gnp(geo, 0, 1) == geo
    assert np.array_equal(shuffle_triangles(triangles(geo), geo.n, 0, 1), triangles(geo))


def test_cm_preserves_degree_sequence(geo):
    h = rewire_cm(geo, 100 * geo.m, 1)
    check_invariants(h)
    assert np.array_equal(h.degree, geo.degree)
    assert h != geo


def test_gnp_preserves_edge_count(geo):
    h = rewire_gnp(geo, 100 * geo.m, 1)
    check_invariants(h)
    assert h.m == geo.m


def test_gnp_degrees_approach_binomial():
    g = ring_of_cliques(50, 10)
    h = rewire_gnp(g, 100 * g.m, np.random.default_rng(3))
    p = 2 * g.m / (g.n * (g.n - 1))
    expected = (g.n - 1) * p * (1 - p)
    assert 0.7 * expected < h.degree.var() < 1.3 * expected


def test_gnp_complete_graph_errors():
    with pytest.raises(RejectionCapError):
        rewire_gnp(_clique(4), 1, 0)


def test_cm_path_returns_input():
    # one orientation gives a self-loop, the other reproduces the same pair
    p3 = from_edges(3, [(0, 1), (1, 2)])
    assert rewire_cm(p3, 50, 0) == p3


def test_cm_needs_two_edges():
    with pytest.raises(RejectionCapError):
        rewire_cm(from_edges(2, [(0, 1)]), 1, 0)


def test_rewiring_does_not_modify_input(geo):
    before = geo.edges().copy()
    rewire_cm(geo, 1000, 1)
    rewire_gnp(geo, 1000, 1)
    assert np.array_equal(geo.edges(), before)


def test_rewiring_is_reproducible(geo):
    assert rewire_cm(geo, 500, 7) == rewire_cm(geo, 500, 7)
    assert rewire_gnp(geo, 500, 7) == rewire_gnp(geo, 500, 7)


def test_rewire_series_is_nested(geo):
    # a smaller count replays a prefix of a larger one, so one extra swap moves at most two edges
    a, b = rewire_series(geo, [10, 11], "cm", seed=3)
    ea = {tuple(e) for e in a.edges().tolist()}
    eb = {tuple(e) for e in b.edges().tolist()}
    assert len(ea - eb) <= 2
    assert rewire_series(geo, [10], "cm", seed=3)[0] == rewire_cm(geo, 10, np.random.default_rng(3))
    with pytest.raises(ValueError):
        rewire_series(geo, [1], "nope")


# ---------------------------------------------------------------- schedule


def test_schedule_endpoints():
    s = rewire_schedule(10**6)
    assert s.counts[0] == 100 and s.counts[-1] == 10**8
    assert np.all(np.diff(s.counts) > 0)


def test_schedule_drops_zeros():
    s = rewire_schedule(1000)
    assert s.counts[0] > 0
    assert s.fractions[0] > 1e-4
    assert np.all(np.diff(s.counts) > 0)


def test_schedule_validation():
    with pytest.raises(ValueError):
        RewireSchedule([0.1, 0.01], [10, 1])
    with pytest.raises(ValueError):
        RewireSchedule([1e-5], [1])


# ---------------------------------------------------------------- triangles


def test_shuffle_preserves_counts(geo):
    tri = triangles(geo)
    sh = shuffle_triangles(tri, geo.n, 10**6, np.random.default_rng(2))
    assert sh.shape == tri.shape
    assert pair_counts(sh, geo.n).sum() // 2 == 3 * len(tri)
    assert np.all((sh[:, 0] < sh[:, 1]) & (sh[:, 1] < sh[:, 2]))


def test_shuffle_errors():
    with pytest.raises(ValueError):
        shuffle_triangles([[0, 1, 2]], 2, 1)
    with pytest.raises(ValueError):
        shuffle_triangles([[0, 1, 7]], 5, 1)


# ---------------------------------------------------------------- sparsification


def test_sparsify_keep_all_is_giant_component():
    g = from_edges(8, [(0, 1), (1, 2), (0, 2), (2, 3), (5, 6)])
    assert sparsify_common_neighbors(g, 1.0) == giant_component(g)[0]


def test_sparsify_k4_by_enumeration():
    # every node elects its 2 lowest-id neighbors (all scores tie at 2/3)
    h = sparsify_common_neighbors(_clique(4), 0.34)
    assert h.edges().tolist() == [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3]]


def test_sparsify_star_keeps_lowest_leaves():
    star = from_edges(6, [(0, i) for i in range(1, 6)])
    # leaves elect the hub, so every spoke survives
    assert sparsify_common_neighbors(star, 0.2) == star


def test_sparsify_prefers_shared_neighbors():
    # one pick each: 0 -> 1 (shares 2), 1 -> 0, 2 -> 0, 3 -> 0 (tie), 4 -> 3
    g = from_edges(5, [(0, 1), (1, 2), (0, 2), (0, 3), (3, 4)])
    h = sparsify_common_neighbors(g, 0.3)
    assert h.edges().tolist() == [[0, 1], [0, 2], [0, 3], [3, 4]]


# ---------------------------------------------------------------- communities


def test_intra_community_singletons_identity(geo):
    assert intra_community_shuffle(geo, np.arange(geo.n), 0) == geo


def test_intra_community_single_block_matches_cm(geo):
    h = intra_community_shuffle(geo, np.zeros(geo.n, int), 5, swaps_per_edge=2)
    assert h == rewire_cm(geo, 2 * geo.m, np.random.default_rng(5))


def test_intra_community_keeps_bridge():
    k4 = list(itertools.combinations(range(4), 2))
    g = from_edges(8, k4 + [(a + 4, b + 4) for a, b in k4] + [(3, 4)])
    part = np.array([0] * 4 + [1] * 4)
    h = intra_community_shuffle(g, part, 0)
    assert h.has_edge(3, 4)
    assert np.array_equal(h.degree, g.degree)
    assert h == g  # complete blocks only admit swaps that reproduce the same pair


def test_intra_community_preserves_degrees_and_cross_edges():
    g = ring_of_cliques(6, 6)
    rng = np.random.default_rng(1)
    g = rewire_cm(g, 20, rng)
    part = np.repeat(np.arange(6), 6)
    h = intra_community_shuffle(g, part, 2, swaps_per_edge=10)
    assert np.array_equal(h.degree, g.degree)
    cross = lambda x: {tuple(e) for e in x.edges().tolist() if part[e[0]] != part[e[1]]}
    assert cross(h) == cross(g)


def test_intra_community_bad_partition(geo):
    with pytest.raises(ValueError):
        intra_community_shuffle(geo, np.zeros(3, int))
