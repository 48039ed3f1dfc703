import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epinet.graph import (ConvergenceError, GraphFormatError, check_invariants, epidemic_strength,
                          from_edges, giant_component, lambda1, load_edge_list, save_edge_list,
                          set_stats, triangle_weights, triangles)


def _write(tmp_path, text, name="g.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _clique(n):
    return from_edges(n, list(itertools.combinations(range(n), 2)))


def _random_graph(n, p, seed):
    return from_edges(n, list(nx.gnp_random_graph(n, p, seed=seed).edges()))


# ---------------------------------------------------------------- loading


def test_load_path(tmp_path):
    g = load_edge_list(_write(tmp_path, "0 1\n1 2"))
    assert (g.n, g.m) == (3, 2)


def test_load_drops_duplicates_and_loops(tmp_path):
    g = load_edge_list(_write(tmp_path, "0 1\n1 0\n1 1"))
    assert (g.n, g.m) == (2, 1)


def test_load_triangle(tmp_path):
    g = load_edge_list(_write(tmp_path, "0 1\n1 2\n2 0"))
    assert g.m == 3
    assert g.degree.tolist() == [2, 2, 2]


def test_load_compacts_in_first_appearance_order(tmp_path):
    g = load_edge_list(_write(tmp_path, "% comment\n10 7\n\n7 42\n"))
    assert g.n == 3
    assert g.edges().tolist() == [[0, 1], [1, 2]]


@pytest.mark.parametrize("text", ["0 1\n1\n", "0 x\n"])
def test_load_malformed_reports_line(tmp_path, text):
    with pytest.raises(GraphFormatError, match=":2:|:1:"):
        load_edge_list(_write(tmp_path, text))


def test_load_empty(tmp_path):
    with pytest.raises(GraphFormatError):
        load_edge_list(_write(tmp_path, "# nothing\n"))


def test_roundtrip_keeps_isolated_nodes(tmp_path):
    g = from_edges(5, [(0, 3), (3, 4)])
    save_edge_list(g, tmp_path / "out.txt")
    assert load_edge_list(tmp_path / "out.txt") == g


def test_header_rejects_out_of_range(tmp_path):
    with pytest.raises(GraphFormatError):
        load_edge_list(_write(tmp_path, "# n=2\n0 5\n"))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 15), st.integers(0, 15)), max_size=60))
def test_from_edges_invariants(pairs):
    g = from_edges(16, pairs)
    check_invariants(g)
    ref = nx.Graph([(u, v) for u, v in pairs if u != v])
    assert g.m == ref.number_of_edges()


# ---------------------------------------------------------------- components and sets


def test_giant_component_tie_goes_to_smallest_id():
    g = from_edges(7, [(3, 4), (4, 5), (3, 5), (0, 1), (1, 2), (0, 2)])
    h, mapping = giant_component(g)
    assert (h.n, h.m) == (3, 3)
    assert sorted(mapping) == [0, 1, 2]


def test_giant_component_prefers_larger():
    g = from_edges(7, [(0, 1), (1, 2), (0, 2)] + [(a + 3, b + 3) for a, b in itertools.combinations(range(4), 2)])
    h, _ = giant_component(g)
    assert (h.n, h.m) == (4, 6)


def test_giant_component_connected_is_identity():
    g = _clique(5)
    assert giant_component(g)[0] == g


def test_set_stats_single_node():
    g = _random_graph(30, 0.2, 1)
    v = int(np.argmax(g.degree))
    cut, vol, cond = set_stats(g, [v])
    assert cut == vol == g.degree[v]
    assert cond == 1.0


def test_set_stats_bridged_triangles():
    g = from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])
    assert set_stats(g, [0, 1, 2]) == (1, 7, 1 / 7)


def test_set_stats_cut_13_volume_295():
    # 18 nodes with 141 internal edges and 13 edges leaving to a large clique
    inside = list(itertools.combinations(range(18), 2))[:141]
    outside = [(a + 18, b + 18) for a, b in itertools.combinations(range(40), 2)]
    bridges = [(i, 18 + i) for i in range(13)]
    g = from_edges(58, inside + outside + bridges)
    cut, vol, cond = set_stats(g, range(18))
    assert (cut, vol) == (13, 295)
    assert round(cond, 2) == 0.04


def test_set_stats_domain_errors():
    g = _clique(4)
    with pytest.raises(ValueError):
        set_stats(g, [])
    with pytest.raises(ValueError):
        set_stats(g, range(4))


def test_conductance_symmetric_under_complement():
    g = _random_graph(40, 0.15, 3)
    rng = np.random.default_rng(0)
    for _ in range(20):
        s = rng.choice(40, size=int(rng.integers(1, 40)), replace=False)
        rest = np.setdiff1d(np.arange(40), s)
        if g.degree[s].sum() == 0 or g.degree[rest].sum() == 0:
            continue
        assert set_stats(g, s)[2] == set_stats(g, rest)[2]


# ---------------------------------------------------------------- triangles


def test_triangle_weights_k3():
    tri, T = triangle_weights(_clique(3))
    assert len(tri) == 1
    assert T.toarray()[np.triu_indices(3, 1)].tolist() == [1, 1, 1]


def test_triangle_weights_k4():
    tri, T = triangle_weights(_clique(4))
    assert len(tri) == 4
    assert set(T.toarray()[np.triu_indices(4, 1)].tolist()) == {2}


def test_triangle_weights_c5():
    g = from_edges(5, [(i, (i + 1) % 5) for i in range(5)])
    tri, T = triangle_weights(g)
    assert len(tri) == 0 and T.nnz == 0


@pytest.mark.parametrize("seed", range(3))
def test_triangles_match_neighbor_intersections(seed):
    g = _random_graph(150, 0.08, seed)
    tri, T = triangle_weights(g)
    ref = nx.Graph([tuple(e) for e in g.edges()])
    assert len(tri) == sum(nx.triangles(ref).values()) // 3
    for u, v in g.edges():
        assert T[u, v] == len(np.intersect1d(g.neighbors(u), g.neighbors(v)))
    assert T.sum() // 2 == 3 * len(tri)
    assert len({tuple(t) for t in tri.tolist()}) == len(tri)


# ---------------------------------------------------------------- spectrum


def test_lambda1_closed_forms():
    assert abs(lambda1(_clique(10))[0] - 9.0) <= 1e-8
    star = from_edges(17, [(0, i) for i in range(1, 17)])
    dense = np.linalg.eigvalsh(star.to_scipy().toarray()).max()
    assert abs(dense - 4.0) < 1e-12
    assert abs(lambda1(star)[0] - 4.0) <= 1e-8
    c4 = from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    assert abs(lambda1(c4)[0] - 2.0) <= 1e-8


@pytest.mark.parametrize("seed", range(10))
def test_lambda1_matches_dense_small(seed):
    g = giant_component(_random_graph(12, 0.4, seed))[0]
    lam, res = lambda1(g)
    assert abs(lam - np.linalg.eigvalsh(g.to_scipy().toarray()).max()) < 1e-6
    assert res <= 1e-8


def test_lambda1_iteration_cap():
    g = _random_graph(60, 0.1, 0)
    with pytest.raises(ConvergenceError) as info:
        lambda1(giant_component(g)[0], tol=1e-15, max_iter=3)
    assert info.value.residual > 0


def test_epidemic_strength():
    assert epidemic_strength(0.02, 0.05, 459.46) == pytest.approx(183.784)
    assert epidemic_strength(0.05, 0.05, 1.0) == pytest.approx(1.0)
    assert epidemic_strength(0.3, 0.05, 9.0) == pytest.approx(54.0)
    with pytest.raises(ValueError):
        epidemic_strength(0.1, 0.0, 1.0)


def test_graph_is_read_only():
    g = _clique(4)
    with pytest.raises(ValueError):
        g.indices[0] = 3
    assert triangles(g).shape == (4, 3)
