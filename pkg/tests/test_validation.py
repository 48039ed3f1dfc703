import networkx as nx
import numpy as np
import pytest
import scipy.sparse as sp

from epinet.graph import from_edges
from epinet.validation import check_count, check_fraction, check_graph, check_node, check_rng

TRI = from_edges(3, [(0, 1), (1, 2), (0, 2)])


@pytest.mark.parametrize("X", [
    TRI,
    np.array([[0, 1], [1, 2], [2, 0]]),
    np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]]),
    sp.csr_matrix(np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]])),
    nx.cycle_graph(3),
], ids=["graph", "edges", "dense", "sparse", "networkx"])
def test_check_graph_accepts(X):
    assert check_graph(X) == TRI


def test_check_graph_edge_array_with_n():
    assert check_graph(np.array([[0, 1]]), n=4).n == 4


def test_check_graph_float_edges():
    assert check_graph(np.array([[0.0, 1.0]])).m == 1
    with pytest.raises(ValueError):
        check_graph(np.array([[0.5, 1.0]]))


@pytest.mark.parametrize("X,err", [
    (np.array([[0, 1], [-1, 2]]), ValueError),
    (np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]]), ValueError),
    (nx.DiGraph([(0, 1)]), ValueError),
    ("edges", TypeError),
    (np.arange(6), TypeError),
])
def test_check_graph_rejects(X, err):
    with pytest.raises(err):
        check_graph(X)


def test_check_graph_size_mismatch():
    with pytest.raises(ValueError):
        check_graph(TRI, n=4)


def test_scalar_checks():
    assert check_node(2, 3) == 2
    with pytest.raises(ValueError):
        check_node(3, 3)
    with pytest.raises(ValueError):
        check_node(1.0, 3)
    assert check_fraction(1, "f") == 1.0
    assert check_fraction(0, "f", low_open=False) == 0.0
    with pytest.raises(ValueError):
        check_fraction(0, "f")
    assert check_count(0) == 0
    with pytest.raises(ValueError):
        check_count(-1)
    with pytest.raises(ValueError):
        check_count(1.5)


def test_check_rng():
    g = np.random.default_rng(0)
    assert check_rng(g) is g
    assert check_rng(3).random() == np.random.default_rng(3).random()
    assert isinstance(check_rng(None), np.random.Generator)
    with pytest.raises(TypeError):
        check_rng("seed")
