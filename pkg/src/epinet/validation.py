"""Input checks shared by the estimators and the command line."""

from __future__ import annotations

import numbers

import numpy as np
import scipy.sparse as sp

from .graph import Graph, from_edges

__all__ = ["check_graph", "check_node", "check_fraction", "check_rng", "check_count"]


def check_graph(X, n: int | None = None) -> Graph:
    """Coerce ``X`` to a :class:`Graph`.

    Accepts a ``Graph``, a square scipy sparse or dense adjacency matrix, a
    networkx graph (nodes numbered in iteration order) or an ``(m, 2)``
    integer edge array (``n`` defaults to the largest id plus one).
    """
    if isinstance(X, Graph):
        if n is not None and n != X.n:
            raise ValueError(f"expected {n} nodes, got {X.n}")
        return X
    if hasattr(X, "number_of_nodes") and hasattr(X, "edges"):
        if X.is_directed():
            raise ValueError("directed graphs are not supported")
        idx = {v: i for i, v in enumerate(X.nodes())}
        e = np.array([(idx[u], idx[v]) for u, v in X.edges()], dtype=np.int64).reshape(-1, 2)
        return from_edges(len(idx), e)
    if sp.issparse(X) or (isinstance(X, np.ndarray) and X.ndim == 2 and X.shape[0] == X.shape[1]
                          and X.shape[1] != 2):
        a = sp.coo_matrix(X)
        if a.shape[0] != a.shape[1]:
            raise ValueError("adjacency matrix must be square")
        if (abs(a - a.T) > 0).nnz:
            raise ValueError("adjacency matrix must be symmetric")
        return from_edges(a.shape[0], np.column_stack([a.row, a.col]))
    e = np.asarray(X)
    if e.ndim != 2 or e.shape[1] != 2:
        raise TypeError(f"cannot interpret {type(X).__name__} as a graph")
    if not np.issubdtype(e.dtype, np.integer):
        if not np.all(np.mod(e, 1) == 0):
            raise ValueError("edge endpoints must be integers")
        e = e.astype(np.int64)
    if len(e) and e.min() < 0:
        raise ValueError("negative node id")
    if n is None:
        n = int(e.max()) + 1 if len(e) else 0
    return from_edges(n, e)


def check_node(v, n: int, name: str = "node") -> int:
    if not isinstance(v, numbers.Integral) or not 0 <= v < n:
        raise ValueError(f"{name} must be an integer in [0, {n}), got {v!r}")
    return int(v)


def check_fraction(x, name: str, low_open: bool = True) -> float:
    x = float(x)
    ok = (0 < x <= 1) if low_open else (0 <= x <= 1)
    if not ok:
        raise ValueError(f"{name} must lie in {'(0' if low_open else '[0'}, 1], got {x}")
    return x


def check_count(c, name: str = "count") -> int:
    if not isinstance(c, numbers.Integral) or c < 0:
        raise ValueError(f"{name} must be a non-negative integer, got {c!r}")
    return int(c)


def check_rng(random_state) -> np.random.Generator:
    """``None``, an int seed or a Generator become a Generator."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    if random_state is None or isinstance(random_state, numbers.Integral):
        return np.random.default_rng(random_state)
    raise TypeError(f"random_state must be None, an int or a Generator, not {type(random_state).__name__}")
