"""Immutable undirected simple graphs in compressed adjacency form.

Everything else in the package runs on :class:`Graph`: the epidemic engine,
the rewiring routines, the NCP machinery and the generators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


class GraphFormatError(ValueError):
    """Raised when an edge-list file cannot be parsed."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver exhausts its iteration budget."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph on nodes ``0..n-1``.

    ``indptr``/``indices`` are CSR arrays; each neighbor list is sorted and
    duplicate-free, there are no self-loops, and adjacency is symmetric.
    Arrays are read-only, so a graph can be shared between threads.
    """

    indptr: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "indptr", _frozen(self.indptr, np.int64))
        object.__setattr__(self, "indices", _frozen(self.indices, np.int64))
        object.__setattr__(self, "degree", _frozen(np.diff(self.indptr), np.int64))

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def m(self) -> int:
        return len(self.indices) // 2

    @property
    def volume(self) -> int:
        return len(self.indices)

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.neighbors(u)
        i = np.searchsorted(nbrs, v)
        return bool(i < len(nbrs) and nbrs[i] == v)

    def edges(self) -> np.ndarray:
        """Return an ``(m, 2)`` array of edges with ``u < v``, lexicographically sorted."""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), self.degree)
        mask = rows < self.indices
        return np.column_stack([rows[mask], self.indices[mask]])

    def to_scipy(self) -> sp.csr_matrix:
        data = np.ones(len(self.indices), dtype=np.float64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def subgraph(self, nodes) -> Graph:
        """Induced subgraph; node ``nodes[i]`` becomes node ``i``."""
        nodes = np.asarray(nodes, dtype=np.int64)
        remap = np.full(self.n, -1, dtype=np.int64)
        remap[nodes] = np.arange(len(nodes))
        e = self.edges()
        keep = (remap[e[:, 0]] >= 0) & (remap[e[:, 1]] >= 0)
        return from_edges(len(nodes), remap[e[keep]])

    def canonical_bytes(self) -> bytes:
        """Serialization used for byte-for-byte determinism checks."""
        return np.int64(self.n).tobytes() + self.edges().tobytes()

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __hash__(self):
        return hash(self.canonical_bytes())

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


def from_edges(n: int, edges) -> Graph:
    """Build a graph from an edge array, dropping self-loops and duplicates."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(e) and (e.min() < 0 or e.max() >= n):
        raise ValueError(f"edge endpoint out of range for n={n}")
    e = e[e[:, 0] != e[:, 1]]
    lo = np.minimum(e[:, 0], e[:, 1])
    hi = np.maximum(e[:, 0], e[:, 1])
    keys = np.unique(lo * n + hi) if n else np.zeros(0, np.int64)
    lo, hi = keys // max(n, 1), keys % max(n, 1)
    rows = np.concatenate([lo, hi])
    cols = np.concatenate([hi, lo])
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return Graph(indptr, cols)


def from_scipy(a) -> Graph:
    a = sp.coo_matrix(a)
    return from_edges(a.shape[0], np.column_stack([a.row, a.col]))


def check_invariants(g: Graph) -> None:
    """Assert the simple-graph invariants; raises ``AssertionError``."""
    assert g.indptr[0] == 0 and g.indptr[-1] == len(g.indices)
    assert np.all(g.degree >= 0)
    assert g.degree.sum() == 2 * g.m
    rows = np.repeat(np.arange(g.n), g.degree)
    assert not np.any(rows == g.indices), "self-loop"
    for u in range(g.n):
        nb = g.neighbors(u)
        assert np.all(np.diff(nb) > 0), "unsorted or duplicate neighbors"
    fwd = rows * g.n + g.indices
    rev = g.indices * g.n + rows
    assert np.array_equal(np.sort(fwd), np.sort(rev)), "asymmetric adjacency"


# ---------------------------------------------------------------- I/O


def load_edge_list(path) -> Graph:
    """Read whitespace-separated ``u v`` pairs.

    Lines starting with ``#`` or ``%`` and blank lines are skipped. Node labels
    are compacted to ``0..n-1`` in order of first appearance, unless the file
    opens with an ``# n=<count>`` header (as written by :func:`save_edge_list`),
    in which case ids are used as given and isolated nodes survive.
    """
    ids: dict[int, int] = {}
    pairs = []
    declared = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s[0] in "#%":
                if declared is None and not pairs and s.startswith("# n="):
                    try:
                        declared = int(s[4:].split()[0])
                    except ValueError:
                        raise GraphFormatError(f"{path}:{lineno}: bad header {s!r}") from None
                continue
            parts = s.split()
            if len(parts) < 2:
                raise GraphFormatError(f"{path}:{lineno}: expected two node ids, got {s!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: non-integer node id in {s!r}") from None
            if declared is not None:
                if not (0 <= u < declared and 0 <= v < declared):
                    raise GraphFormatError(f"{path}:{lineno}: node id outside declared n={declared}")
                pairs.append((u, v))
            else:
                pairs.append((ids.setdefault(u, len(ids)), ids.setdefault(v, len(ids))))
    if declared is not None:
        g = from_edges(declared, pairs)
    elif not ids:
        raise GraphFormatError(f"{path}: empty edge list")
    else:
        g = from_edges(len(ids), pairs)
    check_invariants(g)
    return g


def save_edge_list(g: Graph, path) -> None:
    e = g.edges()
    with open(path, "w") as fh:
        # isolated nodes would be lost otherwise
        fh.write(f"# n={g.n} m={g.m}\n")
        np.savetxt(fh, e, fmt="%d")


# ---------------------------------------------------------------- structure


def components(g: Graph) -> np.ndarray:
    _, labels = connected_components(g.to_scipy(), directed=False)
    return labels


def giant_component(g: Graph) -> tuple[Graph, dict[int, int]]:
    """Induced subgraph on the largest connected component.

    Ties between equally large components go to the one holding the smallest
    node id. Returns the subgraph and a map from old to new ids.
    """
    labels = components(g)
    sizes = np.bincount(labels)
    best = sizes.max()
    # labels are assigned in order of first node, so the first max wins ties
    cand = np.flatnonzero(sizes == best)
    first = [np.flatnonzero(labels == c)[0] for c in cand]
    target = cand[int(np.argmin(first))]
    nodes = np.flatnonzero(labels == target)
    return g.subgraph(nodes), {int(v): i for i, v in enumerate(nodes)}


def set_stats(g: Graph, s) -> tuple[int, int, float]:
    """Return ``(cut, volume, conductance)`` of node set ``s``.

    Conductance is ``cut / min(vol(S), vol(V \\ S))``.
    """
    mask = np.zeros(g.n, dtype=bool)
    idx = np.asarray(list(s) if not isinstance(s, np.ndarray) else s, dtype=np.int64)
    if len(idx) == 0:
        raise ValueError("node set is empty")
    mask[idx] = True
    k = int(mask.sum())
    if k == g.n:
        raise ValueError("node set is the whole vertex set")
    vol = int(g.degree[mask].sum())
    rows = np.repeat(mask, g.degree)
    cut = int(np.count_nonzero(rows & ~mask[g.indices]))
    denom = min(vol, g.volume - vol)
    if denom == 0:
        raise ValueError("conductance undefined: zero volume on one side")
    return cut, vol, cut / denom


# ---------------------------------------------------------------- triangles


@numba.njit(cache=True)
def _triangles(indptr, indices):
    n = len(indptr) - 1
    out = []
    for u in range(n):
        for a in range(indptr[u], indptr[u + 1]):
            v = indices[a]
            if v <= u:
                continue
            # merge N(u) and N(v), keep w > v
            i, j = indptr[u], indptr[v]
            while i < indptr[u + 1] and j < indptr[v + 1]:
                x, y = indices[i], indices[j]
                if x < y:
                    i += 1
                elif y < x:
                    j += 1
                else:
                    if x > v:
                        out.append((u, v, x))
                    i += 1
                    j += 1
    res = np.empty((len(out), 3), dtype=np.int64)
    for k in range(len(out)):
        res[k, 0], res[k, 1], res[k, 2] = out[k]
    return res


def triangles(g: Graph) -> np.ndarray:
    """Each triangle once as a sorted triple; ``(t, 3)`` int array."""
    if g.m == 0:
        return np.zeros((0, 3), dtype=np.int64)
    return _triangles(g.indptr, g.indices)


def pair_counts(triples, n: int) -> sp.csr_matrix:
    """Symmetric matrix whose ``(i, j)`` entry counts triples containing both."""
    t = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    rows = np.concatenate([t[:, 0], t[:, 0], t[:, 1], t[:, 1], t[:, 2], t[:, 2]])
    cols = np.concatenate([t[:, 1], t[:, 2], t[:, 0], t[:, 2], t[:, 0], t[:, 1]])
    data = np.ones(len(rows), dtype=np.int64)
    mat = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def triangle_weights(g: Graph) -> tuple[np.ndarray, sp.csr_matrix]:
    """Triangle hyperedges of ``g`` and the per-pair shared-triangle counts T."""
    tri = triangles(g)
    return tri, pair_counts(tri, g.n)


# ---------------------------------------------------------------- spectrum


def lambda1(g: Graph, tol: float = 1e-8, max_iter: int = 100_000) -> tuple[float, float]:
    """Dominant adjacency eigenvalue by power iteration.

    Iterates on ``A + I`` from the normalized all-ones vector; the shift keeps
    bipartite graphs (where ``-lambda1`` is also an eigenvalue) from
    oscillating. Stops once ``||Av - lam v|| <= tol * ||v||``.

    Returns
    -------
    (eigenvalue, residual)
    """
    if g.n == 0:
        raise ValueError("empty graph")
    if g.m == 0:
        return 0.0, 0.0
    a = g.to_scipy()
    v = np.ones(g.n) / math.sqrt(g.n)
    res = float("inf")
    for _ in range(max_iter):
        av = a @ v
        lam = float(v @ av)
        res = float(np.linalg.norm(av - lam * v))
        if res <= tol:
            return lam, res
        w = av + v
        v = w / np.linalg.norm(w)
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps", res)


def epidemic_strength(beta: float, gamma: float, lam: float) -> float:
    """Mean-field threshold quantity ``(beta / gamma) * lambda1``."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return beta / gamma * lam
