"""Graph perturbations used to strip local structure from a network.

All rewiring routines start from the graph they are given and return a new
:class:`~epinet.graph.Graph`; inputs are never modified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from numba import types
from numba.typed import Dict

from .graph import Graph, from_edges, giant_component

__all__ = [
    "RewireSchedule",
    "RejectionCapError",
    "rewire_gnp",
    "rewire_cm",
    "rewire_schedule",
    "rewire_series",
    "shuffle_triangles",
    "sparsify_common_neighbors",
    "intra_community_shuffle",
]

MAX_REJECTIONS = 1000


class RejectionCapError(RuntimeError):
    """Raised when a rewiring step keeps rejecting proposals."""


@dataclass(frozen=True)
class RewireSchedule:
    """Rewiring amounts as multiples of ``m`` and the matching step counts."""

    fractions: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.fractions, dtype=np.float64)
        c = np.asarray(self.counts, dtype=np.int64)
        if len(f) != len(c):
            raise ValueError("fractions and counts differ in length")
        if np.any(np.diff(f) <= 0) or np.any(np.diff(c) <= 0):
            raise ValueError("schedule must be strictly increasing")
        if len(f) and (f[0] < 1e-4 - 1e-15 or f[-1] > 100 + 1e-12):
            raise ValueError("fractions must lie in [1e-4, 100]")
        object.__setattr__(self, "fractions", f)
        object.__setattr__(self, "counts", c)

    def __len__(self):
        return len(self.counts)

    def __iter__(self):
        return iter(self.counts.tolist())


def rewire_schedule(m: int, points: int = 17, lo: float = 1e-4, hi: float = 100.0) -> RewireSchedule:
    """Log-spaced rewiring counts ``round(f * m)`` for ``f`` in ``[lo, hi]``.

    Zero counts and repeated counts are dropped (the first fraction is kept).
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    fr = np.logspace(math.log10(lo), math.log10(hi), points)
    counts = np.rint(fr * m).astype(np.int64)
    keep = counts > 0
    fr, counts = fr[keep], counts[keep]
    _, first = np.unique(counts, return_index=True)
    first = np.sort(first)
    return RewireSchedule(fr[first], counts[first])


# ---------------------------------------------------------------- kernels


def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


@numba.njit(cache=True)
def _edge_dict(u, v, n):
    d = Dict.empty(key_type=types.int64, value_type=types.int64)
    for i in range(len(u)):
        d[u[i] * n + v[i]] = i
    return d


@numba.njit(cache=True)
def _key(a, b, n):
    if a < b:
        return a * n + b
    return b * n + a


@numba.njit(cache=True)
def _gnp_kernel(u, v, n, count, cap, rng):
    m = len(u)
    d = _edge_dict(u, v, n)
    for _ in range(count):
        i = rng.integers(0, m)
        tries = 0
        while True:
            a = rng.integers(0, n)
            b = rng.integers(0, n)
            # the edge being replaced still counts as present
            if a != b and _key(a, b, n) not in d:
                break
            tries += 1
            if tries >= cap:
                return False
        del d[u[i] * n + v[i]]
        if a > b:
            a, b = b, a
        u[i] = a
        v[i] = b
        d[a * n + b] = i
    return True


@numba.njit(cache=True)
def _cm_kernel(u, v, n, count, cap, rng):
    m = len(u)
    d = _edge_dict(u, v, n)
    for _ in range(count):
        tries = 0
        while True:
            i = rng.integers(0, m)
            j = rng.integers(0, m - 1)
            if j >= i:
                j += 1
            a, b = u[i], v[i]
            c, e = u[j], v[j]
            if rng.random() < 0.5:
                c, e = e, c
            # (a,b),(c,e) -> (a,e),(c,b)
            ok = a != e and c != b
            if ok:
                del d[u[i] * n + v[i]]
                del d[u[j] * n + v[j]]
                k1 = _key(a, e, n)
                k2 = _key(c, b, n)
                if k1 in d or k2 in d or k1 == k2:
                    ok = False
                    d[u[i] * n + v[i]] = i
                    d[u[j] * n + v[j]] = j
                else:
                    u[i], v[i] = k1 // n, k1 % n
                    u[j], v[j] = k2 // n, k2 % n
                    d[k1] = i
                    d[k2] = j
            if ok:
                break
            tries += 1
            if tries >= cap:
                return False
    return True


@numba.njit(cache=True)
def _shuffle_kernel(tri, n, count, rng):
    h = len(tri)
    for _ in range(count):
        i = rng.integers(0, h)
        a = rng.integers(0, n)
        b = rng.integers(0, n - 1)
        if b >= a:
            b += 1
        c = rng.integers(0, n - 2)
        lo, hi = min(a, b), max(a, b)
        if c >= lo:
            c += 1
        if c >= hi:
            c += 1
        x, y, z = a, b, c
        if x > y:
            x, y = y, x
        if y > z:
            y, z = z, y
        if x > y:
            x, y = y, x
        tri[i, 0], tri[i, 1], tri[i, 2] = x, y, z


# ---------------------------------------------------------------- operations


def rewire_gnp(g: Graph, count: int, rng=None) -> Graph:
    """Uniform rewiring towards a G(n, p) graph with the same edge count.

    Each of ``count`` steps removes a uniformly chosen edge and inserts an edge
    between two uniform distinct nodes, resampling proposals that are
    self-loops or already present.

    Raises
    ------
    RejectionCapError
        If no valid insertion exists (complete graphs) or 1000 consecutive
        proposals are rejected.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0 or g.m == 0:
        return g
    if g.m >= g.n * (g.n - 1) // 2:
        raise RejectionCapError("graph is complete; no edge can be inserted")
    e = g.edges()
    u, v = e[:, 0].copy(), e[:, 1].copy()
    if not _gnp_kernel(u, v, g.n, int(count), MAX_REJECTIONS, _rng(rng)):
        raise RejectionCapError(f"{MAX_REJECTIONS} consecutive proposals rejected")
    return from_edges(g.n, np.column_stack([u, v]))


def rewire_cm(g: Graph, count: int, rng=None) -> Graph:
    """Degree-preserving rewiring by ``count`` double edge swaps.

    Edges ``(a, b), (c, d)`` become ``(a, d), (c, b)`` or ``(a, c), (b, d)``
    with equal probability. Proposals creating a self-loop or duplicate are
    rejected and redrawn; a swap that reproduces the same edge pair counts.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0:
        return g
    if g.m < 2:
        raise RejectionCapError("at least two edges are needed for a swap")
    e = g.edges()
    u, v = e[:, 0].copy(), e[:, 1].copy()
    if not _cm_kernel(u, v, g.n, int(count), MAX_REJECTIONS, _rng(rng)):
        raise RejectionCapError(f"{MAX_REJECTIONS} consecutive proposals rejected")
    return from_edges(g.n, np.column_stack([u, v]))


def rewire_series(g: Graph, schedule, mode: str = "cm", seed: int = 0) -> list:
    """Rewired copies of ``g``, one per count in ``schedule``.

    Every copy starts from ``g`` with a generator seeded by ``seed``, so the
    step sequence of a smaller count is a prefix of every larger one and
    neighboring copies differ only by the extra steps.
    """
    fn = {"cm": rewire_cm, "gnp": rewire_gnp}.get(mode)
    if fn is None:
        raise ValueError(f"unknown rewiring mode {mode!r}")
    return [fn(g, int(c), np.random.default_rng(seed)) for c in schedule]


def shuffle_triangles(h, n: int, count: int, rng=None) -> np.ndarray:
    """Replace ``count`` uniformly drawn hyperedges with random node triples.

    Returns a new ``(|h|, 3)`` array of sorted triples.
    """
    if n < 3:
        raise ValueError("need at least 3 nodes to place a triangle")
    if count < 0:
        raise ValueError("count must be non-negative")
    tri = np.array(h, dtype=np.int64).reshape(-1, 3)
    if len(tri) and (tri.min() < 0 or tri.max() >= n):
        raise ValueError("hyperedge node out of range")
    if count == 0:
        return tri
    if len(tri) == 0:
        raise ValueError("cannot shuffle an empty hyperedge list")
    _shuffle_kernel(tri, n, int(count), _rng(rng))
    return tri


def sparsify_common_neighbors(g: Graph, keep_fraction: float) -> Graph:
    """Keep edges elected by either endpoint, then take the giant component.

    Node ``u`` scores neighbor ``v`` by ``|N(u) & N(v)| / d_u`` and elects its
    ``ceil(keep_fraction * d_u)`` best, ties going to the smaller id.
    """
    if not 0 < keep_fraction <= 1:
        raise ValueError("keep_fraction must lie in (0, 1]")
    if g.m == 0:
        return giant_component(g)[0]
    a = g.to_scipy()
    # common-neighbor counts on the edges of a, in a's sparsity pattern
    cn = (a @ a).multiply(a).tocsr()
    cn.sort_indices()
    score = np.zeros(len(g.indices))
    rows = np.repeat(np.arange(g.n), g.degree)
    # map cn entries back onto CSR slots; an edge with no common neighbor is absent
    crow = np.repeat(np.arange(g.n), np.diff(cn.indptr))
    lookup = crow * g.n + cn.indices
    slot = rows * g.n + g.indices
    idx = np.searchsorted(slot, lookup)
    score[idx] = cn.data
    order = np.lexsort((g.indices, -score, rows))
    rank = np.empty(len(order), dtype=np.int64)
    rank[order] = np.arange(len(order)) - np.repeat(g.indptr[:-1], g.degree)
    k = np.ceil(keep_fraction * g.degree - 1e-12).astype(np.int64)
    elected = rank < np.repeat(k, g.degree)
    kept = np.column_stack([rows[elected], g.indices[elected]])
    return giant_component(from_edges(g.n, kept))[0]


def intra_community_shuffle(g: Graph, partition, rng=None, swaps_per_edge: int = 100) -> Graph:
    """Randomize edges inside each community; edges between communities stay.

    Each community with at least two internal edges receives
    ``swaps_per_edge * m_c`` double edge swaps among its own edges.
    """
    part = np.asarray(partition)
    if part.shape != (g.n,):
        raise ValueError(f"partition must assign all {g.n} nodes")
    if np.issubdtype(part.dtype, np.integer) and np.any(part < 0):
        raise ValueError("partition contains unassigned nodes")
    rng = _rng(rng)
    e = g.edges()
    same = part[e[:, 0]] == part[e[:, 1]]
    out = [e[~same]]
    inner = e[same]
    labels = part[inner[:, 0]]
    for c in np.unique(labels):
        ec = inner[labels == c]
        if len(ec) >= 2:
            u, v = ec[:, 0].copy(), ec[:, 1].copy()
            if not _cm_kernel(u, v, g.n, swaps_per_edge * len(ec), MAX_REJECTIONS, rng):
                raise RejectionCapError(f"community {c!r}: swaps kept being rejected")
            ec = np.column_stack([u, v])
        out.append(ec)
    return from_edges(g.n, np.concatenate(out))
