"""Synthetic networks with local structure.

``local_geometric`` is a plain nearest-neighbor graph in the unit square.
``geometric_communities`` evolves a torus geometry with weak ties and
influence moves until community pockets form. ``random_walk_communities``
adds local random-walk edges on top of a connected base graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .graph import Graph, components, from_edges

__all__ = [
    "GenConfig",
    "local_geometric",
    "geometric_communities",
    "connect_components_chung_lu",
    "random_walk_communities",
    "walk_stop_probability",
    "ring_of_cliques",
    "planted_partition",
    "toroidal_distance",
]


def _knn_edges(pos, k, boxsize=None, chunk=4096):
    """One-sided ``k[v]``-nearest-neighbor choices, ties by ascending id."""
    n = len(pos)
    k = np.minimum(np.asarray(k, dtype=np.int64), n - 1)
    if n < 2 or k.max(initial=0) <= 0:
        return np.zeros((0, 2), dtype=np.int64)
    tree = cKDTree(pos, boxsize=boxsize)
    out = []
    for lo in range(0, n, chunk):
        kk = k[lo:lo + chunk]
        kq = int(kk.max()) + 1
        if kq <= 1:
            continue
        dist, idx = tree.query(pos[lo:lo + chunk], k=kq)
        rows = np.arange(lo, lo + len(kk))[:, None]
        # drop the query point itself, then order by (distance, id)
        self_hit = idx == rows
        dist = np.where(self_hit, -1.0, dist)
        order = np.lexsort((idx, dist), axis=1)
        idx = np.take_along_axis(idx, order, axis=1)[:, 1:]
        keep = np.arange(kq - 1)[None, :] < kk[:, None]
        src = np.broadcast_to(rows, idx.shape)[keep]
        out.append(np.column_stack([src, idx[keep]]))
    return np.concatenate(out) if out else np.zeros((0, 2), dtype=np.int64)


def toroidal_distance(p, q):
    d = np.abs(np.asarray(p) - np.asarray(q))
    d = np.minimum(d, 1.0 - d)
    return np.sqrt((d ** 2).sum(axis=-1))


def local_geometric(n: int, rng=None, kmin: int = 1, kmax: int = 20) -> Graph:
    """Nearest-neighbor graph on uniform points in the unit square.

    Each node draws ``k`` uniformly from ``kmin..kmax`` and links to its ``k``
    nearest Euclidean neighbors; links are then made undirected.
    """
    if n < kmax + 1:
        raise ValueError(f"n must be at least {kmax + 1}")
    rng = np.random.default_rng(rng)
    pos = rng.random((n, 2))
    k = rng.integers(kmin, kmax + 1, size=n)
    return from_edges(n, _knn_edges(pos, k))


# ---------------------------------------------------------------- GeometricCommunities


@dataclass(frozen=True)
class GenConfig:
    """Parameters of the GeometricCommunities process."""

    n: int = 5000
    iterations: int = 150
    log_mean: float = math.log(4)
    log_var: float = 1.0
    gamma: float = 0.95
    noise: float = 0.001
    weak_factor: float = 0.25
    keep_scale: float = 0.85
    correction: float = 0.25
    distance_pairs: int = 10_000
    snapshot_every: int = 10
    seed: int | None = 0

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("n must be at least 3")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if not 0 <= self.gamma <= 1:
            raise ValueError("gamma must lie in [0, 1]")
        if self.noise < 0 or self.log_var < 0:
            raise ValueError("noise and log_var must be non-negative")


def _weighted_draws(weights, size, rng):
    c = np.cumsum(weights, dtype=np.float64)
    return np.minimum(np.searchsorted(c, rng.random(size) * c[-1], side="right"), len(c) - 1)


def _weak_ties(n, deg, counts, rng, rounds=20):
    """Preferential-attachment endpoints for ``counts[v]`` ties out of ``v``."""
    src = np.repeat(np.arange(n), counts)
    dst = np.full(len(src), -1, dtype=np.int64)
    w = deg.astype(np.float64)
    if w.sum() == 0:
        w = np.ones(n)
    todo = np.arange(len(src))
    for _ in range(rounds):
        if len(todo) == 0:
            break
        cand = _weighted_draws(w, len(todo), rng)
        dst[todo] = cand
        pairs = np.minimum(src, dst) * n + np.maximum(src, dst)
        bad = dst == src
        # repeated pairs: keep the first occurrence
        _, first = np.unique(pairs, return_index=True)
        dup = np.ones(len(src), dtype=bool)
        dup[first] = False
        todo = np.flatnonzero((bad | dup) & np.isin(np.arange(len(src)), todo))
    ok = dst != src
    return np.column_stack([src[ok], dst[ok]])


def _mean_pair_distance(pos, pairs, rng):
    n = len(pos)
    a = rng.integers(0, n, size=pairs)
    b = rng.integers(0, n - 1, size=pairs)
    b = b + (b >= a)
    return float(toroidal_distance(pos[a], pos[b]).mean())


def _move(pos, g: Graph, gamma, noise, rng):
    """Step each node toward its highest-degree neighbor on the torus."""
    n = g.n
    deg = g.degree
    rows = np.repeat(np.arange(n), deg)
    # per node, the neighbor with the largest degree (ties by smaller id)
    order = np.lexsort((g.indices, -deg[g.indices], rows))
    first = np.ones(len(order), dtype=bool)
    first[1:] = rows[order][1:] != rows[order][:-1]
    best = np.full(n, -1, dtype=np.int64)
    best[rows[order][first]] = g.indices[order][first]
    has = best >= 0
    target = pos.copy()
    d = pos[best[has]] - pos[has]
    d -= np.rint(d)  # shortest image on the torus
    target[has] = pos[has] + d
    new = gamma * pos + (1 - gamma) * target
    if noise > 0:
        new = new + noise * rng.standard_normal(pos.shape)
    return np.mod(new, 1.0)


def _reconnect_components(g: Graph, rng, per_component=2) -> Graph:
    labels = components(g)
    sizes = np.bincount(labels)
    if len(sizes) == 1:
        return g
    giant = int(np.argmax(sizes))
    gnodes = np.flatnonzero(labels == giant)
    extra = []
    for c in range(len(sizes)):
        if c == giant:
            continue
        nodes = np.flatnonzero(labels == c)
        src = rng.choice(nodes, size=per_component)
        dst = rng.choice(gnodes, size=per_component)
        extra.append(np.column_stack([src, dst]))
    return from_edges(g.n, np.concatenate([g.edges(), *extra]))


def target_degrees(cfg: GenConfig, rng) -> np.ndarray:
    """Log-normal degree targets, rounded and at least 1."""
    d = rng.lognormal(cfg.log_mean, math.sqrt(cfg.log_var), cfg.n)
    return np.maximum(1, np.rint(d)).astype(np.int64)


def geometric_communities(cfg: GenConfig = GenConfig(), rng=None, return_snapshots: bool = False):
    """Evolve a torus nearest-neighbor graph with weak ties and influence moves.

    Per iteration: keep only edges at least as long as the sampled mean pair
    distance, move nodes toward their highest-degree neighbor, reconnect each
    node's adjusted residual degree to nearest neighbors, then tie every
    non-giant component to the giant component with two random edges.

    Returns the final graph, or ``(graph, snapshots)`` with a snapshot every
    ``cfg.snapshot_every`` iterations (keyed by iteration number, including 0).
    """
    rng = np.random.default_rng(cfg.seed if rng is None else rng)
    n = cfg.n
    pos = rng.random((n, 2))
    target = target_degrees(cfg, rng)

    local = from_edges(n, _knn_edges(pos, target, boxsize=1.0))
    weak = _weak_ties(n, local.degree, np.ceil(cfg.weak_factor * np.sqrt(target)).astype(np.int64), rng)
    g = from_edges(n, np.concatenate([local.edges(), weak]))
    snaps = {0: g}
    for it in range(1, cfg.iterations + 1):
        e = g.edges()
        thresh = _mean_pair_distance(pos, cfg.distance_pairs, rng)
        kept = e[toroidal_distance(pos[e[:, 0]], pos[e[:, 1]]) >= thresh]
        pos = _move(pos, g, cfg.gamma, cfg.noise, rng)
        kdeg = np.bincount(kept.ravel(), minlength=n)
        resid = np.maximum(target - kdeg, 0)
        k = np.rint(cfg.keep_scale * resid + np.maximum(0, cfg.correction * (target - resid)))
        k = np.maximum(k, 0).astype(np.int64)
        g = from_edges(n, np.concatenate([kept, _knn_edges(pos, k, boxsize=1.0)]))
        g = _reconnect_components(g, rng)
        if cfg.snapshot_every and it % cfg.snapshot_every == 0:
            snaps[it] = g
    return (g, snaps) if return_snapshots else g


# ---------------------------------------------------------------- RandomWalkCommunities


def connect_components_chung_lu(g: Graph, rng=None, cap: int | None = None) -> Graph:
    """Add degree-biased random edges that merge components until connected.

    Endpoints are drawn with probability proportional to ``degree + 1``; a
    proposal is kept only when it joins two different components, so ``k``
    components receive exactly ``k - 1`` edges.
    """
    ncomp, labels = connected_components(g.to_scipy(), directed=False)
    if ncomp <= 1:
        return g
    rng = np.random.default_rng(rng)
    cap = 1000 * g.n + 10**6 if cap is None else cap
    # union-find over component labels, addressed through a representative node
    parent = np.arange(g.n, dtype=np.int64)
    rep = np.full(ncomp, -1, dtype=np.int64)
    for v in range(g.n):
        if rep[labels[v]] < 0:
            rep[labels[v]] = v
    parent[:] = rep[labels]
    cum = np.cumsum(g.degree + 1).astype(np.float64)
    added, ok = _cl_kernel_endpoints(cum, parent, ncomp, cap, rng)
    if not ok:
        raise RuntimeError(f"component merging exceeded {cap} proposals")
    return from_edges(g.n, np.concatenate([g.edges(), added]))


@numba.njit(cache=True)
def _find(parent, x):
    r = x
    while parent[r] != r:
        r = parent[r]
    while parent[x] != r:
        nxt = parent[x]
        parent[x] = r
        x = nxt
    return r


@numba.njit(cache=True)
def _cl_kernel_endpoints(cum, parent, ncomp, cap, rng):
    total = cum[-1]
    out = np.empty((ncomp - 1, 2), dtype=np.int64)
    added = 0
    tries = 0
    while ncomp > 1:
        if tries >= cap:
            return out[:added], False
        tries += 1
        u = np.searchsorted(cum, rng.random() * total, side="right")
        v = np.searchsorted(cum, rng.random() * total, side="right")
        ru = _find(parent, u)
        rv = _find(parent, v)
        if ru == rv:
            continue
        parent[ru] = rv
        out[added, 0] = min(u, v)
        out[added, 1] = max(u, v)
        added += 1
        ncomp -= 1
    return out, True


def walk_stop_probability(degree: int, maxdepth: int = 100) -> float:
    """Per-step stop probability of a walk whose seed has ``degree`` neighbors."""
    return 1.0 / max(maxdepth - degree + 1, 3)


def random_walk_communities(base: Graph, n_walks: int, rng=None, maxdepth: int = 100,
                            mark_prob: float = 0.5, snapshot_every: int = 1000,
                            return_snapshots: bool = False):
    """Grow local structure with random walks from uniform seed nodes.

    A walk from seed ``v`` stops after each step with probability
    ``1 / max(maxdepth - d[v] + 1, 3)`` (``d[v]`` read when the walk starts).
    Before each stop test the current node is marked with probability
    ``mark_prob``; on stopping, ``v`` is linked to every marked node.
    """
    if n_walks < 0:
        raise ValueError("n_walks must be non-negative")
    rng = np.random.default_rng(rng)
    n = base.n
    adj = [list(base.neighbors(v)) for v in range(n)]
    nbrset = [set(a) for a in adj]
    snaps = {0: base}
    for w in range(1, n_walks + 1):
        v = int(rng.integers(n))
        stop = walk_stop_probability(len(adj[v]), maxdepth)
        cur = v
        marked = []
        while True:
            if rng.random() < mark_prob:
                marked.append(cur)
            if rng.random() < stop or not adj[cur]:
                break
            cur = adj[cur][int(rng.integers(len(adj[cur])))]
        for u in marked:
            if u != v and u not in nbrset[v]:
                nbrset[v].add(u)
                nbrset[u].add(v)
                adj[v].append(u)
                adj[u].append(v)
        if snapshot_every and w % snapshot_every == 0:
            snaps[w] = _from_adj(n, adj)
    g = _from_adj(n, adj) if n_walks else base
    return (g, snaps) if return_snapshots else g


def _from_adj(n, adj):
    src = np.repeat(np.arange(n), [len(a) for a in adj])
    dst = np.fromiter((u for a in adj for u in a), dtype=np.int64, count=len(src))
    return from_edges(n, np.column_stack([src, dst]))


# ---------------------------------------------------------------- small fixtures


def ring_of_cliques(n_cliques: int, clique_size: int) -> Graph:
    """Cliques on consecutive ids, the last node of each linked to the next clique."""
    if n_cliques < 1 or clique_size < 1:
        raise ValueError("need at least one clique of at least one node")
    c = clique_size
    iu, ju = np.triu_indices(c, 1)
    offs = np.arange(n_cliques)[:, None] * c
    inner = np.column_stack([(offs + iu).ravel(), (offs + ju).ravel()])
    if n_cliques > 1:
        b = np.arange(n_cliques)
        ring = np.column_stack([b * c + c - 1, ((b + 1) % n_cliques) * c])
        inner = np.concatenate([inner, ring])
    return from_edges(n_cliques * c, inner)


def planted_partition(n_blocks: int, block_size: int, p_in: float, p_out: float, rng=None) -> Graph:
    """Stochastic block model with equal blocks; a small stand-in base graph for tests."""
    rng = np.random.default_rng(rng)
    n = n_blocks * block_size
    iu, ju = np.triu_indices(n, 1)
    same = iu // block_size == ju // block_size
    p = np.where(same, p_in, p_out)
    hit = rng.random(len(iu)) < p
    return from_edges(n, np.column_stack([iu[hit], ju[hit]]))
