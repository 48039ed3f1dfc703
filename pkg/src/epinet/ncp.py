"""Network community profiles from epidemic and seeded-PageRank rankings.

A profile is built by ranking nodes around a seed, sweeping over the prefix
sets of the ranking and keeping a few low-conductance prefixes per size
regime. :func:`aancp` condenses a profile into one number: the normalized
area above its minimum-conductance envelope in log-log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .epidemic import EpidemicParams, Simulator
from .graph import Graph

__all__ = [
    "NcpSample",
    "NcpProfile",
    "EpidemicRanking",
    "Sweep",
    "WeightedProfile",
    "epidemic_ranking",
    "sweepcut",
    "sweep_order",
    "subsample_profile",
    "epidemic_ncp",
    "ppr_push",
    "ppr_ncp",
    "aancp",
    "aancp_xy",
    "missed_sets",
    "REGIME_SPLITS",
    "EPS_LADDER",
]

REGIME_SPLITS = (1e2, 1e3, 1e4, 1e5)
EPS_LADDER = np.logspace(-8, -2, 12)
SIZE_BINS = 50
COND_BINS = 50
COND_FLOOR = 1e-6


@dataclass
class NcpSample:
    seed: int
    size: int
    conductance: float
    cut: int
    volume: int
    members: np.ndarray | None = None

    def to_record(self) -> dict:
        rec = {"seed": int(self.seed), "size": int(self.size),
               "conductance": float(self.conductance), "cut": int(self.cut),
               "volume": int(self.volume)}
        if self.members is not None:
            rec["members"] = [int(v) for v in self.members]
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> NcpSample:
        members = rec.get("members")
        return cls(int(rec["seed"]), int(rec["size"]), float(rec["conductance"]),
                   int(rec["cut"]), int(rec["volume"]),
                   None if members is None else np.asarray(members, dtype=np.int64))


@dataclass
class EpidemicRanking:
    scores: np.ndarray
    seed: int


@dataclass
class Sweep:
    """Prefix statistics of a node ordering; entry ``k-1`` describes the top-``k`` set."""

    order: np.ndarray
    cut: np.ndarray
    volume: np.ndarray
    conductance: np.ndarray
    total_volume: int

    @property
    def sizes(self) -> np.ndarray:
        return np.arange(1, len(self.conductance) + 1)

    def __len__(self):
        return len(self.conductance)


def _edges(lo, hi, k):
    return np.logspace(math.log10(lo), math.log10(hi), k + 1)


@dataclass
class NcpProfile:
    """2-D histogram of sample sizes against conductances.

    Sizes are binned on ``[1, n/2]`` and conductances on ``[1e-6, 1]``, both
    with log-spaced edges. ``density`` is column-normalized so every
    non-empty size column peaks at exactly 1.
    """

    n: int
    samples: list = field(default_factory=list)
    size_edges: np.ndarray = field(init=False)
    cond_edges: np.ndarray = field(init=False)
    counts: np.ndarray = field(init=False)
    density: np.ndarray = field(init=False)
    column_max: np.ndarray = field(init=False)

    def __post_init__(self):
        self.size_edges = _edges(1.0, max(self.n / 2, 2.0), SIZE_BINS)
        self.cond_edges = _edges(COND_FLOOR, 1.0, COND_BINS)
        x, y = self._coords()
        self.counts, _, _ = np.histogram2d(x, y, bins=[self.size_edges, self.cond_edges])
        self.column_max = self.counts.max(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            self.density = np.where(self.column_max[:, None] > 0,
                                    self.counts / self.column_max[:, None], 0.0)

    def _coords(self):
        size = np.array([s.size for s in self.samples], dtype=np.float64)
        cond = np.array([s.conductance for s in self.samples], dtype=np.float64)
        return (np.clip(size, 1.0, self.size_edges[-1]),
                np.clip(cond, COND_FLOOR, 1.0))

    def size_column(self, size) -> np.ndarray:
        s = np.clip(np.asarray(size, dtype=np.float64), 1.0, self.size_edges[-1])
        return np.clip(np.searchsorted(self.size_edges, s, side="right") - 1, 0, SIZE_BINS - 1)

    def envelope(self) -> tuple[np.ndarray, np.ndarray]:
        """Per occupied size column, the minimum-conductance sample.

        Returns sizes normalized by ``n/2`` (capped at 1) and the conductances.
        """
        if not self.samples:
            return np.zeros(0), np.zeros(0)
        x, y = self._coords()
        col = self.size_column(x)
        order = np.lexsort((x, y, col))
        first = np.ones(len(order), dtype=bool)
        first[1:] = col[order][1:] != col[order][:-1]
        pick = order[first]
        half = self.n / 2
        return np.minimum(x[pick] / half, 1.0), y[pick]


# ---------------------------------------------------------------- sweeps


@numba.njit(cache=True)
def _sweep(indptr, indices, order, limit):
    n = len(indptr) - 1
    inset = np.zeros(n, dtype=np.bool_)
    total = len(indices)
    cut = np.empty(limit, dtype=np.int64)
    vol = np.empty(limit, dtype=np.int64)
    cond = np.empty(limit, dtype=np.float64)
    c = 0
    w = 0
    for k in range(limit):
        v = order[k]
        inside = 0
        for a in range(indptr[v], indptr[v + 1]):
            if inset[indices[a]]:
                inside += 1
        d = indptr[v + 1] - indptr[v]
        c += d - 2 * inside
        w += d
        inset[v] = True
        cut[k] = c
        vol[k] = w
        denom = min(w, total - w)
        cond[k] = c / denom if denom > 0 else 1.0
    return cut, vol, cond


def sweep_order(g: Graph, order) -> Sweep:
    """Sweep over prefixes of an explicit node order (at most ``n - 1`` of them)."""
    order = np.asarray(order, dtype=np.int64)
    limit = min(len(order), g.n - 1)
    cut, vol, cond = _sweep(g.indptr, g.indices, order, limit)
    return Sweep(order[:limit], cut, vol, cond, g.volume)


def rank_order(scores) -> np.ndarray:
    """Indices by descending score, ties broken by ascending id."""
    scores = np.asarray(scores, dtype=np.float64)
    return np.lexsort((np.arange(len(scores)), -scores))


def sweepcut(g: Graph, scores) -> Sweep:
    """Conductance of every top-``k`` set of ``scores``, ``k = 1..n-1``.

    A side with zero volume gives conductance 1.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (g.n,) or not np.all(np.isfinite(scores)):
        raise ValueError("scores must be n finite values")
    return sweep_order(g, rank_order(scores))


def _smaller_side(sweep: Sweep, k: int, n: int, seed: int, with_members: bool) -> NcpSample:
    vol = int(sweep.volume[k - 1])
    cut = int(sweep.cut[k - 1])
    cond = float(sweep.conductance[k - 1])
    members = None
    if 2 * vol <= sweep.total_volume:
        size = k
        if with_members:
            members = np.sort(sweep.order[:k])
    else:
        size, vol = n - k, sweep.total_volume - vol
        if with_members:
            mask = np.ones(n, dtype=bool)
            mask[sweep.order[:k]] = False
            members = np.flatnonzero(mask)
    return NcpSample(seed, size, cond, cut, vol, members)


def subsample_profile(sweep: Sweep, rng=None, r: int = 8, seed: int = -1, n: int | None = None,
                      splits=REGIME_SPLITS) -> list[NcpSample]:
    """Pick low-conductance prefixes from a sweep, ``r`` per size regime.

    Sizes split into regimes at ``splits``. For each regime a window
    ``(lo, hi]`` is drawn log-uniformly inside it and the best prefix in the
    window is kept (smallest size on ties). Empty windows are skipped.
    """
    if len(sweep) == 0:
        raise ValueError("empty sweep")
    rng = np.random.default_rng(rng)
    n = len(sweep.order) + 1 if n is None else n
    kmax = len(sweep)
    cond = sweep.conductance
    out = []
    # half-open regimes [a, b); the last one ends past kmax so kmax is reachable
    bounds = [1.0, *[s for s in splits if s < kmax], float(kmax + 1)]
    for a, b in zip(bounds[:-1], bounds[1:]):
        for _ in range(r):
            lo, hi = np.sort(np.exp(rng.uniform(math.log(a), math.log(b), size=2)))
            k0, k1 = int(math.floor(lo)), int(math.floor(hi))
            if k1 <= k0:
                continue
            # sizes k0+1..k1 sit at indices k0..k1-1
            k = k0 + 1 + int(np.argmin(cond[k0:k1]))
            out.append(_smaller_side(sweep, k, n, seed, False))
    return out


# ---------------------------------------------------------------- epidemic NCP


RANKING_PARAMS = EpidemicParams(beta=0.3, gamma=0.05, model="seir")


def epidemic_ranking(g: Graph, seed: int, trials: int = 20, beta: float = 0.3, rng=None,
                     max_trivial: int = 5, simulator: Simulator | None = None):
    """Score nodes by how early epidemics from ``seed`` reach them.

    ``s[v] = -sum_i min(t_i[v], l_i + 1)`` where ``t_i[v]`` is the infection
    time in trial ``i`` and ``l_i`` its end time; nodes never reached count
    ``l_i + 1``. Returns ``None`` when more than ``max_trivial`` trials fail
    to infect anyone besides the seed.
    """
    rng = np.random.default_rng(rng)
    sim = simulator or Simulator(g, RANKING_PARAMS.with_(beta=beta))
    scores = np.zeros(g.n)
    trivial = 0
    for _ in range(trials):
        out = sim.run(seed, rng)
        if out.total_infected <= 1:
            trivial += 1
            if trivial > max_trivial:
                return None
        cap = out.end_time + 1
        t = out.infection_time
        scores -= np.where(t < 0, cap, np.minimum(t, cap))
    return EpidemicRanking(scores, int(seed))


def epidemic_ncp(g: Graph, seeds: int, trials_per_seed: int = 20, rng=None, beta: float = 0.3,
                 r: int = 8) -> NcpProfile:
    """Epidemic NCP from ``seeds`` seed nodes drawn uniformly with replacement.

    Raises
    ------
    RuntimeError
        If every seed is rejected.
    """
    if seeds < 1:
        raise ValueError("seeds must be at least 1")
    if g.n < 2:
        raise ValueError("graph needs at least two nodes")
    rng = np.random.default_rng(rng)
    sim = Simulator(g, RANKING_PARAMS.with_(beta=beta))
    picks = rng.integers(0, g.n, size=seeds)
    samples = []
    accepted = 0
    for s in picks:
        rank = epidemic_ranking(g, int(s), trials_per_seed, beta, rng, simulator=sim)
        if rank is None:
            continue
        accepted += 1
        samples.extend(subsample_profile(sweepcut(g, rank.scores), rng, r, int(s), g.n))
    if not accepted:
        raise RuntimeError("all seeds were rejected")
    return NcpProfile(g.n, samples)


# ---------------------------------------------------------------- PageRank NCP


@numba.njit(cache=True)
def _push(indptr, indices, seed, alpha, eps):
    n = len(indptr) - 1
    x = np.zeros(n)
    r = np.zeros(n)
    queued = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n + 1, dtype=np.int64)
    head = 0
    tail = 0
    r[seed] = 1.0
    queue[tail] = seed
    tail += 1
    queued[seed] = True
    while head != tail:
        v = queue[head]
        head = (head + 1) % (n + 1)
        queued[v] = False
        d = indptr[v + 1] - indptr[v]
        rv = r[v]
        if d > 0 and rv < eps * d:
            continue
        x[v] += (1 - alpha) * rv
        r[v] = 0.0
        if d == 0:
            # an isolated node loses the remaining mass
            continue
        share = alpha * rv / d
        for a in range(indptr[v], indptr[v + 1]):
            w = indices[a]
            r[w] += share
            if not queued[w] and r[w] >= eps * (indptr[w + 1] - indptr[w]):
                queue[tail] = w
                tail = (tail + 1) % (n + 1)
                queued[w] = True
    return x, r


def ppr_push(g: Graph, seed: int, alpha: float = 0.99, epsilon: float = 1e-4,
             return_residual: bool = False):
    """Approximate seeded PageRank ``(I - alpha P) x = (1 - alpha) e_seed``.

    ``P = A D^-1``. Pushes until every residual satisfies ``r[v] < eps * d(v)``.
    The exact solution is ``x + (1 - alpha) (I - alpha P)^-1 r``.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not 0 <= seed < g.n:
        raise IndexError(f"seed {seed} out of range")
    x, r = _push(g.indptr, g.indices, int(seed), float(alpha), float(epsilon))
    return (x, r) if return_residual else x


def ppr_ncp(g: Graph, seeds: int, rng=None, alpha: float | None = None,
            eps_ladder=EPS_LADDER) -> tuple[NcpProfile, list[NcpSample]]:
    """PageRank NCP; one best sweep set per seed and tolerance.

    Nodes in the support of each push vector are ranked by ``x[v] / d(v)``.
    ``alpha`` defaults to 0.995 above 45,000 nodes and 0.99 otherwise.
    """
    if seeds < 1:
        raise ValueError("seeds must be at least 1")
    if alpha is None:
        alpha = 0.995 if g.n > 45_000 else 0.99
    rng = np.random.default_rng(rng)
    picks = rng.integers(0, g.n, size=seeds)
    deg = np.maximum(g.degree, 1)
    sets = []
    for s in picks:
        for eps in eps_ladder:
            x = ppr_push(g, int(s), alpha, float(eps))
            support = np.flatnonzero(x > 0)
            sc = x[support] / deg[support]
            order = support[np.lexsort((support, -sc))]
            sw = sweep_order(g, order)
            if len(sw) == 0:
                continue
            k = 1 + int(np.argmin(sw.conductance))
            sets.append(_smaller_side(sw, k, g.n, int(s), True))
    return NcpProfile(g.n, sets), sets


# ---------------------------------------------------------------- AANCP


def aancp_xy(x, y) -> float:
    """Normalized area of ``-log10(y)`` over ``log10(x)``.

    Repeated ``x`` keep their smallest ``y``. The trapezoid integral is
    divided by the ``log10(x)`` span.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("x and y must be positive")
    ux = np.unique(x)
    if len(ux) < 2:
        raise ValueError("need at least two distinct sizes")
    uy = np.full(len(ux), np.inf)
    np.minimum.at(uy, np.searchsorted(ux, x), y)
    lx = np.log10(ux)
    depth = -np.log10(uy)
    area = float(np.sum((depth[1:] + depth[:-1]) * np.diff(lx)) / 2)
    return area / float(lx[-1] - lx[0])


def aancp(profile: NcpProfile | list, n: int | None = None) -> float:
    """AANCP of a profile (or a list of samples on an ``n``-node graph)."""
    if not isinstance(profile, NcpProfile):
        if n is None:
            raise ValueError("n is required when passing raw samples")
        profile = NcpProfile(n, list(profile))
    elif n is not None and n != profile.n:
        profile = NcpProfile(n, profile.samples)
    if not profile.samples:
        raise ValueError("empty profile")
    x, y = profile.envelope()
    return aancp_xy(x, y)


# ---------------------------------------------------------------- missed sets


@dataclass
class WeightedProfile:
    """Per-bin susceptible fraction of the nodes in the sets of that bin."""

    size_edges: np.ndarray
    cond_edges: np.ndarray
    weight: np.ndarray  # nan where no set falls
    occurrences: np.ndarray
    set_counts: np.ndarray

    def occupied(self):
        """``(size_bin, cond_bin, weight)`` for every non-empty bin."""
        i, j = np.nonzero(self.occurrences > 0)
        return i, j, self.weight[i, j]

    def to_records(self) -> list[dict]:
        recs = []
        for i, j, w in zip(*self.occupied()):
            recs.append({
                "size_lo": float(self.size_edges[i]), "size_hi": float(self.size_edges[i + 1]),
                "cond_lo": float(self.cond_edges[j]), "cond_hi": float(self.cond_edges[j + 1]),
                "weight": float(w), "sets": int(self.set_counts[i, j]),
                "occurrences": int(self.occurrences[i, j]),
            })
        return recs


def missed_sets(sets, susceptible, n: int | None = None) -> WeightedProfile:
    """Weight each NCP bin by how often its sets' members escaped infection.

    Parameters
    ----------
    sets : list of NcpSample
        Samples with ``members`` (from :func:`ppr_ncp`).
    susceptible : array
        Either per-node flags of shape ``(n,)`` or ``(runs, n)``, or per-node
        susceptible fractions in ``[0, 1]``.
    """
    s = np.asarray(susceptible, dtype=np.float64)
    if s.ndim == 2:
        s = s.mean(axis=0)
    if n is None:
        n = len(s)
    if len(s) != n:
        raise ValueError("susceptible flags and graph size disagree")
    prof = NcpProfile(n, [])
    hits = np.zeros((SIZE_BINS, COND_BINS))
    occ = np.zeros((SIZE_BINS, COND_BINS), dtype=np.int64)
    nsets = np.zeros((SIZE_BINS, COND_BINS), dtype=np.int64)
    for smp in sets:
        if smp.members is None or len(smp.members) == 0:
            continue
        i = int(prof.size_column(smp.size))
        c = min(max(smp.conductance, COND_FLOOR), 1.0)
        j = min(int(np.searchsorted(prof.cond_edges, c, side="right")) - 1, COND_BINS - 1)
        hits[i, j] += s[smp.members].sum()
        occ[i, j] += len(smp.members)
        nsets[i, j] += 1
    with np.errstate(invalid="ignore", divide="ignore"):
        weight = np.where(occ > 0, hits / occ, np.nan)
    return WeightedProfile(prof.size_edges, prof.cond_edges, weight, occ, nsets)
