"""SIR/SEIR epidemics with local quarantining.

The public entry points are :func:`run_epidemic` (pairwise transmission),
:func:`run_epidemic_weighted` (triangle-weighted transmission) and
:func:`naive_oracle` (slow reference sweep used to certify the engine).
Repeated runs on one graph should go through :class:`Simulator`, which
prepares the transmission arrays and workspace once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from ..graph import Graph, pair_counts
from . import engine, oracle

__all__ = [
    "EpidemicParams",
    "EpidemicOutcome",
    "Simulator",
    "run_epidemic",
    "run_epidemic_weighted",
    "naive_oracle",
    "edge_weights",
    "quarantine_impact",
]

WEIGHT_CLAMP = (1e-6, 1 - 1e-6)


@dataclass(frozen=True)
class EpidemicParams:
    """Simulation configuration.

    ``q_duration`` defaults to ``round(1 / gamma)`` (20 steps for the usual
    gamma = 0.05) and ``max_steps`` to ``100 * q_duration``.
    """

    beta: float
    gamma: float = 0.05
    model: str = "seir"
    exposed_mean: float = 5.0
    q_capacity_fraction: float = 0.0
    q_duration: int | None = None
    detect_threshold: int = 100
    node_detect_delay: int = 1
    neighbor_q_delay: int = 1
    max_steps: int | None = None

    def __post_init__(self):
        if self.model not in ("sir", "seir"):
            raise ValueError(f"model must be 'sir' or 'seir', got {self.model!r}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.exposed_mean < 1.0:
            raise ValueError("exposed_mean must be at least one step")
        if self.q_capacity_fraction < 0:
            raise ValueError("q_capacity_fraction must be non-negative")
        if self.q_duration is None:
            object.__setattr__(self, "q_duration", max(1, round(1.0 / self.gamma)))
        if self.q_duration < 1:
            raise ValueError("q_duration must be at least one step")
        if self.max_steps is None:
            object.__setattr__(self, "max_steps", 100 * self.q_duration)
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least one step")
        if min(self.node_detect_delay, self.neighbor_q_delay, self.detect_threshold) < 0:
            raise ValueError("delays and threshold must be non-negative")

    @property
    def seir(self) -> bool:
        return self.model == "seir"

    def capacity(self, n: int) -> int:
        return int(math.floor(self.q_capacity_fraction * n + 1e-9))

    def with_(self, **changes) -> EpidemicParams:
        return replace(self, **changes)


@dataclass
class EpidemicOutcome:
    new_infections: np.ndarray
    net_infections: np.ndarray
    final_susceptible: np.ndarray
    infection_time: np.ndarray  # -1 for nodes never exposed
    end_time: int
    truncated: bool = False
    quarantined: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    violations: int = 0

    @property
    def total_infected(self) -> int:
        return int(self.new_infections.sum())

    def to_record(self) -> dict:
        return {
            "new_infections": self.new_infections.tolist(),
            "net_infections": self.net_infections.tolist(),
            "total": self.total_infected,
            "end_time": int(self.end_time),
            "truncated": bool(self.truncated),
        }


def edge_weights(g: Graph, hyperedges=None) -> sp.csr_matrix:
    """Pair weights ``w = max(a, T)`` over base edges and hyperedge pairs.

    ``T`` counts the hyperedges (triangles) shared by a pair; pairs that only
    share hyperedges get weight ``T``.
    """
    a = g.to_scipy().astype(np.int64)
    if hyperedges is None or len(hyperedges) == 0:
        return a.tocsr()
    w = a.maximum(pair_counts(hyperedges, g.n)).tocsr()
    w.sum_duplicates()
    w.sort_indices()
    return w


class Simulator:
    """Reusable engine bound to one graph and parameter set.

    Parameters
    ----------
    graph : Graph
    params : EpidemicParams
    hyperedges : array of shape (t, 3), optional
        Switches to triangle-weighted transmission with per-pair probability
        ``clip(beta * w, 1e-6, 1 - 1e-6)``.
    """

    def __init__(self, graph: Graph, params: EpidemicParams, hyperedges=None):
        self.graph = graph
        self.params = params
        self.weighted = hyperedges is not None
        if self.weighted:
            w = edge_weights(graph, hyperedges)
            self.indptr = w.indptr.astype(np.int64)
            self.indices = w.indices.astype(np.int64)
            prob = np.clip(params.beta * w.data.astype(np.float64), *WEIGHT_CLAMP)
        else:
            self.indptr, self.indices = graph.indptr, graph.indices
            prob = np.full(len(self.indices), float(params.beta))
        self.prob = prob
        with np.errstate(divide="ignore"):
            self.logq = np.log1p(-prob)
        self.rev = engine.reverse_index(self.indptr, self.indices)
        self.n = len(self.indptr) - 1
        self.qcap = params.capacity(self.n)
        self._ws = engine.allocate(self.n, len(self.indices), params.max_steps)

    def _args(self):
        p = self.params
        with np.errstate(divide="ignore"):
            log1a = math.log1p(-1.0 / p.exposed_mean) if p.exposed_mean > 1 else -np.inf
            log1g = math.log1p(-p.gamma) if p.gamma < 1 else -np.inf
        return (self.indptr, self.indices, self.rev, self.logq, p.seir, log1a, log1g,
                self.qcap, p.q_duration, p.detect_threshold, p.node_detect_delay,
                p.neighbor_q_delay, p.max_steps)

    def run(self, seed_node: int, rng=None, check: bool = False) -> EpidemicOutcome:
        _check_node(seed_node, self.n)
        rng = np.random.default_rng(rng)
        new_inf, net_inf, qcurr, end, trunc, viol = engine.simulate(
            *self._args(), int(seed_node), rng, bool(check), self._ws)
        status, itime = self._ws[0], self._ws[1]
        itime = np.where(itime >= engine.INF, -1, itime)
        return EpidemicOutcome(
            new_infections=new_inf.copy(),
            net_infections=net_inf.copy(),
            final_susceptible=status == engine.S,
            infection_time=itime,
            end_time=int(end),
            truncated=bool(trunc),
            quarantined=qcurr.copy(),
            violations=int(viol),
        )

    def totals(self, seed_nodes, rng=None) -> np.ndarray:
        """Total infections for each seed in ``seed_nodes`` (fast path)."""
        seeds = np.asarray(seed_nodes, dtype=np.int64)
        for s in np.unique(seeds):
            _check_node(s, self.n)
        return engine.batch_totals(*self._args(), seeds, np.random.default_rng(rng), self._ws)

    def oracle_totals(self, seed_nodes, rng=None) -> np.ndarray:
        p = self.params
        seeds = np.asarray(seed_nodes, dtype=np.int64)
        return oracle.batch_totals(
            self.indptr, self.indices, self.prob, p.seir, 1.0 / p.exposed_mean, p.gamma,
            self.qcap, p.q_duration, p.detect_threshold, p.node_detect_delay,
            p.neighbor_q_delay, p.max_steps, seeds, np.random.default_rng(rng))


def _check_node(v, n):
    if not 0 <= int(v) < n:
        raise IndexError(f"node {v} out of range for n={n}")


def run_epidemic(g: Graph, params: EpidemicParams, seed_node: int, rng=None,
                 check: bool = False) -> EpidemicOutcome:
    """Simulate one epidemic started from ``seed_node``."""
    return Simulator(g, params).run(seed_node, rng, check=check)


def run_epidemic_weighted(g: Graph, hyperedges, params: EpidemicParams, seed_node: int,
                          rng=None, check: bool = False) -> EpidemicOutcome:
    """Like :func:`run_epidemic` with transmission weighted by shared triangles."""
    h = np.asarray(hyperedges, dtype=np.int64).reshape(-1, 3)
    return Simulator(g, params, hyperedges=h).run(seed_node, rng, check=check)


def naive_oracle(g: Graph, params: EpidemicParams, seed_node: int, rng=None,
                 hyperedges=None) -> EpidemicOutcome:
    """Reference per-step simulation with the same contract as the engine."""
    sim = Simulator(g, params, hyperedges=hyperedges)
    _check_node(seed_node, sim.n)
    p = params
    new_inf, net_inf, status, itime, end, trunc = oracle.step_simulate(
        sim.indptr, sim.indices, sim.prob, p.seir, 1.0 / p.exposed_mean, p.gamma, sim.qcap,
        p.q_duration, p.detect_threshold, p.node_detect_delay, p.neighbor_q_delay,
        p.max_steps, int(seed_node), np.random.default_rng(rng))
    return EpidemicOutcome(
        new_infections=new_inf,
        net_infections=net_inf,
        final_susceptible=status == oracle.S,
        infection_time=itime,
        end_time=int(end),
        truncated=bool(trunc),
    )


def quarantine_impact(avg_with_q: float, avg_no_q: float) -> float:
    """``1 - with / without``, floored at 0 and capped at 1."""
    if avg_no_q <= 0:
        raise ValueError("baseline infections must be positive")
    return float(min(1.0, max(0.0, 1.0 - avg_with_q / avg_no_q)))
