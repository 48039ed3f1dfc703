import itertools

import numpy as np
import pytest

from epinet.epidemic import (EpidemicParams, Simulator, edge_weights, naive_oracle,
                             quarantine_impact, run_epidemic, run_epidemic_weighted)
from epinet.generators import GenConfig, geometric_communities, ring_of_cliques
from epinet.graph import from_edges, triangles

K2 = from_edges(2, [(0, 1)])
P3 = from_edges(3, [(0, 1), (1, 2)])


def _clique(n):
    return from_edges(n, list(itertools.combinations(range(n), 2)))


def _geom_moment(x, gamma):
    """E[x^D] for D geometric on {1, 2, ...} with success probability gamma."""
    return gamma * x / (1 - (1 - gamma) * x)


def _tv(a, b):
    return 0.5 * np.abs(np.asarray(a) - np.asarray(b)).sum()


# ---------------------------------------------------------------- parameters


def test_params_defaults():
    p = EpidemicParams(beta=0.1)
    assert p.q_duration == 20
    assert p.max_steps == 2000
    assert p.capacity(1000) == 0
    assert EpidemicParams(beta=0.1, q_capacity_fraction=0.07).capacity(100) == 7


@pytest.mark.parametrize("kw", [dict(beta=1.5), dict(beta=0.1, gamma=0), dict(beta=0.1, model="sis"),
                                dict(beta=0.1, q_capacity_fraction=-1),
                                dict(beta=0.1, exposed_mean=0.5), dict(beta=0.1, max_steps=0)])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        EpidemicParams(**kw)


# ---------------------------------------------------------------- closed forms


@pytest.mark.parametrize("model", ["sir", "seir"])
def test_beta_zero_infects_only_seed(model):
    g = ring_of_cliques(5, 4)
    p = EpidemicParams(beta=0.0, model=model)
    assert run_epidemic(g, p, 3, 0).total_infected == 1
    assert naive_oracle(g, p, 3, 0).total_infected == 1


def test_k2_forced_transmission():
    p = EpidemicParams(beta=1.0, gamma=1.0, model="sir")
    out = run_epidemic(K2, p, 0, 0)
    assert out.total_infected == 2
    assert out.infection_time.tolist() == [0, 1]
    assert naive_oracle(K2, p, 0, 0).total_infected == 2


@pytest.mark.parametrize("beta,gamma", [(0.3, 0.05), (0.1, 0.5)])
def test_k2_transmission_probability(beta, gamma):
    runs = 100_000
    p_exact = 1 - _geom_moment(1 - beta, gamma)
    tot = Simulator(K2, EpidemicParams(beta=beta, gamma=gamma, model="sir")).totals(np.zeros(runs, int), 1)
    sd = np.sqrt(p_exact * (1 - p_exact) / runs)
    assert abs(np.mean(tot == 2) - p_exact) < 5 * sd


@pytest.mark.parametrize("model", ["sir", "seir"])
def test_p3_middle_seed_exact(model):
    beta, gamma, runs = 0.3, 0.05, 100_000
    a, b = _geom_moment(1 - beta, gamma), _geom_moment((1 - beta) ** 2, gamma)
    exact = [b, 2 * (a - b), 1 - 2 * a + b]  # 0, 1 or 2 leaves infected
    sim = Simulator(P3, EpidemicParams(beta=beta, gamma=gamma, model=model))
    freq = np.bincount(sim.totals(np.ones(runs, int), 2), minlength=4)[1:] / runs
    assert _tv(freq, exact) < 0.01


def test_p3_end_seed_exact():
    beta, gamma, runs = 0.3, 0.05, 100_000
    q = 1 - _geom_moment(1 - beta, gamma)
    exact = [1 - q, q * (1 - q), q * q]
    sim = Simulator(P3, EpidemicParams(beta=beta, gamma=gamma, model="sir"))
    freq = np.bincount(sim.totals(np.zeros(runs, int), 3), minlength=4)[1:] / runs
    assert _tv(freq, exact) < 0.01


# ---------------------------------------------------------------- oracle equivalence


@pytest.mark.parametrize("g", [P3, _clique(4), from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])],
                         ids=["p3", "k4", "bridged"])
@pytest.mark.parametrize("q", [0.0, 0.34])
def test_engine_matches_oracle(g, q):
    runs = 20_000
    p = EpidemicParams(beta=0.5, gamma=0.2, model="seir", q_capacity_fraction=q, detect_threshold=0)
    sim = Simulator(g, p)
    seeds = np.zeros(runs, dtype=np.int64)
    a = np.bincount(sim.totals(seeds, 1), minlength=g.n + 1) / runs
    b = np.bincount(sim.oracle_totals(seeds, 2), minlength=g.n + 1) / runs
    assert _tv(a, b) < 0.03


def test_oracle_outcome_is_consistent():
    g = ring_of_cliques(4, 5)
    out = naive_oracle(g, EpidemicParams(beta=0.3, q_capacity_fraction=0.1, detect_threshold=2), 0, 5)
    assert out.total_infected == int((~out.final_susceptible).sum())
    assert out.total_infected == int((out.infection_time >= 0).sum())


# ---------------------------------------------------------------- quarantine behavior


@pytest.fixture(scope="module")
def gc300():
    return geometric_communities(GenConfig(n=300, iterations=20, seed=3))


def test_invariants_hold_under_quarantine(gc300):
    rng = np.random.default_rng(0)
    for _ in range(200):
        p = EpidemicParams(beta=float(rng.uniform(0.02, 0.4)), q_capacity_fraction=float(rng.uniform(0.01, 0.3)),
                           detect_threshold=int(rng.integers(0, 20)), node_detect_delay=int(rng.integers(0, 3)),
                           neighbor_q_delay=int(rng.integers(0, 3)))
        sim = Simulator(gc300, p)
        out = sim.run(int(rng.integers(gc300.n)), rng, check=True)
        assert out.violations == 0
        assert out.quarantined.max(initial=0) <= sim.qcap


def test_saturated_quarantine_halts_epidemic(gc300):
    p = EpidemicParams(beta=0.3, q_capacity_fraction=1.0, detect_threshold=0, node_detect_delay=0,
                       neighbor_q_delay=0)
    free = Simulator(gc300, p.with_(q_capacity_fraction=0.0)).totals(np.arange(20), 1).mean()
    halted = Simulator(gc300, p).totals(np.arange(20), 1).mean()
    assert halted < 5 < free


def test_mean_infections_non_increasing_in_capacity(gc300):
    runs = 10_000
    seeds = np.random.default_rng(1).integers(0, gc300.n, runs)
    means = []
    for q in (0.0, 0.02, 0.05, 0.1, 0.2):
        p = EpidemicParams(beta=0.1, q_capacity_fraction=q, detect_threshold=5)
        means.append(Simulator(gc300, p).totals(seeds, 4).mean())
    # allow sampling noise of a few standard errors on a mean of at most n
    slack = 4 * gc300.n / np.sqrt(runs) * 0.5
    assert all(b <= a + slack for a, b in zip(means, means[1:]))
    assert means[-1] < means[0]


def test_determinism():
    g = ring_of_cliques(6, 5)
    p = EpidemicParams(beta=0.2, q_capacity_fraction=0.1, detect_threshold=3)
    a, b = run_epidemic(g, p, 2, 99), run_epidemic(g, p, 2, 99)
    assert a.to_record() == b.to_record()
    assert np.array_equal(a.infection_time, b.infection_time)


def test_truncation_flagged():
    g = ring_of_cliques(10, 5)
    out = run_epidemic(g, EpidemicParams(beta=0.5, gamma=0.01, max_steps=3), 0, 0)
    assert out.truncated


def test_seed_out_of_range():
    with pytest.raises(IndexError):
        run_epidemic(K2, EpidemicParams(beta=0.1), 2, 0)


# ---------------------------------------------------------------- weighted transmission


def test_k3_own_triangle_matches_unweighted():
    g = _clique(3)
    p = EpidemicParams(beta=0.2, model="sir")
    plain = Simulator(g, p)
    weighted = Simulator(g, p, hyperedges=triangles(g))
    assert np.allclose(weighted.prob, plain.prob)
    assert run_epidemic_weighted(g, triangles(g), p, 0, 7).to_record() == run_epidemic(g, p, 0, 7).to_record()


def test_edge_weights_hyperedge_only_pairs():
    g = from_edges(5, [(0, 1)])
    w = edge_weights(g, [[0, 1, 2], [0, 2, 4], [0, 1, 2]])
    assert w[0, 1] == 2  # max(1, T=2)
    assert w[0, 2] == 3 and w[2, 4] == 1
    assert w[3].nnz == 0


def test_weight_clamp():
    g = from_edges(3, [(0, 1)])
    sim = Simulator(g, EpidemicParams(beta=0.06), hyperedges=[[0, 1, 2]] * 20)
    assert sim.prob.max() == pytest.approx(1 - 1e-6)
    low = Simulator(g, EpidemicParams(beta=0.0), hyperedges=[[0, 1, 2]])
    assert low.prob.min() == pytest.approx(1e-6)


def test_empty_hyperedges_match_unweighted():
    g = ring_of_cliques(4, 4)
    p = EpidemicParams(beta=0.2)
    a = Simulator(g, p, hyperedges=np.zeros((0, 3), int)).totals(np.zeros(50, int), 3)
    b = Simulator(g, p).totals(np.zeros(50, int), 3)
    assert np.array_equal(a, b)


# ---------------------------------------------------------------- impact


def test_quarantine_impact():
    assert quarantine_impact(100, 100) == 0.0
    assert quarantine_impact(1, 100) == pytest.approx(0.99)
    assert quarantine_impact(50, 200) == pytest.approx(0.75)
    assert quarantine_impact(300, 200) == 0.0
    with pytest.raises(ValueError):
        quarantine_impact(1, 0)
