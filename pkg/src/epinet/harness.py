"""Parameter sweeps over graph variants, infection rates and quarantine levels.

Every cell ``(variant, beta, q, seed)`` gets its own generator seeded from a
stable hash of the master seed and the cell indices, so results do not
depend on scheduling or worker count.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from threading import Lock

import numpy as np
from scipy.stats import rankdata

from .epidemic import EpidemicParams, Simulator, quarantine_impact
from .graph import Graph, load_edge_list

__all__ = [
    "Variant",
    "SweepSpec",
    "SweepResult",
    "DEFAULT_BETAS",
    "DEFAULT_Q_LEVELS",
    "cell_seed",
    "run_sweep",
    "aggregate_u_shape",
    "impact_table",
    "spearman_rho",
    "select_beta",
    "mean_infected_fraction",
    "parse_spec_file",
]

DEFAULT_BETAS = tuple(
    [round(k * 1e-3, 6) for k in range(1, 10)]
    + [round(k * 1e-2, 6) for k in range(1, 10)]
    + [0.1, 0.12, 0.13, 0.14, 0.15, 0.16, 0.17, 0.18, 0.19]
)
DEFAULT_Q_LEVELS = tuple(round(k / 100, 2) for k in range(16))


@dataclass
class Variant:
    """A graph in a sweep.

    ``kind`` is ``"original"``, ``"cm"`` or ``"gnp"`` and ``amount`` the
    rewiring count; both only order the U-shape table.
    """

    name: str
    graph: Graph
    kind: str = "original"
    amount: int = 0
    hyperedges: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("original", "cm", "gnp", "other"):
            raise ValueError(f"unknown variant kind {self.kind!r}")


@dataclass
class SweepSpec:
    variants: list
    betas: tuple = DEFAULT_BETAS
    q_levels: tuple = DEFAULT_Q_LEVELS
    seeds_per_cell: int = 50
    model: str = "seir"
    master_seed: int = 0
    gamma: float = 0.05
    output: str | os.PathLike | None = None
    params: dict = field(default_factory=dict)  # extra EpidemicParams fields

    def __post_init__(self):
        if not self.variants:
            raise ValueError("a sweep needs at least one variant")
        names = [v.name for v in self.variants]
        if len(set(names)) != len(names):
            raise ValueError("variant names must be unique")
        ns = {v.graph.n for v in self.variants}
        if len(ns) != 1:
            raise ValueError("all variants must share the node set")
        if self.seeds_per_cell < 1:
            raise ValueError("seeds_per_cell must be positive")
        self.betas = tuple(float(b) for b in self.betas)
        self.q_levels = tuple(float(q) for q in self.q_levels)

    @property
    def n(self) -> int:
        return self.variants[0].graph.n

    @property
    def n_cells(self) -> int:
        return len(self.variants) * len(self.betas) * len(self.q_levels) * self.seeds_per_cell

    def seed_nodes(self) -> np.ndarray:
        """Seed nodes shared by all variants, drawn once from the base node set."""
        rng = np.random.default_rng(cell_seed(self.master_seed, "__seed_nodes__", 0, 0, 0))
        return rng.integers(0, self.n, size=self.seeds_per_cell)


def cell_seed(master: int, variant: str, bi: int, qi: int, si: int) -> int:
    """Stable 64-bit seed for one sweep cell."""
    key = f"{int(master)}|{variant}|{int(bi)}|{int(qi)}|{int(si)}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def _record_key(rec, order):
    return (order[rec["variant"]], rec["beta_index"], rec["q_index"], rec["seed_index"])


def _dumps(rec) -> str:
    return json.dumps(rec, sort_keys=True, separators=(",", ":"))


@dataclass
class SweepResult:
    spec: SweepSpec
    records: list
    susceptible: dict  # variant -> (n, |q|) counts of runs ending susceptible

    def canonical_lines(self) -> list[str]:
        order = {v.name: i for i, v in enumerate(self.spec.variants)}
        return [_dumps(r) for r in sorted(self.records, key=lambda r: _record_key(r, order))]

    def canonical_bytes(self) -> bytes:
        return ("\n".join(self.canonical_lines()) + "\n").encode()

    def totals(self, variant: str, beta: float, q: float) -> np.ndarray:
        return np.array([r["total"] for r in self.records
                         if r["variant"] == variant and r["beta"] == beta and r["q"] == q
                         and r.get("error") is None], dtype=np.int64)

    def write(self, outdir) -> None:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "cells.ndjson").write_bytes(self.canonical_bytes())
        write_u_shape_csv(aggregate_u_shape(self), out / "u_shape.csv")
        self.write_susceptible(out / "susceptible_counts.csv")

    def write_susceptible(self, path) -> None:
        qs = self.spec.q_levels
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["variant", "node", *[f"q={q:g}" for q in qs]])
            for v in self.spec.variants:
                counts = self.susceptible[v.name]
                for node in range(counts.shape[0]):
                    w.writerow([v.name, node, *counts[node].tolist()])


def _params(spec: SweepSpec, beta: float, q: float) -> EpidemicParams:
    return EpidemicParams(beta=beta, gamma=spec.gamma, model=spec.model,
                          q_capacity_fraction=q, **spec.params)


def run_sweep(spec: SweepSpec, workers: int = 1, stream=None) -> SweepResult:
    """Run every cell of ``spec``.

    Cells sharing ``(variant, beta, q)`` run as one task on one simulator.
    Completed records are appended to ``stream`` (a path) as they finish;
    failures are recorded in-band under ``"error"``. When ``spec.output`` is
    set, the canonical outputs are written there at the end.
    """
    seeds = spec.seed_nodes()
    n = spec.n
    tasks = [(vi, bi, qi) for vi in range(len(spec.variants))
             for bi in range(len(spec.betas)) for qi in range(len(spec.q_levels))]
    susceptible = {v.name: np.zeros((n, len(spec.q_levels)), dtype=np.int64) for v in spec.variants}
    records = []
    lock = Lock()
    if stream is None and spec.output is not None:
        Path(spec.output).mkdir(parents=True, exist_ok=True)
        stream = Path(spec.output) / "cells.ndjson"
    fh = open(stream, "w") if stream is not None else None

    def task(vi, bi, qi):
        var = spec.variants[vi]
        beta, q = spec.betas[bi], spec.q_levels[qi]
        out, sus = [], np.zeros(n, dtype=np.int64)
        try:
            sim = Simulator(var.graph, _params(spec, beta, q), hyperedges=var.hyperedges)
        except Exception as exc:  # noqa: BLE001 - reported in-band
            sim, err = None, f"{type(exc).__name__}: {exc}"
        for si, node in enumerate(seeds):
            rec = {"variant": var.name, "beta": beta, "beta_index": bi, "q": q, "q_index": qi,
                   "seed_index": si, "seed_node": int(node), "error": None}
            try:
                if sim is None:
                    raise RuntimeError(err)
                res = sim.run(int(node), np.random.default_rng(cell_seed(
                    spec.master_seed, var.name, bi, qi, si)))
                rec.update(total=res.total_infected, end_time=res.end_time,
                           truncated=res.truncated)
                sus += res.final_susceptible
            except Exception as exc:  # noqa: BLE001
                rec.update(total=None, end_time=None, truncated=None,
                           error=f"{type(exc).__name__}: {exc}")
            out.append(rec)
        return vi, qi, out, sus

    def collect(vi, qi, out, sus):
        with lock:
            records.extend(out)
            susceptible[spec.variants[vi].name][:, qi] += sus
            if fh is not None:
                fh.write("".join(_dumps(r) + "\n" for r in out))
                fh.flush()

    try:
        if workers <= 1:
            for t in tasks:
                collect(*task(*t))
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futs = [pool.submit(task, *t) for t in tasks]
                for f in as_completed(futs):
                    collect(*f.result())
    finally:
        if fh is not None:
            fh.close()
    result = SweepResult(spec, records, susceptible)
    if spec.output is not None:
        result.write(spec.output)
    return result


# ---------------------------------------------------------------- aggregation


def _variant_order(variants):
    cm = sorted((v for v in variants if v.kind == "cm"), key=lambda v: -v.amount)
    orig = [v for v in variants if v.kind in ("original", "other")]
    gnp = sorted((v for v in variants if v.kind == "gnp"), key=lambda v: v.amount)
    return cm + orig + gnp


def mean_infected_fraction(result: SweepResult, variant: str, beta: float, q: float) -> float:
    t = result.totals(variant, beta, q)
    return float(t.mean() / result.spec.n) if len(t) else float("nan")


def aggregate_u_shape(result: SweepResult) -> list[dict]:
    """Mean infected fraction per (variant, beta) row and q-level column.

    Rows run from the most CM-rewired variant through the original to the
    most GNP-rewired one. Cells with missing or failed runs are left blank
    and counted in the ``missing`` field.
    """
    spec = result.spec
    rows = []
    for v in _variant_order(spec.variants):
        for b in spec.betas:
            row = {"variant": v.name, "kind": v.kind, "amount": v.amount, "beta": b}
            missing = 0
            for q in spec.q_levels:
                t = result.totals(v.name, b, q)
                if len(t) < spec.seeds_per_cell:
                    missing += 1
                row[f"q={q:g}"] = float(t.mean() / spec.n) if len(t) == spec.seeds_per_cell else None
            row["missing"] = missing
            rows.append(row)
    return rows


def write_u_shape_csv(rows, path) -> None:
    if not rows:
        Path(path).write_text("")
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if val is None else val) for k, val in r.items()})


def impact_table(result: SweepResult, q_level: float, beta: float | None = None) -> dict:
    """Quarantine impact ``1 - mean(with q) / mean(q = 0)`` per variant."""
    spec = result.spec
    if 0.0 not in spec.q_levels:
        raise ValueError("the sweep has no q = 0 baseline")
    if q_level not in spec.q_levels:
        raise ValueError(f"q level {q_level} not in the sweep")
    if beta is None:
        if len(spec.betas) != 1:
            raise ValueError("beta is required when the sweep has several")
        beta = spec.betas[0]
    out = {}
    for v in spec.variants:
        base = result.totals(v.name, beta, 0.0)
        with_q = result.totals(v.name, beta, q_level)
        out[v.name] = quarantine_impact(with_q.mean(), base.mean())
    return out


def spearman_rho(x, y) -> float:
    """Pearson correlation of average ranks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D of equal length")
    if len(x) < 3:
        raise ValueError("need at least 3 points")
    rx, ry = rankdata(x), rankdata(y)
    if np.ptp(rx) == 0 or np.ptp(ry) == 0:
        raise ValueError("constant input has no rank correlation")
    return float(np.corrcoef(rx, ry)[0, 1])


def select_beta(g: Graph, betas=DEFAULT_BETAS, gamma: float = 0.05, n_seeds: int = 100, rng=None,
                most: float = 0.5, share: float = 0.8, model: str = "seir"):
    """Largest rate below the first one that reliably infects most of the network.

    Rates are tried in increasing order without quarantine. A rate is
    deterministic when at least ``share`` of the runs infect more than
    ``most`` of the nodes; scanning stops there and the previous rate is
    returned (the smallest rate if the first is already deterministic).
    Returns ``(beta, fractions)`` with the mean infected fraction per tried rate.
    """
    rng = np.random.default_rng(rng)
    seeds = rng.integers(0, g.n, size=n_seeds)
    grid = sorted(betas)
    chosen = grid[0]
    tried = {}
    for b in grid:
        sim = Simulator(g, EpidemicParams(beta=b, gamma=gamma, model=model))
        frac = sim.totals(seeds, rng) / g.n
        tried[b] = float(frac.mean())
        if np.mean(frac > most) >= share:
            break
        chosen = b
    return chosen, tried


# ---------------------------------------------------------------- spec files


def parse_spec_file(path, rng_rewire=True) -> SweepSpec:
    """Read a ``key=value`` sweep description.

    Recognized keys: ``graphs`` (comma-separated edge lists, the first is the
    base), ``kinds`` (one per graph), ``rewire`` (``cm:f`` / ``gnp:f`` entries
    that derive variants from the base with ``round(f * m)`` steps),
    ``betas``, ``qlevels``, ``seeds``, ``model``, ``master_seed``, ``gamma``
    and ``output``. Relative paths resolve against the spec's directory.
    """
    from .perturb import rewire_cm, rewire_gnp

    path = Path(path)
    kv = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        k, v = s.split("=", 1)
        kv[k.strip()] = v.strip()
    if "graphs" not in kv:
        raise ValueError(f"{path}: missing graphs=")

    def floats(key):
        return tuple(float(x) for x in kv[key].split(",") if x.strip())

    files = [p.strip() for p in kv["graphs"].split(",") if p.strip()]
    kinds = [k.strip() for k in kv.get("kinds", "").split(",") if k.strip()] or (
        ["original"] + ["other"] * (len(files) - 1))
    if len(kinds) != len(files):
        raise ValueError(f"{path}: kinds= must list one kind per graph")
    variants = []
    for f, kind in zip(files, kinds):
        p = Path(f) if Path(f).is_absolute() else path.parent / f
        variants.append(Variant(p.stem, load_edge_list(p), kind))
    master = int(kv.get("master_seed", 0))
    base = variants[0].graph
    for i, item in enumerate(x.strip() for x in kv.get("rewire", "").split(",") if x.strip()):
        kind, frac = item.split(":")
        count = int(round(float(frac) * base.m))
        fn = {"cm": rewire_cm, "gnp": rewire_gnp}[kind]
        g = fn(base, count, np.random.default_rng(cell_seed(master, f"rewire-{kind}", i, 0, 0)))
        variants.append(Variant(f"{kind}-{frac}", g, kind, count))
    spec = SweepSpec(
        variants=variants,
        betas=floats("betas") if "betas" in kv else DEFAULT_BETAS,
        q_levels=floats("qlevels") if "qlevels" in kv else DEFAULT_Q_LEVELS,
        seeds_per_cell=int(kv.get("seeds", 50)),
        model=kv.get("model", "seir"),
        master_seed=master,
        gamma=float(kv.get("gamma", 0.05)),
        output=kv.get("output"),
    )
    return spec
