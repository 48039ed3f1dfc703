"""Command line entry point: ``epinet <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import generators, ncp, perturb
from .epidemic import EpidemicParams, Simulator
from .graph import (ConvergenceError, GraphFormatError, lambda1, load_edge_list,
                    save_edge_list, triangles)


def _write_tris(tri, path):
    with open(path, "w") as fh:
        np.savetxt(fh, np.asarray(tri, dtype=np.int64).reshape(-1, 3), fmt="%d")


def _read_tris(path):
    t = np.loadtxt(path, dtype=np.int64, ndmin=2, comments=("#", "%"))
    return t.reshape(-1, 3)


def _read_samples(path):
    with open(path) as fh:
        return [ncp.NcpSample.from_record(json.loads(line)) for line in fh if line.strip()]


def _write_ndjson(records, path):
    out = sys.stdout if path in (None, "-") else open(path, "w")
    try:
        for r in records:
            out.write(json.dumps(r, sort_keys=True) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()


def _read_flags(path, n):
    """``node,value`` rows (header optional) or one value per line."""
    vals = np.full(n, np.nan)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    for i, r in enumerate(rows):
        if len(r) >= 2:
            vals[int(r[0])] = float(r[1])
        else:
            vals[i] = float(r[0])
    if np.isnan(vals).any():
        raise ValueError(f"{path}: susceptible flags missing for some nodes")
    return vals


def _is_number(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


# ---------------------------------------------------------------- commands


def cmd_eigen(a):
    g = load_edge_list(a.graph)
    lam, res = lambda1(g, tol=a.tol)
    print(f"{lam!r},{res!r}")


def cmd_rewire(a):
    g = load_edge_list(a.graph)
    fn = perturb.rewire_cm if a.mode == "cm" else perturb.rewire_gnp
    save_edge_list(fn(g, a.count, np.random.default_rng(a.seed)), a.output)


def cmd_sparsify(a):
    g = load_edge_list(a.graph)
    save_edge_list(perturb.sparsify_common_neighbors(g, a.keep), a.output)


def cmd_shuffle_triangles(a):
    g = load_edge_list(a.graph)
    tri = _read_tris(a.triangles) if a.triangles else triangles(g)
    _write_tris(perturb.shuffle_triangles(tri, g.n, a.count, np.random.default_rng(a.seed)), a.output)


def cmd_simulate(a):
    g = load_edge_list(a.graph)
    params = EpidemicParams(beta=a.beta, gamma=a.gamma, model=a.model,
                            q_capacity_fraction=a.qpercent / 100.0,
                            detect_threshold=a.threshold, max_steps=a.max_steps)
    hyper = _read_tris(a.triangles) if a.triangles else None
    sim = Simulator(g, params, hyperedges=hyper)
    rng = np.random.default_rng(a.rng_seed)
    records, sus = [], np.zeros(g.n)
    for _ in range(a.runs):
        out = sim.run(a.seed_node, rng)
        rec = out.to_record()
        rec["params"] = {"beta": a.beta, "gamma": a.gamma, "model": a.model,
                         "qpercent": a.qpercent, "seed_node": a.seed_node,
                         "rng_seed": a.rng_seed, "weighted": hyper is not None}
        records.append(rec)
        sus += out.final_susceptible
    _write_ndjson(records, a.output)
    if a.susceptible_out:
        with open(a.susceptible_out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node", "susceptible"])
            for v, s in enumerate(sus / a.runs):
                w.writerow([v, repr(float(s))])


def cmd_ncp(a):
    g = load_edge_list(a.graph)
    rng = np.random.default_rng(a.rng_seed)
    if a.mode == "epidemic":
        samples = ncp.epidemic_ncp(g, a.seeds, a.trials, rng).samples
    else:
        _, samples = ncp.ppr_ncp(g, a.seeds, rng)
    _write_ndjson([s.to_record() for s in samples], a.output)


def cmd_aancp(a):
    print(repr(ncp.aancp(_read_samples(a.profile), a.nodes)))


def cmd_missed_sets(a):
    g = load_edge_list(a.graph)
    sets = _read_samples(a.sets)
    wp = ncp.missed_sets(sets, _read_flags(a.susceptible, g.n), g.n)
    _write_ndjson(wp.to_records(), a.output)


def cmd_generate(a):
    rng = np.random.default_rng(a.rng_seed)
    snaps = {}
    if a.model == "geometric":
        g = generators.local_geometric(a.n, rng)
    elif a.model == "geocomm":
        cfg = generators.GenConfig(n=a.n, iterations=a.iterations, seed=a.rng_seed)
        g, snaps = generators.geometric_communities(cfg, rng, return_snapshots=True)
    else:
        if a.base:
            base = load_edge_list(a.base)
        else:
            blocks = max(1, a.n // a.block_size)
            base = generators.planted_partition(blocks, a.block_size, a.p_in, a.p_out, rng)
        base = generators.connect_components_chung_lu(base, rng)
        g, snaps = generators.random_walk_communities(base, a.walks, rng, return_snapshots=True)
    out = Path(a.output)
    save_edge_list(g, out)
    if a.snapshots:
        for it, h in snaps.items():
            save_edge_list(h, out.with_name(f"{out.stem}-{it}{out.suffix}"))


def cmd_sweep(a):
    from .harness import parse_spec_file, run_sweep

    spec = parse_spec_file(a.spec)
    spec.output = a.output or spec.output
    if spec.output is None:
        raise ValueError("no output directory (use -o or output= in the spec)")
    res = run_sweep(spec, workers=a.workers)
    errors = sum(r["error"] is not None for r in res.records)
    print(f"{len(res.records)} cells, {errors} failed -> {spec.output}")


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="epinet", description="Epidemics, quarantine and local structure on networks.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("eigen", help="dominant adjacency eigenvalue")
    s.add_argument("graph")
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_eigen)

    s = sub.add_parser("rewire", help="uniform or degree-preserving rewiring")
    s.add_argument("graph")
    s.add_argument("--mode", choices=["gnp", "cm"], required=True)
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_rewire)

    s = sub.add_parser("sparsify", help="common-neighbor sparsification")
    s.add_argument("graph")
    s.add_argument("--keep", type=float, required=True)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_sparsify)

    s = sub.add_parser("shuffle-triangles", help="relocate triangle hyperedges")
    s.add_argument("graph")
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--triangles", help="hyperedge file to shuffle instead of the graph's triangles")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_shuffle_triangles)

    s = sub.add_parser("simulate", help="run SIR/SEIR epidemics with quarantine")
    s.add_argument("graph")
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--gamma", type=float, default=0.05)
    s.add_argument("--model", choices=["sir", "seir"], default="seir")
    s.add_argument("--qpercent", type=float, default=0.0)
    s.add_argument("--threshold", type=int, default=100)
    s.add_argument("--max-steps", type=int, default=None)
    s.add_argument("--seed-node", type=int, default=0)
    s.add_argument("--rng-seed", type=int, default=0)
    s.add_argument("--runs", type=int, default=1)
    s.add_argument("--triangles", help="hyperedge file; switches to weighted transmission")
    s.add_argument("--susceptible-out", help="CSV of per-node fraction of runs ending susceptible")
    s.add_argument("-o", "--output", default="-")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("ncp", help="epidemic or PageRank community profile")
    s.add_argument("graph")
    s.add_argument("--mode", choices=["epidemic", "ppr"], default="epidemic")
    s.add_argument("--seeds", type=int, default=100)
    s.add_argument("--trials", type=int, default=20)
    s.add_argument("--rng-seed", type=int, default=0)
    s.add_argument("-o", "--output", default="-")
    s.set_defaults(func=cmd_ncp)

    s = sub.add_parser("aancp", help="area above the NCP envelope")
    s.add_argument("profile")
    s.add_argument("--nodes", type=int, required=True)
    s.set_defaults(func=cmd_aancp)

    s = sub.add_parser("missed-sets", help="susceptible weight per NCP bin")
    s.add_argument("graph")
    s.add_argument("--sets", required=True)
    s.add_argument("--susceptible", required=True)
    s.add_argument("-o", "--output", default="-")
    s.set_defaults(func=cmd_missed_sets)

    s = sub.add_parser("generate", help="synthetic graphs")
    s.add_argument("--model", choices=["geometric", "geocomm", "rwcomm"], required=True)
    s.add_argument("--n", type=int, default=5000)
    s.add_argument("--iterations", type=int, default=150)
    s.add_argument("--walks", type=int, default=8000)
    s.add_argument("--base", help="edge list used as the rwcomm base graph")
    s.add_argument("--block-size", type=int, default=50)
    s.add_argument("--p-in", type=float, default=0.1)
    s.add_argument("--p-out", type=float, default=0.0005)
    s.add_argument("--snapshots", action="store_true")
    s.add_argument("--rng-seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("sweep", help="parameter sweep from a key=value spec")
    s.add_argument("--spec", required=True)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (GraphFormatError, ConvergenceError, ValueError, OSError, perturb.RejectionCapError) as exc:
        print(f"epinet: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
