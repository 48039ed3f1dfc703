"""Event-driven discrete-time SEIR engine with local quarantining.

State changes are scheduled on a calendar queue (one FIFO bucket per event
kind and time step) and validated lazily when their bucket is drained, so a
rescheduled event simply leaves a stale entry behind.

Per step ``t`` the phases run in this order:

1. exposures scheduled for ``t`` (decided by the state at the end of ``t-1``)
2. E -> I, then I -> R, then quarantine exits
3. delayed neighbor quarantines, then random testing (repeated passes while
   capacity remains)

Transmission is pre-sampled: when ``u`` turns infectious at ``ctime[u]`` each
susceptible neighbor ``v`` receives a candidate exposure time
``ctime[u] + Geom(p)`` that stays valid while it is ``<= rtime[u]``.  The
candidates live in ``ihist`` (one slot per CSR entry of ``v``) and ``v`` is
exposed at their minimum.  Quarantining an infectious node voids its future
candidates; a susceptible node leaving quarantine redraws from every
neighbor that is still infectious.
"""

import math

import numba
import numpy as np

S, E, I, R = 0, 1, 2, 3
INF = np.int64(1) << 62

K_EXPOSE, K_INFECTIOUS, K_RECOVER, K_QEXIT, K_NBRQ = 0, 1, 2, 3, 4
N_KINDS = 5


@numba.njit(cache=True, nogil=True)
def geometric(rng, logq):
    """First-success time on {1, 2, ...}; ``logq = log(1 - p)``."""
    if logq == -np.inf:
        return 1
    if logq == 0.0:
        return INF
    u = 1.0 - rng.random()
    g = math.ceil(math.log(u) / logq)
    if g < 1:
        return 1
    if g > 1e18:
        return INF
    return np.int64(g)


@numba.njit(cache=True, nogil=True)
def _push(heads, tails, meta, ev_node, ev_next, nev, kind, t, v):
    if nev == len(ev_node):
        grown = np.empty(2 * len(ev_node), dtype=np.int64)
        grown[:nev] = ev_node
        ev_node = grown
        grown = np.empty(2 * len(ev_next), dtype=np.int64)
        grown[:nev] = ev_next
        ev_next = grown
    ev_node[nev] = v
    ev_next[nev] = -1
    if t > meta[0]:
        meta[0] = t
    if tails[kind, t] < 0:
        heads[kind, t] = nev
    else:
        ev_next[tails[kind, t]] = nev
    tails[kind, t] = nev
    return ev_node, ev_next, nev + 1


def allocate(n, nnz, max_steps):
    """Workspace reused across runs on the same graph."""
    ints = lambda k: np.empty(k, dtype=np.int64)  # noqa: E731
    heads = np.full((N_KINDS, max_steps + 2), -1, dtype=np.int64)
    tails = np.full((N_KINDS, max_steps + 2), -1, dtype=np.int64)
    return (
        np.empty(n, dtype=np.int8),   # status
        ints(n), ints(n), ints(n),    # itime, ctime, rtime
        np.empty(n, dtype=np.bool_),  # qnodes
        ints(n), ints(n),             # qtimes, qend
        np.empty(n, dtype=np.bool_),  # quarantined while E/I
        ints(n),                      # pending exposure time
        ints(nnz),                    # ihist
        heads, tails, np.full(2, max_steps + 1, dtype=np.int64),
        np.zeros((3, max_steps + 1), dtype=np.int64),  # new, net, qcurr
        ints(max(nnz + 4 * n, 64)), ints(max(nnz + 4 * n, 64)),
        ints(n),                      # nodes eligible for random testing
    )


@numba.njit(cache=True, nogil=True)
def _quarantine(v, t, qdur, indptr, indices, rev, status, ctime, rtime, qnodes,
                qtimes, qend, qinf, pend, ihist, heads, tails, meta, ev_node, ev_next,
                nev, max_steps):
    qnodes[v] = True
    qtimes[v] = t
    qend[v] = t + qdur
    if qend[v] <= max_steps:
        ev_node, ev_next, nev = _push(heads, tails, meta, ev_node, ev_next, nev, K_QEXIT, qend[v], v)
    st = status[v]
    if st == S:
        pend[v] = INF
        for k in range(indptr[v], indptr[v + 1]):
            ihist[k] = INF
    elif st == E or st == I:
        qinf[v] = True
        rtime[v] = qend[v]
        if ctime[v] > qend[v]:
            ctime[v] = qend[v]
        if st == I:
            # void transmissions u -> w scheduled after t (rescheduling case 1)
            for a in range(indptr[v], indptr[v + 1]):
                w = indices[a]
                if status[w] != S or qnodes[w]:
                    continue
                k = rev[a]
                old = ihist[k]
                if old == INF or old <= t:
                    continue
                ihist[k] = INF
                if pend[w] == old:
                    best = INF
                    for b in range(indptr[w], indptr[w + 1]):
                        if ihist[b] < best:
                            best = ihist[b]
                    pend[w] = best
                    if best <= max_steps:
                        ev_node, ev_next, nev = _push(heads, tails, meta, ev_node, ev_next, nev,
                                                      K_EXPOSE, best, w)
    return ev_node, ev_next, nev


@numba.njit(cache=True, nogil=True)
def _draw_from(u, t0, indptr, indices, logq, status, qnodes, rtime, pend, ihist,
               rev, heads, tails, meta, ev_node, ev_next, nev, max_steps, rng):
    """Candidate exposures from infectious ``u`` to its open susceptible neighbors."""
    for a in range(indptr[u], indptr[u + 1]):
        v = indices[a]
        if status[v] != S or qnodes[v]:
            continue
        cand = t0 + geometric(rng, logq[a])
        if cand > rtime[u]:
            continue
        k = rev[a]
        ihist[k] = cand
        if cand < pend[v]:
            pend[v] = cand
            if cand <= max_steps:
                ev_node, ev_next, nev = _push(heads, tails, meta, ev_node, ev_next, nev,
                                              K_EXPOSE, cand, v)
    return ev_node, ev_next, nev


@numba.njit(cache=True, nogil=True)
def simulate(indptr, indices, rev, logq, seir, log1a, log1gamma, qcap, qdur,
             threshold, node_delay, nbr_delay, max_steps, seed_node, rng, check, ws):
    """Run one epidemic.

    ``logq[a]`` is ``log(1 - p)`` for transmission across CSR entry ``a``
    (weights are symmetric, so direction does not matter); ``rev[a]`` is the
    index of the mirrored entry.

    Returns ``(new_inf, net_inf, qcurr, end_time, truncated, violations)``;
    final per-node state is left in the workspace (``status``, ``itime``).
    """
    (status, itime, ctime, rtime, qnodes, qtimes, qend, qinf, pend, ihist,
     heads, tails, meta, series, ev_node, ev_next, elig) = ws
    n = len(indptr) - 1
    status[:] = S
    itime[:] = INF
    ctime[:] = INF
    rtime[:] = INF
    qnodes[:] = False
    qtimes[:] = -1
    qend[:] = INF
    qinf[:] = False
    pend[:] = INF
    ihist[:] = INF
    # only buckets and series entries touched by the previous run are dirty
    heads[:, :meta[0] + 1] = -1
    tails[:, :meta[0] + 1] = -1
    series[:, :meta[1] + 1] = 0
    meta[0] = 0
    nev = 0

    new_inf = series[0]
    net_inf = series[1]
    qcurr = series[2]
    counts = np.zeros(4, dtype=np.int64)
    counts[S] = n
    violations = 0

    # seed: infectious at t = 0
    status[seed_node] = I
    counts[S] -= 1
    counts[I] += 1
    itime[seed_node] = 0
    ctime[seed_node] = 0
    rtime[seed_node] = geometric(rng, log1gamma)
    if rtime[seed_node] <= max_steps:
        ev_node, ev_next, nev = _push(heads, tails, meta, ev_node, ev_next, nev, K_RECOVER,
                                      rtime[seed_node], seed_node)
    ev_node, ev_next, nev = _draw_from(seed_node, 0, indptr, indices, logq, status, qnodes,
                                       rtime, pend, ihist, rev, heads, tails, meta, ev_node,
                                       ev_next, nev, max_steps, rng)
    new_inf[0] = 1
    net_inf[0] = 1
    cum_exposed = 1
    n_quar = 0
    end_time = 0
    truncated = False
    meta[1] = 0

    t = 0
    while True:
        t += 1
        if t > max_steps:
            truncated = True
            end_time = max_steps
            break
        meta[1] = t

        # 1. exposures
        e = heads[K_EXPOSE, t]
        while e >= 0:
            v = ev_node[e]
            e = ev_next[e]
            if status[v] != S or qnodes[v] or pend[v] != t:
                continue
            pend[v] = INF
            itime[v] = t
            cum_exposed += 1
            new_inf[t] += 1
            counts[S] -= 1
            if seir:
                status[v] = E
                counts[E] += 1
                ctime[v] = t + geometric(rng, log1a)
                if ctime[v] <= max_steps:
                    ev_node, ev_next, nev = _push(heads, tails, meta, ev_node, ev_next, nev,
                                                  K_INFECTIOUS, ctime[v], v)
            else:
                status[v] = I
                counts[I] += 1
                ctime[v] = t
                rtime[v] = t + geometric(rng, log1gamma)
                if rtime[v] <= max_steps:
                    ev_node, ev_next, nev = _push(heads, tails, meta, ev_node, ev_next, nev,
                                                  K_RECOVER, rtime[v], v)
                ev_node, ev_next, nev = _draw_from(v, t, indptr, indices, logq, status,
                                                   qnodes, rtime, pend, ihist, rev, heads,
                                                   tails, meta, ev_node, ev_next, nev, max_steps, rng)

        # 2. progression and quarantine exits
        e = heads[K_INFECTIOUS, t]
        while e >= 0:
            v = ev_node[e]
            e = ev_next[e]
            if status[v] != E or qnodes[v] or ctime[v] != t:
                continue
            status[v] = I
            counts[E] -= 1
            counts[I] += 1
            rtime[v] = t + geometric(rng, log1gamma)
            if rtime[v] <= max_steps:
                ev_node, ev_next, nev = _push(heads, tails, meta, ev_node, ev_next, nev,
                                              K_RECOVER, rtime[v], v)
            ev_node, ev_next, nev = _draw_from(v, t, indptr, indices, logq, status, qnodes,
                                               rtime, pend, ihist, rev, heads, tails, meta,
                                               ev_node, ev_next, nev, max_steps, rng)
        e = heads[K_RECOVER, t]
        while e >= 0:
            v = ev_node[e]
            e = ev_next[e]
            if status[v] != I or qnodes[v] or rtime[v] != t:
                continue
            status[v] = R
            counts[I] -= 1
            counts[R] += 1
        e = heads[K_QEXIT, t]
        while e >= 0:
            v = ev_node[e]
            e = ev_next[e]
            if not qnodes[v] or qend[v] != t:
                continue
            if check and t - qtimes[v] != qdur:
                violations += 1
            qnodes[v] = False
            n_quar -= 1
            st = status[v]
            if st == E or st == I:
                status[v] = R
                counts[st] -= 1
                counts[R] += 1
            elif st == S:
                # rescheduling case 2: re-expose from still-infectious neighbors
                if check and qinf[v]:
                    violations += 1
                for a in range(indptr[v], indptr[v + 1]):
                    u = indices[a]
                    if status[u] != I or qnodes[u] or rtime[u] <= t:
                        continue
                    cand = t + geometric(rng, logq[a])
                    if cand > rtime[u]:
                        continue
                    ihist[a] = cand
                    if cand < pend[v]:
                        pend[v] = cand
                        if cand <= max_steps:
                            ev_node, ev_next, nev = _push(heads, tails, meta, ev_node, ev_next,
                                                          nev, K_EXPOSE, cand, v)

        # 3. quarantine
        if qcap > 0:
            e = heads[K_NBRQ, t]
            while e >= 0:
                x = ev_node[e]
                e = ev_next[e]
                for a in range(indptr[x], indptr[x + 1]):
                    if n_quar >= qcap:
                        break
                    w = indices[a]
                    if qnodes[w]:
                        continue
                    ev_node, ev_next, nev = _quarantine(
                        w, t, qdur, indptr, indices, rev, status, ctime, rtime, qnodes,
                        qtimes, qend, qinf, pend, ihist, heads, tails, meta, ev_node, ev_next,
                        nev, max_steps)
                    n_quar += 1
            if cum_exposed >= threshold and n_quar < qcap and counts[E] + counts[I] > 0:
                # Passes over the eligible nodes (ascending id, cyclic) until the
                # capacity is used up or nobody is left; each visit succeeds with
                # probability 1/(remaining + 1). Runs of failures are skipped in
                # one geometric draw.
                L = 0
                for v in range(n):
                    st = status[v]
                    if (st == E or st == I) and not qnodes[v] and itime[v] <= t - node_delay:
                        elig[L] = v
                        L += 1
                pos = 0
                while L > 0 and n_quar < qcap:
                    remaining = qcap - n_quar
                    fails = geometric(rng, math.log(remaining / (remaining + 1.0))) - 1
                    idx = (pos + fails) % L
                    v = elig[idx]
                    ev_node, ev_next, nev = _quarantine(
                        v, t, qdur, indptr, indices, rev, status, ctime, rtime, qnodes,
                        qtimes, qend, qinf, pend, ihist, heads, tails, meta, ev_node, ev_next,
                        nev, max_steps)
                    n_quar += 1
                    for j in range(idx, L - 1):
                        elig[j] = elig[j + 1]
                    L -= 1
                    pos = idx
                    if nbr_delay == 0:
                        for a in range(indptr[v], indptr[v + 1]):
                            if n_quar >= qcap:
                                break
                            w = indices[a]
                            if qnodes[w]:
                                continue
                            ev_node, ev_next, nev = _quarantine(
                                w, t, qdur, indptr, indices, rev, status, ctime, rtime,
                                qnodes, qtimes, qend, qinf, pend, ihist, heads, tails, meta,
                                ev_node, ev_next, nev, max_steps)
                            n_quar += 1
                        # drop neighbors that were just quarantined
                        k = 0
                        shift = 0
                        for j in range(L):
                            if qnodes[elig[j]]:
                                if j < pos:
                                    shift += 1
                                continue
                            elig[k] = elig[j]
                            k += 1
                        L = k
                        pos -= shift
                    elif t + nbr_delay <= max_steps:
                        ev_node, ev_next, nev = _push(heads, tails, meta, ev_node, ev_next, nev,
                                                      K_NBRQ, t + nbr_delay, v)
                    if pos >= L:
                        pos = 0

        qcurr[t] = n_quar
        net_inf[t] = counts[E] + counts[I]

        if check:
            tally = np.zeros(4, dtype=np.int64)
            nq = 0
            for v in range(n):
                tally[status[v]] += 1
                if qnodes[v]:
                    nq += 1
                    if qend[v] - qtimes[v] != qdur:
                        violations += 1
                if qinf[v] and status[v] == S:
                    violations += 1
                if status[v] != S:
                    if not (itime[v] <= ctime[v] and ctime[v] <= rtime[v]):
                        violations += 1
            for s in range(4):
                if tally[s] != counts[s]:
                    violations += 1
            if tally.sum() != n:
                violations += 1
            if nq != n_quar or n_quar > qcap:
                violations += 1

        if counts[E] + counts[I] == 0:
            end_time = t
            break

    return (new_inf[:end_time + 1], net_inf[:end_time + 1], qcurr[:end_time + 1],
            end_time, truncated, violations)


@numba.njit(cache=True, nogil=True)
def batch_totals(indptr, indices, rev, logq, seir, log1a, log1gamma, qcap, qdur,
                 threshold, node_delay, nbr_delay, max_steps, seeds, rng, ws):
    """Total infections for a sequence of runs sharing one workspace."""
    out = np.empty(len(seeds), dtype=np.int64)
    for r in range(len(seeds)):
        new_inf, _, _, _, _, _ = simulate(
            indptr, indices, rev, logq, seir, log1a, log1gamma, qcap, qdur, threshold,
            node_delay, nbr_delay, max_steps, seeds[r], rng, False, ws)
        out[r] = new_inf.sum()
    return out


def reverse_index(indptr, indices):
    """``rev[a]`` = CSR position of the entry mirroring entry ``a``."""
    n = len(indptr) - 1
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
    # entries sorted by (row, col); the mirror of (r, c) is (c, r)
    key = indices * n + rows
    order = np.argsort(rows * n + indices, kind="stable")
    pos = np.searchsorted((rows * n + indices)[order], key)
    return order[pos].astype(np.int64)
