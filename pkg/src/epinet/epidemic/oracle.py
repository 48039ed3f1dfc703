"""Step-by-step reference simulator.

Sweeps every node every step with per-step Bernoulli trials and no event
scheduling. It is slow (O(steps * m)) and exists to certify the event-driven
engine in distribution.
"""

import numba
import numpy as np

S, E, I, R = 0, 1, 2, 3


@numba.njit(cache=True, nogil=True)
def _quarantine_node(v, t, qdur, qnodes, qend):
    qnodes[v] = True
    qend[v] = t + qdur


@numba.njit(cache=True, nogil=True)
def step_simulate(indptr, indices, prob, seir, a_rate, gamma, qcap, qdur, threshold,
                  node_delay, nbr_delay, max_steps, seed_node, rng):
    """Run one epidemic.

    Returns ``(new_inf, net_inf, status, itime, end_time, truncated)``.

    ``prob[k]`` is the per-step transmission probability across CSR entry ``k``.
    """
    n = len(indptr) - 1
    status = np.zeros(n, dtype=np.int8)
    itime = np.full(n, -1, dtype=np.int64)
    qnodes = np.zeros(n, dtype=np.bool_)
    qend = np.full(n, -1, dtype=np.int64)
    new_inf = np.zeros(max_steps + 1, dtype=np.int64)
    net_inf = np.zeros(max_steps + 1, dtype=np.int64)
    # pending[t] holds nodes whose neighbors get quarantined at step t
    pend_nodes = np.empty(n * (max_steps // max(qdur, 1) + 2), dtype=np.int64)
    pend_time = np.empty_like(pend_nodes)
    npend = 0
    pend_head = 0

    status[seed_node] = I
    itime[seed_node] = 0
    new_inf[0] = 1
    net_inf[0] = 1
    ever = 1

    infectious = np.zeros(n, dtype=np.bool_)
    exposed_now = np.zeros(n, dtype=np.bool_)
    prev = np.empty(n, dtype=np.int8)
    end_time = 0
    truncated = False
    for t in range(1, max_steps + 2):
        active = 0
        for v in range(n):
            if status[v] == E or status[v] == I:
                active += 1
        net_inf[t - 1] = active
        if active == 0:
            end_time = t - 1
            break
        if t > max_steps:
            truncated = True
            end_time = max_steps
            break

        prev[:] = status
        for v in range(n):
            infectious[v] = prev[v] == I and not qnodes[v]
        # transmission from end-of-(t-1) state
        for v in range(n):
            exposed_now[v] = False
            if prev[v] != S or qnodes[v]:
                continue
            escape = 1.0
            for k in range(indptr[v], indptr[v + 1]):
                if infectious[indices[k]]:
                    escape *= 1.0 - prob[k]
            if rng.random() < 1.0 - escape:
                exposed_now[v] = True
        # progression of unquarantined E/I
        for v in range(n):
            if qnodes[v]:
                continue
            if prev[v] == E:
                if rng.random() < a_rate:
                    status[v] = I
            elif prev[v] == I:
                if rng.random() < gamma:
                    status[v] = R
        for v in range(n):
            if exposed_now[v]:
                status[v] = E if seir else I
                itime[v] = t
                new_inf[t] += 1
                ever += 1
        # exits
        for v in range(n):
            if qnodes[v] and qend[v] == t:
                qnodes[v] = False
                if status[v] == E or status[v] == I:
                    status[v] = R
        # quarantine policy
        if qcap > 0:
            nq = 0
            for v in range(n):
                if qnodes[v]:
                    nq += 1
            while pend_head < npend and pend_time[pend_head] == t:
                x = pend_nodes[pend_head]
                pend_head += 1
                for k in range(indptr[x], indptr[x + 1]):
                    w = indices[k]
                    if nq >= qcap:
                        break
                    if not qnodes[w]:
                        _quarantine_node(w, t, qdur, qnodes, qend)
                        nq += 1
            if ever >= threshold:
                # sweep the population until capacity runs out or nobody is eligible
                while True:
                    seen = False
                    for v in range(n):
                        left = qcap - nq
                        if left <= 0:
                            break
                        if not (status[v] == E or status[v] == I):
                            continue
                        if qnodes[v] or itime[v] > t - node_delay:
                            continue
                        seen = True
                        if rng.random() < 1.0 / (left + 1):
                            _quarantine_node(v, t, qdur, qnodes, qend)
                            nq += 1
                            if nbr_delay == 0:
                                for k in range(indptr[v], indptr[v + 1]):
                                    w = indices[k]
                                    if nq >= qcap:
                                        break
                                    if not qnodes[w]:
                                        _quarantine_node(w, t, qdur, qnodes, qend)
                                        nq += 1
                            else:
                                pend_nodes[npend] = v
                                pend_time[npend] = t + nbr_delay
                                npend += 1
                    if not seen or nq >= qcap:
                        break
    return new_inf[:end_time + 1], net_inf[:end_time + 1], status, itime, end_time, truncated


@numba.njit(cache=True, nogil=True)
def batch_totals(indptr, indices, prob, seir, a_rate, gamma, qcap, qdur, threshold,
                 node_delay, nbr_delay, max_steps, seeds, rng):
    out = np.empty(len(seeds), dtype=np.int64)
    for r in range(len(seeds)):
        new_inf, _, _, _, _, _ = step_simulate(indptr, indices, prob, seir, a_rate, gamma,
                                            qcap, qdur, threshold, node_delay, nbr_delay,
                                            max_steps, seeds[r], rng)
        out[r] = new_inf.sum()
    return out
