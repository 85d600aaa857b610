"""Exact solver for the dense transportation problem.

Successive shortest augmenting paths with node potentials (min-cost flow on
the bipartite source/sink graph). Costs must be non-negative; supplies and
demands are real-valued with equal totals. Exact up to float arithmetic,
verified in the tests against an independent LP oracle.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def transport_cost(C, a, b):
    """Minimal total cost shipping supplies a (m,) to demands b (p,) over C (m, p).

    Returns -1.0 if the augmentation budget is exhausted (malformed input).
    """
    m, p = C.shape
    nn = m + p
    INF = 1e300
    phi = np.zeros(nn)
    flow = np.zeros((m, p))
    rem_a = a.copy()
    rem_b = b.copy()
    dist = np.empty(nn)
    visited = np.empty(nn, np.uint8)
    parent = np.full(nn, -1, np.int64)

    max_rounds = 64 * (m + p) + 1024
    rounds = 0
    while True:
        total_rem = 0.0
        for i in range(m):
            total_rem += rem_a[i]
        if total_rem <= 1e-12:
            break
        rounds += 1
        if rounds > max_rounds:
            return -1.0

        for u in range(nn):
            visited[u] = 0
            parent[u] = -1
            dist[u] = INF
        for i in range(m):
            if rem_a[i] > 0.0:
                dist[i] = 0.0

        target = -1
        while True:
            best = -1
            bd = INF
            for u in range(nn):
                if visited[u] == 0 and dist[u] < bd:
                    bd = dist[u]
                    best = u
            if best < 0:
                break
            visited[best] = 1
            if best >= m and rem_b[best - m] > 0.0:
                target = best
                break
            if best < m:
                i = best
                di = dist[i]
                base = phi[i]
                for j in range(p):
                    nd = m + j
                    if visited[nd] == 0:
                        ec = C[i, j] + base - phi[nd]
                        if ec < 0.0:
                            ec = 0.0
                        cand = di + ec
                        if cand < dist[nd]:
                            dist[nd] = cand
                            parent[nd] = i
            else:
                j = best - m
                dj = dist[best]
                base = phi[best]
                for i in range(m):
                    if visited[i] == 0 and flow[i, j] > 0.0:
                        ec = base - phi[i] - C[i, j]
                        if ec < 0.0:
                            ec = 0.0
                        cand = dj + ec
                        if cand < dist[i]:
                            dist[i] = cand
                            parent[i] = best
        if target < 0:
            break

        dt = dist[target]
        for u in range(nn):
            du = dist[u]
            if du > dt:
                du = dt
            phi[u] += du

        bottleneck = rem_b[target - m]
        u = target
        while parent[u] >= 0:
            v = parent[u]
            if v >= m:  # backward arc: sink v -> source u, capacity flow[u, v-m]
                if flow[u, v - m] < bottleneck:
                    bottleneck = flow[u, v - m]
            u = v
        root = u
        if rem_a[root] < bottleneck:
            bottleneck = rem_a[root]

        u = target
        while parent[u] >= 0:
            v = parent[u]
            if v < m:
                flow[v, u - m] += bottleneck
            else:
                nf = flow[u, v - m] - bottleneck
                flow[u, v - m] = nf if nf > 0.0 else 0.0
            u = v
        if bottleneck >= rem_a[root]:
            rem_a[root] = 0.0
        else:
            rem_a[root] -= bottleneck
        tj = target - m
        if bottleneck >= rem_b[tj]:
            rem_b[tj] = 0.0
        else:
            rem_b[tj] -= bottleneck

    cost = 0.0
    for i in range(m):
        for j in range(p):
            if flow[i, j] > 0.0:
                cost += flow[i, j] * C[i, j]
    return cost


def l1_cost_matrix(A, B, block=256):
    """Pairwise Manhattan distances, blocked to bound peak memory."""
    m, p = A.shape[0], B.shape[0]
    C = np.empty((m, p), dtype=np.float64)
    for lo in range(0, m, block):
        hi = min(lo + block, m)
        C[lo:hi] = np.abs(A[lo:hi, None, :] - B[None, :, :]).sum(axis=2)
    return C
