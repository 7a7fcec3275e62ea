"""numba-compiled kernels; loop-level twins of ``_numpy``."""

import numpy as np
from numba import njit

OPTIMAL, UNBOUNDED, ITERATION_CAP = 0, 1, 2
RATIO_TIE = 1e-12


@njit(cache=True)
def pairwise_distances(a, b):
    out = np.empty((a.shape[0], b.shape[0]))
    for i in range(a.shape[0]):
        for j in range(b.shape[0]):
            s = 0.0
            for k in range(a.shape[1]):
                t = a[i, k] - b[j, k]
                s += t * t
            out[i, j] = np.sqrt(s)
    return out


@njit(cache=True)
def simplex_pivots(T, basis, n_cols, max_iter, piv_tol, opt_tol):
    rows = T.shape[0] - 1
    rhs = T.shape[1] - 1
    width = T.shape[1]
    bland = False
    it = 0
    while it < max_iter:
        q = -1
        if bland:
            for j in range(n_cols):
                if T[rows, j] < -opt_tol:
                    q = j
                    break
            if q < 0:
                return OPTIMAL, it
        else:
            best_d = np.inf
            for j in range(n_cols):
                if T[rows, j] < best_d:
                    best_d = T[rows, j]
                    q = j
            if best_d >= -opt_tol:
                return OPTIMAL, it

        best = np.inf
        for r in range(rows):
            a = T[r, q]
            if a > piv_tol:
                ratio = max(T[r, rhs], 0.0) / a
                if ratio < best:
                    best = ratio
        if best == np.inf:
            return UNBOUNDED, it
        p = -1
        for r in range(rows):
            a = T[r, q]
            if a > piv_tol:
                ratio = max(T[r, rhs], 0.0) / a
                if ratio <= best + RATIO_TIE and (p < 0 or basis[r] < basis[p]):
                    p = r
        bland = T[p, rhs] <= piv_tol

        inv = 1.0 / T[p, q]
        for j in range(width):
            T[p, j] *= inv
        T[p, q] = 1.0
        for r in range(rows + 1):
            if r == p:
                continue
            f = T[r, q]
            if f != 0.0:
                for j in range(width):
                    T[r, j] -= f * T[p, j]
                T[r, q] = 0.0
        basis[p] = q
        it += 1
    return ITERATION_CAP, it


@njit(cache=True)
def max_flow_csr(n_nodes, arc_head, residual, adj_start, adj_arcs, s, t, tol):
    total = 0.0
    parent = np.empty(n_nodes, dtype=np.int64)
    queue = np.empty(n_nodes, dtype=np.int64)
    while True:
        for v in range(n_nodes):
            parent[v] = -1
        parent[s] = -2
        head = 0
        tail = 0
        queue[tail] = s
        tail += 1
        while head < tail and parent[t] == -1:
            u = queue[head]
            head += 1
            for k in range(adj_start[u], adj_start[u + 1]):
                a = adj_arcs[k]
                v = arc_head[a]
                if parent[v] == -1 and residual[a] > tol:
                    parent[v] = a
                    queue[tail] = v
                    tail += 1
        if parent[t] == -1:
            return total
        push = np.inf
        v = t
        while v != s:
            a = parent[v]
            if residual[a] < push:
                push = residual[a]
            v = arc_head[a ^ 1]
        v = t
        while v != s:
            a = parent[v]
            residual[a] -= push
            residual[a ^ 1] += push
            v = arc_head[a ^ 1]
        total += push
