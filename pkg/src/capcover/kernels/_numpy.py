"""Pure-numpy kernels.  Same contracts as ``_numba``; used when numba is disabled or missing."""

import numpy as np

OPTIMAL, UNBOUNDED, ITERATION_CAP = 0, 1, 2
RATIO_TIE = 1e-12


def pairwise_distances(a, b):
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def simplex_pivots(T, basis, n_cols, max_iter, piv_tol, opt_tol):
    """Pivot the tableau ``T`` in place until optimal, unbounded or out of iterations.

    ``T`` has the constraint rows first, the reduced-cost row last and the rhs in the last
    column.  Only columns ``< n_cols`` may enter.  Dantzig's rule is used until a degenerate
    pivot happens; after that Bland's rule is used until the next nondegenerate pivot.
    """
    rows = T.shape[0] - 1
    rhs = T.shape[1] - 1
    bland = False
    it = 0
    while it < max_iter:
        d = T[rows, :n_cols]
        if bland:
            cand = np.flatnonzero(d < -opt_tol)
            if cand.size == 0:
                return OPTIMAL, it
            q = cand[0]
        else:
            q = int(np.argmin(d))
            if d[q] >= -opt_tol:
                return OPTIMAL, it
        col = T[:rows, q]
        ok = col > piv_tol
        if not ok.any():
            return UNBOUNDED, it
        idx = np.flatnonzero(ok)
        ratios = np.maximum(T[idx, rhs], 0.0) / col[idx]
        best = ratios.min()
        ties = idx[ratios <= best + RATIO_TIE]
        p = ties[np.argmin(basis[ties])]
        bland = T[p, rhs] <= piv_tol

        T[p] /= T[p, q]
        f = T[:, q].copy()
        f[p] = 0.0
        nz = np.flatnonzero(f)
        T[nz] -= np.outer(f[nz], T[p])
        T[nz, q] = 0.0
        T[p, q] = 1.0
        basis[p] = q
        it += 1
    return ITERATION_CAP, it


def max_flow_csr(n_nodes, arc_head, residual, adj_start, adj_arcs, s, t, tol):
    """Edmonds-Karp on a residual graph in CSR form; ``residual`` is updated in place.

    Arc ``a`` and ``a ^ 1`` are mutual reverses.  Returns the flow value.
    """
    total = 0.0
    parent = np.empty(n_nodes, dtype=np.int64)
    queue = np.empty(n_nodes, dtype=np.int64)
    while True:
        parent.fill(-1)
        parent[s] = -2
        head, tail = 0, 0
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
            push = min(push, residual[a])
            v = arc_head[a ^ 1]
        v = t
        while v != s:
            a = parent[v]
            residual[a] -= push
            residual[a ^ 1] += push
            v = arc_head[a ^ 1]
        total += push
