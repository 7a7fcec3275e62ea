"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Set ``CAPCOVER_NUMBA=0`` before import to force the numpy path.  Both backends
implement identical contracts and are cross-checked by the test suite.
"""

import os

import numpy as np

from . import _numpy

BACKEND = "numpy"
_impl = _numpy
if os.environ.get("CAPCOVER_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off"):
    try:
        from . import _numba

        _impl = _numba
        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass

OPTIMAL = _numpy.OPTIMAL
UNBOUNDED = _numpy.UNBOUNDED
ITERATION_CAP = _numpy.ITERATION_CAP


def backend(name=None):
    """Return the kernel module for ``name`` ('numba' or 'numpy'); default is the active one."""
    if name is None:
        return _impl
    if name == "numpy":
        return _numpy
    if name == "numba":
        from . import _numba

        return _numba
    raise ValueError(f"unknown kernel backend {name!r}")


def pairwise_distances(a, b, impl=None):
    impl = impl or _impl
    return impl.pairwise_distances(np.ascontiguousarray(a, dtype=float), np.ascontiguousarray(b, dtype=float))


def simplex_pivots(T, basis, n_cols, max_iter, piv_tol, opt_tol, impl=None):
    impl = impl or _impl
    status, it = impl.simplex_pivots(T, basis, n_cols, max_iter, piv_tol, opt_tol)
    return int(status), int(it)


def max_flow(n_nodes, tails, heads, caps, s, t, tol=1e-12, impl=None):
    """Maximum s-t flow; returns ``(value, per-edge flow)``.

    Edges are explored in input order, so the result is deterministic.
    """
    impl = impl or _impl
    tails = np.asarray(tails, dtype=np.int64)
    heads = np.asarray(heads, dtype=np.int64)
    caps = np.asarray(caps, dtype=float)
    n_edges = tails.size
    arc_head = np.empty(2 * n_edges, dtype=np.int64)
    arc_head[0::2] = heads
    arc_head[1::2] = tails
    residual = np.zeros(2 * n_edges)
    residual[0::2] = caps
    arc_tail = np.empty(2 * n_edges, dtype=np.int64)
    arc_tail[0::2] = tails
    arc_tail[1::2] = heads
    adj_arcs = np.argsort(arc_tail, kind="stable").astype(np.int64)
    adj_start = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(arc_tail, minlength=n_nodes), out=adj_start[1:])
    value = impl.max_flow_csr(n_nodes, arc_head, residual, adj_start, adj_arcs, s, t, tol)
    flow = caps - residual[0::2]
    return float(value), flow
