"""Dense standard-form linear programs, a two-phase tableau simplex, and a vertex-enumeration oracle."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from . import kernels

FEAS_TOL = 1e-7
PIVOT_TOL = 1e-9
MAX_PIVOTS = 1_000_000

LE, EQ, GE = -1, 0, 1
_SENSES = {"<=": LE, "=": EQ, "==": EQ, ">=": GE, LE: LE, EQ: EQ, GE: GE}


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class NumericalFailure(RuntimeError):
    """The solver could not certify its answer (iteration cap or residuals out of tolerance)."""


class SizeCapError(ValueError):
    pass


@dataclass
class LpProblem:
    """minimize ``c @ x`` subject to ``A[r] @ x (<=|=|>=) b[r]`` and ``lo <= x <= hi``."""

    c: np.ndarray
    A: np.ndarray
    senses: np.ndarray
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.senses = np.asarray([_SENSES[s] for s in self.senses], dtype=np.int64)
        self.b = np.asarray(self.b, dtype=float)
        self.lo = np.zeros(n) if self.lo is None else np.asarray(self.lo, dtype=float)
        self.hi = np.full(n, np.inf) if self.hi is None else np.asarray(self.hi, dtype=float)
        if not (self.senses.size == self.b.size == self.A.shape[0]):
            raise ValueError("A, senses and b must have one entry per row")
        if self.lo.size != n or self.hi.size != n:
            raise ValueError("bounds must have one entry per variable")
        if not np.all(np.isfinite(self.b)):
            raise ValueError("right-hand sides must be finite")
        if np.any(self.lo < 0) or not np.all(np.isfinite(self.lo)):
            raise ValueError("lower bounds must be finite and nonnegative")

    @classmethod
    def build(cls, c, rows=(), lo=None, hi=None) -> "LpProblem":
        """Build from ``(coefficients, relation, rhs)`` rows."""
        c = np.asarray(c, dtype=float)
        A = np.array([r[0] for r in rows], dtype=float).reshape(len(rows), c.size)
        return cls(c, A, [r[1] for r in rows], [r[2] for r in rows], lo, hi)

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.b.size

    def residual(self, x: np.ndarray) -> float:
        """Largest constraint or bound violation of ``x``."""
        ax = self.A @ x
        viol = [0.0]
        if self.n_rows:
            viol.append(np.max(np.where(self.senses == LE, ax - self.b, 0.0), initial=0.0))
            viol.append(np.max(np.where(self.senses == GE, self.b - ax, 0.0), initial=0.0))
            viol.append(np.max(np.where(self.senses == EQ, np.abs(ax - self.b), 0.0), initial=0.0))
        viol.append(np.max(self.lo - x, initial=0.0))
        viol.append(np.max(np.where(np.isfinite(self.hi), x - self.hi, 0.0), initial=0.0))
        return float(max(viol))


@dataclass
class LpSolution:
    status: Status
    value: float = float("nan")
    assignment: np.ndarray = field(default_factory=lambda: np.zeros(0))
    basis: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    iterations: int = 0


def simplex_solve(lp: LpProblem, tol: float = PIVOT_TOL, max_pivots: int = MAX_PIVOTS, impl=None) -> LpSolution:
    """Two-phase dense tableau simplex.

    Returns a basic optimal solution, or an Infeasible / Unbounded status.  ``basis`` lists the
    basic columns of the internal standard form whose indices ``< n_vars`` are the original
    variables.
    """
    n = lp.n_vars
    shift = lp.lo
    A = lp.A
    b = lp.b - A @ shift
    senses = lp.senses.copy()

    finite = np.flatnonzero(np.isfinite(lp.hi))
    if finite.size:
        A = np.vstack([A, np.eye(n)[finite]])
        b = np.concatenate([b, lp.hi[finite] - shift[finite]])
        senses = np.concatenate([senses, np.full(finite.size, LE)])
        if np.any(b[-finite.size :] < -FEAS_TOL):
            return LpSolution(Status.INFEASIBLE)

    neg = b < 0
    A = np.where(neg[:, None], -A, A)
    b = np.abs(b)
    senses = np.where(neg, -senses, senses)

    rows = b.size
    n_slack = int(np.count_nonzero(senses != EQ))
    art_rows = np.flatnonzero(senses != LE)
    n_art = art_rows.size
    width = n + n_slack + n_art
    T = np.zeros((rows + 1, width + 1))
    T[:rows, :n] = A
    T[:rows, -1] = b
    basis = np.empty(rows, dtype=np.int64)
    col = n
    for r in range(rows):
        if senses[r] == LE:
            T[r, col] = 1.0
            basis[r] = col
            col += 1
        elif senses[r] == GE:
            T[r, col] = -1.0
            col += 1
    art_start = col
    for k, r in enumerate(art_rows):
        T[r, art_start + k] = 1.0
        basis[r] = art_start + k

    total_iters = 0
    if n_art:
        # phase 1: minimise the sum of artificials
        T[rows, :] = -T[art_rows, :].sum(axis=0)
        T[rows, art_start:width] = 0.0
        status, it = kernels.simplex_pivots(T, basis, width, max_pivots, tol, tol, impl=impl)
        total_iters += it
        if status == kernels.ITERATION_CAP:
            raise NumericalFailure(f"phase 1 exceeded {max_pivots} pivots")
        if -T[rows, -1] > FEAS_TOL * max(1.0, float(b.max(initial=0.0))):
            return LpSolution(Status.INFEASIBLE, iterations=total_iters)
        T, basis = _drive_out_artificials(T, basis, art_start, tol)
        T = np.ascontiguousarray(np.delete(T, np.s_[art_start:width], axis=1))
        width = art_start

    cost = np.zeros(width)
    cost[:n] = lp.c
    rows = basis.size
    T[rows, :width] = cost - cost[basis] @ T[:rows, :width]
    T[rows, -1] = -cost[basis] @ T[:rows, -1]
    status, it = kernels.simplex_pivots(T, basis, width, max_pivots - total_iters, tol, tol, impl=impl)
    total_iters += it
    if status == kernels.ITERATION_CAP:
        raise NumericalFailure(f"phase 2 exceeded {max_pivots} pivots")
    if status == kernels.UNBOUNDED:
        return LpSolution(Status.UNBOUNDED, iterations=total_iters)

    z = np.zeros(width)
    z[basis] = np.maximum(T[:rows, -1], 0.0)
    x = z[:n] + shift
    res = lp.residual(x)
    if res > FEAS_TOL:
        raise NumericalFailure(f"basic solution violates constraints by {res:.3g}")
    return LpSolution(Status.OPTIMAL, float(lp.c @ x), x, basis.copy(), total_iters)


def _drive_out_artificials(T, basis, art_start, tol):
    rows = basis.size
    keep = np.ones(rows, dtype=bool)
    for r in range(rows):
        if basis[r] < art_start:
            continue
        cand = np.flatnonzero(np.abs(T[r, :art_start]) > tol)
        if cand.size == 0:
            keep[r] = False  # redundant row
            continue
        q = cand[0]
        T[r] /= T[r, q]
        f = T[:, q].copy()
        f[r] = 0.0
        T -= np.outer(f, T[r])
        T[:, q] = 0.0
        T[r, q] = 1.0
        basis[r] = q
    if not keep.all():
        T = T[np.append(keep, True)]
        basis = basis[keep]
    return np.ascontiguousarray(T), basis


def vertex_enum_oracle(lp: LpProblem, max_vars: int = 12, max_constraints: int = 16):
    """Minimum objective over all basic feasible points, by brute force.

    Every row and every finite bound is a candidate active constraint; equality rows are
    always active.  Returns ``Status.INFEASIBLE`` if no vertex is feasible.  Assumes the
    objective is bounded below on the feasible set.
    """
    n = lp.n_vars
    G = [lp.A]
    h = [lp.b]
    kinds = [lp.senses]
    G.append(np.eye(n))
    h.append(lp.lo)
    kinds.append(np.full(n, GE))
    fin = np.flatnonzero(np.isfinite(lp.hi))
    G.append(np.eye(n)[fin])
    h.append(lp.hi[fin])
    kinds.append(np.full(fin.size, LE))
    G = np.vstack(G)
    h = np.concatenate(h)
    kinds = np.concatenate(kinds)
    if n > max_vars or G.shape[0] > max_constraints:
        raise SizeCapError(f"oracle limited to {max_vars} variables and {max_constraints} constraints")

    eq = [i for i in range(G.shape[0]) if kinds[i] == EQ]
    free = [i for i in range(G.shape[0]) if kinds[i] != EQ]
    if len(eq) > n:
        # pick any n-subset of equalities; the rest are checked for feasibility
        choices = [list(c) for c in itertools.combinations(eq, n)]
    else:
        choices = [eq + list(c) for c in itertools.combinations(free, n - len(eq))]

    best = None
    for act in choices:
        M = G[act]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, h[act])
        r = G @ x - h
        ok = np.all(np.where(kinds == LE, r <= FEAS_TOL, True)) and np.all(
            np.where(kinds == GE, r >= -FEAS_TOL, True)
        ) and np.all(np.where(kinds == EQ, np.abs(r) <= FEAS_TOL, True))
        if ok:
            val = float(lp.c @ x)
            if best is None or val < best:
                best = val
    return Status.INFEASIBLE if best is None else best
