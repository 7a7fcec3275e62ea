"""The covering LP relaxation: build it from an instance and decode the simplex output."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import TOL, CoverageError, MetricInstance
from .lpcore import LE, EQ, LpProblem, NumericalFailure, Status, simplex_solve

MAX_LP_VARS = 20_000


class InfeasibleLP(RuntimeError):
    pass


@dataclass
class VarIndex:
    """Column layout: ``y`` for every ball, then one ``x`` column per (ball, point) in ``pairs``."""

    m: int
    n: int
    pairs: np.ndarray  # (k, 2) array of (ball, point), sorted by ball then point

    @property
    def n_vars(self) -> int:
        return self.m + len(self.pairs)


@dataclass
class FractionalSolution:
    """Flow ``x[i, j]`` from ball i to point j, openness ``y[i]``, and per-ball serving slack.

    ``stage_slack[i]`` is the multiple of ``r_i`` within which ball i may serve points at the
    current stage of rounding.
    """

    x: np.ndarray
    y: np.ndarray
    stage_slack: np.ndarray
    lp_value: float = float("nan")

    def copy(self) -> "FractionalSolution":
        return FractionalSolution(self.x.copy(), self.y.copy(), self.stage_slack.copy(), self.lp_value)

    @property
    def cost(self) -> float:
        return float(self.y.sum())


def build_mmcc_lp(inst: MetricInstance, soft: bool = False) -> tuple[LpProblem, VarIndex]:
    """minimize sum(y) s.t. x_ij <= y_i, sum_j x_ij <= U_i y_i, sum_i x_ij = 1, 0 <= y <= 1.

    x columns exist only for points inside the (unexpanded) ball.  With ``soft`` the upper
    bound on y is dropped, which is the relaxation for opening repeated copies of a ball.
    """
    m, n = inst.m, inst.n
    inside = inst.membership()
    uncovered = np.flatnonzero(~inside.any(axis=0)) if m else np.arange(n)
    if uncovered.size:
        raise CoverageError(int(uncovered[0]))
    pairs = np.argwhere(inside)
    idx = VarIndex(m, n, pairs)
    if idx.n_vars > MAX_LP_VARS:
        raise ValueError(f"LP would have {idx.n_vars} variables; the dense solver is capped at {MAX_LP_VARS}")

    k = len(pairs)
    nv = m + k
    n_rows = k + m + n
    A = np.zeros((n_rows, nv))
    senses = np.empty(n_rows, dtype=np.int64)
    b = np.zeros(n_rows)
    xcol = m + np.arange(k)
    balls, pts = pairs[:, 0], pairs[:, 1]
    # x_ij - y_i <= 0
    A[np.arange(k), xcol] = 1.0
    A[np.arange(k), balls] = -1.0
    senses[:k] = LE
    # sum_j x_ij - U_i y_i <= 0
    A[k + balls, xcol] = 1.0
    A[k + np.arange(m), np.arange(m)] = -inst.capacities
    senses[k : k + m] = LE
    # sum_i x_ij = 1
    A[k + m + pts, xcol] = 1.0
    senses[k + m :] = EQ
    b[k + m :] = 1.0

    c = np.zeros(nv)
    c[:m] = 1.0
    hi = np.full(nv, np.inf)
    if not soft:
        hi[:m] = 1.0
    return LpProblem(c, A, senses, b, np.zeros(nv), hi), idx


def decode(inst: MetricInstance, idx: VarIndex, values: np.ndarray) -> FractionalSolution:
    m, n = idx.m, idx.n
    y = np.array(values[:m], dtype=float)
    x = np.zeros((m, n))
    if len(idx.pairs):
        x[idx.pairs[:, 0], idx.pairs[:, 1]] = values[m:]
    x[x < TOL] = 0.0
    y[y < TOL] = 0.0
    y[np.abs(y - np.round(y)) < TOL] = np.round(y[np.abs(y - np.round(y)) < TOL])
    col = x.sum(axis=0)
    if np.any(col <= 0):
        raise NumericalFailure("decoded LP leaves a point without flow")
    x /= col
    return FractionalSolution(x, y, np.ones(m), float(y.sum()))


def solve_relaxation(inst: MetricInstance, soft: bool = False, impl=None) -> FractionalSolution:
    lp, idx = build_mmcc_lp(inst, soft=soft)
    sol = simplex_solve(lp, impl=impl)
    if sol.status is not Status.OPTIMAL:
        raise InfeasibleLP(f"covering LP is {sol.status.value}")
    frac = decode(inst, idx, sol.assignment)
    check_fractional(inst, frac, soft=soft)
    return frac


def check_fractional(inst: MetricInstance, frac: FractionalSolution, soft: bool = False, tol: float = TOL) -> list[str]:
    """Return descriptions of violated LP invariants (empty when all hold)."""
    x, y = frac.x, frac.y
    problems = []
    if np.any(x > y[:, None] + tol):
        i, j = np.argwhere(x > y[:, None] + tol)[0]
        problems.append(f"x[{i},{j}]={x[i, j]} exceeds y[{i}]={y[i]}")
    load = x.sum(axis=1)
    over = load > y * inst.capacities + tol
    if np.any(over):
        i = int(np.flatnonzero(over)[0])
        problems.append(f"ball {i} sends {load[i]} > y*U = {y[i] * inst.capacities[i]}")
    inflow = x.sum(axis=0)
    if np.any(np.abs(inflow - 1.0) > tol):
        j = int(np.argmax(np.abs(inflow - 1.0)))
        problems.append(f"point {j} receives {inflow[j]}")
    reach = inst.ball_point_dist <= frac.stage_slack[:, None] * inst.radii[:, None] + tol
    if np.any((x > 0) & ~reach):
        i, j = np.argwhere((x > 0) & ~reach)[0]
        problems.append(f"ball {i} serves point {j} beyond its stage radius")
    if np.any(y < 0) or (not soft and np.any(y > 1 + tol)):
        problems.append("y out of range")
    return problems
