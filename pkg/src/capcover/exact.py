"""Ground truth: integral assignments by max-flow, brute-force optimum, solution verifier."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import kernels
from .instance import TOL, MetricInstance, ValidationReport
from .solution import RoundedSolution

SUPPORT_TOL = 1e-9


class InfeasibleInstance(ValueError):
    pass


@dataclass
class FlowNetwork:
    """Source -> ball (capacity U_i) -> point (capacity 1) -> sink (capacity 1).

    Node layout: balls ``0..m-1``, points ``m..m+n-1``, then source and sink.
    """

    m: int
    n: int
    ball_caps: np.ndarray
    arc_ball: np.ndarray
    arc_point: np.ndarray

    @property
    def source(self) -> int:
        return self.m + self.n

    @property
    def sink(self) -> int:
        return self.m + self.n + 1

    def solve(self, impl=None) -> tuple[float, np.ndarray]:
        m, n = self.m, self.n
        tails = np.concatenate([np.full(m, self.source), self.arc_ball, m + np.arange(n)])
        heads = np.concatenate([np.arange(m), m + self.arc_point, np.full(n, self.sink)])
        caps = np.concatenate([self.ball_caps, np.ones(self.arc_ball.size), np.ones(n)]).astype(float)
        value, flow = kernels.max_flow(m + n + 2, tails, heads, caps, self.source, self.sink, impl=impl)
        return value, flow[m : m + self.arc_ball.size]


def _network(inst: MetricInstance, allowed: np.ndarray, caps: np.ndarray) -> FlowNetwork:
    bi, pj = np.nonzero(allowed)  # row-major: balls in id order, then points in id order
    return FlowNetwork(inst.m, inst.n, caps, bi.astype(np.int64), pj.astype(np.int64))


def integral_assignment(
    inst: MetricInstance,
    selected,
    x: np.ndarray,
    copies: dict[int, int] | None = None,
    impl=None,
) -> np.ndarray:
    """Round a feasible fractional assignment on ``selected`` to an integral one.

    Only arcs with ``x[i, j] > 1e-9`` are used, so no point ends up farther from its ball than
    it already was.  Ball i may take ``U_i * copies[i]`` points.
    """
    sel = np.zeros(inst.m, dtype=bool)
    sel[list(selected)] = True
    allowed = (x > SUPPORT_TOL) & sel[:, None]
    caps = inst.capacities.astype(float) * sel
    if copies is not None:
        for i, c in copies.items():
            caps[i] *= c
    net = _network(inst, allowed, caps)
    value, arc_flow = net.solve(impl)
    if value < inst.n - 0.5:
        raise AssertionError(f"support network carries {value} < {inst.n} units; fractional input was infeasible")
    assignment = np.full(inst.n, -1, dtype=np.int64)
    used = arc_flow > 0.5
    assignment[net.arc_point[used]] = net.arc_ball[used]
    return assignment


def _assign_on(inst: MetricInstance, subset, beta: float, impl=None) -> np.ndarray | None:
    sel = np.zeros(inst.m, dtype=bool)
    sel[list(subset)] = True
    allowed = inst.membership(beta) & sel[:, None]
    net = _network(inst, allowed, inst.capacities.astype(float) * sel)
    value, arc_flow = net.solve(impl)
    if value < inst.n - 0.5:
        return None
    assignment = np.full(inst.n, -1, dtype=np.int64)
    used = arc_flow > 0.5
    assignment[net.arc_point[used]] = net.arc_ball[used]
    return assignment


def feasible_assignment_exists(inst: MetricInstance, subset, beta: float = 1.0) -> bool:
    if beta < 1:
        raise ValueError("beta must be >= 1")
    return _assign_on(inst, subset, beta) is not None


def brute_force_opt(inst: MetricInstance, max_balls: int = 12) -> tuple[int, list[int], np.ndarray]:
    """Exact optimum by enumerating subsets in increasing size (then lexicographic order).

    Subsets whose total capacity is below n or that leave a point uncovered are skipped
    without a flow computation.
    """
    m, n = inst.m, inst.n
    if m > max_balls:
        raise ValueError(f"brute force is capped at {max_balls} balls, instance has {m}")
    inside = inst.membership()
    caps = inst.capacities
    if n == 0:
        return 0, [], np.zeros(0, dtype=np.int64)
    for size in range(1, m + 1):
        for subset in itertools.combinations(range(m), size):
            idx = list(subset)
            if caps[idx].sum() < n:
                continue
            if not inside[idx].any(axis=0).all():
                continue
            assignment = _assign_on(inst, idx, 1.0)
            if assignment is not None:
                return size, idx, assignment
    raise InfeasibleInstance("no subset of balls admits a feasible assignment")


def verify_solution(inst: MetricInstance, sol: RoundedSolution, beta_max: float) -> ValidationReport:
    """Check assignment completeness, capacities and distances against ``beta_max``.

    A point's distance is also checked against the expansion factor the solution records for
    its ball.
    """
    rep = ValidationReport()
    a = np.asarray(sol.assignment, dtype=np.int64)
    selected = set(int(i) for i in sol.selected)
    if len(selected) != len(sol.selected):
        rep.add("selection", "selected list contains duplicates")
    for i in sorted(selected):
        if not 0 <= i < inst.m:
            rep.add("selection", f"unknown ball {i}")
    if a.shape != (inst.n,):
        rep.add("unassigned", f"assignment has {a.size} entries for {inst.n} points")
        return rep
    for j in range(inst.n):
        if a[j] not in selected or not 0 <= a[j] < inst.m:
            rep.add("unassigned", f"point {j} is assigned to {int(a[j])}, which is not a selected ball")
    load = np.bincount(a[(a >= 0) & (a < inst.m)], minlength=inst.m)
    for i in sorted(selected):
        if not 0 <= i < inst.m:
            continue
        cap = inst.capacities[i] * sol.n_copies(i)
        if load[i] > cap:
            rep.add("capacity", f"ball {i} serves {int(load[i])} points, capacity {int(cap)}")
    for j in range(inst.n):
        i = int(a[j])
        if i not in selected or not 0 <= i < inst.m:
            continue
        d = inst.ball_point_dist[i, j]
        r = inst.radii[i]
        if d > beta_max * r + TOL:
            rep.add("distance", f"point {j} is {d:.6g} from ball {i} (radius {r:.6g}), beyond {beta_max}x")
        elif i in sol.expansion and d > sol.expansion[i] * r + TOL:
            rep.add("distance", f"point {j} lies outside ball {i} at its recorded expansion {sol.expansion[i]:.6g}")
    return rep
