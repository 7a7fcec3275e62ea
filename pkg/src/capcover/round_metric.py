"""Metric rounding: heavy/light preprocessing, cluster formation, selection of objects.

The rounding works on a fractional solution ``(x, y)`` and only ever moves flow between balls
for a fixed point (rerouting), so every point keeps receiving exactly one unit.  All flow
moves are logged to a :class:`~capcover.trace.Trace` for independent replay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exact import integral_assignment
from .instance import TOL, MetricInstance, is_monotone
from .relax import FractionalSolution, check_fractional, solve_relaxation
from .solution import RoundedSolution, from_assignment, realized_expansion
from .trace import Trace

GENERAL_BETA = 9.0
UNIFORM_BETA = 3 + 2 * math.sqrt(3)
SOFT_BETA = 3.0
MERGE_SLACK = 3.0


@dataclass(frozen=True)
class RoundingParams:
    alpha: float = 0.375
    tol: float = TOL
    strict: bool = True  # raise on the first failed invariant instead of only recording it
    prune_unused: bool = False  # drop selected balls that end up serving no point

    def __post_init__(self):
        if not 0 < self.alpha <= 0.375:
            raise ValueError("alpha must lie in (0, 3/8]")


@dataclass
class RoundingState:
    """Mutable state of cluster formation.  ``frac`` is rerouted in place."""

    inst: MetricInstance
    frac: FractionalSolution
    params: RoundingParams
    heavy: list[int]
    light: list[int]
    y_pre: np.ndarray
    lam: list[int] = field(default_factory=list)
    O: list[int] = field(default_factory=list)
    ks: list[int] = field(default_factory=list)
    cases: list[int] = field(default_factory=list)
    clusters: dict[int, list[int]] = field(default_factory=dict)
    yacc: dict[int, float] = field(default_factory=dict)
    retired: list[int] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    trace: Trace = field(default_factory=Trace)

    @property
    def avail(self) -> np.ndarray:
        return self.inst.capacities - self.frac.x.sum(axis=1)

    def check(self, ok: bool, msg: str) -> None:
        if not ok:
            self.violations.append(msg)
            if self.params.strict:
                raise AssertionError(msg)


def _move(x: np.ndarray, donor: int, receiver: int, point: int, amount: float, moves: list) -> None:
    x[donor, point] -= amount
    x[receiver, point] += amount
    moves.append((int(donor), int(receiver), int(point), float(amount)))


def _drain(x: np.ndarray, donors, receiver: int, point: int, moves: list) -> float:
    """Move all flow of ``point`` from ``donors`` to ``receiver``; return the amount moved."""
    total = 0.0
    for d in donors:
        if d != receiver and x[d, point] > 0:
            amt = x[d, point]
            _move(x, d, receiver, point, amt, moves)
            x[d, point] = 0.0
            total += amt
    return total


def _light_load(x: np.ndarray, y: np.ndarray, alpha: float, tol: float) -> np.ndarray:
    """Per point, the summed y of the light balls serving it."""
    light = (y > tol) & (y <= alpha + tol)
    return ((x > 0) & light[:, None]).T @ y


# ---------------------------------------------------------------------------
# preprocessing


def preprocess(
    inst: MetricInstance,
    frac: FractionalSolution,
    alpha: float = 0.375,
    trace: Trace | None = None,
    round_heavy: bool = True,
    tol: float = TOL,
) -> FractionalSolution:
    """Make every open ball heavy or light and cap each point's light load at ``alpha``.

    While some point (lowest id first) has light load above alpha, its light servers are
    scanned in tie-break order until their y-sum exceeds alpha; the first of them absorbs the
    others' flow and y, and may then serve within 3 times its radius.  With ``round_heavy``
    every ball whose y ends above alpha is finally opened (y = 1).
    """
    if not 0 < alpha <= 0.5:
        raise ValueError("alpha must lie in (0, 1/2]")
    out = frac.copy()
    x, y = out.x, out.y
    cost0 = float(y.sum())
    order = inst.order
    while True:
        load = _light_load(x, y, alpha, tol)
        viol = np.flatnonzero(load > alpha + tol)
        if viol.size == 0:
            break
        j = int(viol[0])
        group: list[int] = []
        acc = 0.0
        for i in order:
            if tol < y[i] <= alpha + tol and x[i, j] > 0:
                group.append(i)
                acc += y[i]
                if acc > alpha + tol:
                    break
        k = group[0]
        moves: list = []
        for mball in group[1:]:
            for p in np.flatnonzero(x[mball] > 0):
                _drain(x, [mball], k, int(p), moves)
            y[mball] = 0.0
        y[k] = acc
        out.stage_slack[k] = MERGE_SLACK
        if trace is not None:
            trace.log("merge", receiver=k, members=group, point=j, y=acc, moves=moves)

    if round_heavy:
        y[y > alpha + tol] = 1.0
        pos = y > tol
        bad = pos & (y < 1.0) & (y > alpha + tol)
        if np.any(bad):
            raise AssertionError(f"ball {int(np.flatnonzero(bad)[0])} is neither heavy nor light")
    load = _light_load(x, y, alpha, tol)
    if np.any(load > alpha + tol):
        raise AssertionError(f"point {int(np.argmax(load))} still has light load {load.max():.6g} > alpha")
    if round_heavy and y.sum() > cost0 / alpha + 1e-6:
        raise AssertionError(f"preprocessed cost {y.sum():.6g} exceeds cost/alpha = {cost0 / alpha:.6g}")
    problems = check_fractional(inst, out, soft=not round_heavy)
    if problems:
        raise AssertionError("preprocessing broke LP invariants: " + "; ".join(problems))
    return out


# ---------------------------------------------------------------------------
# cluster formation


def cluster_formation(
    inst: MetricInstance,
    frac: FractionalSolution,
    params: RoundingParams = RoundingParams(),
    trace: Trace | None = None,
) -> RoundingState:
    """Assign every light ball either to the cluster of an intersecting heavy ball or to O.

    Step (a) scans heavy balls and then unclustered light balls in id order and restarts
    after every clustering.  Step (b) picks the unclustered light ball with the largest
    ``k = min(U, #served points)`` (ties by the shared order).  Light balls that no longer
    serve any point are retired with y = 0 instead of being selected.
    """
    tol, alpha = params.tol, params.alpha
    frac = frac.copy()
    x, y = frac.x, frac.y
    U = inst.capacities
    heavy = [int(i) for i in np.flatnonzero(y >= 1 - tol)]
    light = [int(i) for i in np.flatnonzero((y > tol) & (y <= alpha + tol))]
    other = np.flatnonzero((y > tol) & (y < 1 - tol) & (y > alpha + tol))
    if other.size:
        raise AssertionError(f"ball {int(other[0])} is neither heavy nor light")
    st = RoundingState(inst, frac, params, heavy, light, y.copy(), trace=trace if trace is not None else Trace())
    st.lam = list(light)
    st.clusters = {h: [h] for h in heavy}
    st.yacc = {h: 0.0 for h in heavy}
    st.trace.log("start", heavy=heavy, light=light, y={str(t): float(y[t]) for t in light})

    H = np.asarray(heavy, dtype=np.int64)
    meets = inst.ball_ball_dist <= inst.radii[:, None] + inst.radii[None, :] + tol
    O_set: set[int] = set()
    by_rank = sorted(heavy, key=lambda i: inst.rank[i])

    def check_capacity_invariant(event: str) -> None:
        for h in heavy:
            st.check(st.yacc[h] <= 1 + alpha + tol, f"{event}: y-accumulation of {h} is {st.yacc[h]:.6g} > 1+alpha")

    while st.lam:
        # (a) cluster light balls into heavy balls with enough spare capacity
        while st.lam and H.size:
            lam = np.asarray(st.lam, dtype=np.int64)
            out = x.sum(axis=1)
            ok = meets[np.ix_(H, lam)] & ((U[H] - out[H])[:, None] >= out[lam][None, :] - tol)
            hit = np.argwhere(ok)
            if hit.size == 0:
                break
            h, t = int(H[hit[0, 0]]), int(lam[hit[0, 1]])
            moves: list = []
            for p in np.flatnonzero(x[t] > 0):
                _drain(x, [t], h, int(p), moves)
            st.clusters[h].append(t)
            st.lam.remove(t)
            st.yacc[h] -= st.y_pre[t]
            st.trace.log("cluster", heavy=h, light=t, moves=moves)
            check_capacity_invariant(f"cluster {t}->{h}")
        if not st.lam:
            break

        # (b) pick the light ball with the largest k
        served = {t: np.flatnonzero(x[t] > 0) for t in st.lam}
        for t in [t for t in st.lam if served[t].size == 0]:
            st.lam.remove(t)
            st.retired.append(t)
            y[t] = 0.0
            x[t] = 0.0
            st.trace.log("retire", ball=t)
        if not st.lam:
            break
        t = min(st.lam, key=lambda b: (-min(int(U[b]), served[b].size), inst.rank[b]))
        A = served[t]
        k = min(int(U[t]), A.size)
        st.lam.remove(t)
        st.O.append(t)
        O_set.add(t)
        st.ks.append(k)

        # (c) use t's spare capacity to free heavy capacity
        moves = []
        donors = [i for i in range(inst.m) if i not in O_set]
        if A.size <= U[t]:
            case = 1
            for p in A:
                _drain(x, donors, t, int(p), moves)
        elif U[t] > 1:
            case = 2
            for p in A:
                need = x[donors, p].sum()
                if need > U[t] - x[t].sum() + tol:
                    break
                _drain(x, donors, t, int(p), moves)
        else:
            case = 3
            p = int(A[0])
            _drain(x, list(st.lam), t, p, moves)
            f = x[list(O_set), p].sum()
            want = min(U[t] - x[t].sum(), 1.0 - f)
            for h in by_rank:
                if want <= tol:
                    break
                amt = min(x[h, p], want)
                if amt > 0:
                    _move(x, h, t, p, amt, moves)
                    want -= amt
        st.cases.append(case)
        st.trace.log("select", ball=t, k=k, case=case, moves=moves)

        freed = {h: 0.0 for h in heavy}
        for d, _, _, amt in moves:
            if d in freed:
                freed[d] += amt
        F = sum(freed.values())
        st.check(F >= k / 5 - tol, f"select {t}: freed flow {F:.6g} < k/5 = {k / 5:.6g}")
        if len(st.ks) > 1:
            st.check(st.ks[-1] <= st.ks[-2], f"select {t}: k rose from {st.ks[-2]} to {k}")
        avail = st.avail
        for h in heavy:
            st.yacc[h] += freed[h] / k
            st.check(avail[h] >= st.yacc[h] * k - 1e-7, f"select {t}: AvCap({h}) = {avail[h]:.6g} < y-acc*k = {st.yacc[h] * k:.6g}")
        check_capacity_invariant(f"select {t}")

    st.check(
        len(st.O) <= 5 * ((1 + alpha) * len(heavy) + float(st.y_pre[light].sum())) + 1e-6,
        f"|O| = {len(st.O)} exceeds the size bound",
    )
    st.check(bool(np.all(st.avail >= -tol)), "a ball exceeds its capacity after cluster formation")
    for t in st.O:
        y[t] = 1.0
        st.clusters[t] = [t]
    st.trace.log("finish", O=list(st.O), retired=list(st.retired))
    return st


# ---------------------------------------------------------------------------
# selection of objects


def _select(inst: MetricInstance, st: RoundingState, choose) -> tuple[list[int], np.ndarray]:
    x, y = st.frac.x, st.frac.y
    selected: list[int] = []
    for h in sorted(st.clusters):
        members = st.clusters[h]
        j = h if len(members) == 1 else choose(h, [b for b in members if b != h])
        if j != h:
            moves: list = []
            for p in np.flatnonzero(x[h] > 0):
                _drain(x, [h], j, int(p), moves)
            st.trace.log("choose", cluster=h, chosen=j, moves=moves)
        selected.append(j)
    selected.sort()
    keep = np.zeros(inst.m, dtype=bool)
    keep[selected] = True
    y[:] = keep.astype(float)
    load = x.sum(axis=1)
    if np.any(x[~keep] > st.params.tol):
        raise AssertionError("an unselected ball still serves a point")
    over = np.flatnonzero(load > inst.capacities + st.params.tol)
    if over.size:
        raise AssertionError(f"selected ball {int(over[0])} carries {load[over[0]]:.6g} > capacity")
    return selected, x


def select_objects_general(inst: MetricInstance, st: RoundingState) -> tuple[list[int], np.ndarray]:
    """One ball per cluster: its largest member (shared order), taking over the heavy flow."""

    def choose(h: int, lights: list[int]) -> int:
        return min([h] + lights, key=lambda b: inst.rank[b])

    selected, x = _select(inst, st, choose)
    for i in selected:
        beta = realized_expansion(inst, i, np.flatnonzero(x[i] > 0))
        if beta > GENERAL_BETA + st.params.tol:
            raise AssertionError(f"ball {i} would need expansion {beta:.6g} > {GENERAL_BETA}")
    st.trace.log("end", selected=selected)
    return selected, x


def select_objects_uniform(inst: MetricInstance, st: RoundingState) -> tuple[list[int], np.ndarray]:
    """Equal-capacity selection: keep the heavy ball only when the largest light member is
    smaller than ``r_h / sqrt(3)``; otherwise hand its flow to that light ball."""
    if inst.m and np.any(inst.capacities != inst.capacities[0]):
        raise ValueError("uniform selection needs all capacities equal")

    def choose(h: int, lights: list[int]) -> int:
        l = min(lights, key=lambda b: inst.rank[b])
        return l if inst.radii[l] >= inst.radii[h] / math.sqrt(3) else h

    selected, x = _select(inst, st, choose)
    st.trace.log("end", selected=selected)
    return selected, x


# ---------------------------------------------------------------------------
# pipelines


def _finish(inst, st, selected, x, frac, params, copies=None) -> RoundedSolution:
    assignment = integral_assignment(inst, selected, x, copies=copies)
    keep = None if params.prune_unused else selected
    sol = from_assignment(inst, assignment, frac.lp_value, copies=copies, keep=keep)
    sol.stats.update(
        n_heavy=len(st.heavy),
        n_light=len(st.light),
        n_O=len(st.O),
        n_retired=len(st.retired),
        ks=list(st.ks),
        cases=list(st.cases),
        violations=list(st.violations),
    )
    return sol


def run_metric_pipeline(
    inst: MetricInstance,
    params: RoundingParams = RoundingParams(),
    variant: str = "general",
    trace: Trace | None = None,
    frac: FractionalSolution | None = None,
) -> RoundedSolution:
    """LP relaxation, preprocessing, cluster formation, selection and integral assignment."""
    if variant not in ("general", "uniform"):
        raise ValueError(f"unknown variant {variant!r}")
    if not is_monotone(inst):
        raise ValueError("metric rounding needs monotone capacities (larger radius, no smaller capacity)")
    if frac is None:
        frac = solve_relaxation(inst)
    trace = trace if trace is not None else Trace()
    trace.begin(frac.x, frac.y, inst.capacities, params.alpha)
    pre = preprocess(inst, frac, params.alpha, trace=trace, tol=params.tol)
    st = cluster_formation(inst, pre, params, trace)
    select = select_objects_general if variant == "general" else select_objects_uniform
    selected, x = select(inst, st)
    sol = _finish(inst, st, selected, x, frac, params)
    sol.stats["preprocessed_cost"] = pre.cost
    return sol


def solve_soft(
    inst: MetricInstance,
    frac: FractionalSolution | None = None,
    alpha: float = 0.5,
    trace: Trace | None = None,
    tol: float = TOL,
) -> RoundedSolution:
    """Soft capacities: open ceil(y / (1 - alpha)) copies of every non-light ball.

    ``frac`` must solve the LP without the upper bound on y.  Light flow is dropped, the
    remaining flow is scaled by 1 / (1 - alpha) and each point's flow is scaled back to one.
    """
    if not 0 < alpha < 1 or alpha > 0.5:
        raise ValueError("alpha must lie in (0, 1/2]")
    if not is_monotone(inst):
        raise ValueError("soft rounding needs monotone capacities")
    if frac is None:
        frac = solve_relaxation(inst, soft=True)
    trace = trace if trace is not None else Trace()
    trace.begin(frac.x, frac.y, inst.capacities, alpha, soft=True)
    pre = preprocess(inst, frac, alpha, trace=trace, round_heavy=False, tol=tol)
    y = pre.y
    open_ = np.flatnonzero(y > alpha + tol)
    copies = {int(i): int(math.ceil(y[i] / (1 - alpha) - tol)) for i in open_}
    x = np.zeros_like(pre.x)
    x[open_] = pre.x[open_] / (1 - alpha)
    col = x.sum(axis=0)
    if np.any(col < 1 - 1e-7):
        raise AssertionError(f"point {int(np.argmin(col))} keeps only {col.min():.6g} non-light flow")
    x /= col
    load = x.sum(axis=1)
    for i, c in copies.items():
        if load[i] > c * inst.capacities[i] + 1e-7:
            raise AssertionError(f"ball {i} needs more than its {c} copies")
    assignment = integral_assignment(inst, list(copies), x, copies=copies)
    sol = from_assignment(inst, assignment, frac.lp_value, copies=copies, keep=list(copies))
    sol.stats.update(n_open=len(copies), preprocessed_cost=pre.cost)
    trace.log("end", selected=sol.selected, copies=[copies[i] for i in sol.selected])
    return sol
