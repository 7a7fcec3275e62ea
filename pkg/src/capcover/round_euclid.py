"""Euclidean rounding with (1 + eps) expansion, using bounded grids.

Preprocessing replaces the single merge ball of the metric version by one ball per grid cell
and radius class; selection keeps a grid's worth of balls per cluster.  Cluster formation is
shared with :mod:`capcover.round_metric`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .exact import integral_assignment
from .instance import TOL, MetricInstance, is_monotone
from .relax import FractionalSolution, check_fractional, solve_relaxation
from .round_metric import RoundingParams, RoundingState, _drain, _light_load, cluster_formation
from .solution import RoundedSolution, from_assignment, realized_expansion
from .trace import Trace


@dataclass(frozen=True)
class EuclidParams:
    epsilon: float = 0.5
    alpha: float = 0.375
    c: float = 2.0  # case split constant of the selection step
    tol: float = TOL
    strict: bool = True
    prune_unused: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.c > 1:
            raise ValueError("case constant c must exceed 1")
        if not 0 < self.alpha <= 0.375:
            raise ValueError("alpha must lie in (0, 3/8]")

    def rounding(self) -> RoundingParams:
        return RoundingParams(alpha=self.alpha, tol=self.tol, strict=self.strict, prune_unused=self.prune_unused)


# ---------------------------------------------------------------------------
# construction constants


def _shrink(d: int, reach: float = 2.0) -> float:
    """Granularity factor keeping a cell's diagonal within ``reach`` cells of side g."""
    return min(1.0, reach / math.sqrt(d))


def n_classes(eps: float) -> int:
    return max(0, math.ceil(math.log2(1 / eps))) + 2


def cells_per_class(eps: float, d: int) -> int:
    return math.ceil((16 / eps) * max(1.0, math.sqrt(d) / 2)) ** d


def k_preprocess(eps: float, d: int) -> int:
    """Most balls one preprocessing merge may open."""
    return n_classes(eps) * cells_per_class(eps, d)


def k_preprocess_unit(eps: float, d: int) -> int:
    g = eps / 4 * _shrink(d, 4.0)
    return (math.floor(2 / g) + 1) ** d


def _count(side: float, g: float, d: int) -> int:
    return (math.floor(side / g + 1e-9) + 1) ** d


def selection_bound(case: int, r_h: float, r_m: float, eps: float, d: int, c: float = 2.0, unit: bool = False) -> int:
    """Cell-count bound for one cluster, from the grid actually laid down.

    Every light member meets the heavy ball, so member centers lie in a box of side
    ``2 (r_h + r_m)`` around the heavy center.
    """
    if case == 0:
        return 1
    side = 2 * (r_h + r_m)
    g = selection_granularity(case, r_h, r_m, eps, d, c, unit)
    return _count(side, g, d) + (0 if case == 1 else 1)


def selection_granularity(case: int, r_h: float, r_m: float, eps: float, d: int, c: float = 2.0, unit: bool = False) -> float:
    if unit:
        return eps * r_m / 4 * _shrink(d, 4.0)
    if case == 1:
        return r_m * eps**2 / 8 * _shrink(d)
    if case == 2:
        return r_h * eps**2 / 8 * _shrink(d)
    return r_m * eps**2 / (4 * c) * _shrink(d)


def k_select(eps: float, d: int, c: float = 2.0) -> int:
    """Worst case of :func:`selection_bound` over all radius ratios a case admits."""
    f = _shrink(d)
    case1 = (math.floor(16 * (1 + eps / 4) / (eps**2 * f)) + 1) ** d
    case2 = (math.floor(64 * (1 + 1 / c) / (eps**3 * f)) + 1) ** d + 1
    case3 = (math.floor(8 * c * (1 + 2 / eps) / (eps**2 * f)) + 1) ** d + 1
    return max(case1, case2, case3)


def k_total(eps: float, d: int, alpha: float = 0.375, c: float = 2.0) -> float:
    """Cost certificate: preprocessing (K_pre / alpha), cluster formation (6 + 5 alpha),
    selection (K_sel per cluster)."""
    return k_select(eps, d, c) * (6 + 5 * alpha) * k_preprocess(eps, d) / alpha


def loose_case1_cells(eps: float, d: int) -> float:
    """Side 4 r_m over granularity r_m eps^2 / 8, per axis."""
    return (32 / eps**2) ** d


# ---------------------------------------------------------------------------
# grids


def _grid_pick(inst: MetricInstance, balls: list[int], g: float) -> dict[int, int]:
    """Map each ball to the largest ball (shared order) whose center shares its grid cell."""
    if not balls:
        return {}
    pts = inst.coords[inst.center_nodes[balls]]
    cells = np.floor((pts - pts.min(axis=0)) / g).astype(np.int64)
    best: dict[tuple, int] = {}
    for b, cell in zip(balls, map(tuple, cells)):
        if cell not in best or inst.rank[b] < inst.rank[best[cell]]:
            best[cell] = b
    return {b: best[cell] for b, cell in zip(balls, map(tuple, cells))}


def _all_equal_radii(inst: MetricInstance) -> bool:
    return inst.m > 0 and bool(np.all(inst.radii == inst.radii[0])) and inst.radii[0] > 0


# ---------------------------------------------------------------------------
# preprocessing


def euclid_preprocess(
    inst: MetricInstance,
    frac: FractionalSolution,
    params: EuclidParams = EuclidParams(),
    trace: Trace | None = None,
) -> FractionalSolution:
    """Heavy/light preprocessing that opens one ball per (radius class, grid cell).

    For a merge group with largest radius r, balls below r*eps/2 hand their flow to the largest
    ball.  The rest are split into classes [2^(i-1) r eps, 2^i r eps) (top class closed at r),
    each class gets a grid of granularity 2^(i-2) r eps^2 anchored at its lowest center
    coordinates, and the largest ball per cell absorbs its cell-mates.  Opened balls serve
    within (1 + eps) times their radius.
    """
    if not inst.is_euclidean:
        raise ValueError("Euclidean preprocessing needs coordinates")
    eps, alpha, tol = params.epsilon, params.alpha, params.tol
    d = inst.dimension
    out = frac.copy()
    x, y = out.x, out.y
    cost0 = float(y.sum())
    unit = _all_equal_radii(inst)
    top = max(0, math.ceil(math.log2(1 / eps)))
    k_merge = k_preprocess_unit(eps, d) if unit else k_preprocess(eps, d)
    while True:
        load = _light_load(x, y, alpha, tol)
        viol = np.flatnonzero(load > alpha + tol)
        if viol.size == 0:
            break
        j = int(viol[0])
        group: list[int] = []
        acc = 0.0
        for i in inst.order:
            if tol < y[i] <= alpha + tol and x[i, j] > 0:
                group.append(i)
                acc += y[i]
                if acc > alpha + tol:
                    break
        big = group[0]
        r = inst.radii[big]
        target: dict[int, int] = {}
        if r <= 0:
            target = {b: big for b in group}
        elif unit:
            target = _grid_pick(inst, group, eps * r / 4 * _shrink(d, 4.0))
        else:
            classes: dict[int, list[int]] = {}
            for b in group:
                rb = inst.radii[b]
                if rb < r * eps / 2:
                    target[b] = big
                    continue
                cls = min(top, math.floor(math.log2(rb / (r * eps))) + 1)
                classes.setdefault(cls, []).append(b)
            for cls, members in sorted(classes.items()):
                target.update(_grid_pick(inst, members, 2.0 ** (cls - 2) * r * eps**2 * _shrink(d)))
        moves: list = []
        for b in group:
            t = target[b]
            if t != b:
                for p in np.flatnonzero(x[b] > 0):
                    _drain(x, [b], t, int(p), moves)
        opened = sorted(set(target.values()))
        for b in group:
            y[b] = 0.0
        for b in opened:
            y[b] = 1.0
            out.stage_slack[b] = 1 + eps
        if len(opened) > k_merge:
            raise AssertionError(f"merge at point {j} opened {len(opened)} balls > bound {k_merge}")
        if trace is not None:
            trace.log("merge", receivers=opened, members=group, point=j, y=1.0, moves=moves)

    y[y > alpha + tol] = 1.0
    load = _light_load(x, y, alpha, tol)
    if np.any(load > alpha + tol):
        raise AssertionError(f"point {int(np.argmax(load))} still has light load {load.max():.6g} > alpha")
    if y.sum() > k_merge * cost0 / alpha + 1e-6:
        raise AssertionError(f"preprocessed cost {y.sum():.6g} exceeds K/alpha times {cost0:.6g}")
    problems = check_fractional(inst, out)
    if problems:
        raise AssertionError("Euclidean preprocessing broke LP invariants: " + "; ".join(problems))
    return out


# ---------------------------------------------------------------------------
# selection


@dataclass
class ClusterChoice:
    head: int
    case: int  # 0 heavy alone or heavy suffices, 1..3 grid cases
    chosen: list[int]
    bound: int
    r_h: float
    r_m: float


def _classify(inst: MetricInstance, h: int, lights: list[int], params: EuclidParams, unit: bool):
    eps, c, d = params.epsilon, params.c, inst.dimension
    r_h = float(inst.radii[h])
    if not lights:
        return 0, r_h, r_h, [h]
    r_m = float(max(inst.radii[b] for b in lights))
    if r_m <= r_h * eps / 2:
        return 0, r_h, r_m, [h]
    if unit:
        case, cut = 3, 0.0
    elif r_h < r_m * eps / 4:
        case, cut = 1, r_m * eps / 4
    elif r_h <= r_m / c:
        case, cut = 2, r_h * eps / 4
    else:
        case, cut = 3, r_m * eps / (2 * c)
    keep = [b for b in [h] + lights if inst.radii[b] >= cut]
    g = selection_granularity(case, r_h, r_m, eps, d, c, unit)
    chosen = set(_grid_pick(inst, keep, g).values())
    if case in (2, 3):
        chosen.add(h)
    return case, r_h, r_m, sorted(chosen)


def euclid_select(
    inst: MetricInstance, st: RoundingState, params: EuclidParams = EuclidParams()
) -> tuple[list[int], np.ndarray, list[ClusterChoice]]:
    """Per cluster, open a bounded set of balls and move the heavy ball's flow onto them.

    Each point the heavy ball serves goes to selected balls containing it at (1 + eps) via a
    max-flow that respects their capacities; arcs are listed by the shared order, so larger
    balls are preferred.  A point no selected ball contains raises AssertionError.
    """
    eps, tol, d = params.epsilon, params.tol, inst.dimension
    x, y = st.frac.x, st.frac.y
    unit = _all_equal_radii(inst)
    reach = inst.membership(1 + eps)
    choices: list[ClusterChoice] = []
    selected: list[int] = []
    for h in sorted(st.clusters):
        lights = [b for b in st.clusters[h] if b != h]
        case, r_h, r_m, chosen = _classify(inst, h, lights, params, unit)
        bound = selection_bound(case, r_h, r_m, eps, d, params.c, unit)
        if len(chosen) > bound:
            raise AssertionError(f"cluster {h} chose {len(chosen)} balls > bound {bound}")
        choices.append(ClusterChoice(h, case, chosen, bound, r_h, r_m))
        selected.extend(chosen)
        pts = np.flatnonzero(x[h] > 0)
        if chosen == [h] or pts.size == 0:
            continue
        chosen_ranked = sorted(chosen, key=lambda b: inst.rank[b])
        demand = x[h, pts].copy()
        tails, heads, caps = [], [], []
        n_p, n_b = pts.size, len(chosen_ranked)
        src, sink = n_p + n_b, n_p + n_b + 1
        for a, p in enumerate(pts):
            tails.append(src)
            heads.append(a)
            caps.append(demand[a])
        for a, p in enumerate(pts):
            for bi, b in enumerate(chosen_ranked):
                if reach[b, p]:
                    tails.append(a)
                    heads.append(n_p + bi)
                    caps.append(2.0)
        for bi, b in enumerate(chosen_ranked):
            spare = inst.capacities[b] - (x[b].sum() if b != h else 0.0)
            tails.append(n_p + bi)
            heads.append(sink)
            caps.append(max(spare, 0.0))
        value, flow = kernels.max_flow(n_p + n_b + 2, tails, heads, caps, src, sink)
        if value < demand.sum() - 1e-7:
            raise AssertionError(f"cluster {h}: selected balls can absorb only {value:.6g} of {demand.sum():.6g} units")
        moves: list = []
        x[h, pts] = 0.0
        e = n_p
        for a, p in enumerate(pts):
            for b in chosen_ranked:
                if reach[b, p]:
                    f = flow[e]
                    e += 1
                    if f > 0:
                        x[b, p] += f
                        if b != h:
                            moves.append((h, int(b), int(p), float(f)))
        st.trace.log("choose", cluster=h, chosen=chosen, case=case, moves=moves)
    selected = sorted(set(selected))
    keep = np.zeros(inst.m, dtype=bool)
    keep[selected] = True
    y[:] = keep.astype(float)
    col = x.sum(axis=0)
    if np.any(np.abs(col - 1) > 1e-7) or np.any(x[~keep] > tol):
        raise AssertionError("selection lost flow or left it on unselected balls")
    load = x.sum(axis=1)
    if np.any(load > inst.capacities + 1e-7):
        raise AssertionError("a selected ball exceeds its capacity")
    for i in selected:
        beta = realized_expansion(inst, i, np.flatnonzero(x[i] > tol))
        st.check(beta <= 1 + eps + tol, f"ball {i} would need expansion {beta:.6g} > 1+eps")
    st.trace.log("end", selected=selected)
    return selected, x, choices


# ---------------------------------------------------------------------------
# pipeline


def run_euclid_pipeline(
    inst: MetricInstance,
    params: EuclidParams = EuclidParams(),
    trace: Trace | None = None,
    frac: FractionalSolution | None = None,
) -> RoundedSolution:
    if not inst.is_euclidean:
        raise ValueError("the Euclidean pipeline needs a coordinate instance")
    if not is_monotone(inst):
        raise ValueError("Euclidean rounding needs monotone capacities")
    if frac is None:
        frac = solve_relaxation(inst)
    trace = trace if trace is not None else Trace()
    trace.begin(frac.x, frac.y, inst.capacities, params.alpha)
    pre = euclid_preprocess(inst, frac, params, trace)
    st = cluster_formation(inst, pre, params.rounding(), trace)
    selected, x, choices = euclid_select(inst, st, params)
    assignment = integral_assignment(inst, selected, x)
    keep = None if params.prune_unused else selected
    sol = from_assignment(inst, assignment, frac.lp_value, keep=keep)
    d = inst.dimension
    sol.stats.update(
        preprocessed_cost=pre.cost,
        n_heavy=len(st.heavy),
        n_light=len(st.light),
        n_O=len(st.O),
        cluster_cases=[ch.case for ch in choices],
        cluster_counts=[len(ch.chosen) for ch in choices],
        cluster_bounds=[ch.bound for ch in choices],
        k_total=k_total(params.epsilon, d, params.alpha, params.c),
        violations=list(st.violations),
    )
    return sol
