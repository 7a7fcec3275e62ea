"""Capacitated covering instances: balls, a metric over points and centers, validation, I/O.

Node ids are integers over ``points ++ centers``: point ``j`` is node ``j`` and the
center with index ``c`` is node ``n_points + c``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Sequence

import numpy as np

TOL = 1e-9

# Triangle checks are O(N^3); skip them by default above this many nodes.
TRIANGLE_CHECK_LIMIT = 400


class CoverageError(ValueError):
    """Some point lies in no ball, so the covering LP has no feasible solution."""

    def __init__(self, point: int):
        super().__init__(f"point {point} is not contained in any ball")
        self.point = point


@dataclass(frozen=True)
class Ball:
    id: int
    center: int  # index into MetricInstance.centers
    radius: float
    capacity: int


def order_key(ball: Ball) -> tuple[float, int, int]:
    """Shared tie-break order: larger radius first, then larger capacity, then lower id."""
    return (-ball.radius, -ball.capacity, ball.id)


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def is_valid(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def add(self, kind: str, detail: str) -> None:
        self.violations.append(Violation(kind, detail))

    def to_dict(self) -> dict[str, Any]:
        return {
            "is_valid": self.is_valid,
            "violations": [{"kind": v.kind, "detail": v.detail} for v in self.violations],
        }


@dataclass(frozen=True, eq=False)
class MetricInstance:
    """Points and capacitated balls over either Euclidean coordinates or an explicit metric.

    Exactly one of ``coords`` (shape ``(n + k, d)``) and ``metric`` (shape ``(n + k, n + k)``)
    is set.  ``points`` and ``centers`` hold names for explicit metrics; for Euclidean
    instances they are derived from ``coords``.
    """

    balls: tuple[Ball, ...]
    n_points: int
    n_centers: int
    coords: np.ndarray | None = None
    metric: np.ndarray | None = None
    point_names: tuple[str, ...] | None = None
    center_names: tuple[str, ...] | None = None

    def __post_init__(self):
        if (self.coords is None) == (self.metric is None):
            raise ValueError("exactly one of coords and metric must be given")
        size = self.n_points + self.n_centers
        geo = self.coords if self.coords is not None else self.metric
        if geo.shape[0] != size:
            raise ValueError(f"geometry has {geo.shape[0]} rows, expected {size}")
        if self.metric is not None and self.metric.shape != (size, size):
            raise ValueError("explicit metric must be square over points and centers")
        for b in self.balls:
            if not 0 <= b.center < self.n_centers:
                raise ValueError(f"ball {b.id} references unknown center {b.center}")
        if [b.id for b in self.balls] != list(range(len(self.balls))):
            raise ValueError("ball ids must be 0..m-1 in order")
        geo.setflags(write=False)

    @property
    def m(self) -> int:
        return len(self.balls)

    @property
    def n(self) -> int:
        return self.n_points

    @property
    def is_euclidean(self) -> bool:
        return self.coords is not None

    @property
    def dimension(self) -> int | None:
        return None if self.coords is None else int(self.coords.shape[1])

    @cached_property
    def radii(self) -> np.ndarray:
        return np.array([b.radius for b in self.balls], dtype=float)

    @cached_property
    def capacities(self) -> np.ndarray:
        return np.array([b.capacity for b in self.balls], dtype=np.int64)

    @cached_property
    def center_nodes(self) -> np.ndarray:
        return np.array([self.n_points + b.center for b in self.balls], dtype=np.int64)

    @cached_property
    def ball_point_dist(self) -> np.ndarray:
        """(m, n) distances from every ball center to every point."""
        from .kernels import pairwise_distances

        if self.coords is not None:
            return pairwise_distances(self.coords[self.center_nodes], self.coords[: self.n_points])
        return np.ascontiguousarray(self.metric[np.ix_(self.center_nodes, np.arange(self.n_points))])

    @cached_property
    def ball_ball_dist(self) -> np.ndarray:
        """(m, m) distances between ball centers."""
        from .kernels import pairwise_distances

        if self.coords is not None:
            c = self.coords[self.center_nodes]
            return pairwise_distances(c, c)
        return np.ascontiguousarray(self.metric[np.ix_(self.center_nodes, self.center_nodes)])

    @cached_property
    def order(self) -> list[int]:
        """Ball ids sorted by the shared tie-break order."""
        return [b.id for b in sorted(self.balls, key=order_key)]

    @cached_property
    def rank(self) -> np.ndarray:
        """rank[i] = position of ball i in ``order``."""
        r = np.empty(self.m, dtype=np.int64)
        r[self.order] = np.arange(self.m)
        return r

    def membership(self, beta: float = 1.0) -> np.ndarray:
        """(m, n) boolean mask of points inside each ball expanded by ``beta``."""
        return self.ball_point_dist <= beta * self.radii[:, None] + TOL


def distance(inst: MetricInstance, a: int, b: int) -> float:
    size = inst.n_points + inst.n_centers
    for node in (a, b):
        if not 0 <= node < size:
            raise KeyError(f"unknown node id {node}")
    if inst.coords is not None:
        return float(np.linalg.norm(inst.coords[a] - inst.coords[b]))
    return float(inst.metric[a, b])


def contains(inst: MetricInstance, ball: Ball, p: int, beta: float = 1.0) -> bool:
    if beta < 1:
        raise ValueError("beta must be at least 1")
    return distance(inst, inst.n_points + ball.center, p) <= beta * ball.radius + TOL


def validate_instance(inst: MetricInstance, check_triangle: bool | None = None) -> ValidationReport:
    report = ValidationReport()
    for b in inst.balls:
        if not np.isfinite(b.radius) or b.radius < 0:
            report.add("radius", f"ball {b.id} has radius {b.radius}")
        if int(b.capacity) != b.capacity or b.capacity < 1:
            report.add("capacity", f"ball {b.id} has capacity {b.capacity}")

    if inst.metric is not None:
        d = inst.metric
        size = d.shape[0]
        if not np.all(np.isfinite(d)):
            report.add("nonnegative", "metric has non-finite entries")
        elif np.any(d < -TOL):
            i, j = np.argwhere(d < -TOL)[0]
            report.add("nonnegative", f"d({i},{j}) = {d[i, j]}")
        if np.any(np.abs(np.diag(d)) > TOL):
            i = int(np.argmax(np.abs(np.diag(d))))
            report.add("identity", f"d({i},{i}) = {d[i, i]}")
        asym = np.abs(d - d.T)
        if np.any(asym > TOL):
            i, j = np.unravel_index(int(np.argmax(asym)), asym.shape)
            report.add("symmetry", f"d({i},{j}) != d({j},{i})")
        if check_triangle is None:
            check_triangle = size <= TRIANGLE_CHECK_LIMIT
        if check_triangle:
            bad = _triangle_violation(d)
            if bad is not None:
                a, b, c = bad
                report.add("triangle", f"d({a},{c})={d[a, c]} > d({a},{b})+d({b},{c})={d[a, b] + d[b, c]}")

    # r_i > r_j must imply U_i >= U_j: compare each radius group with the
    # largest capacity seen among strictly smaller radii
    strongest_below: Ball | None = None
    by_radius = sorted(inst.balls, key=lambda b: (b.radius, -b.capacity, b.id))
    start = 0
    while start < len(by_radius):
        stop = start
        while stop < len(by_radius) and by_radius[stop].radius == by_radius[start].radius:
            stop += 1
        group = by_radius[start:stop]
        if strongest_below is not None:
            weak = min(group, key=lambda b: (b.capacity, b.id))
            if weak.capacity < strongest_below.capacity:
                report.add(
                    "monotonicity",
                    f"ball {weak.id} (r={weak.radius}, U={weak.capacity}) is larger than ball "
                    f"{strongest_below.id} (r={strongest_below.radius}, U={strongest_below.capacity}) "
                    "but has smaller capacity",
                )
                break
        top = group[0]
        if strongest_below is None or top.capacity > strongest_below.capacity:
            strongest_below = top
        start = stop

    if inst.m and inst.n:
        covered = inst.membership().any(axis=0)
        for j in np.flatnonzero(~covered):
            report.add("coverage", f"point {j} lies in no ball")
    elif inst.n:
        report.add("coverage", "instance has points but no balls")
    return report


def _triangle_violation(d: np.ndarray) -> tuple[int, int, int] | None:
    # d[a, c] > d[a, b] + d[b, c] for some b; vectorised over a, c one b at a time
    for b in range(d.shape[0]):
        via = d[:, b][:, None] + d[b, :][None, :]
        bad = d > via + TOL
        if bad.any():
            a, c = np.argwhere(bad)[0]
            return int(a), b, int(c)
    return None


def is_monotone(inst: MetricInstance) -> bool:
    return "monotonicity" not in validate_instance(inst, check_triangle=False).kinds()


# ---------------------------------------------------------------------------
# construction helpers


def euclidean_instance(
    points: Sequence[Sequence[float]],
    centers: Sequence[Sequence[float]],
    balls: Sequence[tuple[int, float, int]],
) -> MetricInstance:
    """Build a Euclidean instance from coordinates and ``(center_index, radius, capacity)`` triples."""
    pts = np.asarray(points, dtype=float).reshape(len(points), -1)
    ctr = np.asarray(centers, dtype=float).reshape(len(centers), -1)
    if len(points) and len(centers) and pts.shape[1] != ctr.shape[1]:
        raise ValueError("points and centers must share a dimension")
    dim = pts.shape[1] if len(points) else ctr.shape[1]
    coords = np.vstack([pts.reshape(-1, dim), ctr.reshape(-1, dim)])
    return MetricInstance(
        balls=tuple(Ball(i, int(c), float(r), int(u)) for i, (c, r, u) in enumerate(balls)),
        n_points=len(points),
        n_centers=len(centers),
        coords=coords,
    )


def metric_instance(
    metric: np.ndarray,
    n_points: int,
    balls: Sequence[tuple[int, float, int]],
    point_names: Sequence[str] | None = None,
    center_names: Sequence[str] | None = None,
) -> MetricInstance:
    metric = np.array(metric, dtype=float)
    n_centers = metric.shape[0] - n_points
    return MetricInstance(
        balls=tuple(Ball(i, int(c), float(r), int(u)) for i, (c, r, u) in enumerate(balls)),
        n_points=n_points,
        n_centers=n_centers,
        metric=metric,
        point_names=tuple(point_names) if point_names is not None else tuple(f"p{j}" for j in range(n_points)),
        center_names=tuple(center_names) if center_names is not None else tuple(f"c{k}" for k in range(n_centers)),
    )


# ---------------------------------------------------------------------------
# serialization


def to_dict(inst: MetricInstance) -> dict[str, Any]:
    balls = [{"center_index": b.center, "radius": b.radius, "capacity": b.capacity} for b in inst.balls]
    if inst.coords is not None:
        pts = inst.coords[: inst.n_points].tolist()
        ctr = inst.coords[inst.n_points :].tolist()
        return {"dimension": inst.dimension, "points": pts, "centers": ctr, "balls": balls}
    return {
        "dimension": None,
        "points": list(inst.point_names),
        "centers": list(inst.center_names),
        "balls": balls,
        "metric": inst.metric.tolist(),
    }


def from_dict(data: dict[str, Any]) -> MetricInstance:
    try:
        dim = data["dimension"]
        balls = [(int(b["center_index"]), float(b["radius"]), int(b["capacity"])) for b in data["balls"]]
        if dim is None:
            if "metric" not in data:
                raise ValueError("explicit-metric instance needs a 'metric' field")
            return metric_instance(
                np.asarray(data["metric"], dtype=float),
                len(data["points"]),
                balls,
                point_names=[str(p) for p in data["points"]],
                center_names=[str(c) for c in data["centers"]],
            )
        if "metric" in data:
            raise ValueError("'metric' is only allowed when dimension is null")
        pts = np.asarray(data["points"], dtype=float).reshape(len(data["points"]), int(dim))
        ctr = np.asarray(data["centers"], dtype=float).reshape(len(data["centers"]), int(dim))
        return euclidean_instance(pts, ctr, balls)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed instance: {exc!r}") from exc


def dumps(inst: MetricInstance) -> str:
    # repr-exact floats so a round trip is bit-for-bit
    return json.dumps(to_dict(inst), indent=None, separators=(",", ":")) + "\n"


def loads(text: str) -> MetricInstance:
    return from_dict(json.loads(text))


def save(inst: MetricInstance, path: str | Path) -> None:
    Path(path).write_text(dumps(inst))


def load(path: str | Path) -> MetricInstance:
    return loads(Path(path).read_text())
