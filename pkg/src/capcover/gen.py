"""Instance generators: random Euclidean, random graph metrics, and the 3DM-3 hardness gadget."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from . import kernels
from .instance import MetricInstance, euclidean_instance, metric_instance


def _capacities(rng: np.random.Generator, radii: np.ndarray, capacity_mode: str, capacity: int, cap_range) -> list[int]:
    m = radii.size
    if capacity_mode == "uniform":
        if capacity < 1:
            raise ValueError("uniform capacity must be >= 1")
        return [int(capacity)] * m
    if capacity_mode != "monotone":
        raise ValueError(f"unknown capacity_mode {capacity_mode!r}")
    lo, hi = cap_range
    if not 1 <= lo <= hi:
        raise ValueError("capacity range must satisfy 1 <= lo <= hi")
    caps = np.sort(rng.integers(lo, hi + 1, size=m))
    out = np.empty(m, dtype=np.int64)
    # stable sort keeps ties in id order; equal radii may get any capacities
    out[np.argsort(radii, kind="stable")] = caps
    return [int(c) for c in out]


def _repair(dist: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Inflate the nearest ball of every uncovered point until it reaches the point."""
    radii = radii.copy()
    for j in range(dist.shape[1]):
        if not np.any(dist[:, j] <= radii + 1e-9):
            gap = dist[:, j] - radii
            i = int(np.argmin(gap))
            radii[i] = dist[i, j]
    return radii


def _assignable(inside: np.ndarray, caps: np.ndarray) -> bool:
    m, n = inside.shape
    bi, pj = np.nonzero(inside)
    src, sink = m + n, m + n + 1
    tails = np.concatenate([np.full(m, src), bi, m + np.arange(n)])
    heads = np.concatenate([np.arange(m), m + pj, np.full(n, sink)])
    caps_e = np.concatenate([caps, np.ones(bi.size), np.ones(n)]).astype(float)
    value, _ = kernels.max_flow(m + n + 2, tails, heads, caps_e, src, sink)
    return value >= n - 0.5


def _repair_capacity(dist: np.ndarray, radii: np.ndarray, caps: list[int]) -> list[int]:
    """Raise every capacity by one until all points can be assigned; keeps monotonicity."""
    inside = dist <= radii[:, None] + 1e-9
    arr = np.asarray(caps, dtype=np.int64)
    while not _assignable(inside, arr):
        arr = arr + 1
    return [int(c) for c in arr]


def gen_random_euclidean(
    seed: int,
    n: int,
    m: int,
    d: int = 2,
    radius_range: tuple[float, float] = (0.05, 0.3),
    capacity_mode: str = "monotone",
    capacity: int = 3,
    cap_range: tuple[int, int] = (1, 8),
    ensure_feasible: bool = True,
) -> MetricInstance:
    """Points and centers uniform in the unit cube; radii uniform in ``radius_range``.

    Uncovered points are fixed by inflating their nearest ball.  With ``ensure_feasible`` all
    capacities are then raised together until a full assignment exists.
    """
    if n < 1 or m < 1 or d < 1:
        raise ValueError("n, m and d must be positive")
    lo, hi = radius_range
    if not 0 < lo <= hi:
        raise ValueError("radius range must be positive and ordered")
    rng = np.random.default_rng(seed)
    pts = rng.random((n, d))
    ctr = rng.random((m, d))
    radii = rng.uniform(lo, hi, size=m)
    dist = np.linalg.norm(ctr[:, None, :] - pts[None, :, :], axis=2)
    radii = _repair(dist, radii)
    caps = _capacities(rng, radii, capacity_mode, capacity, cap_range)
    if ensure_feasible:
        caps = _repair_capacity(dist, radii, caps)
    return euclidean_instance(pts, ctr, [(i, float(radii[i]), caps[i]) for i in range(m)])


def gen_random_metric(
    seed: int,
    n: int,
    m: int,
    extra_edge_prob: float = 0.08,
    weight_range: tuple[float, float] = (0.1, 1.0),
    neighbors: tuple[int, int] = (1, 6),
    capacity_mode: str = "monotone",
    capacity: int = 3,
    cap_range: tuple[int, int] = (1, 8),
    ensure_feasible: bool = True,
) -> MetricInstance:
    """Shortest-path metric of a connected random weighted graph over points and centers.

    Each ball's radius is the distance to its k-th nearest point, k drawn from ``neighbors``.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    if not 0 <= extra_edge_prob <= 1:
        raise ValueError("extra_edge_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    size = n + m
    perm = rng.permutation(size)
    tails, heads = [], []
    for k in range(1, size):
        tails.append(perm[k])
        heads.append(perm[rng.integers(0, k)])
    extra = np.argwhere(np.triu(rng.random((size, size)) < extra_edge_prob, 1))
    tails.extend(extra[:, 0])
    heads.extend(extra[:, 1])
    w = rng.uniform(*weight_range, size=len(tails))
    g = csr_matrix((w, (tails, heads)), shape=(size, size))
    dist = shortest_path(g, method="D", directed=False)
    center_pts = dist[n:, :n]
    kmin, kmax = neighbors
    radii = np.empty(m)
    for i in range(m):
        k = int(rng.integers(kmin, kmax + 1))
        radii[i] = np.sort(center_pts[i])[min(k, n) - 1]
    radii = _repair(center_pts, radii)
    caps = _capacities(rng, radii, capacity_mode, capacity, cap_range)
    if ensure_feasible:
        caps = _repair_capacity(center_pts, radii, caps)
    return metric_instance(dist, n, [(i, float(radii[i]), caps[i]) for i in range(m)])


# ---------------------------------------------------------------------------
# 3DM-3 hardness gadget


@dataclass(frozen=True)
class GadgetSpec3DM:
    """A 3DM-3 instance: elements x_0..x_{N-1}, y_0.., z_0.. and triples ``(x, y, z)`` of indices."""

    N: int
    triples: tuple[tuple[int, int, int], ...]
    c: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "c", Fraction(self.c) if not isinstance(self.c, float) else Fraction(str(self.c)))
        object.__setattr__(self, "triples", tuple(tuple(int(v) for v in t) for t in self.triples))
        if self.N < 1:
            raise ValueError("N must be positive")
        if self.c < 1:
            raise ValueError("expansion constant c must be >= 1")
        for t in self.triples:
            if len(t) != 3 or not all(0 <= v < self.N for v in t):
                raise ValueError(f"triple {t} is out of range")
        for e, mult in enumerate(self.multiplicities()):
            if not 1 <= mult <= 3:
                raise ValueError(f"element {self.element_name(e)} occurs in {mult} triples, need 1 to 3")

    @property
    def p(self) -> int:
        return math.ceil(self.c * (self.c + 1) / 2) + 1

    @property
    def n_element_balls(self) -> int:
        return 3 * self.N * (4 * self.p + 1)

    def element_name(self, e: int) -> str:
        return "xyz"[e // self.N] + str(e % self.N)

    def elements_of(self, t: int) -> tuple[int, int, int]:
        a, b, c = self.triples[t]
        return a, self.N + b, 2 * self.N + c

    def multiplicities(self) -> list[int]:
        mult = [0] * (3 * self.N)
        for t in range(len(self.triples)):
            for e in self.elements_of(t):
                mult[e] += 1
        return mult

    def is_cover(self, cover: Sequence[int]) -> bool:
        hit = {e for t in cover for e in self.elements_of(t)}
        return len(hit) == 3 * self.N


@dataclass
class Gadget:
    """A built gadget instance plus the bookkeeping needed to write canonical solutions.

    Point layout per element gadget (elements in order x, y, z): for clusters ``k = 0..4p``
    left to right, the horizontal point left of cluster k, then its top and bottom point; the
    final horizontal point closes the chain.  Centers: element clusters in the same order, then
    one center per triple.  Ball ids follow center ids.
    """

    spec: GadgetSpec3DM
    instance: MetricInstance
    edges: list[tuple[int, int, Fraction]]
    horizontal: list[list[int]]  # per element, the 4p + 2 horizontal points
    top: list[list[int]]
    bottom: list[list[int]]
    element_balls: list[list[int]]  # per element, the 4p + 1 cluster balls
    triple_balls: list[int]
    ideal_of: dict[tuple[int, int], int]  # (triple, element) -> cluster position of its ideal point

    def canonical_solution(self, cover: Sequence[int]) -> tuple[list[int], np.ndarray]:
        """All element balls plus the cover's triple balls, with an assignment at beta = 1.

        Each element is served through its first covering triple of ``cover``.  The cluster whose
        bottom point that triple takes serves both horizontal neighbours; clusters to its left
        take their left horizontal point, clusters to its right their right one.
        """
        spec = self.spec
        cover = sorted(set(int(t) for t in cover))
        if not spec.is_cover(cover):
            raise ValueError("triples do not cover every element")
        a = np.full(self.instance.n, -1, dtype=np.int64)
        served_by: dict[int, int] = {}
        for t in cover:
            for e in spec.elements_of(t):
                if e not in served_by:
                    served_by[e] = t
                    a[self.bottom[e][self.ideal_of[t, e]]] = self.triple_balls[t]
        for e in range(3 * spec.N):
            q = self.ideal_of[served_by[e], e]
            for k, ball in enumerate(self.element_balls[e]):
                a[self.top[e][k]] = ball
                if k < q:
                    a[self.horizontal[e][k]] = ball
                    a[self.bottom[e][k]] = ball
                elif k > q:
                    a[self.horizontal[e][k + 1]] = ball
                    a[self.bottom[e][k]] = ball
                else:
                    a[self.horizontal[e][k]] = ball
                    a[self.horizontal[e][k + 1]] = ball
        selected = [b for balls in self.element_balls for b in balls] + [self.triple_balls[t] for t in cover]
        return sorted(selected), a


def _exact_shortest_paths(size: int, edges: list[tuple[int, int, Fraction]]) -> np.ndarray:
    """All-pairs shortest paths with weights scaled to integers, so every sum is exact."""
    scale = math.lcm(*(w.denominator for _, _, w in edges)) if edges else 1
    tails = [u for u, _, _ in edges]
    heads = [v for _, v, _ in edges]
    w = [int(wt * scale) for _, _, wt in edges]
    g = csr_matrix((np.asarray(w, dtype=float), (tails, heads)), shape=(size, size))
    dist = shortest_path(g, method="D", directed=False)
    finite = np.isfinite(dist)
    if not finite.all():
        # separate components sit farther apart than any path; the triangle inequality survives
        dist[~finite] = 2 * dist[finite].max() + 1
    return dist / scale


def gen_3dm_gadget(spec: GadgetSpec3DM) -> Gadget:
    """Capacitated covering instance encoding a 3DM-3 instance.

    Every element becomes a chain of 4p + 1 clusters: two large chains (p small clusters, one
    large cluster, p small clusters) sharing their middle small cluster.  The bottom points of
    the first, shared and last cluster are the ideal points; an element's k-th triple is glued
    to its k-th ideal point.  A triple gadget is a center at distance c from its three ideal
    points.  All capacities are 3; radii are 1 (small) and c (large and triple balls).
    """
    p, c = spec.p, spec.c
    n_clusters = 4 * p + 1
    large = {p, 3 * p}
    n_el = 3 * spec.N
    per_element = 3 * n_clusters + 1
    n_points = n_el * per_element
    horizontal, top, bottom = [], [], []
    for e in range(n_el):
        base = e * per_element
        horizontal.append([base + 3 * k for k in range(n_clusters)] + [base + 3 * n_clusters])
        top.append([base + 3 * k + 1 for k in range(n_clusters)])
        bottom.append([base + 3 * k + 2 for k in range(n_clusters)])

    edges: list[tuple[int, int, Fraction]] = []
    balls: list[tuple[int, float, int]] = []
    element_balls: list[list[int]] = []
    center = 0
    for e in range(n_el):
        ids = []
        for k in range(n_clusters):
            w = c if k in large else Fraction(1)
            node = n_points + center
            for q in (horizontal[e][k], horizontal[e][k + 1], top[e][k], bottom[e][k]):
                edges.append((node, q, w))
            balls.append((center, float(w), 3))
            ids.append(center)
            center += 1
        element_balls.append(ids)

    ideal_positions = (0, 2 * p, 4 * p)
    seen = [0] * n_el
    ideal_of: dict[tuple[int, int], int] = {}
    triple_balls = []
    for t in range(len(spec.triples)):
        node = n_points + center
        for e in spec.elements_of(t):
            pos = ideal_positions[seen[e]]
            seen[e] += 1
            ideal_of[t, e] = pos
            edges.append((node, bottom[e][pos], c))
        balls.append((center, float(c), 3))
        triple_balls.append(center)
        center += 1

    metric = _exact_shortest_paths(n_points + center, edges)
    point_names = []
    for e in range(n_el):
        name = spec.element_name(e)
        for k in range(n_clusters):
            point_names += [f"{name}.h{k}", f"{name}.t{k}", f"{name}.b{k}"]
        point_names.append(f"{name}.h{n_clusters}")
    center_names = [f"{spec.element_name(e)}.c{k}" for e in range(n_el) for k in range(n_clusters)]
    center_names += [f"T{t}" for t in range(len(spec.triples))]
    inst = metric_instance(metric, n_points, balls, point_names, center_names)
    return Gadget(spec, inst, edges, horizontal, top, bottom, element_balls, triple_balls, ideal_of)
