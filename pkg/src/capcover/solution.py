"""Integral solutions: which balls are open, how far each one stretches, who serves whom."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .instance import TOL, MetricInstance


def realized_expansion(inst: MetricInstance, ball: int, points) -> float:
    """Smallest beta >= 1 with every point of ``points`` inside the ball expanded by beta.

    A zero-radius ball serving only points at distance 0 has beta 1; serving anything farther
    makes beta infinite.
    """
    pts = np.asarray(list(points), dtype=np.int64)
    if pts.size == 0:
        return 1.0
    d = inst.ball_point_dist[ball, pts]
    r = inst.radii[ball]
    if r <= 0:
        return 1.0 if np.all(d <= TOL) else float("inf")
    return max(1.0, float(d.max() / r))


@dataclass
class RoundedSolution:
    """Open balls, per-ball expansion factor and the integral point-to-ball assignment.

    ``copies`` is only used by the soft-capacity variant, where a ball may be opened several
    times; every other mode opens each selected ball once.
    """

    selected: list[int]
    expansion: dict[int, float]
    assignment: np.ndarray
    lp_value: float = float("nan")
    copies: dict[int, int] | None = None
    stats: dict[str, Any] = field(default_factory=dict)

    @property
    def cost(self) -> int:
        if self.copies is None:
            return len(self.selected)
        return int(sum(self.copies[i] for i in self.selected))

    @property
    def max_expansion(self) -> float:
        return max(self.expansion.values(), default=1.0)

    def n_copies(self, ball: int) -> int:
        return 1 if self.copies is None else self.copies[ball]

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "selected": [int(i) for i in self.selected],
            "assignment": [int(a) for a in self.assignment],
            "expansion": [float(self.expansion[i]) for i in self.selected],
            "cost": self.cost,
            "lp_value": float(self.lp_value),
        }
        if self.copies is not None:
            out["copies"] = [int(self.copies[i]) for i in self.selected]
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RoundedSolution":
        sel = [int(i) for i in data["selected"]]
        exp = data.get("expansion")
        expansion = {i: float(e) for i, e in zip(sel, exp)} if exp is not None else {i: float("inf") for i in sel}
        copies = {i: int(c) for i, c in zip(sel, data["copies"])} if "copies" in data else None
        return cls(
            selected=sel,
            expansion=expansion,
            assignment=np.asarray(data["assignment"], dtype=np.int64),
            lp_value=float(data.get("lp_value", float("nan"))),
            copies=copies,
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":")) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: str | Path) -> "RoundedSolution":
        return cls.from_dict(json.loads(Path(path).read_text()))


def from_assignment(
    inst: MetricInstance,
    assignment: np.ndarray,
    lp_value: float = float("nan"),
    copies: dict[int, int] | None = None,
    keep: list[int] | None = None,
) -> RoundedSolution:
    """Build a solution whose selected set is the balls used by ``assignment`` (plus ``keep``)."""
    assignment = np.asarray(assignment, dtype=np.int64)
    used = set(int(a) for a in assignment) | set(keep or [])
    sel = sorted(used)
    expansion = {i: realized_expansion(inst, i, np.flatnonzero(assignment == i)) for i in sel}
    if copies is not None:
        copies = {i: copies[i] for i in sel}
    return RoundedSolution(sel, expansion, assignment, lp_value, copies)
