"""Event log of a rounding run and an independent replay checker.

Every flow change is logged as a move ``(donor, receiver, point, amount)``.  The replay
rebuilds the flow matrix from the ``begin`` snapshot and re-derives every checked quantity
(k_t, F_t, y-accumulation, available capacity) from the moves alone, so it does not trust
any number computed by the rounding code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

Move = tuple[int, int, int, float]


@dataclass
class Trace:
    events: list[dict[str, Any]] = field(default_factory=list)

    def log(self, kind: str, **data: Any) -> dict[str, Any]:
        ev = {"kind": kind, **data}
        self.events.append(ev)
        return ev

    def begin(self, x: np.ndarray, y: np.ndarray, capacities: np.ndarray, alpha: float, soft: bool = False) -> None:
        nz = np.argwhere(x > 0)
        self.log(
            "begin",
            m=int(x.shape[0]),
            n=int(x.shape[1]),
            x=[[int(i), int(j), float(x[i, j])] for i, j in nz],
            y=[float(v) for v in y],
            capacities=[int(c) for c in capacities],
            alpha=float(alpha),
            soft=bool(soft),
        )

    def kinds(self) -> list[str]:
        return [e["kind"] for e in self.events]

    def to_ndjson(self) -> str:
        return "".join(json.dumps(_plain(e), separators=(",", ":")) + "\n" for e in self.events)

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(self.to_ndjson())

    @classmethod
    def from_ndjson(cls, text: str) -> "Trace":
        return cls([json.loads(line) for line in text.splitlines() if line.strip()])


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


@dataclass
class ReplayReport:
    violations: list[str] = field(default_factory=list)
    n_events: int = 0
    n_selected: int = 0
    ks: list[int] = field(default_factory=list)
    max_yacc: float = float("-inf")
    min_f_ratio: float = float("inf")

    @property
    def ok(self) -> bool:
        return not self.violations


def replay(events: Iterable[dict[str, Any]], tol: float = 1e-9) -> ReplayReport:
    """Re-apply every logged move and check flow conservation, capacities and the
    cluster-formation invariants (freed flow, y-accumulation bounds, k monotonicity,
    size of the selected light set)."""
    rep = ReplayReport()
    x = None
    y = None
    soft = False
    caps = None
    alpha = None
    heavy: list[int] = []
    y0: dict[int, float] = {}
    yacc: dict[int, float] = {}
    light_mass = 0.0
    in_formation = False

    def bad(msg: str) -> None:
        rep.violations.append(msg)

    for ev in events:
        rep.n_events += 1
        kind = ev["kind"]
        if kind == "begin":
            x = np.zeros((ev["m"], ev["n"]))
            for i, j, v in ev["x"]:
                x[i, j] = v
            y = np.asarray(ev["y"], dtype=float)
            caps = np.asarray(ev["capacities"], dtype=float)
            alpha = ev["alpha"]
            soft = bool(ev.get("soft", False))
            continue
        if x is None:
            bad(f"event {rep.n_events} ({kind}) before begin")
            continue

        if kind == "start":
            heavy = list(ev["heavy"])
            y0 = {int(k): float(v) for k, v in ev["y"].items()}
            light_mass = sum(y0[t] for t in ev["light"])
            yacc = {i: 0.0 for i in heavy}
            in_formation = True
            continue

        k_t = None
        if kind == "select":
            t = ev["ball"]
            served = int(np.count_nonzero(x[t] > 0))
            k_t = min(int(caps[t]), served)
            if k_t != ev["k"]:
                bad(f"select {t}: logged k={ev['k']} but replay finds {k_t}")

        freed = {i: 0.0 for i in heavy}
        for donor, receiver, point, amount in ev.get("moves", []):
            if amount < -tol:
                bad(f"{kind}: negative move {amount} from {donor}")
            x[donor, point] -= amount
            x[receiver, point] += amount
            if x[donor, point] < -tol:
                bad(f"{kind}: ball {donor} flow to point {point} went negative")
            if in_formation and donor in freed and receiver not in freed:
                freed[donor] += amount
        x[np.abs(x) <= tol * 1e-3] = 0.0
        if kind == "merge":
            y[ev["members"]] = 0.0
            y[ev.get("receivers", [ev.get("receiver")])] = ev["y"]

        inflow = x.sum(axis=0)
        if np.any(np.abs(inflow - 1.0) > 1e-7):
            j = int(np.argmax(np.abs(inflow - 1.0)))
            bad(f"after {kind} event {rep.n_events}: point {j} receives {inflow[j]:.12g}")
        out = x.sum(axis=1)
        # soft capacities allow y > 1, so the LP bound U*y is the one that must hold
        limit = caps * y if soft else caps
        if np.any(out > limit + 1e-7):
            i = int(np.argmax(out - limit))
            bad(f"after {kind} event {rep.n_events}: ball {i} sends {out[i]:.12g} > {limit[i]:.6g}")

        if not in_formation:
            continue
        if kind == "cluster":
            h, t = ev["heavy"], ev["light"]
            yacc[h] -= y0[t]
        elif kind == "select":
            t = ev["ball"]
            f_t = sum(freed.values())
            rep.ks.append(k_t)
            rep.n_selected += 1
            rep.min_f_ratio = min(rep.min_f_ratio, f_t / k_t)
            if f_t < k_t / 5 - tol:
                bad(f"select {t}: freed flow {f_t:.6g} < k/5 = {k_t / 5:.6g}")
            if len(rep.ks) > 1 and rep.ks[-1] > rep.ks[-2]:
                bad(f"select {t}: k increased from {rep.ks[-2]} to {rep.ks[-1]}")
            for i in heavy:
                yacc[i] += freed[i] / k_t
                avail = caps[i] - out[i]
                if avail < yacc[i] * k_t - 1e-7:
                    bad(f"select {t}: heavy {i} has AvCap {avail:.6g} < y-acc*k = {yacc[i] * k_t:.6g}")
        elif kind == "finish":
            bound = 5 * ((1 + alpha) * len(heavy) + light_mass)
            if rep.n_selected > bound + 1e-6:
                bad(f"|O| = {rep.n_selected} exceeds {bound:.6g}")
            in_formation = False
        for i in heavy:
            rep.max_yacc = max(rep.max_yacc, yacc[i])
            if in_formation and yacc[i] > 1 + alpha + tol:
                bad(f"after {kind} event {rep.n_events}: heavy {i} y-accumulation {yacc[i]:.6g} > 1+alpha")
    return rep
