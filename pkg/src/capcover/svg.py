"""SVG rendering of planar instances and solutions."""

from __future__ import annotations

from xml.sax.saxutils import quoteattr

import numpy as np

from .instance import MetricInstance
from .solution import RoundedSolution

_PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"]


def render_svg(inst: MetricInstance, sol: RoundedSolution | None = None, size: int = 600, margin: int = 20) -> str:
    """Draw points as squares, balls as circles and, with a solution, the assignment segments
    and each open ball's expansion as a dashed circle at beta * r."""
    if not inst.is_euclidean or inst.dimension != 2:
        raise ValueError("plotting needs a two-dimensional Euclidean instance")
    pts = inst.coords[: inst.n]
    ctr = inst.coords[inst.center_nodes]
    r = inst.radii
    reach = r * (max(sol.expansion.values(), default=1.0) if sol else 1.0)
    lo = np.minimum(pts.min(axis=0) if inst.n else np.inf, (ctr - reach[:, None]).min(axis=0) if inst.m else np.inf)
    hi = np.maximum(pts.max(axis=0) if inst.n else -np.inf, (ctr + reach[:, None]).max(axis=0) if inst.m else -np.inf)
    span = float(max(hi - lo)) or 1.0
    scale = (size - 2 * margin) / span

    def sx(v) -> float:
        return round(margin + (float(v) - lo[0]) * scale, 3)

    def sy(v) -> float:
        return round(size - margin - (float(v) - lo[1]) * scale, 3)

    selected = set(sol.selected) if sol else set()
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    for b in inst.balls:
        colour = _PALETTE[b.id % len(_PALETTE)] if b.id in selected else "#999999"
        width = 2 if b.id in selected else 0.6
        out.append(
            f'<circle class="ball" data-id="{b.id}" cx="{sx(ctr[b.id, 0])}" cy="{sy(ctr[b.id, 1])}" '
            f'r="{round(r[b.id] * scale, 3)}" fill="none" stroke="{colour}" stroke-width="{width}"/>'
        )
    if sol is not None:
        for i in sol.selected:
            beta = sol.expansion.get(i, 1.0)
            if beta > 1 + 1e-12 and np.isfinite(beta):
                out.append(
                    f'<circle class="expansion" data-id="{i}" cx="{sx(ctr[i, 0])}" cy="{sy(ctr[i, 1])}" '
                    f'r="{round(beta * r[i] * scale, 3)}" fill="none" stroke="{_PALETTE[i % len(_PALETTE)]}" '
                    'stroke-dasharray="4 3" stroke-width="1"/>'
                )
        for j, i in enumerate(sol.assignment):
            if 0 <= i < inst.m:
                out.append(
                    f'<line class="assign" x1="{sx(pts[j, 0])}" y1="{sy(pts[j, 1])}" x2="{sx(ctr[i, 0])}" '
                    f'y2="{sy(ctr[i, 1])}" stroke="{_PALETTE[i % len(_PALETTE)]}" stroke-width="0.8"/>'
                )
    for j in range(inst.n):
        out.append(
            f'<rect class="point" data-id="{j}" x="{sx(pts[j, 0]) - 2}" y="{sy(pts[j, 1]) - 2}" '
            'width="4" height="4" fill="black"/>'
        )
    title = f"n={inst.n} m={inst.m}" + (f" cost={sol.cost}" if sol else "")
    out.append(f"<title>{quoteattr(title)[1:-1]}</title>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
