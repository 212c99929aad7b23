"""SVG rendering of planar networks.

Edges are drawn with stroke width proportional to |w|^alpha and an
arrowhead showing orientation; boundary atoms are filled circles for sinks
(positive weight) and hollow circles for sources.  Inputs with d > 2 are
projected onto the first two coordinates (a comment in the output records
the projection); d = 1 chains are drawn on the x axis.
"""

from __future__ import annotations

import numpy as np

from .chains import PolyChain
from .measures import AtomicMeasure


def _planar(points: np.ndarray) -> np.ndarray:
    if points.shape[1] == 2:
        return points
    if points.shape[1] == 1:
        return np.hstack([points, np.zeros((len(points), 1))])
    return points[:, :2]


def render_chain(
    chain: PolyChain,
    alpha: float = 1.0,
    boundary: AtomicMeasure | None = None,
    size: int = 480,
) -> str:
    body, (x0, y0, x1, y1) = _chain_group(chain, alpha, boundary)
    pad = 0.08 * max(x1 - x0, y1 - y0, 1e-9)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="{x0 - pad} {y0 - pad} {x1 - x0 + 2 * pad} {y1 - y0 + 2 * pad}">',
        _defs(),
    ]
    if chain.dim > 2:
        parts.append(f"<!-- projection of a {chain.dim}-d chain onto the first two coordinates -->")
    parts.append(body)
    parts.append("</svg>")
    return "\n".join(parts)


def render_contact_sheet(panels, alpha: float = 1.0, size: int = 280) -> str:
    """Grid of labeled mini-drawings: panels is a list of (label, chain, value)."""
    cols = max(1, int(np.ceil(np.sqrt(len(panels)))))
    rows = int(np.ceil(len(panels) / cols))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{cols * size}" height="{rows * size}" '
        f'viewBox="0 0 {cols * size} {rows * size}">',
        _defs(),
    ]
    for i, (label, chain, value) in enumerate(panels):
        cx = (i % cols) * size
        cy = (i // cols) * size
        body, (x0, y0, x1, y1) = _chain_group(chain, alpha, None)
        span = max(x1 - x0, y1 - y0, 1e-9)
        s = 0.8 * size / span
        tx = cx + 0.1 * size - s * x0
        ty = cy + 0.1 * size - s * y0
        parts.append(f'<g transform="translate({tx},{ty}) scale({s})">{body}</g>')
        parts.append(
            f'<text x="{cx + 8}" y="{cy + 16}" font-size="13">{label}: {value:.6g}</text>'
        )
        parts.append(
            f'<rect x="{cx}" y="{cy}" width="{size}" height="{size}" fill="none" stroke="#ccc"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def _defs() -> str:
    return (
        '<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" '
        'markerWidth="5" markerHeight="5" orient="auto-start-reverse">'
        '<path d="M 0 0 L 10 5 L 0 10 z" fill="#555"/></marker></defs>'
    )


def _chain_group(chain: PolyChain, alpha: float, boundary: AtomicMeasure | None):
    pts = _planar(chain.vertices) if len(chain.vertices) else np.zeros((0, 2))
    if len(pts) == 0:
        return "<g/>", (0.0, 0.0, 1.0, 1.0)
    x0, y0 = pts.min(axis=0)
    x1, y1 = pts.max(axis=0)
    span = max(x1 - x0, y1 - y0, 1e-9)
    wmax = max((abs(e.multiplicity) ** alpha for e in chain.edges), default=1.0)
    lines = []
    for e in chain.edges:
        a = pts[e.tail]
        b = pts[e.head]
        width = 0.002 * span + 0.012 * span * (abs(e.multiplicity) ** alpha / wmax)
        lines.append(
            f'<line x1="{a[0]}" y1="{a[1]}" x2="{b[0]}" y2="{b[1]}" '
            f'stroke="#336" stroke-width="{width}" marker-end="url(#arrow)"/>'
        )
    if boundary is not None and len(boundary.atoms):
        rad = 0.015 * span
        for atom in boundary.atoms:
            p = _planar(atom.position[None, :])[0]
            if atom.weight > 0:
                lines.append(f'<circle cx="{p[0]}" cy="{p[1]}" r="{rad}" fill="#a33"/>')
            else:
                lines.append(
                    f'<circle cx="{p[0]}" cy="{p[1]}" r="{rad}" fill="white" '
                    f'stroke="#a33" stroke-width="{rad / 3}"/>'
                )
    return "<g>" + "".join(lines) + "</g>", (float(x0), float(y0), float(x1), float(y1))
