"""Plain SVG output: height heatmaps, level lines and lozenge tilings."""

from __future__ import annotations

import math

import numpy as np

from .lattice import project_111, tri_vertices

LOZENGE_COLOURS = ("#4c9a4c", "#c0504d", "#4f6fb0")   # horizontal green, b walls red, c walls blue


def _header(width, height) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1f}" height="{height:.1f}" '
            f'viewBox="0 0 {width:.1f} {height:.1f}">\n')


def _grey(t: float) -> str:
    v = int(round(255 * (1 - t)))
    return f"#{v:02x}{v:02x}{v:02x}"


def heatmap_svg(values, cell: int = 8, title: str | None = None) -> str:
    """Cells shaded from white (min) to black (max)."""
    a = np.asarray(values, dtype=float)
    n1, n2 = a.shape
    lo, hi = float(a.min()), float(a.max())
    span = hi - lo or 1.0
    parts = [_header(n2 * cell, n1 * cell)]
    if title:
        parts.append(f"<title>{title}</title>\n")
    for i in range(n1):
        for j in range(n2):
            parts.append(f'<rect x="{j * cell}" y="{i * cell}" width="{cell}" height="{cell}" '
                         f'fill="{_grey((a[i, j] - lo) / span)}"/>\n')
    parts.append("</svg>\n")
    return "".join(parts)


def _corner_xy(c, cell):
    # corner (c1, c2) drawn with c2 to the right and c1 downwards
    return c[1] * cell, c[0] * cell


def level_lines_svg(layers, cell: int = 12, faces=()) -> str:
    """``layers`` is a list of (paths, colour, width); corners are face-lattice corners."""
    pts = [c for paths, *_ in layers for p in paths for c in p] + \
          [c for f in faces for c in (f, (f[0] + 1, f[1] + 1))]
    if not pts:
        return _header(10, 10) + "</svg>\n"
    c1 = [p[0] for p in pts]
    c2 = [p[1] for p in pts]
    off = (min(c1) - 1, min(c2) - 1)
    W = (max(c2) - off[1] + 1) * cell
    H = (max(c1) - off[0] + 1) * cell
    parts = [_header(W, H)]
    for f in faces:
        x, y = _corner_xy((f[0] - off[0], f[1] - off[1]), cell)
        parts.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="#eeeeee" '
                     f'stroke="#cccccc" stroke-width="0.5"/>\n')
    for paths, colour, width in layers:
        for p in paths:
            xy = [_corner_xy((c[0] - off[0], c[1] - off[1]), cell) for c in p]
            s = " ".join(f"{x},{y}" for x, y in xy)
            parts.append(f'<polyline points="{s}" fill="none" stroke="{colour}" '
                         f'stroke-width="{width}"/>\n')
    parts.append("</svg>\n")
    return "".join(parts)


def trace_svg(trace, faces=(), cell: int = 12) -> str:
    """Regularised input lines (blue) under the greedy output (green)."""
    reg = [r.gamma_reg for rs in trace.levels.values() for r in rs]
    out = [r.gamma_psi for rs in trace.levels.values() for r in rs]
    return level_lines_svg([(reg, "#3060c0", 2), (out, "#30a040", 1)], cell, faces)


def lozenges_svg(surface, scale: float = 20.0) -> str:
    """Lozenges of a tiling (or the plaquettes of any surface) seen along (1,1,1)."""
    polys = []
    for p in sorted(surface.plaquettes):
        black, white = project_111(p)
        vs = []
        for t in (black, white):
            for a, b in tri_vertices(t):
                vs.append((a - b / 2, b * math.sqrt(3) / 2))
        polys.append((p.orientation, vs[:3], vs[3:]))
    if not polys:
        return _header(10, 10) + "</svg>\n"
    xs = [x for _, a, b in polys for x, _ in a + b]
    ys = [y for _, a, b in polys for _, y in a + b]
    x0, y1 = min(xs), max(ys)
    W = (max(xs) - x0 + 2) * scale
    H = (y1 - min(ys) + 2) * scale
    parts = [_header(W, H)]
    for o, t1, t2 in polys:
        for tri in (t1, t2):
            s = " ".join(f"{(x - x0 + 1) * scale:.2f},{(y1 - y + 1) * scale:.2f}" for x, y in tri)
            parts.append(f'<polygon points="{s}" fill="{LOZENGE_COLOURS[o]}" '
                         f'stroke="{LOZENGE_COLOURS[o]}" stroke-width="0.6"/>\n')
    parts.append("</svg>\n")
    return "".join(parts)
