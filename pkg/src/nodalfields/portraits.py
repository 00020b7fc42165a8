"""Zero-set portraits: polyline extraction and SVG / PPM emission.

Zero curves are chained from marching-squares cell segments with linear
interpolation on cell edges; saddle cells are resolved by the sign of the
cell-center mean, matching the counting conventions, so the pictures and the
censuses always agree.  Output is byte-stable for identical inputs.
"""

from __future__ import annotations

from collections import defaultdict

import numpy as np

from .fields import ScalarGrid
from .topology import edge_ports, marching_segments, sign_grid


def zero_polylines(grid: ScalarGrid):
    """Chained zero curves as (points, closed) pairs.

    Points are (N, 2) coordinate arrays; a chain is closed when it returns to
    its starting edge.  On the torus, chains are unwrapped while tracing and
    carry coordinates that may leave [0, 1); the caller re-wraps for display.
    """
    values = grid.values
    periodic = grid.periodic
    segA, segB = marching_segments(values, periodic)
    if len(segA) == 0:
        return []
    coords = {}
    pa = edge_ports(segA, values, grid.xs, grid.ys, periodic)
    pb = edge_ports(segB, values, grid.xs, grid.ys, periodic)
    for e, p in zip(segA, pa):
        coords[int(e)] = p
    for e, p in zip(segB, pb):
        coords[int(e)] = p

    adj = defaultdict(list)
    for k, (a, b) in enumerate(zip(segA, segB)):
        adj[int(a)].append((k, int(b)))
        adj[int(b)].append((k, int(a)))

    used = np.zeros(len(segA), dtype=bool)
    chains = []

    def walk(start):
        pts = [coords[start]]
        cur = start
        closed = False
        while True:
            nxt = None
            for k, other in adj[cur]:
                if not used[k]:
                    used[k] = True
                    nxt = other
                    break
            if nxt is None:
                break
            pts.append(coords[nxt])
            cur = nxt
            if cur == start:
                closed = True
                break
        return np.asarray(pts), closed

    # open chains first (ports of degree 1), then leftover cycles
    degree_one = sorted(e for e, lst in adj.items() if len(lst) == 1)
    for e in degree_one:
        if all(used[k] for k, _ in adj[e]):
            continue
        chains.append(walk(e))
    for e in sorted(adj):
        if any(not used[k] for k, _ in adj[e]):
            chains.append(walk(e))
    return chains


def _wrap_split(pts: np.ndarray):
    """Split a torus chain wherever it jumps across the fundamental domain."""
    wrapped = pts % 1.0
    jumps = np.abs(np.diff(wrapped, axis=0)).max(axis=1) > 0.5
    pieces = []
    start = 0
    for i in np.nonzero(jumps)[0]:
        pieces.append(wrapped[start:i + 1])
        start = i + 1
    pieces.append(wrapped[start:])
    return [p for p in pieces if len(p) >= 2]


def render_svg(grid: ScalarGrid, path, size: int = 800,
               stroke_width: float | None = None) -> int:
    """Write the zero-set portrait as SVG; returns the number of chains."""
    chains = zero_polylines(grid)
    x0, x1 = float(grid.xs[0]), float(grid.xs[-1])
    y0, y1 = float(grid.ys[0]), float(grid.ys[-1])
    if grid.periodic:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    span = max(x1 - x0, y1 - y0)
    if stroke_width is None:
        stroke_width = span / size * 1.5

    def fmt(v):
        return f"{v:.6f}"

    paths = []
    for pts, closed in chains:
        pieces = _wrap_split(pts) if grid.periodic else [pts]
        for k, piece in enumerate(pieces):
            d = "M " + " L ".join(f"{fmt(p[0])} {fmt(p[1])}" for p in piece)
            if closed and len(pieces) == 1:
                d += " Z"
            paths.append(f'<path d="{d}"/>')

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="{fmt(x0)} {fmt(y0)} {fmt(x1 - x0)} {fmt(y1 - y0)}">',
        f'<rect x="{fmt(x0)}" y="{fmt(y0)}" width="{fmt(x1 - x0)}" '
        f'height="{fmt(y1 - y0)}" fill="white"/>',
        f'<g fill="none" stroke="black" stroke-width="{fmt(stroke_width)}" '
        'stroke-linecap="round">',
        *paths,
        "</g>",
        "</svg>",
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return len(chains)


def render_ppm(grid: ScalarGrid, path):
    """Binary P6 raster: sign field in two grays, crossings in black."""
    pos = sign_grid(grid.values)
    nx, ny = pos.shape
    img = np.where(pos[:, :, None], np.uint8(235), np.uint8(170))
    img = np.repeat(img, 3, axis=2)
    edge_x = pos != np.roll(pos, -1, axis=0) if grid.periodic \
        else np.vstack([pos[:-1] != pos[1:], np.zeros((1, ny), dtype=bool)])
    edge_y = pos != np.roll(pos, -1, axis=1) if grid.periodic \
        else np.hstack([pos[:, :-1] != pos[:, 1:], np.zeros((nx, 1), dtype=bool)])
    black = edge_x | edge_y
    img[black] = 0
    # image rows run top-down: transpose so x is horizontal, flip y
    img = np.transpose(img, (1, 0, 2))[::-1]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{nx} {ny}\n255\n".encode())
        fh.write(img.tobytes())


def dump_grid_csv(grid: ScalarGrid, path):
    """Matrix dump with a one-line provenance header."""
    seed = grid.seed if grid.seed is not None else "none"
    header = (f"# domain={grid.domain.descriptor()} h={grid.h:.17g} "
              f"seed={seed} kappa={grid.kappa}")
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in grid.values:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
