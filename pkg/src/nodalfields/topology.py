"""Nodal censuses on grids: components, small domains, flips, intersections.

Counting convention: a compact zero-set component is the outer boundary of
exactly one bounded sign-domain, so on squares we count bounded 4-connected
same-sign regions that do not touch the grid boundary (robust on lattices,
valid whenever the gradient does not vanish on the zero set).  On the torus,
zero-set components are counted directly from the marching-squares crossing
graph, with homology offsets deciding contractible vs wrapping.

Node values with |f| < TIE_TOL are treated as positive (measure-zero event,
deterministic tie rule).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import EmptyGrid
from .fields import (
    FieldSample,
    ScalarGrid,
    SquareDomain,
    default_spacing,
    evaluate_batch,
    evaluate_grid,
    grid_axes,
)

TIE_TOL = 1e-14

_FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])


@dataclass
class NodalCensus:
    """Counts extracted from one gridded sample.

    On squares: interior_components = compact zero-set components (bounded
    sign-domains away from the boundary); boundary_components = sign-domains
    touching the grid boundary.  On the torus: interior_components =
    contractible zero-set components, wrapping_components the rest.
    """

    domain_descriptor: str
    h: float
    interior_components: int
    boundary_components: int = 0
    wrapping_components: int = 0
    interior_areas: np.ndarray | None = None
    s1_flips: int | None = None
    s2_flips: int | None = None
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def total_components(self) -> int:
        return self.interior_components + self.wrapping_components

    def small_domains(self, delta: float) -> int:
        """Bounded interior sign-domains with area < delta."""
        if self.interior_areas is None:
            raise ValueError("census has no area table")
        return int(np.count_nonzero(self.interior_areas < delta))

    def to_dict(self) -> dict:
        d = {
            "kind": "census",
            "domain": self.domain_descriptor,
            "h": self.h,
            "interior_components": self.interior_components,
            "boundary_components": self.boundary_components,
            "wrapping_components": self.wrapping_components,
            "total_components": self.total_components,
        }
        if self.s1_flips is not None:
            d["s1_flips"] = self.s1_flips
        if self.s2_flips is not None:
            d["s2_flips"] = self.s2_flips
        if self.seed is not None:
            d["seed"] = self.seed
        return d


def sign_grid(values: np.ndarray) -> np.ndarray:
    """Boolean positivity grid under the tie rule (|f| < TIE_TOL counts +)."""
    return values > -TIE_TOL


def count_components_plane(g: ScalarGrid) -> NodalCensus:
    """Census of a square-domain grid via two-phase component labeling."""
    if g.values is None or g.values.size == 0:
        raise EmptyGrid("no values")
    if not np.all(np.isfinite(g.values)):
        raise EmptyGrid("grid contains non-finite values")
    pos = sign_grid(g.values)

    interior_areas = []
    n_interior = 0
    n_boundary = 0
    for mask in (pos, ~pos):
        labels, n = ndimage.label(mask, structure=_FOUR_CONN)
        if n == 0:
            continue
        border = np.concatenate([labels[0, :], labels[-1, :],
                                 labels[:, 0], labels[:, -1]])
        border_ids = np.unique(border)
        border_ids = border_ids[border_ids > 0]
        counts = np.bincount(labels.ravel(), minlength=n + 1)
        touching = np.zeros(n + 1, dtype=bool)
        touching[border_ids] = True
        n_boundary += int(np.count_nonzero(touching[1:]))
        inner = ~touching
        inner[0] = False
        n_interior += int(np.count_nonzero(inner))
        interior_areas.append(counts[inner] * g.h * g.h)

    areas = (np.sort(np.concatenate(interior_areas))
             if interior_areas else np.zeros(0))
    return NodalCensus(
        domain_descriptor=g.domain.descriptor(), h=g.h,
        interior_components=n_interior, boundary_components=n_boundary,
        interior_areas=areas, seed=g.seed)


def count_small_domains(g: ScalarGrid, delta: float) -> int:
    return count_components_plane(g).small_domains(delta)


# ---------------------------------------------------------------------------
# Marching squares on the node lattice.
#
# Edge ids: the X-edge joining nodes (i, j), (i+1, j) is 2*(i*ny + j); the
# Y-edge joining (i, j), (i, j+1) is 2*(i*ny + j) + 1.  Each crossing edge
# carries one zero of f; cells contribute segments joining their crossed
# edges, with saddle cells split by the sign of the cell-center mean.

def _cell_edge_ids(ii, jj, nx, ny, periodic):
    jn = (jj + 1) % ny if periodic else jj + 1
    ie = (ii + 1) % nx if periodic else ii + 1
    south = 2 * (ii * ny + jj)
    north = 2 * (ii * ny + jn)
    west = 2 * (ii * ny + jj) + 1
    east = 2 * (ie * ny + jj) + 1
    return south, east, north, west


def marching_segments(values: np.ndarray, periodic: bool):
    """Zero-curve segments as paired edge ids: returns (segA, segB) arrays."""
    nx, ny = values.shape
    pos = sign_grid(values)

    if periodic:
        hx = pos != np.roll(pos, -1, axis=0)          # (nx, ny) X-edges
        vy = pos != np.roll(pos, -1, axis=1)          # (nx, ny) Y-edges
        S = hx
        N = np.roll(hx, -1, axis=1)
        W = vy
        E = np.roll(vy, -1, axis=0)
        corner = values
        c10 = np.roll(values, -1, axis=0)
        c01 = np.roll(values, -1, axis=1)
        c11 = np.roll(c10, -1, axis=1)
    else:
        hx = pos[:-1, :] != pos[1:, :]                # (nx-1, ny)
        vy = pos[:, :-1] != pos[:, 1:]                # (nx, ny-1)
        S = hx[:, :-1]
        N = hx[:, 1:]
        W = vy[:-1, :]
        E = vy[1:, :]
        corner = values[:-1, :-1]
        c10 = values[1:, :-1]
        c01 = values[:-1, 1:]
        c11 = values[1:, 1:]

    segA, segB = [], []

    def emit(mask, side_a, side_b):
        ii, jj = np.nonzero(mask)
        if len(ii) == 0:
            return
        ids = _cell_edge_ids(ii, jj, nx, ny, periodic)
        segA.append(ids[side_a])
        segB.append(ids[side_b])

    ncross = (S.astype(np.int8) + E.astype(np.int8)
              + N.astype(np.int8) + W.astype(np.int8))
    two = ncross == 2
    # sides indexed 0=S, 1=E, 2=N, 3=W
    emit(two & S & E, 0, 1)
    emit(two & S & N, 0, 2)
    emit(two & S & W, 0, 3)
    emit(two & E & N, 1, 2)
    emit(two & E & W, 1, 3)
    emit(two & N & W, 2, 3)

    saddle = ncross == 4
    if np.any(saddle):
        center = 0.25 * (corner + c10 + c01 + c11)
        same = sign_grid(center) == sign_grid(corner)
        emit(saddle & same, 0, 1)    # (S,E) + (N,W)
        emit(saddle & same, 2, 3)
        emit(saddle & ~same, 0, 3)   # (S,W) + (N,E)
        emit(saddle & ~same, 1, 2)

    if segA:
        return np.concatenate(segA), np.concatenate(segB)
    return np.zeros(0, dtype=int), np.zeros(0, dtype=int)


def edge_ports(eids: np.ndarray, values: np.ndarray, xs, ys, periodic: bool):
    """Interpolated zero coordinates for edge ids (linear along the edge)."""
    nx, ny = values.shape
    typ = eids & 1
    flat = eids >> 1
    ii = flat // ny
    jj = flat % ny
    hx = xs[1] - xs[0] if len(xs) > 1 else 1.0
    hy = ys[1] - ys[0] if len(ys) > 1 else 1.0

    va = values[ii, jj]
    i2 = (ii + 1) % nx if periodic else np.minimum(ii + 1, nx - 1)
    j2 = (jj + 1) % ny if periodic else np.minimum(jj + 1, ny - 1)
    vb = np.where(typ == 0, values[i2, jj], values[ii, j2])
    denom = va - vb
    t = np.where(np.abs(denom) > 0, va / np.where(denom == 0, 1.0, denom), 0.5)
    t = np.clip(t, 0.0, 1.0)

    x = xs[ii] + np.where(typ == 0, t * hx, 0.0)
    y = ys[jj] + np.where(typ == 0, 0.0, t * hy)
    return np.column_stack([x, y])


class _OffsetUnionFind:
    """Union-find whose nodes carry integer 2-vector potentials.

    pot[x] is the displacement of x relative to its parent; a union closing a
    cycle with nonzero net displacement marks the root as wrapping.
    """

    def __init__(self, n):
        self.parent = np.arange(n, dtype=np.int64)
        self.pot = np.zeros((n, 2), dtype=np.int64)
        self.wrapping = np.zeros(n, dtype=bool)

    def find(self, x):
        root = x
        off = np.zeros(2, dtype=np.int64)
        while self.parent[root] != root:
            off += self.pot[root]
            root = self.parent[root]
        # path compression
        node = x
        carried = off.copy()
        while self.parent[node] != node:
            nxt = self.parent[node]
            step = self.pot[node].copy()
            self.parent[node] = root
            self.pot[node] = carried
            carried = carried - step
            node = nxt
        return root, off

    def union(self, a, b, delta):
        ra, pa = self.find(a)
        rb, pb = self.find(b)
        if ra == rb:
            gap = pa + delta - pb
            if gap[0] != 0 or gap[1] != 0:
                self.wrapping[ra] = True
            return
        # attach rb under ra: pot must satisfy pos_b = pos_a + delta
        self.parent[rb] = ra
        self.pot[rb] = pa + delta - pb
        if self.wrapping[rb]:
            self.wrapping[ra] = True


def _edge_anchor(eids: np.ndarray, ny: int):
    """Doubled-integer midpoint coordinates of edges (homology bookkeeping)."""
    typ = eids & 1
    flat = eids >> 1
    ii = flat // ny
    jj = flat % ny
    return np.column_stack([2 * ii + (typ == 0), 2 * jj + (typ == 1)]).astype(np.int64)


def count_components_torus(g: ScalarGrid) -> NodalCensus:
    """Zero-set components on the torus, split contractible vs wrapping."""
    if g.values is None or g.values.size == 0:
        raise EmptyGrid("no values")
    if not g.periodic:
        raise ValueError("count_components_torus needs a torus grid")
    values = g.values
    nx, ny = values.shape
    segA, segB = marching_segments(values, periodic=True)
    if len(segA) == 0:
        return NodalCensus(domain_descriptor=g.domain.descriptor(), h=g.h,
                           interior_components=0, wrapping_components=0,
                           interior_areas=np.zeros(0), seed=g.seed)

    anchorA = _edge_anchor(segA, ny)
    anchorB = _edge_anchor(segB, ny)
    period = np.array([2 * nx, 2 * ny], dtype=np.int64)
    delta = anchorB - anchorA
    delta = (delta + period // 2) % period - period // 2  # minimal image

    uf = _OffsetUnionFind(2 * nx * ny)
    for a, b, d in zip(segA, segB, delta):
        uf.union(int(a), int(b), d)

    ports = np.unique(np.concatenate([segA, segB]))
    roots = set()
    wrap = 0
    for p in ports:
        r, _ = uf.find(int(p))
        if r not in roots:
            roots.add(r)
            if uf.wrapping[r]:
                wrap += 1
    total = len(roots)
    return NodalCensus(domain_descriptor=g.domain.descriptor(), h=g.h,
                       interior_components=total - wrap,
                       wrapping_components=wrap,
                       interior_areas=np.zeros(0), seed=g.seed)


# ---------------------------------------------------------------------------
# Flips: simultaneous zeros of (f, directional derivative of f).

def count_flips(s: FieldSample, domain: SquareDomain, h: float | None = None,
                axis: int = 1, direction=None, return_locations: bool = False):
    """Count points of the closed square where f and d.grad f both vanish.

    Cells are scanned for a zero segment of f whose endpoints see opposite
    signs of g = d.grad f; each such segment is refined by 10 bisection steps
    and contributes one flip if the refined location lies in the closed
    domain.  The grid is padded by one cell so boundary flips are caught; the
    tie rule makes exactly-zero corners deterministic.
    """
    if axis not in (1, 2) and direction is None:
        raise ValueError("axis must be 1 or 2")
    d = np.asarray(direction if direction is not None
                   else ([1.0, 0.0] if axis == 1 else [0.0, 1.0]), dtype=float)
    if h is None:
        h = default_spacing(s)
    R = domain.R
    pad = SquareDomain(R + 2.0 * h)
    grid = evaluate_grid(s, pad, h, order=0)
    segA, segB = marching_segments(grid.values, periodic=False)
    if len(segA) == 0:
        return (0, np.zeros((0, 2))) if return_locations else 0

    pa = edge_ports(segA, grid.values, grid.xs, grid.ys, periodic=False)
    pb = edge_ports(segB, grid.values, grid.xs, grid.ys, periodic=False)

    def gval(pts):
        _, grads = evaluate_batch(s, pts, order=1)
        return grads @ d

    ga, gb = gval(pa), gval(pb)
    sga, sgb = ga > -TIE_TOL, gb > -TIE_TOL
    cand = sga != sgb
    if not np.any(cand):
        return (0, np.zeros((0, 2))) if return_locations else 0

    lo, hi = pa[cand].copy(), pb[cand].copy()
    slo = sga[cand].copy()
    for _ in range(10):
        mid = 0.5 * (lo + hi)
        smid = gval(mid) > -TIE_TOL
        take_lo = smid == slo            # sign change sits in [mid, hi]
        lo[take_lo] = mid[take_lo]
        hi[~take_lo] = mid[~take_lo]
    locs = 0.5 * (lo + hi)

    # closed-domain filter at the bisection resolution (boundary flips are
    # approached from either side, so an exact-R cut would drop them)
    tol = max(1e-9, h / 256.0)
    inside = (np.abs(locs[:, 0]) <= R + tol) & (np.abs(locs[:, 1]) <= R + tol)
    locs = locs[inside]
    if len(locs) == 0:
        return (0, np.zeros((0, 2))) if return_locations else 0
    # dedup detections of one flip seen from adjacent degenerate cells
    buckets = np.round(locs / (h / 4.0)).astype(np.int64)
    _, keep = np.unique(buckets, axis=0, return_index=True)
    locs = locs[np.sort(keep)]
    n = len(locs)
    return (n, locs) if return_locations else n


def count_curve_intersections(s: FieldSample, p0, p1,
                              h: float | None = None) -> int:
    """Sign-change count of f along the closed segment p0 -> p1."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    length = float(np.hypot(*(p1 - p0)))
    if length <= 0:
        raise ValueError("segment length must be positive")
    if h is None:
        h = default_spacing(s)
    n = max(2, int(math.ceil(length / h)) + 1)
    ts = np.linspace(0.0, 1.0, n)
    pts = p0[None, :] + ts[:, None] * (p1 - p0)[None, :]
    vals = evaluate_batch(s, pts, order=0)
    pos = vals > -TIE_TOL
    return int(np.count_nonzero(pos[1:] != pos[:-1]))


def census_with_flips(s: FieldSample, domain: SquareDomain,
                      h: float | None = None) -> NodalCensus:
    """Plane census plus S1/S2 flip counts from the same sample."""
    if h is None:
        h = default_spacing(s)
    census = count_components_plane(evaluate_grid(s, domain, h))
    census.s1_flips = count_flips(s, domain, h, axis=1)
    census.s2_flips = count_flips(s, domain, h, axis=2)
    return census
