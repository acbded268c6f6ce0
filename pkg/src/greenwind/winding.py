"""Exact winding numbers, grid winding fields and level-set measures.

All winding computations share one canonical ray-crossing predicate (rightward
ray, half-open vertex rule, segment endpoints sorted by y before interpolating
the crossing abscissa).  Because the predicate is evaluated identically no
matter how a segment is oriented or in which loop it appears, concatenation
identities hold exactly in floating point: shared chords cancel crossing by
crossing.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .paths import ClosedPolyline

__all__ = [
    "Grid",
    "WindingField",
    "LevelMeasures",
    "OnCurveError",
    "winding_number",
    "winding_numbers",
    "winding_field",
    "level_measures",
    "truncated_winding_integral",
    "regularized_winding_integral",
    "joint_tail_area",
]

DEFAULT_N_MAX = 64


class OnCurveError(ValueError):
    """Raised when a probe point lies on the curve (winding undefined)."""


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular grid; winding is evaluated at cell centers."""

    bbox: tuple  # (xmin, xmax, ymin, ymax)
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 16 or self.ny < 16:
            raise ValueError("grid must be at least 16x16")
        xmin, xmax, ymin, ymax = self.bbox
        if not (xmax > xmin and ymax > ymin):
            raise ValueError("degenerate bbox")

    @property
    def dx(self) -> float:
        return (self.bbox[1] - self.bbox[0]) / self.nx

    @property
    def dy(self) -> float:
        return (self.bbox[3] - self.bbox[2]) / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def x_centers(self) -> np.ndarray:
        return self.bbox[0] + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def y_centers(self) -> np.ndarray:
        return self.bbox[2] + (np.arange(self.ny) + 0.5) * self.dy

    def center_mesh(self):
        return np.meshgrid(self.x_centers, self.y_centers)

    @classmethod
    def cover(cls, loop: ClosedPolyline, nx: int, ny: int, pad_cells: int = 2) -> "Grid":
        """Grid whose bbox contains the loop's bbox with >= pad_cells padding."""
        xmin, xmax, ymin, ymax = loop.bbox()
        span_x = max(xmax - xmin, 1e-9)
        span_y = max(ymax - ymin, 1e-9)
        dx = span_x / (nx - 2 * pad_cells - 1)
        dy = span_y / (ny - 2 * pad_cells - 1)
        return cls((xmin - (pad_cells + 0.5) * dx, xmax + (pad_cells + 0.5) * dx,
                    ymin - (pad_cells + 0.5) * dy, ymax + (pad_cells + 0.5) * dy),
                   nx, ny)


@dataclass(frozen=True)
class WindingField:
    """Integer winding per grid cell plus a near-curve boundary mask.

    Masked cells (centers within one cell diagonal of the polyline) carry
    exact winding values but are excluded from level measures.
    """

    grid: Grid
    winding: np.ndarray       # (ny, nx) int32
    boundary_mask: np.ndarray  # (ny, nx) bool

    def export_binary(self, path) -> None:
        """Portable dump: header (bbox, nx, ny) + row-major int32 LE."""
        xmin, xmax, ymin, ymax = self.grid.bbox
        with open(path, "wb") as fh:
            fh.write(b"WFLD")
            fh.write(struct.pack("<4d2i", xmin, xmax, ymin, ymax,
                                 self.grid.nx, self.grid.ny))
            fh.write(self.winding.astype("<i4").tobytes())


@dataclass(frozen=True)
class LevelMeasures:
    """Weighted measures of the winding level sets A_k and tails D_{+-n}."""

    weight_id: str
    per_level: dict            # k != 0 -> weighted measure of A_k
    tails_pos: np.ndarray      # f(D_n), n = 1..n_max
    tails_neg: np.ndarray      # f(D_-n), n = 1..n_max
    areas_pos: np.ndarray      # |D_n|
    areas_neg: np.ndarray      # |D_-n|
    area_per_level: dict = field(default_factory=dict)
    n_max: int = DEFAULT_N_MAX
    cell_area: float = 0.0

    def tail(self, n: int) -> float:
        """f(D_n) for n >= 1, f(D_n) of the negative tail for n <= -1."""
        if n == 0:
            raise ValueError("tails are defined for |n| >= 1")
        arr = self.tails_pos if n > 0 else self.tails_neg
        n = abs(n)
        return float(arr[n - 1]) if n <= self.n_max else 0.0

    def to_csv(self, path) -> None:
        ks = sorted(self.per_level)
        with open(path, "w") as fh:
            fh.write("k,area,f_measure\n")
            for k in ks:
                fh.write(f"{k},{self.area_per_level[k]!r},{self.per_level[k]!r}\n")


# ---------------------------------------------------------------------------
# canonical crossing predicate

def _canonical_segments(vertices: np.ndarray):
    """Non-horizontal segments sorted endpoint-wise by y, plus crossing sign."""
    p = vertices[:-1]
    q = vertices[1:]
    up = q[:, 1] > p[:, 1]
    keep = q[:, 1] != p[:, 1]
    lo = np.where(up[:, None], p, q)[keep]
    hi = np.where(up[:, None], q, p)[keep]
    sign = np.where(up[keep], 1, -1).astype(np.int64)
    return lo[:, 0], lo[:, 1], hi[:, 0], hi[:, 1], sign


def _crossing_sum(vertices: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Sum of signed ray crossings for each probe point (vectorized, exact)."""
    xlo, ylo, xhi, yhi, sign = _canonical_segments(vertices)
    out = np.zeros(px.shape, dtype=np.int64)
    if len(sign) == 0:
        return out
    # chunk over points to bound the (points x segments) intermediate
    chunk = max(1, int(4e6) // max(len(sign), 1))
    for s in range(0, len(px), chunk):
        zx = px[s:s + chunk, None]
        zy = py[s:s + chunk, None]
        spans = (ylo[None, :] <= zy) & (zy < yhi[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = xlo + (zy - ylo) * (xhi - xlo) / (yhi - ylo)
        hit = spans & (xc > zx)
        out[s:s + chunk] = np.sum(np.where(hit, sign[None, :], 0), axis=1)
    return out


def _distance_to_segments(vertices: np.ndarray, px, py) -> np.ndarray:
    """Min distance from each point to the polyline (chunked, O(P*M))."""
    a = vertices[:-1]
    d = vertices[1:] - a
    len2 = np.maximum(d[:, 0] ** 2 + d[:, 1] ** 2, 1e-300)
    out = np.full(np.shape(px), np.inf)
    chunk = max(1, int(4e6) // max(len(a), 1))
    for s in range(0, len(px), chunk):
        zx = px[s:s + chunk, None]
        zy = py[s:s + chunk, None]
        t = ((zx - a[:, 0]) * d[:, 0] + (zy - a[:, 1]) * d[:, 1]) / len2
        t = np.clip(t, 0.0, 1.0)
        ex = a[:, 0] + t * d[:, 0] - zx
        ey = a[:, 1] + t * d[:, 1] - zy
        out[s:s + chunk] = np.sqrt(np.min(ex * ex + ey * ey, axis=1))
    return out


def winding_number(loop: ClosedPolyline, z, *, tol: float = 1e-12) -> int:
    """Exact winding number of the closed polyline around z.

    Raises OnCurveError when z is within `tol` of any segment.
    """
    z = np.asarray(z, dtype=float)
    d = _distance_to_segments(loop.vertices, np.array([z[0]]), np.array([z[1]]))
    if d[0] <= tol:
        raise OnCurveError(f"point {tuple(z)} lies on the curve (dist={d[0]:.3g})")
    return int(_crossing_sum(loop.vertices, np.array([z[0]]), np.array([z[1]]))[0])


def winding_numbers(loop: ClosedPolyline, points: np.ndarray, *,
                    check_on_curve: bool = False, tol: float = 1e-12) -> np.ndarray:
    """Exact winding numbers for many points.

    Uses a divide-and-conquer triangle decomposition with bounding-box
    pruning: O((P + M) log M) typical instead of O(P*M).  The triangle edge
    crossings are evaluated with the same canonical predicate as
    `winding_number`, so internal chords cancel exactly and the result is
    bit-identical to the direct crossing sum.
    """
    pts = np.asarray(points, dtype=float)
    px = np.ascontiguousarray(pts[:, 0])
    py = np.ascontiguousarray(pts[:, 1])
    if check_on_curve:
        d = _distance_to_segments(loop.vertices, px, py)
        if np.any(d <= tol):
            idx = int(np.argmin(d))
            raise OnCurveError(f"point index {idx} lies on the curve")
    verts = loop.vertices
    m = len(verts) - 1
    if m <= 64:
        return _crossing_sum(verts, px, py)
    out = np.zeros(len(px), dtype=np.int64)
    vx = verts[:, 0]
    vy = verts[:, 1]
    all_idx = np.arange(len(px))
    xmin, xmax = vx.min(), vx.max()
    ymin, ymax = vy.min(), vy.max()
    inside = (px >= xmin) & (px <= xmax) & (py >= ymin) & (py <= ymax)
    stack = [(0, m, all_idx[inside])]
    while stack:
        lo, hi, idx = stack.pop()
        if hi - lo == 1 or len(idx) == 0:
            continue
        mid = (lo + hi) // 2
        tri = np.array([verts[lo], verts[mid], verts[hi], verts[lo]])
        out[idx] += _crossing_sum(tri, px[idx], py[idx])
        for a, b in ((lo, mid), (mid, hi)):
            if b - a == 1:
                continue
            sx = vx[a:b + 1]
            sy = vy[a:b + 1]
            keep = ((px[idx] >= sx.min()) & (px[idx] <= sx.max())
                    & (py[idx] >= sy.min()) & (py[idx] <= sy.max()))
            sub = idx[keep]
            if len(sub):
                stack.append((a, b, sub))
    return out


# ---------------------------------------------------------------------------
# scanline field

def winding_field(loop: ClosedPolyline, grid: Grid) -> WindingField:
    """Winding number at every cell center via a per-row scanline.

    Each non-horizontal segment deposits its signed crossing into a per-row
    difference array at the crossing column; the field is the right-to-left
    suffix sum.  Complexity O(crossings + cells), and the result equals
    `winding_number` at every center (same canonical predicate).

    Rows whose y-coordinate coincides exactly with a horizontal segment of
    the loop are jittered by +dy * 1e-9 (deterministic) so that no cell
    center sits on a horizontal piece of the curve.
    """
    xmin, xmax, ymin, ymax = loop.bbox()
    gx0, gx1, gy0, gy1 = grid.bbox
    if not (gx0 < xmin and gx1 > xmax and gy0 < ymin and gy1 > ymax):
        raise ValueError("grid bbox must strictly contain the loop bbox")
    verts = loop.vertices
    ycs = grid.y_centers.copy()
    # deterministic jitter for rows hit exactly by a horizontal segment
    p, q = verts[:-1], verts[1:]
    horiz_y = np.unique(p[p[:, 1] == q[:, 1], 1])
    if len(horiz_y):
        hit = np.isin(ycs, horiz_y)
        ycs[hit] += grid.dy * 1e-9

    xlo, ylo, xhi, yhi, sign = _canonical_segments(verts)
    xcs = grid.x_centers
    diff = np.zeros((grid.ny, grid.nx + 1), dtype=np.int64)
    if len(sign):
        j_lo = np.searchsorted(ycs, ylo, side="left")
        j_hi = np.searchsorted(ycs, yhi, side="left")
        counts = j_hi - j_lo
        seg = np.repeat(np.arange(len(sign)), counts)
        if len(seg):
            offs = np.concatenate([[0], np.cumsum(counts)])
            rows = j_lo[seg] + (np.arange(len(seg)) - offs[seg])
            yv = ycs[rows]
            xc = xlo[seg] + (yv - ylo[seg]) * (xhi[seg] - xlo[seg]) / (yhi[seg] - ylo[seg])
            cols = np.searchsorted(xcs, xc, side="left")
            np.add.at(diff, (rows, cols), sign[seg])
    suffix = np.cumsum(diff[:, ::-1], axis=1)[:, ::-1]
    w = suffix[:, 1:].astype(np.int32)

    mask = _boundary_mask(loop, grid)
    return WindingField(grid, w, mask)


def _boundary_mask(loop: ClosedPolyline, grid: Grid) -> np.ndarray:
    """Cells whose center lies within one cell diagonal of the polyline."""
    verts = loop.vertices
    seg = verts[1:] - verts[:-1]
    lengths = np.hypot(seg[:, 0], seg[:, 1])
    step = 0.5 * min(grid.dx, grid.dy)
    nsamp = np.maximum(2, np.ceil(lengths / step).astype(np.int64) + 1)
    total = int(nsamp.sum())
    sidx = np.repeat(np.arange(len(seg)), nsamp)
    offs = np.concatenate([[0], np.cumsum(nsamp)])
    local = np.arange(total) - offs[sidx]
    t = local / (nsamp[sidx] - 1)
    sx = verts[:-1, 0][sidx] + t * seg[sidx, 0]
    sy = verts[:-1, 1][sidx] + t * seg[sidx, 1]
    ci = np.clip(((sx - grid.bbox[0]) / grid.dx).astype(np.int64), 0, grid.nx - 1)
    cj = np.clip(((sy - grid.bbox[2]) / grid.dy).astype(np.int64), 0, grid.ny - 1)
    marked = np.zeros((grid.ny, grid.nx), dtype=bool)
    marked[cj, ci] = True
    dist = ndimage.distance_transform_edt(~marked, sampling=(grid.dy, grid.dx))
    diag = float(np.hypot(grid.dx, grid.dy))
    return dist <= diag


# ---------------------------------------------------------------------------
# level measures and winding integrals

def level_measures(field: WindingField, weight, n_max: int = DEFAULT_N_MAX,
                   *, include_masked: bool = False) -> LevelMeasures:
    """Weighted measures f(A_k) of the winding levels and tails f(D_{+-n}).

    `weight` is a WeightFn (or any object with .value(x, y) and an id); the
    tails are exact suffix sums of the per-level measures, so the consistency
    invariant f(D_n) = sum_{k>=n} f(A_k) holds by construction.

    Boundary cells are excluded by default (their centers sit within a cell
    diagonal of the curve).  include_masked=True keeps them: their winding is
    exact, and the full-grid sum is the right Riemann sum when comparing
    against line integrals along the sampled polyline itself.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    keep = np.ones_like(field.boundary_mask) if include_masked else ~field.boundary_mask
    w = field.winding[keep].ravel()
    X, Y = field.grid.center_mesh()
    fv = np.broadcast_to(np.asarray(weight.value(X, Y), dtype=float), X.shape)
    fv = fv[keep].ravel()
    ca = field.grid.cell_area
    nz = w != 0
    w = w[nz]
    fv = fv[nz]
    order = np.argsort(w, kind="stable")
    w = w[order]
    fv = fv[order]
    ks, starts = np.unique(w, return_index=True)
    sums = np.add.reduceat(fv, starts) * ca if len(w) else np.array([])
    cnts = np.diff(np.concatenate([starts, [len(w)]])) if len(w) else np.array([])
    per_level = {int(k): float(s) for k, s in zip(ks, sums)}
    area_per_level = {int(k): float(c * ca) for k, c in zip(ks, cnts)}

    tails_pos = np.zeros(n_max)
    tails_neg = np.zeros(n_max)
    areas_pos = np.zeros(n_max)
    areas_neg = np.zeros(n_max)
    # suffix sums over the level map, exact by construction
    for k in sorted(per_level, reverse=True):
        if k >= 1:
            n = min(k, n_max)
            tails_pos[:n] += per_level[k]
            areas_pos[:n] += area_per_level[k]
    for k in sorted(per_level):
        if k <= -1:
            n = min(-k, n_max)
            tails_neg[:n] += per_level[k]
            areas_neg[:n] += area_per_level[k]
    return LevelMeasures(getattr(weight, "weight_id", "f"), per_level,
                         tails_pos, tails_neg, areas_pos, areas_neg,
                         area_per_level, n_max, ca)


def truncated_winding_integral(measures: LevelMeasures, K: int, mode: str = "clamp") -> float:
    """Integral of [n]_K * f over the plane, from level measures.

    clamp mode is the Abel-summation identity sum_{n<=K} (f(D_n) - f(D_-n));
    zero mode subtracts K * (f(D_{K+1}) - f(D_{-K-1})).
    """
    if K < 1 or K > measures.n_max:
        raise ValueError(f"K must be in [1, n_max={measures.n_max}]")
    if mode not in ("clamp", "zero"):
        raise ValueError("mode must be 'clamp' or 'zero'")
    val = float(np.sum(measures.tails_pos[:K]) - np.sum(measures.tails_neg[:K]))
    if mode == "zero":
        val -= K * (measures.tail(K + 1) - measures.tail(-(K + 1)))
    return val


def regularized_winding_integral(measures: LevelMeasures, *, fit_from: int = 8):
    """Abel-sum limit of the truncated winding integrals, with diagnostics.

    Returns (value, diagnostics) where value = sum_{n<=n_max}(f(D_n)-f(D_-n))
    plus a heuristic power-law tail remainder.  Diagnostics carry the partial
    sums, the remainder estimate and a convergence warning flag when the
    partial differences fail to decay.
    """
    d = measures.tails_pos - measures.tails_neg
    partial = np.cumsum(d)
    n = np.arange(1, measures.n_max + 1)
    absd = np.abs(d)
    # fit |d_n| ~ C n^{-1-q} on the nonzero tail of the difference sequence
    sel = (n >= fit_from) & (absd > 0)
    remainder = 0.0
    exponent = np.nan
    if sel.sum() >= 4:
        coef = np.polyfit(np.log(n[sel]), np.log(absd[sel]), 1)
        slope = coef[0]
        C = np.exp(coef[1])
        exponent = slope
        q = -slope - 1.0
        if q > 1e-3:
            remainder = C * measures.n_max ** (-q) / q
    third = max(1, measures.n_max // 3)
    head = np.mean(absd[:third])
    tail_mean = np.mean(absd[-third:])
    warn = bool(tail_mean > 0.5 * head) if head > 0 else False
    value = float(partial[-1])
    diagnostics = {
        "partial_sums": partial,
        "remainder_estimate": float(remainder),
        "decay_exponent": float(exponent),
        "convergence_warning": warn,
    }
    return value, diagnostics


def joint_tail_area(field_a: WindingField, field_b: WindingField, n: int,
                    *, signs: str = "pos") -> float:
    """cell_area * |{cells: winding >= n in both fields}| on a shared grid.

    signs selects the tail pair: 'pos' (>=n, >=n), 'neg' (<=-n, <=-n),
    'mixed' (>=n, <=-n).
    """
    if field_a.grid != field_b.grid:
        raise ValueError("fields must share one grid")
    if n < 1:
        raise ValueError("n must be >= 1")
    ok = ~(field_a.boundary_mask | field_b.boundary_mask)
    wa, wb = field_a.winding, field_b.winding
    if signs == "pos":
        hit = (wa >= n) & (wb >= n)
    elif signs == "neg":
        hit = (wa <= -n) & (wb <= -n)
    elif signs == "mixed":
        hit = (wa >= n) & (wb <= -n)
    else:
        raise ValueError("signs must be 'pos', 'neg' or 'mixed'")
    return float(np.count_nonzero(hit & ok) * field_a.grid.cell_area)
