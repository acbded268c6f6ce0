"""Planar Brownian paths, bridges and loops on dyadic time grids.

Paths are sampled once at full resolution and never resampled; every
refinement (dyadic skeletons, subpaths) is an exact re-slicing of the stored
samples, so decompositions are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Path",
    "ClosedPolyline",
    "DyadicDecomposition",
    "sample_bm",
    "sample_bridge",
    "close_path",
    "dyadic_decompose",
    "replica_rng",
]


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def replica_rng(seed: int, replica: int = 0) -> np.random.Generator:
    """Deterministic per-replica stream derived from (seed, replica)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(replica)]))


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Path:
    """Sampled planar trajectory on [0, horizon].

    kind is one of {"free", "bridge", "loop"}; a loop has bit-identical first
    and last points, a bridge ends exactly at its configured endpoint.
    """

    times: np.ndarray
    points: np.ndarray  # shape (n, 2)
    kind: str
    horizon: float
    seed_info: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "times", _freeze(np.asarray(self.times, dtype=float)))
        object.__setattr__(self, "points", _freeze(np.asarray(self.points, dtype=float)))
        if self.kind not in ("free", "bridge", "loop"):
            raise ValueError(f"unknown path kind {self.kind!r}")
        if len(self.times) != len(self.points) or len(self.times) < 2:
            raise ValueError("times and points must have equal length >= 2")
        if self.times[0] != 0.0 or self.times[-1] != self.horizon:
            raise ValueError("times must run from 0 to horizon")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.kind == "loop" and not np.array_equal(self.points[0], self.points[-1]):
            raise ValueError("loop must have bit-identical endpoints")

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    def to_csv(self, path) -> None:
        data = np.column_stack([self.times, self.points])
        np.savetxt(path, data, delimiter=",", header="t,x,y", comments="")


@dataclass(frozen=True)
class ClosedPolyline:
    """Closed planar polyline; vertices[0] == vertices[-1] exactly."""

    vertices: np.ndarray
    source: str  # "closed_by_segment" or "already_loop"
    degenerate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "vertices", _freeze(np.asarray(self.vertices, dtype=float)))
        if len(self.vertices) < 3:
            raise ValueError("closed polyline needs at least 3 vertices")
        if not np.array_equal(self.vertices[0], self.vertices[-1]):
            raise ValueError("first and last vertex must coincide exactly")

    @property
    def n_segments(self) -> int:
        return len(self.vertices) - 1

    def bbox(self) -> tuple[float, float, float, float]:
        v = self.vertices
        return (v[:, 0].min(), v[:, 0].max(), v[:, 1].min(), v[:, 1].max())

    def reversed(self) -> "ClosedPolyline":
        return ClosedPolyline(self.vertices[::-1].copy(), self.source, self.degenerate)


@dataclass(frozen=True)
class DyadicDecomposition:
    """Level-n dyadic split of a path: skeleton through the 2^n + 1 dyadic
    sample points plus the 2^n subpaths restricted to each dyadic interval."""

    level: int
    skeleton: Path
    subpaths: tuple


def sample_bm(n_steps: int, horizon: float, start, seed: int, *, replica: int = 0) -> Path:
    """Standard planar Brownian motion with n_steps uniform increments."""
    if not _is_power_of_two(n_steps) or n_steps < 2:
        raise ValueError("n_steps must be a power of two >= 2")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    rng = replica_rng(seed, replica)
    dt = horizon / n_steps
    incr = rng.normal(0.0, np.sqrt(dt), size=(n_steps, 2))
    pts = np.empty((n_steps + 1, 2))
    pts[0] = start
    np.cumsum(incr, axis=0, out=pts[1:])
    pts[1:] += np.asarray(start, dtype=float)
    times = np.linspace(0.0, horizon, n_steps + 1)
    times[-1] = horizon
    return Path(times, pts, "free", float(horizon),
                {"seed": int(seed), "replica": int(replica)})


def sample_bridge(n_steps: int, horizon: float, start, end, seed: int, *,
                  replica: int = 0) -> Path:
    """Brownian bridge from start to end, sampled by sequential conditioning
    so the final point is pinned exactly (a loop when start == end)."""
    if not _is_power_of_two(n_steps) or n_steps < 2:
        raise ValueError("n_steps must be a power of two >= 2")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    rng = replica_rng(seed, replica)
    T = float(horizon)
    dt = T / n_steps
    times = np.linspace(0.0, T, n_steps + 1)
    times[-1] = T
    # Sequential conditioning X_{k+1} = X_k + dt/(T-t_k) (end - X_k) + c_k xi_k
    # collapses to a cumulative sum of Y_k = (X_k - end)/(T - t_k).
    rem = T - times[:-1]            # T - t_k, k = 0..n-1
    rem_next = T - times[1:]        # T - t_{k+1}
    c = np.sqrt(dt * rem_next / rem)
    xi = rng.normal(0.0, 1.0, size=(n_steps, 2))
    pts = np.empty((n_steps + 1, 2))
    pts[0] = start
    # Y increments for k = 0..n-2; the last point is set exactly to `end`.
    dY = c[:-1, None] * xi[:-1] / rem_next[:-1, None]
    Y = (start - end) / T + np.cumsum(dY, axis=0)
    pts[1:-1] = end + rem_next[:-1, None] * Y
    pts[-1] = end
    kind = "loop" if np.array_equal(start, end) else "bridge"
    return Path(times, pts, kind, T, {"seed": int(seed), "replica": int(replica)})


def close_path(path: Path) -> ClosedPolyline:
    """Concatenate the path with the straight segment back to its start.

    Loops are returned as-is; the closure is treated as a geometric segment
    (its parameterisation never matters downstream).
    """
    pts = path.points
    degenerate = bool(np.all(pts == pts[0]))
    if path.kind == "loop" or np.array_equal(pts[0], pts[-1]):
        verts = pts if np.array_equal(pts[0], pts[-1]) else None
        if verts is None:
            raise ValueError("loop path without matching endpoints")
        return ClosedPolyline(verts, "already_loop", degenerate)
    verts = np.vstack([pts, pts[0]])
    return ClosedPolyline(verts, "closed_by_segment", degenerate)


def dyadic_decompose(path: Path, level: int) -> DyadicDecomposition:
    """Exact re-slicing of the stored samples into 2^level subpaths plus the
    dyadic skeleton; no new randomness is interpolated."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    n_pieces = 1 << level
    n_steps = path.n_steps
    if n_steps % n_pieces != 0:
        raise ValueError(
            f"level {level} too deep: {n_pieces} pieces do not divide {n_steps} steps")
    stride = n_steps // n_pieces
    skel_pts = path.points[::stride]
    skel_times = path.times[::stride]
    skel_kind = "loop" if np.array_equal(skel_pts[0], skel_pts[-1]) else "free"
    skeleton = Path(skel_times, skel_pts, skel_kind, path.horizon, path.seed_info)
    subs = []
    for i in range(n_pieces):
        sl = slice(i * stride, (i + 1) * stride + 1)
        t = path.times[sl] - path.times[i * stride]
        t = t.copy()
        t[0] = 0.0
        subs.append(Path(t, path.points[sl], "free", float(t[-1]), path.seed_info))
    return DyadicDecomposition(level, skeleton, tuple(subs))
