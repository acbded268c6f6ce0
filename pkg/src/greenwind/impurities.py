"""Poisson magnetic impurities: weighted winding sums, empirical and exact
(Campbell) characteristic functions, the large-intensity limit law and
samplers for its Cauchy-limit representation.

Two flavours of the Campbell exponent are provided.  ``mode="polyline"``
evaluates the integral for the sampled loop itself (every nonzero-winding
cell, masked or not) and is the right-hand side of the finite-intensity
identity test.  ``mode="continuum"`` supplements the grid bulk with an
analytic tail built on the empirical 1/(2 pi n) law of the tail measures,
which restores the high-winding contributions no affordable grid resolves
and is the right object for the large-intensity asymptotics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cauchy import CauchyProcessPath, sample_cauchy_process, young_integral
from .paths import ClosedPolyline, Path, replica_rng
from .winding import (LevelMeasures, OnCurveError, WindingField,
                      regularized_winding_integral, winding_numbers,
                      _distance_to_segments)

__all__ = [
    "ImpurityExperiment",
    "ImpuritySample",
    "CellValues",
    "sample_impurities",
    "weighted_winding_sum",
    "xi_samples",
    "xi_samples_multi",
    "empirical_cf",
    "level_cells",
    "campbell_exponent",
    "campbell_cf",
    "psi_tail",
    "campbell_tail",
    "path_time_integral",
    "limit_cf",
    "xi_limit_samples",
]


@dataclass(frozen=True)
class ImpurityExperiment:
    """Poisson impurity setup: intensity rho * g(z) dz on a window."""

    rho: float
    g: object            # WeightFn, nonnegative on the window
    f: object            # WeightFn, the phase weight
    alpha: float
    window: tuple        # (xmin, xmax, ymin, ymax)
    n_replicas: int = 1000

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        xmin, xmax, ymin, ymax = self.window
        if not (xmax > xmin and ymax > ymin):
            raise ValueError("degenerate window")
        # sampled nonnegativity check for g
        rng = np.random.default_rng(0)
        xs = rng.uniform(xmin, xmax, 10_000)
        ys = rng.uniform(ymin, ymax, 10_000)
        if np.any(np.asarray(self.g.value(xs, ys)) < -1e-12):
            raise ValueError("g must be nonnegative on the window")


@dataclass(frozen=True)
class ImpuritySample:
    points: np.ndarray   # (count, 2)
    count: int


def weight_integral(g, window, n: int = 256) -> float:
    """Midpoint quadrature of g over the window."""
    xmin, xmax, ymin, ymax = window
    xs = xmin + (np.arange(n) + 0.5) * (xmax - xmin) / n
    ys = ymin + (np.arange(n) + 0.5) * (ymax - ymin) / n
    X, Y = np.meshgrid(xs, ys)
    vals = np.broadcast_to(np.asarray(g.value(X, Y), dtype=float), X.shape)
    return float(vals.mean() * (xmax - xmin) * (ymax - ymin))


def _sample_g_points(g, window, n, rng) -> np.ndarray:
    """n i.i.d. points with density proportional to g on the window."""
    xmin, xmax, ymin, ymax = window
    sup = g.sup_on(window)
    if sup <= 0:
        return np.empty((0, 2))
    out = np.empty((n, 2))
    got = 0
    while got < n:
        m = max(1024, int((n - got) * 1.5))
        xs = rng.uniform(xmin, xmax, m)
        ys = rng.uniform(ymin, ymax, m)
        acc = rng.random(m) * sup <= np.asarray(g.value(xs, ys))
        k = min(int(acc.sum()), n - got)
        out[got:got + k, 0] = xs[acc][:k]
        out[got:got + k, 1] = ys[acc][:k]
        got += k
    return out


def sample_impurities(exp: ImpurityExperiment, seed: int, *, replica: int = 0) -> ImpuritySample:
    """One Poisson draw: count ~ Poisson(rho * integral of g), points iid ~ g."""
    rng = replica_rng(seed, replica)
    total = weight_integral(exp.g, exp.window)
    if total <= 0:
        return ImpuritySample(np.empty((0, 2)), 0)
    count = int(rng.poisson(exp.rho * total))
    pts = _sample_g_points(exp.g, exp.window, count, rng)
    return ImpuritySample(pts, count)


def weighted_winding_sum(loop: ClosedPolyline, sample: ImpuritySample, f, lam: float,
                         *, check_on_curve: bool = True, tol: float = 1e-12,
                         resample=None, max_resamples: int = 10) -> float:
    """(1/lam) * sum of f(z) * winding(z) with exact per-point winding.

    On-curve points are resampled through the `resample(n, attempt)` callback
    when given (drawing from the impurity law); more than `max_resamples`
    failed redraws raise OnCurveError and the replica should be discarded.
    """
    pts = sample.points
    if len(pts) == 0:
        return 0.0
    if check_on_curve:
        for attempt in range(max_resamples + 1):
            d = _distance_to_segments(loop.vertices, pts[:, 0], pts[:, 1])
            bad = d <= tol
            if not bad.any():
                break
            if resample is None or attempt == max_resamples:
                raise OnCurveError(f"{int(bad.sum())} impurity points on the curve")
            pts = pts.copy()
            pts[bad] = resample(int(bad.sum()), attempt)
    w = winding_numbers(loop, pts)
    fv = np.asarray(f.value(pts[:, 0], pts[:, 1]), dtype=float)
    return float(np.sum(fv * w) / lam)


def xi_samples_multi(loop: ClosedPolyline, fs, g, lam: float, window,
                     n_replicas: int, seed: int, *, stream: int = 0,
                     max_points_per_batch: int = 5_000_000) -> np.ndarray:
    """Replicas of xi_lam(f) for several phase weights over one point set.

    Returns an array of shape (len(fs), n_replicas).  All replicas' Poisson
    points are drawn at once and wound in one pass; the windings are shared
    across the weights, so the outputs are coupled through one impurity draw.
    The on-curve event has probability zero and is not checked here.
    """
    rng = replica_rng(seed, stream)
    total = weight_integral(g, window)
    counts = rng.poisson(lam * total, n_replicas) if total > 0 else np.zeros(n_replicas, int)
    xi = np.zeros((len(fs), n_replicas))
    # process replicas in batches bounded by point count
    start = 0
    while start < n_replicas:
        stop = start
        pts_in_batch = 0
        while stop < n_replicas and (pts_in_batch == 0
                                     or pts_in_batch + counts[stop] <= max_points_per_batch):
            pts_in_batch += counts[stop]
            stop += 1
        if pts_in_batch > 0:
            pts = _sample_g_points(g, window, int(pts_in_batch), rng)
            w = winding_numbers(loop, pts)
            rep = np.repeat(np.arange(start, stop), counts[start:stop])
            for i, f in enumerate(fs):
                fv = np.asarray(f.value(pts[:, 0], pts[:, 1]), dtype=float)
                xi[i, start:stop] = np.bincount(rep - start, weights=fv * w,
                                                minlength=stop - start) / lam
        start = stop
    return xi


def xi_samples(loop: ClosedPolyline, f, g, lam: float, window, n_replicas: int,
               seed: int, *, stream: int = 0, max_points_per_batch: int = 5_000_000) -> np.ndarray:
    """Replicas of the normalized phase sum xi_lam(f), sampled in bulk."""
    return xi_samples_multi(loop, [f], g, lam, window, n_replicas, seed,
                            stream=stream,
                            max_points_per_batch=max_points_per_batch)[0]


def empirical_cf(exp: ImpurityExperiment, loop: ClosedPolyline, seed: int,
                 *, xi: np.ndarray | None = None):
    """Monte Carlo estimate of E[exp(i alpha xi_lam(f))] with standard errors.

    Returns (cf, (se_re, se_im)); pass precomputed `xi` replicas to reuse one
    point set across several alpha values.
    """
    if exp.n_replicas < 100:
        raise ValueError("need at least 100 replicas")
    if xi is None:
        xi = xi_samples(loop, exp.f, exp.g, exp.rho, exp.window, exp.n_replicas, seed)
    phases = np.exp(1j * exp.alpha * xi)
    cf = complex(phases.mean())
    n = len(phases)
    se_re = float(np.std(phases.real, ddof=1) / np.sqrt(n))
    se_im = float(np.std(phases.imag, ddof=1) / np.sqrt(n))
    return cf, (se_re, se_im)


# ---------------------------------------------------------------------------
# Campbell exponent

@dataclass(frozen=True)
class CellValues:
    """Per-cell winding levels with f and g sampled at the same centers."""

    k: np.ndarray
    f_vals: np.ndarray
    g_vals: np.ndarray
    cell_area: float


def level_cells(field: WindingField, f, g, *, include_masked: bool,
                k_cap: int | None = None) -> CellValues:
    """Nonzero-winding cells with f, g evaluated at their centers."""
    w = field.winding
    sel = w != 0
    if not include_masked:
        sel &= ~field.boundary_mask
    if k_cap is not None:
        sel &= np.abs(w) <= k_cap
    X, Y = field.grid.center_mesh()
    fv = np.broadcast_to(np.asarray(f.value(X, Y), dtype=float), X.shape)[sel]
    gv = np.broadcast_to(np.asarray(g.value(X, Y), dtype=float), X.shape)[sel]
    return CellValues(w[sel].astype(np.int64), fv, gv, field.grid.cell_area)


def campbell_exponent(cells: CellValues, beta: float) -> complex:
    """Grid sum of (exp(i k beta f) - 1) g over nonzero-winding cells."""
    if beta == 0.0:
        return 0.0 + 0.0j
    phase = np.exp(1j * cells.k * beta * cells.f_vals) - 1.0
    return complex(np.sum(phase * cells.g_vals) * cells.cell_area)


def psi_tail(theta, K: int):
    """sum_{k>K} (cos(k theta) - 1) (1/k - 1/(k+1)), in closed form.

    Used to model the winding tail k > K with the 1/(2 pi k(k+1)) level-area
    law; vanishes at theta = 0 and behaves like -(pi/2)|theta| for small
    theta with K |theta| << 1.
    """
    theta = np.asarray(theta, dtype=float)
    out = np.zeros_like(theta)
    nz = np.abs(theta) > 1e-14
    th = theta[nz]
    z = np.exp(1j * th)
    s1 = np.zeros_like(z)
    zk = np.ones_like(z)
    for k in range(1, K + 1):
        zk = zk * z
        s1 = s1 + zk / k
    zk1 = zk * z
    log_term = -np.log1p(-z)
    cK = log_term - s1
    cK1 = cK - zk1 / (K + 1)
    val = cK.real - (np.exp(-1j * th) * cK1).real - 1.0 / (K + 1)
    out[nz] = val
    return out if out.ndim else float(out)


def campbell_tail(path: Path, f, g, beta: float, k_start: int) -> float:
    """Analytic winding-tail contribution to the Campbell exponent.

    Models the level measures beyond k_start with the empirical law
    f(D_k) ~ (1/(2 pi k)) * integral of f along the path, which collapses the
    tail sum to a path integral of psi_tail; the result is real (the
    positive and negative tails cancel in the imaginary part).
    """
    x = path.points[:, 0]
    y = path.points[:, 1]
    theta = beta * np.asarray(f.value(x, y), dtype=float)
    gv = np.broadcast_to(np.asarray(g.value(x, y), dtype=float), x.shape)
    vals = gv * psi_tail(theta, k_start) / np.pi
    return float(np.trapezoid(vals, path.times) / path.horizon)


def campbell_cf(field: WindingField, f, g, beta: float, lam: float, *,
                mode: str = "polyline", path: Path | None = None,
                k_cut: int = 64, cells: CellValues | None = None):
    """Campbell exponent G and the characteristic function exp(lam * G).

    mode="polyline": G of the sampled loop itself (identity test side).
    mode="continuum": masked grid bulk up to |k| <= k_cut plus the analytic
    tail along the path (asymptotics side); requires `path`.
    """
    if mode == "polyline":
        if cells is None:
            cells = level_cells(field, f, g, include_masked=True)
        G = campbell_exponent(cells, beta)
    elif mode == "continuum":
        if path is None:
            raise ValueError("continuum mode needs the underlying path")
        if cells is None:
            cells = level_cells(field, f, g, include_masked=False, k_cap=k_cut)
        G = campbell_exponent(cells, beta) + campbell_tail(path, f, g, beta, k_cut)
    else:
        raise ValueError("mode must be 'polyline' or 'continuum'")
    return G, complex(np.exp(lam * G))


# ---------------------------------------------------------------------------
# limit law

def path_time_integral(path: Path, fn) -> float:
    """Trapezoid integral of fn(X_t) over normalized time [0, 1]."""
    vals = np.asarray(fn(path.points[:, 0], path.points[:, 1]), dtype=float)
    vals = np.broadcast_to(vals, path.points[:, 0].shape)
    return float(np.trapezoid(vals, path.times) / path.horizon)


def limit_cf(path: Path, measures_fg: LevelMeasures, f, g, alpha: float):
    """Large-intensity limit characteristic function.

    exp(i a <regularized winding integral of f g> - |a|/2 * time integral of
    |f| g along the path); also returns the two ingredients and propagates
    the convergence warning of the regularized integral.
    """
    reg, diag = regularized_winding_integral(measures_fg)
    tint = path_time_integral(path, lambda x, y: np.abs(f.value(x, y)) * g.value(x, y))
    cf = complex(np.exp(1j * alpha * reg - 0.5 * abs(alpha) * tint))
    return cf, {"winding_integral": reg, "time_integral": tint,
                "convergence_warning": diag["convergence_warning"]}


def xi_limit_samples(path: Path, measures_fg: LevelMeasures, f, g,
                     n_samples: int, seed: int, *, stream: int = 0) -> np.ndarray:
    """Replicas of the limit variable: deterministic regularized winding
    integral plus half a Young integral of (f g)(X) against fresh Cauchy
    process paths on the path's own time grid."""
    reg, _ = regularized_winding_integral(measures_fg)
    h = np.asarray(f.value(path.points[:, 0], path.points[:, 1]), dtype=float) \
        * np.asarray(g.value(path.points[:, 0], path.points[:, 1]), dtype=float)
    h = np.broadcast_to(h, path.points[:, 0].shape)
    out = np.empty(n_samples)
    t = path.times / path.horizon
    for r in range(n_samples):
        gamma = sample_cauchy_process(t, seed, replica=(stream << 32) + r)
        out[r] = reg + 0.5 * young_integral(h, gamma)
    return out
