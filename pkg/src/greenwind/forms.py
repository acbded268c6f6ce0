"""Catalog of test differential 1-forms and weight functions, exact line
integrals along polylines, Stratonovich discretizations and the Green-formula
residual report.

The catalog is closed on purpose: every form carries closed-form partials and
curl so the Green check is never contaminated by numerical differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .paths import Path, close_path
from .winding import (Grid, WindingField, winding_field, level_measures,
                      truncated_winding_integral)

__all__ = [
    "OneForm",
    "WeightFn",
    "area_form",
    "bump_form",
    "trig_form",
    "const_weight",
    "bump_weight",
    "trig_weight",
    "ramp_weight",
    "curl_weight",
    "product_weight",
    "make_form",
    "make_weight",
    "line_integral_exact",
    "stratonovich_approx",
    "green_residual",
    "GreenReport",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_GL_T = 0.5 * (_GL_NODES + 1.0)      # nodes on [0, 1]
_GL_W = 0.5 * _GL_WEIGHTS


@dataclass(frozen=True)
class OneForm:
    """Differential 1-form eta1 dx1 + eta2 dx2 with closed-form partials.

    curl(x, y) == d1_eta2(x, y) - d2_eta1(x, y) pointwise; all callables are
    numpy-vectorized in (x, y).
    """

    form_id: str
    eta1: callable
    eta2: callable
    d1_eta2: callable
    d2_eta1: callable
    curl: callable
    smoothness_tag: float = 1.0


@dataclass(frozen=True)
class WeightFn:
    """Bounded weight function on the plane, numpy-vectorized in (x, y)."""

    weight_id: str
    value: callable
    holder_seminorm_hint: float | None = None
    params: dict = field(default_factory=dict)

    def sup_on(self, window) -> float:
        """Upper bound of |value| on the rectangle (catalog closed forms)."""
        xmin, xmax, ymin, ymax = window
        p = self.params
        kind = p.get("kind")
        if kind == "const":
            return abs(p["c"])
        if kind == "bump":
            cx, cy = p["center"]
            # radially decreasing: sup at the window point closest to center
            qx = min(max(cx, xmin), xmax)
            qy = min(max(cy, ymin), ymax)
            return float(self.value(qx, qy))
        if kind == "trig":
            return 1.0
        if kind == "ramp":
            return float(p["hi"])
        # fallback: dense sampling with headroom
        xs = np.linspace(xmin, xmax, 201)
        ys = np.linspace(ymin, ymax, 201)
        X, Y = np.meshgrid(xs, ys)
        return float(np.max(np.abs(self.value(X, Y)))) * 1.05


def area_form() -> OneForm:
    """eta = (−x2/2) dx1 + (x1/2) dx2, curl == 1 (signed-area form)."""
    return OneForm(
        "area",
        eta1=lambda x, y: -0.5 * np.asarray(y, dtype=float),
        eta2=lambda x, y: 0.5 * np.asarray(x, dtype=float),
        d1_eta2=lambda x, y: np.full_like(np.asarray(x, dtype=float), 0.5),
        d2_eta1=lambda x, y: np.full_like(np.asarray(x, dtype=float), -0.5),
        curl=lambda x, y: np.ones_like(np.asarray(x, dtype=float)),
    )


def bump_form(center=(0.0, 0.0), width: float = 0.5) -> OneForm:
    """eta = (−d2 phi, d1 phi) for the Gaussian bump phi; curl = laplacian(phi)."""
    cx, cy = center
    s2 = width * width

    def phi(x, y):
        return np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * s2))

    return OneForm(
        f"bump(c=({cx},{cy}),s={width})",
        eta1=lambda x, y: (y - cy) / s2 * phi(x, y),
        eta2=lambda x, y: -(x - cx) / s2 * phi(x, y),
        d1_eta2=lambda x, y: ((x - cx) ** 2 / s2 - 1.0) / s2 * phi(x, y),
        d2_eta1=lambda x, y: (1.0 - (y - cy) ** 2 / s2) / s2 * phi(x, y),
        curl=lambda x, y: (((x - cx) ** 2 + (y - cy) ** 2) / s2 - 2.0) / s2 * phi(x, y),
    )


def trig_form(a: float = 2.0, b: float = 3.0) -> OneForm:
    """eta1 = 0, eta2 = sin(a x1) cos(b x2); curl = a cos(a x1) cos(b x2)."""
    zero = lambda x, y: np.zeros_like(np.asarray(x, dtype=float))
    return OneForm(
        f"trig(a={a},b={b})",
        eta1=zero,
        eta2=lambda x, y: np.sin(a * x) * np.cos(b * y),
        d1_eta2=lambda x, y: a * np.cos(a * x) * np.cos(b * y),
        d2_eta1=zero,
        curl=lambda x, y: a * np.cos(a * x) * np.cos(b * y),
    )


def const_weight(c: float = 1.0) -> WeightFn:
    return WeightFn(f"const({c})",
                    lambda x, y, c=c: np.full_like(np.asarray(x, dtype=float), c),
                    holder_seminorm_hint=0.0, params={"kind": "const", "c": c})


def bump_weight(center=(0.0, 0.0), width: float = 0.5) -> WeightFn:
    cx, cy = center
    s2 = width * width
    return WeightFn(
        f"bump(c=({cx},{cy}),s={width})",
        lambda x, y: np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * s2)),
        holder_seminorm_hint=1.0 / width,
        params={"kind": "bump", "center": (cx, cy), "width": width})


def trig_weight(a: float = 2.0, b: float = 3.0) -> WeightFn:
    return WeightFn(f"trig(a={a},b={b})",
                    lambda x, y: np.sin(a * x) * np.cos(b * y),
                    holder_seminorm_hint=float(np.hypot(a, b)),
                    params={"kind": "trig", "a": a, "b": b})


def ramp_weight(u: float = 1.0, vx: float = 0.5, vy: float = 0.0,
                lo: float = 0.0, hi: float = 2.0) -> WeightFn:
    """Affine weight saturated into [lo, hi]; nonnegative when lo >= 0."""
    return WeightFn(
        f"ramp(u={u},vx={vx},vy={vy},clip=[{lo},{hi}])",
        lambda x, y: np.clip(u + vx * np.asarray(x, dtype=float) + vy * y, lo, hi),
        holder_seminorm_hint=float(np.hypot(vx, vy)),
        params={"kind": "ramp", "lo": lo, "hi": hi})


def curl_weight(form: OneForm) -> WeightFn:
    """The form's curl packaged as a weight (the f of the Green formula)."""
    return WeightFn(f"curl[{form.form_id}]", form.curl,
                    params={"kind": "curl", "form": form.form_id})


def product_weight(f: WeightFn, g: WeightFn) -> WeightFn:
    """Pointwise product f*g packaged as a weight."""
    return WeightFn(f"{f.weight_id}*{g.weight_id}",
                    lambda x, y: np.asarray(f.value(x, y), dtype=float)
                    * np.asarray(g.value(x, y), dtype=float),
                    params={"kind": "product"})


_FORM_FACTORIES = {"area": area_form, "bump": bump_form, "trig": trig_form}
_WEIGHT_FACTORIES = {"const": const_weight, "bump": bump_weight,
                     "trig": trig_weight, "ramp": ramp_weight}


def make_form(form_id: str, **params) -> OneForm:
    if form_id not in _FORM_FACTORIES:
        raise KeyError(f"unknown form id {form_id!r}; have {sorted(_FORM_FACTORIES)}")
    return _FORM_FACTORIES[form_id](**params)


def make_weight(weight_id: str, **params) -> WeightFn:
    if weight_id not in _WEIGHT_FACTORIES:
        raise KeyError(f"unknown weight id {weight_id!r}; have {sorted(_WEIGHT_FACTORIES)}")
    return _WEIGHT_FACTORIES[weight_id](**params)


# ---------------------------------------------------------------------------
# integrals

def line_integral_exact(form: OneForm, polyline: np.ndarray) -> float:
    """Integral of the form along a polyline, per-segment Gauss-Legendre 16.

    Exact for polynomial components up to the quadrature order (the area
    form integrates exactly to the shoelace value).
    """
    verts = np.asarray(getattr(polyline, "vertices", polyline), dtype=float)
    if len(verts) < 2:
        raise ValueError("polyline needs at least 2 vertices")
    a = verts[:-1]
    d = verts[1:] - a
    # quadrature points: (nodes, segments)
    px = a[:, 0] + _GL_T[:, None] * d[:, 0]
    py = a[:, 1] + _GL_T[:, None] * d[:, 1]
    vals = form.eta1(px, py) * d[:, 0] + form.eta2(px, py) * d[:, 1]
    return float(np.sum(_GL_W @ vals))


def stratonovich_approx(form: OneForm, path: Path, level: int, scheme: str) -> float:
    """Level-n Stratonovich discretization along the dyadic skeleton.

    midpoint_I1 evaluates the form at chord midpoints, trapezoid_I2 averages
    chord endpoint values, chord_I3 integrates exactly along the skeleton.
    """
    n_pieces = 1 << level
    if level < 0 or path.n_steps % n_pieces != 0:
        raise ValueError(f"level {level} not admissible for {path.n_steps} steps")
    stride = path.n_steps // n_pieces
    pts = path.points[::stride]
    d = np.diff(pts, axis=0)
    if scheme == "midpoint_I1":
        mx = 0.5 * (pts[:-1, 0] + pts[1:, 0])
        my = 0.5 * (pts[:-1, 1] + pts[1:, 1])
        return float(np.sum(form.eta1(mx, my) * d[:, 0] + form.eta2(mx, my) * d[:, 1]))
    if scheme == "trapezoid_I2":
        f1 = form.eta1(pts[:, 0], pts[:, 1])
        f2 = form.eta2(pts[:, 0], pts[:, 1])
        return float(np.sum(0.5 * (f1[:-1] + f1[1:]) * d[:, 0]
                            + 0.5 * (f2[:-1] + f2[1:]) * d[:, 1]))
    if scheme == "chord_I3":
        return line_integral_exact(form, pts)
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass(frozen=True)
class GreenReport:
    """Per-K residuals of truncated winding integrals against the
    Stratonovich value plus the closing-segment integral."""

    form_id: str
    mode: str
    rows: tuple            # (K, truncated, residual)
    strat_value: float
    closing_value: float
    self_convergence_gap: float

    @property
    def rhs(self) -> float:
        return self.strat_value + self.closing_value

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("K,value,residual\n")
            for K, v, r in self.rows:
                fh.write(f"{K},{v!r},{r!r}\n")


def green_residual(path: Path, form: OneForm, grid: Grid, K_list,
                   mode: str = "clamp", *, field: WindingField | None = None) -> GreenReport:
    """Compare truncated winding integrals of the form's curl against the
    Stratonovich integral along the path plus the closing-segment integral."""
    loop = close_path(path)
    if field is None:
        field = winding_field(loop, grid)
    K_list = sorted(int(k) for k in K_list)
    # masked cells carry exact winding; including them makes the truncated
    # integral a full-grid Riemann sum, matching the line-integral side
    measures = level_measures(field, curl_weight(form),
                              n_max=max(max(K_list) + 1, 1),
                              include_masked=True)
    max_level = int(np.log2(path.n_steps))
    strat = stratonovich_approx(form, path, max_level, "chord_I3")
    strat_prev = stratonovich_approx(form, path, max_level - 1, "chord_I3")
    gap = abs(strat - strat_prev)
    if loop.source == "already_loop":
        closing = 0.0
    else:
        closing = line_integral_exact(form, np.array([path.points[-1], path.points[0]]))
    rhs = strat + closing
    rows = []
    for K in K_list:
        v = truncated_winding_integral(measures, K, mode)
        rows.append((K, v, abs(v - rhs)))
    return GreenReport(form.form_id, mode, tuple(rows), strat, closing, gap)
