import numpy as np
import pytest

from greenwind import (area_form, bump_form, trig_form, const_weight,
                       bump_weight, trig_weight, ramp_weight, curl_weight,
                       product_weight, make_form, make_weight,
                       line_integral_exact, stratonovich_approx,
                       green_residual, sample_bm, sample_bridge, Grid)
from greenwind.paths import Path

SQUARE = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]], float)


def test_area_form_square_shoelace():
    assert line_integral_exact(area_form(), SQUARE) == pytest.approx(1.0, abs=1e-14)
    assert line_integral_exact(area_form(), SQUARE[::-1]) == pytest.approx(-1.0, abs=1e-14)


def test_catalog_curl_consistency():
    rng = np.random.default_rng(0)
    x = rng.uniform(-2, 2, 200)
    y = rng.uniform(-2, 2, 200)
    for form in (area_form(), bump_form((0.3, -0.2), 0.7), trig_form(1.5, 2.5)):
        lhs = form.d1_eta2(x, y) - form.d2_eta1(x, y)
        assert np.allclose(lhs, form.curl(x, y), atol=1e-12)


def test_catalog_partials_against_finite_differences():
    h = 1e-6
    rng = np.random.default_rng(1)
    x = rng.uniform(-1.5, 1.5, 50)
    y = rng.uniform(-1.5, 1.5, 50)
    for form in (bump_form(width=0.6), trig_form()):
        fd12 = (form.eta2(x + h, y) - form.eta2(x - h, y)) / (2 * h)
        fd21 = (form.eta1(x, y + h) - form.eta1(x, y - h)) / (2 * h)
        assert np.allclose(fd12, form.d1_eta2(x, y), atol=1e-6)
        assert np.allclose(fd21, form.d2_eta1(x, y), atol=1e-6)


def test_bump_form_circle_flux():
    # closed-form flux of the bump form through a centered circle:
    # contour integral = 2 pi R * phi'(R) with phi the Gaussian profile
    s = 0.5
    R = 1.1
    t = np.linspace(0, 2 * np.pi, 4001)
    circle = np.column_stack([R * np.cos(t), R * np.sin(t)])
    circle[-1] = circle[0]
    got = line_integral_exact(bump_form(width=s), circle)
    want = 2 * np.pi * R * (-R / s ** 2) * np.exp(-R ** 2 / (2 * s ** 2))
    assert got == pytest.approx(want, rel=1e-6)


def test_weight_sup_on():
    win = (-1.0, 2.0, -1.0, 1.0)
    assert const_weight(3.0).sup_on(win) == 3.0
    assert bump_weight((0.0, 0.0), 0.5).sup_on(win) == pytest.approx(1.0)
    assert bump_weight((5.0, 0.0), 0.5).sup_on(win) == pytest.approx(
        np.exp(-9.0 / (2 * 0.25)))
    assert trig_weight().sup_on(win) == 1.0
    assert ramp_weight(hi=2.5).sup_on(win) == 2.5
    # fallback path: sup bound dominates samples
    w = curl_weight(bump_form(width=0.5))
    xs = np.linspace(*win[:2], 100)
    ys = np.linspace(*win[2:], 100)
    X, Y = np.meshgrid(xs, ys)
    assert w.sup_on(win) >= np.max(np.abs(w.value(X, Y)))


def test_product_weight():
    f = ramp_weight()
    g = bump_weight()
    fg = product_weight(f, g)
    x, y = 0.3, -0.4
    assert fg.value(x, y) == pytest.approx(f.value(x, y) * g.value(x, y))


def test_factories():
    assert make_form("area").form_id == "area"
    assert make_weight("const", c=2.0).value(0, 0) == 2.0
    with pytest.raises(KeyError):
        make_form("moebius")
    with pytest.raises(KeyError):
        make_weight("moebius")


def test_strat_schemes_exact_for_area_form():
    # the area form is affine, so midpoint, trapezoid and chord integrals
    # coincide exactly at every level
    path = sample_bm(256, 1.0, (0, 0), seed=31)
    form = area_form()
    for level in (4, 6, 8):
        i1 = stratonovich_approx(form, path, level, "midpoint_I1")
        i2 = stratonovich_approx(form, path, level, "trapezoid_I2")
        i3 = stratonovich_approx(form, path, level, "chord_I3")
        assert abs(i1 - i2) < 1e-12
        assert abs(i1 - i3) < 1e-12


def test_strat_chord_full_level_is_line_integral():
    path = sample_bm(128, 1.0, (0, 0), seed=32)
    form = trig_form()
    full = stratonovich_approx(form, path, 7, "chord_I3")
    assert full == pytest.approx(line_integral_exact(form, path.points), abs=1e-12)


def test_strat_validation():
    path = sample_bm(128, 1.0, (0, 0), seed=33)
    with pytest.raises(ValueError):
        stratonovich_approx(area_form(), path, 9, "chord_I3")
    with pytest.raises(ValueError):
        stratonovich_approx(area_form(), path, 3, "simpson")


def test_strat_schemes_converge_together():
    path = sample_bm(4096, 1.0, (0, 0), seed=34)
    form = bump_form(width=0.8)
    gaps = []
    for level in (8, 10, 12):
        i1 = stratonovich_approx(form, path, level, "midpoint_I1")
        i3 = stratonovich_approx(form, path, level, "chord_I3")
        gaps.append(abs(i1 - i3))
    assert gaps[-1] < gaps[0]


def test_green_residual_square():
    t = np.linspace(0, 1, 5)
    sq = Path(t, SQUARE, "loop", 1.0)
    grid = Grid((-0.5, 1.5, -0.5, 1.5), 256, 256)
    rep = green_residual(sq, area_form(), grid, [1, 4], "clamp")
    assert rep.rhs == pytest.approx(1.0, abs=1e-12)
    assert rep.closing_value == 0.0
    # residual bounded by the grid tolerance 2 * cell * perimeter
    tol = 2 * grid.dx * 4.0
    assert all(r <= tol for _, _, r in rep.rows)


def test_green_residual_brownian_loop():
    from greenwind import close_path
    path = sample_bridge(1024, 1.0, (0, 0), (0, 0), seed=35)
    grid = Grid.cover(close_path(path), 512, 512)
    rep = green_residual(path, area_form(), grid, [4, 16, 32], "clamp")
    scale = abs(rep.strat_value) + 0.1
    assert rep.rows[-1][2] <= max(0.05 * scale, 5 * rep.self_convergence_gap)


def test_green_report_csv(tmp_path):
    t = np.linspace(0, 1, 5)
    sq = Path(t, SQUARE, "loop", 1.0)
    grid = Grid((-0.5, 1.5, -0.5, 1.5), 64, 64)
    rep = green_residual(sq, area_form(), grid, [1, 2], "zero")
    fn = tmp_path / "green.csv"
    rep.to_csv(fn)
    lines = fn.read_text().strip().splitlines()
    assert lines[0] == "K,value,residual"
    assert len(lines) == 3
