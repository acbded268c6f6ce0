import numpy as np
import pytest

from greenwind import (close_path, dyadic_decompose, replica_rng, sample_bm,
                       sample_bridge)
from greenwind.paths import Path


def test_sample_bm_basic():
    p = sample_bm(256, 1.0, (0.5, -1.0), seed=1)
    assert p.kind == "free"
    assert p.n_steps == 256
    assert np.allclose(p.points[0], [0.5, -1.0])
    assert p.times[0] == 0.0 and p.times[-1] == 1.0


def test_sample_bm_rejects_bad_steps():
    with pytest.raises(ValueError):
        sample_bm(100, 1.0, (0, 0), seed=1)
    with pytest.raises(ValueError):
        sample_bm(256, -1.0, (0, 0), seed=1)


def test_sample_bm_reproducible():
    a = sample_bm(128, 1.0, (0, 0), seed=9)
    b = sample_bm(128, 1.0, (0, 0), seed=9)
    c = sample_bm(128, 1.0, (0, 0), seed=9, replica=1)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)


def test_sample_bm_increment_statistics():
    p = sample_bm(4096, 2.0, (0, 0), seed=3)
    inc = np.diff(p.points, axis=0)
    dt = 2.0 / 4096
    # mean ~ N(0, dt/n), variance concentrates at dt
    assert np.all(np.abs(inc.mean(axis=0)) < 4 * np.sqrt(dt / 4096))
    assert np.all(np.abs(inc.var(axis=0) / dt - 1.0) < 0.15)


def test_bridge_pins_endpoint_exactly():
    p = sample_bridge(512, 1.0, (0.0, 0.0), (1.0, -2.0), seed=4)
    assert p.kind == "bridge"
    assert np.array_equal(p.points[-1], [1.0, -2.0])
    assert np.array_equal(p.points[0], [0.0, 0.0])


def test_bridge_with_equal_endpoints_is_loop():
    p = sample_bridge(512, 1.0, (0.3, 0.3), (0.3, 0.3), seed=5)
    assert p.kind == "loop"
    assert np.array_equal(p.points[0], p.points[-1])


def test_bridge_midpoint_variance():
    # loop from 0: Var X_{T/2} = T/4 per coordinate
    reps = 3000
    mid = np.array([sample_bridge(64, 1.0, (0, 0), (0, 0), seed=6,
                                  replica=r).points[32] for r in range(reps)])
    v = mid.var(axis=0)
    se = 0.25 * np.sqrt(2.0 / reps)
    assert np.all(np.abs(v - 0.25) < 5 * se)


def test_close_path_appends_segment():
    p = sample_bm(64, 1.0, (0, 0), seed=7)
    loop = close_path(p)
    assert loop.source == "closed_by_segment"
    assert len(loop.vertices) == len(p.points) + 1
    assert np.array_equal(loop.vertices[-1], loop.vertices[0])


def test_close_path_keeps_loop():
    p = sample_bridge(64, 1.0, (0, 0), (0, 0), seed=8)
    loop = close_path(p)
    assert loop.source == "already_loop"
    assert len(loop.vertices) == len(p.points)


def test_dyadic_decompose_reslices_exactly():
    p = sample_bm(256, 1.0, (0, 0), seed=10)
    dec = dyadic_decompose(p, 3)
    assert dec.skeleton.n_steps == 8
    assert np.array_equal(dec.skeleton.points, p.points[::32])
    # concatenating subpath points reproduces the original samples
    rebuilt = np.vstack([dec.subpaths[0].points]
                        + [s.points[1:] for s in dec.subpaths[1:]])
    assert np.array_equal(rebuilt, p.points)


def test_dyadic_decompose_rejects_too_deep():
    p = sample_bm(8, 1.0, (0, 0), seed=11)
    with pytest.raises(ValueError):
        dyadic_decompose(p, 4)


def test_path_invariants():
    t = np.linspace(0, 1, 5)
    pts = np.zeros((5, 2))
    with pytest.raises(ValueError):
        Path(t, pts, "mystery", 1.0)
    with pytest.raises(ValueError):
        Path(t[::-1], pts, "free", 1.0)
    pts2 = pts.copy()
    pts2[-1] = [1, 1]
    with pytest.raises(ValueError):
        Path(t, pts2, "loop", 1.0)


def test_replica_rng_streams_differ():
    a = replica_rng(1, 0).random(4)
    b = replica_rng(1, 1).random(4)
    c = replica_rng(1, 0).random(4)
    assert np.array_equal(a, c)
    assert not np.array_equal(a, b)
