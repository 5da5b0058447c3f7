import statistics

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from flatnormals.core import DepthImage
from flatnormals.depth import (DISTANCE_CAP, PreprocessParams, depth_change_map, distance_map,
                               fill_holes, smooth_depth, training_valid_mask)
from flatnormals.errors import ConfigError

P = PreprocessParams()


def brute_chebyshev(flags):
    H, W = flags.shape
    ys, xs = np.nonzero(flags)
    out = np.full((H, W), DISTANCE_CAP, dtype=np.int64)
    for i in range(H):
        for j in range(W):
            if len(ys):
                out[i, j] = min(max(abs(i - y), abs(j - x)) for y, x in zip(ys, xs))
    return out


def brute_edge_median(depth, valid, window, factor):
    """Per-pixel reference for the edge-aware median (isolated pixels use the plain median)."""
    H, W = depth.shape
    k = window // 2
    out = depth.copy()
    for i in range(H):
        for j in range(W):
            if not valid[i, j]:
                continue
            zc = depth[i, j]
            near, close = [], []
            for a in range(max(0, i - k), min(H, i + k + 1)):
                for b in range(max(0, j - k), min(W, j + k + 1)):
                    if valid[a, b]:
                        near.append(depth[a, b])
                        if abs(depth[a, b] - zc) <= factor * zc:
                            close.append(depth[a, b])
            out[i, j] = statistics.median(close if len(close) > 1 else near)
    return out


def test_params_validation():
    with pytest.raises(ConfigError):
        PreprocessParams(median_window=4)
    with pytest.raises(ConfigError):
        PreprocessParams(min_depth=5, max_depth=1)


def test_fill_all_valid_is_identity():
    d = DepthImage(np.full((5, 5), 2.0), np.ones((5, 5), bool))
    out, filled = fill_holes(d, P)
    np.testing.assert_array_equal(out.depth, d.depth)
    assert not filled.any()


def test_fill_single_hole_from_constant():
    valid = np.ones((5, 5), bool)
    valid[2, 2] = False
    d = DepthImage(np.where(valid, 2.0, 0.0), valid)
    out, filled = fill_holes(d, P)
    assert out.depth[2, 2] == 2.0 and out.valid[2, 2] and filled[2, 2]
    assert filled.sum() == 1


def test_fill_respects_radius():
    R = 2
    valid = np.ones((15, 15), bool)
    valid[2:13, 2:13] = False  # 11 px block > 2R
    d = DepthImage(np.where(valid, 1.5, 0.0), valid)
    out, filled = fill_holes(d, PreprocessParams(fill_max_radius=R))
    assert not out.valid[7, 7]
    assert out.valid[3, 3] and filled[3, 3]
    # ring within R of valid pixels filled, deeper interior untouched
    ring = np.zeros_like(valid)
    ring[2:13, 2:13] = True
    ring[4:11, 4:11] = False
    assert filled[ring].all() and not filled[5:10, 5:10].any()


def test_fill_grows_until_three_valid(rng):
    depth = np.zeros((7, 7))
    valid = np.zeros((7, 7), bool)
    # only three valid pixels, at Chebyshev distance 2 from the centre
    for (i, j), z in zip([(1, 1), (1, 5), (5, 3)], [1.0, 3.0, 2.0]):
        depth[i, j], valid[i, j] = z, True
    out, _ = fill_holes(DepthImage(depth, valid), P)
    assert out.depth[3, 3] == 2.0


@given(arrays(np.float64, (6, 6), elements=st.floats(0.5, 5.0)), arrays(bool, (6, 6)))
@settings(max_examples=50, deadline=None)
def test_fill_never_changes_valid_pixels(depth, valid):
    d = DepthImage(np.where(valid, depth, 0.0), valid)
    out, filled = fill_holes(d, PreprocessParams(fill_max_radius=2))
    np.testing.assert_array_equal(out.depth[valid], depth[valid])
    assert not (filled & valid).any()


def test_smooth_constant_unchanged():
    d = DepthImage(np.full((8, 8), 2.0), np.ones((8, 8), bool))
    np.testing.assert_array_equal(smooth_depth(d, P).depth, d.depth)


def test_smooth_removes_spike():
    z = np.full((7, 7), 2.0)
    z[3, 3] = 5.0
    out = smooth_depth(DepthImage(z, np.ones_like(z, bool)), P)
    assert out.depth[3, 3] == 2.0


def test_smooth_preserves_step_edge():
    z = np.where(np.arange(9)[None, :] < 4, 1.0, 3.0) * np.ones((9, 1))
    valid = np.ones_like(z, bool)
    ref = brute_edge_median(z, valid, 5, 0.02)
    out = smooth_depth(DepthImage(z, valid), P)
    np.testing.assert_array_equal(ref, z)
    np.testing.assert_array_equal(out.depth, ref)


def test_smooth_matches_reference_on_noisy_steps(rng):
    z = np.where(np.arange(12)[None, :] < 6, 1.0, 1.6) + rng.normal(0, 0.01, (10, 12))
    valid = rng.random(z.shape) > 0.1
    d = DepthImage(np.where(valid, z, 0.0), valid)
    ref = brute_edge_median(d.depth, valid, 5, 0.02)
    np.testing.assert_allclose(smooth_depth(d, P).depth[valid], ref[valid], rtol=0, atol=1e-15)


def test_smooth_bounded_deviation_on_piecewise_constant(rng):
    levels = rng.uniform(0.5, 4.0, size=(4, 4))
    z = np.kron(levels, np.ones((6, 6)))
    out = smooth_depth(DepthImage(z, np.ones_like(z, bool)), P)
    assert np.all(np.abs(out.depth - z) <= P.depth_change_factor * z)


def test_training_mask():
    z = np.array([[2.0, 2.0, 15.0, 0.0]])
    raw = DepthImage(z, z > 0)
    filled = np.array([[False, True, False, False]])
    assert training_valid_mask(raw, filled, P).tolist() == [[True, False, False, False]]


def test_depth_change_examples():
    flat = DepthImage(np.full((6, 6), 2.0), np.ones((6, 6), bool))
    assert not depth_change_map(flat, P).any()

    z = np.where(np.arange(6)[None, :] < 3, 1.0, 3.0) * np.ones((6, 1))
    flags = depth_change_map(DepthImage(z, np.ones_like(z, bool)), P)
    assert flags[:, 2].all() and flags[:, 3].all()
    assert not flags[:, [0, 1, 4, 5]].any()

    valid = np.ones((5, 5), bool)
    valid[2, 2] = False
    flags = depth_change_map(DepthImage(np.where(valid, 2.0, 0.0), valid), P)
    assert flags[1:4, 1:4].all() and flags.sum() == 9


def test_distance_map_examples():
    assert (distance_map(np.zeros((4, 5), bool)) == DISTANCE_CAP).all()
    f = np.zeros((5, 5), bool)
    f[2, 2] = True
    d = distance_map(f)
    assert d[0, 0] == 2 and d[2, 2] == 0 and d[1, 2] == 1


def test_distance_map_matches_bruteforce(rng):
    for _ in range(5):
        f = rng.random((32, 32)) < rng.uniform(0.005, 0.1)
        np.testing.assert_array_equal(distance_map(f), brute_chebyshev(f))


@given(arrays(bool, st.tuples(st.integers(1, 12), st.integers(1, 12))))
@settings(max_examples=60, deadline=None)
def test_distance_map_lipschitz(flags):
    d = distance_map(flags)
    if not flags.any():
        return
    assert (d[flags] == 0).all()
    assert np.abs(np.diff(d, axis=0)).max(initial=0) <= 1
    assert np.abs(np.diff(d, axis=1)).max(initial=0) <= 1
    assert np.abs(d[1:, 1:] - d[:-1, :-1]).max(initial=0) <= 1
