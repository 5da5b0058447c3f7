from collections import deque

import numpy as np
import pytest

from flatnormals.core import CLASS_IDS, UNLABELED, LabelMap, NormalMap, angle_between, angle_map, normalize
from flatnormals.errors import ShapeError
from flatnormals.fixtures import corner_scene, render_noisy, render_scene
from flatnormals.pipeline import compute_normals
from flatnormals.semantic import (GrowParams, apply_region_normals, grow_regions, grow_regions_oracle,
                                  semantic_smooth)

FLOOR, WALL, CHAIR = CLASS_IDS["floor"], CLASS_IDS["wall"], CLASS_IDS["chair"]


def tilted(n0, max_deg, rng, shape):
    """Unit normals within ``max_deg`` of ``n0``."""
    n0 = normalize(n0)
    a = np.radians(rng.uniform(0, max_deg, shape))
    phi = rng.uniform(0, 2 * np.pi, shape)
    e1 = normalize(np.cross(n0, [1.0, 0, 0]) if abs(n0[0]) < 0.9 else np.cross(n0, [0, 1.0, 0]))
    e2 = np.cross(n0, e1)
    d = np.cos(phi)[..., None] * e1 + np.sin(phi)[..., None] * e2
    return np.cos(a)[..., None] * n0 + np.sin(a)[..., None] * d


def random_grid(rng, size=32):
    blocks = rng.choice([FLOOR, WALL, CHAIR, UNLABELED], size=(4, 4))
    labels = np.kron(blocks, np.ones((size // 4, size // 4), dtype=np.uint8)).astype(np.uint8)
    dirs = np.array([[0, -1.0, 0], [1.0, 0, -1], [-1.0, 0, -1], [0.3, -0.2, -1]])
    pick = np.kron(rng.integers(0, len(dirs), (2, 2)), np.ones((size // 2, size // 2), int))
    normals = np.zeros((size, size, 3))
    for k, d in enumerate(dirs):
        normals[pick == k] = tilted(d, rng.uniform(5, 40), rng, (size, size))[pick == k]
    valid = rng.random((size, size)) > 0.05
    return NormalMap(normals, valid), LabelMap(labels)


def same_partition(a, b):
    if not np.array_equal(a < 0, b < 0):
        return False
    pairs = set(zip(a[a >= 0].tolist(), b[b >= 0].tolist()))
    return len(pairs) == len({p[0] for p in pairs}) == len({p[1] for p in pairs})


def test_uniform_floor_single_region():
    nm = NormalMap(np.broadcast_to([0, -1.0, 0], (10, 12, 3)).copy(), np.ones((10, 12), bool))
    rl = grow_regions(nm, LabelMap(np.full((10, 12), FLOOR, np.uint8)))
    assert rl.n_regions == 1 and rl.sizes[0] == 120


def test_corner_gives_two_regions():
    r = render_scene(corner_scene(with_floor=False))
    rl = grow_regions(r.normals, r.labels)
    assert rl.n_regions == 2
    for k in range(2):
        assert len(np.unique(r.plane_id[rl.region_id == k])) == 1


def test_noisy_floor_single_region(rng):
    nm = NormalMap(tilted([0, -1.0, 0], 10, rng, (20, 20)), np.ones((20, 20), bool))
    lm = LabelMap(np.full((20, 20), FLOOR, np.uint8))
    rl = grow_regions(nm, lm)
    assert rl.n_regions == 1
    assert same_partition(rl.region_id, grow_regions_oracle(nm, lm).region_id)


def test_apply_mean_and_min_size(rng):
    nm = NormalMap(tilted([0, -1.0, 0], 10, rng, (10, 10)), np.ones((10, 10), bool))
    lm = LabelMap(np.full((10, 10), FLOOR, np.uint8))
    out = semantic_smooth(nm, lm, GrowParams(min_region_size=100))
    mean = normalize(nm.normals.reshape(-1, 3).sum(axis=0))
    np.testing.assert_allclose(out.normals.reshape(-1, 3), np.tile(mean, (100, 1)), atol=1e-12)
    out = semantic_smooth(nm, lm, GrowParams(min_region_size=101))
    np.testing.assert_array_equal(out.normals, nm.normals)


def test_non_planar_unchanged(rng):
    nm, lm = random_grid(rng)
    out = semantic_smooth(nm, lm, GrowParams(min_region_size=5))
    keep = ~np.isin(lm.labels, list(GrowParams().planar_classes))
    np.testing.assert_array_equal(out.normals[keep], nm.normals[keep])
    assert np.allclose(np.linalg.norm(out.normals[out.valid], axis=-1), 1.0)


def test_all_unlabeled_zero_regions(rng):
    nm, _ = random_grid(rng)
    rl = grow_regions(nm, LabelMap(np.full(nm.shape, UNLABELED, np.uint8)))
    assert rl.n_regions == 0 and (rl.region_id == -1).all()


def test_empty_planar_set_is_identity(rng):
    nm, lm = random_grid(rng)
    out = semantic_smooth(nm, lm, GrowParams(planar_classes=()))
    np.testing.assert_array_equal(out.normals, nm.normals)


@pytest.mark.parametrize("connectivity", [4, 8])
def test_matches_oracle(rng, connectivity):
    gp = GrowParams(connectivity=connectivity)
    for _ in range(10):
        nm, lm = random_grid(rng)
        fast, slow = grow_regions(nm, lm, gp), grow_regions_oracle(nm, lm, gp)
        assert same_partition(fast.region_id, slow.region_id)


def test_regions_are_connected_and_classed(rng):
    nm, lm = random_grid(rng)
    rl = grow_regions(nm, lm)
    for k in range(rl.n_regions):
        cells = set(zip(*np.nonzero(rl.region_id == k)))
        assert len(cells) == rl.sizes[k]
        assert len({int(lm.labels[c]) for c in cells}) == 1 and all(nm.valid[c] for c in cells)
        start = next(iter(cells))
        seen, q = {start}, deque([start])
        while q:
            i, j = q.popleft()
            for nb in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
                if nb in cells and nb not in seen:
                    seen.add(nb)
                    q.append(nb)
        assert seen == cells


def test_admission_replay(rng):
    nm, lm = random_grid(rng)
    gp = GrowParams()
    rl = grow_regions(nm, lm, gp)
    for k in range(rl.n_regions):
        cells = np.argwhere(rl.region_id == k)
        order = cells[np.argsort(rl.admission_rank[tuple(cells.T)])]
        total = nm.normals[tuple(order[0])].copy()
        for r, c in order[1:]:
            assert angle_between(nm.normals[r, c], normalize(total)) <= gp.angle_threshold + 1e-9
            total += nm.normals[r, c]
        np.testing.assert_allclose(rl.mean_normals[k], normalize(total), atol=1e-12)


def test_shape_mismatch():
    nm = NormalMap(np.zeros((4, 4, 3)), np.zeros((4, 4), bool))
    with pytest.raises(ShapeError):
        grow_regions(nm, LabelMap(np.zeros((4, 5), np.uint8)))


def test_apply_shape_mismatch(rng):
    nm, lm = random_grid(rng)
    rl = grow_regions(nm, lm)
    with pytest.raises(ShapeError):
        apply_region_normals(NormalMap(np.zeros((4, 4, 3)), np.zeros((4, 4), bool)), rl)


def test_smoothing_improves_noisy_corner():
    truth, noisy = render_noisy(corner_scene())
    res = compute_normals(noisy, corner_scene().K)
    before = res.normals
    after = semantic_smooth(before, truth.labels)
    valid = before.valid & truth.normals.valid
    e0 = angle_map(before.normals, truth.normals.normals)[valid].mean()
    e1 = angle_map(after.normals, truth.normals.normals)[valid].mean()
    assert e1 < e0
