"""Semantic planar smoothing ("floors are flat").

Regions grow breadth-first from seeds taken in row-major order. A neighbour
joins if it has a valid normal, the seed's class, and lies within the angle
threshold of the region's running mean normal, which is updated after every
admission. Regions big enough then have all their normals replaced by the
region mean.
"""
from collections import deque
from dataclasses import dataclass, field
import math

import numpy as np

from .core import DEFAULT_PLANAR_CLASSES, NormalMap, angle_between, normalize, planar_class_set
from .errors import ConfigError, ShapeError

OFFSETS = {
    4: ((-1, 0), (0, -1), (0, 1), (1, 0)),
    8: ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)),
}


@dataclass(frozen=True)
class GrowParams:
    angle_threshold: float = 30.0
    min_region_size: int = 100
    connectivity: int = 4
    planar_classes: frozenset = DEFAULT_PLANAR_CLASSES

    def __post_init__(self):
        if not 0 < self.angle_threshold < 90:
            raise ConfigError("angle_threshold must be in (0, 90)")
        if self.min_region_size < 1:
            raise ConfigError("min_region_size must be >= 1")
        if self.connectivity not in OFFSETS:
            raise ConfigError("connectivity must be 4 or 8")
        object.__setattr__(self, "planar_classes", planar_class_set(self.planar_classes))


@dataclass(frozen=True, eq=False)
class RegionLabeling:
    region_id: np.ndarray        # (H, W), -1 outside every region
    sizes: np.ndarray            # (R,)
    mean_normals: np.ndarray     # (R, 3)
    class_ids: np.ndarray        # (R,)
    admission_rank: np.ndarray = field(default=None)  # (H, W) global admission order, -1 if none

    @property
    def n_regions(self):
        return len(self.sizes)


def _check_shapes(nm, lm):
    if nm.shape != lm.shape:
        raise ShapeError(f"normals {nm.shape} vs labels {lm.shape}")


def grow_regions(nm, lm, gp=GrowParams()):
    _check_shapes(nm, lm)
    H, W = nm.shape
    cos_t = math.cos(math.radians(gp.angle_threshold))
    offsets = OFFSETS[gp.connectivity]
    planar = gp.planar_classes

    nx, ny, nz = (nm.normals[..., k].ravel().tolist() for k in range(3))
    valid = nm.valid.ravel().tolist()
    labels = lm.labels.ravel().tolist()
    region = [-1] * (H * W)
    rank = [-1] * (H * W)
    sizes, means, classes = [], [], []
    counter = 0

    for seed in range(H * W):
        if region[seed] != -1 or not valid[seed] or labels[seed] not in planar:
            continue
        rid = len(sizes)
        cls = labels[seed]
        sx, sy, sz = nx[seed], ny[seed], nz[seed]
        region[seed] = rid
        rank[seed] = counter
        counter += 1
        size = 1
        queue = deque([seed])
        while queue:
            idx = queue.popleft()
            r, c = divmod(idx, W)
            for dr, dc in offsets:
                rr, cc = r + dr, c + dc
                if not (0 <= rr < H and 0 <= cc < W):
                    continue
                j = rr * W + cc
                if region[j] != -1 or not valid[j] or labels[j] != cls:
                    continue
                norm = math.sqrt(sx * sx + sy * sy + sz * sz)
                if nx[j] * sx + ny[j] * sy + nz[j] * sz < cos_t * norm:
                    continue
                region[j] = rid
                rank[j] = counter
                counter += 1
                size += 1
                sx += nx[j]
                sy += ny[j]
                sz += nz[j]
                queue.append(j)
        norm = math.sqrt(sx * sx + sy * sy + sz * sz)
        sizes.append(size)
        means.append((sx / norm, sy / norm, sz / norm))
        classes.append(cls)

    return RegionLabeling(
        region_id=np.array(region, dtype=np.int64).reshape(H, W),
        sizes=np.array(sizes, dtype=np.int64),
        mean_normals=np.array(means, dtype=np.float64).reshape(-1, 3),
        class_ids=np.array(classes, dtype=np.int64),
        admission_rank=np.array(rank, dtype=np.int64).reshape(H, W),
    )


def apply_region_normals(nm, rl, gp=GrowParams()):
    """Overwrite members of every region of at least ``min_region_size`` pixels."""
    if rl.region_id.shape != nm.shape:
        raise ShapeError("region labeling does not match the normal map")
    big = rl.sizes >= gp.min_region_size
    rid = rl.region_id
    take = (rid >= 0) & big[np.where(rid >= 0, rid, 0)] if len(big) else np.zeros(nm.shape, bool)
    normals = nm.normals.copy()
    normals[take] = rl.mean_normals[rid[take]]
    return NormalMap(normals, nm.valid)


def semantic_smooth(nm, lm, gp=GrowParams()):
    return apply_region_normals(nm, grow_regions(nm, lm, gp), gp)


def grow_regions_oracle(nm, lm, gp=GrowParams()):
    """Plain flood fill with the same admission rule, for cross-checking."""
    _check_shapes(nm, lm)
    H, W = nm.shape
    region = [[-1] * W for _ in range(H)]
    sizes, means, classes = [], [], []
    for i in range(H):
        for j in range(W):
            if region[i][j] != -1 or not nm.valid[i, j]:
                continue
            cls = int(lm.labels[i, j])
            if cls not in gp.planar_classes:
                continue
            rid = len(sizes)
            total = nm.normals[i, j].copy()
            members = [(i, j)]
            region[i][j] = rid
            queue = [(i, j)]
            head = 0
            while head < len(queue):
                r, c = queue[head]
                head += 1
                for dr, dc in OFFSETS[gp.connectivity]:
                    rr, cc = r + dr, c + dc
                    if rr < 0 or rr >= H or cc < 0 or cc >= W:
                        continue
                    if region[rr][cc] != -1 or not nm.valid[rr, cc]:
                        continue
                    if int(lm.labels[rr, cc]) != cls:
                        continue
                    if angle_between(nm.normals[rr, cc], normalize(total)) > gp.angle_threshold:
                        continue
                    region[rr][cc] = rid
                    total = total + nm.normals[rr, cc]
                    members.append((rr, cc))
                    queue.append((rr, cc))
            sizes.append(len(members))
            means.append(normalize(total))
            classes.append(cls)
    return RegionLabeling(np.array(region, dtype=np.int64), np.array(sizes, dtype=np.int64),
                          np.array(means).reshape(-1, 3), np.array(classes, dtype=np.int64))
