"""Procedural planar RGB-D scenes with exact ground truth.

Planes are given in camera coordinates as ``n . p + d = 0``. Each pixel ray
is intersected with every plane and the nearest hit in front of the camera
wins, which yields depth, the plane's class label, and its camera-facing
normal.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .core import (CLASS_IDS, UNLABELED, CameraIntrinsics, DepthImage, LabelMap,
                   NormalMap)
from .errors import ConfigError

CANONICAL_K = CameraIntrinsics(fx=500.0, fy=500.0, cx=160.0, cy=120.0, width=320, height=240)
# Kinect v1 field of view at 320x240
KINECT_K = CameraIntrinsics(fx=290.0, fy=290.0, cx=160.0, cy=120.0, width=320, height=240)
# Noise level at which sensor noise, not corner blur, dominates small windows.
CORNER_NOISE_SIGMA_AT_1M = 0.008

WALL = CLASS_IDS["wall"]
FLOOR = CLASS_IDS["floor"]


@dataclass(frozen=True)
class Plane:
    normal: tuple
    offset: float
    class_id: int

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64)
        norm = np.linalg.norm(n)
        if n.shape != (3,) or not norm > 0:
            raise ConfigError(f"bad plane normal {self.normal}")
        object.__setattr__(self, "normal", tuple(float(c) for c in n / norm))
        object.__setattr__(self, "offset", float(self.offset) / norm)

    @classmethod
    def through(cls, point, normal, class_id):
        n = np.asarray(normal, dtype=np.float64)
        n = n / np.linalg.norm(n)
        return cls(tuple(n), -float(n @ np.asarray(point, dtype=np.float64)), class_id)


@dataclass(frozen=True)
class KinectNoise:
    """Axial Gaussian noise with std ``sigma_at_1m * z ** depth_power``."""
    sigma_at_1m: float = 0.0015
    depth_power: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma_at_1m < 0:
            raise ConfigError("sigma_at_1m must be >= 0")


@dataclass(frozen=True)
class SceneSpec:
    planes: tuple
    K: CameraIntrinsics = CANONICAL_K
    noise: KinectNoise = field(default_factory=KinectNoise)
    speckle_prob: float = 0.0
    name: str = "scene"


@dataclass(frozen=True, eq=False)
class SceneRender:
    depth: DepthImage
    labels: LabelMap
    normals: NormalMap
    plane_id: np.ndarray  # index into SceneSpec.planes, -1 where nothing was hit


def pixel_rays(K):
    v, u = np.mgrid[0:K.height, 0:K.width].astype(np.float64)
    return np.stack([(u - K.cx) / K.fx, (v - K.cy) / K.fy, np.ones_like(u)], axis=-1)


def render_scene(spec):
    K = spec.K
    rays = pixel_rays(K)
    H, W = K.shape
    best_t = np.full((H, W), np.inf)
    plane_id = np.full((H, W), -1, dtype=np.int64)
    for k, pl in enumerate(spec.planes):
        n = np.asarray(pl.normal)
        denom = rays @ n
        with np.errstate(divide="ignore", invalid="ignore"):
            t = -pl.offset / denom
        hit = (np.abs(denom) > 1e-12) & (t > 0) & (t < best_t)
        best_t[hit] = t[hit]
        plane_id[hit] = k

    valid = plane_id >= 0
    depth = np.where(valid, best_t, 0.0)  # ray z component is 1, so t is depth
    labels = np.full((H, W), UNLABELED, dtype=np.uint8)
    normals = np.zeros((H, W, 3))
    for k, pl in enumerate(spec.planes):
        sel = plane_id == k
        n = np.asarray(pl.normal)
        # n . p = -offset on the plane, so the facing sign is constant per plane
        normals[sel] = -n if pl.offset < 0 else n
        labels[sel] = pl.class_id
    return SceneRender(DepthImage(depth, valid), LabelMap(labels), NormalMap(normals, valid), plane_id)


def add_noise(d, kn, speckle_prob=0.0):
    """Seeded axial noise plus optional random invalidation (speckle)."""
    rng = np.random.default_rng(kn.seed)
    noise = rng.standard_normal(d.shape)
    speckle = rng.random(d.shape) < speckle_prob
    z = d.depth + noise * kn.sigma_at_1m * np.power(d.depth, kn.depth_power)
    valid = d.valid & ~speckle & (z > 0)
    return DepthImage(np.where(valid, z, 0.0), valid)


def render_noisy(spec):
    r = render_scene(spec)
    return r, add_noise(r.depth, spec.noise, spec.speckle_prob)


def flat_plane_scene(z=2.0, K=CANONICAL_K, noise=KinectNoise(sigma_at_1m=0.0)):
    return SceneSpec((Plane((0.0, 0.0, 1.0), -z, WALL),), K, noise, name="flat_plane")


def slanted_plane_scene(z=2.0, tilt_deg=30.0, K=CANONICAL_K, noise=KinectNoise(sigma_at_1m=0.0)):
    """Plane through (0, 0, z) rotated ``tilt_deg`` about the camera y axis."""
    t = math.radians(tilt_deg)
    pl = Plane.through((0.0, 0.0, z), (math.sin(t), 0.0, -math.cos(t)), WALL)
    return SceneSpec((pl,), K, noise, name="slanted_plane")


def corner_scene(corner_depth=1.2, camera_height=0.4, same_class=True, K=KINECT_K,
                 noise=KinectNoise(sigma_at_1m=CORNER_NOISE_SIGMA_AT_1M), speckle_prob=0.0,
                 with_floor=True):
    """Concave room corner: two walls meeting at 90 degrees plus a floor.

    The vertical corner edge sits on the optical axis at ``corner_depth``;
    each wall is at 45 degrees to the view direction. With ``same_class``
    both walls carry the wall label, otherwise the right wall is labelled
    as furniture so the facets differ by class as well.
    """
    apex = (0.0, 0.0, corner_depth)
    right_class = WALL if same_class else CLASS_IDS["furniture"]
    planes = [Plane.through(apex, (1.0, 0.0, -1.0), WALL),
              Plane.through(apex, (-1.0, 0.0, -1.0), right_class)]
    if with_floor:
        planes.append(Plane.through((0.0, camera_height, 0.0), (0.0, -1.0, 0.0), FLOOR))
    return SceneSpec(tuple(planes), K, noise, speckle_prob, name="labeled_corner")


def canonical_scenes(noise_seed=0):
    return {
        "flat_plane": flat_plane_scene(),
        "slanted_plane": slanted_plane_scene(),
        "labeled_corner": corner_scene(
            noise=KinectNoise(sigma_at_1m=CORNER_NOISE_SIGMA_AT_1M, seed=noise_seed)),
    }
