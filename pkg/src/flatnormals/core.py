"""Domain types and the vector math everything else is written in terms of.

Grids are numpy arrays indexed ``[row, col]`` (``[v, u]``). A 3-vector is a
plain ``ndarray`` of shape ``(3,)``; normal grids have shape ``(H, W, 3)``.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import (DegenerateVectorError, FormatError, LabelError,
                     NonFiniteVectorError, ShapeError)

UNLABELED = 255
NUM_CLASSES = 14

# NYU 13-class vocabulary; 0 is the background / unknown slot.
NYU13 = {
    0: "unknown",
    1: "bed",
    2: "books",
    3: "ceiling",
    4: "chair",
    5: "floor",
    6: "furniture",
    7: "objects",
    8: "picture",
    9: "sofa",
    10: "table",
    11: "tv",
    12: "wall",
    13: "window",
}
CLASS_IDS = {name: cid for cid, name in NYU13.items()}
DEFAULT_PLANAR_CLASSES = frozenset({CLASS_IDS["floor"], CLASS_IDS["wall"], CLASS_IDS["ceiling"]})


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        for name in ("fx", "fy", "cx", "cy"):
            if not math.isfinite(getattr(self, name)):
                raise FormatError(f"{name} is not finite")
        if self.fx <= 0 or self.fy <= 0:
            raise FormatError("focal lengths must be positive")
        if int(self.width) != self.width or int(self.height) != self.height:
            raise FormatError("width and height must be integers")
        if self.width <= 0 or self.height <= 0:
            raise FormatError("width and height must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise FormatError("principal point outside the image")

    @property
    def shape(self):
        return (int(self.height), int(self.width))


@dataclass(frozen=True, eq=False)
class DepthImage:
    """Metric depth (meters) plus a validity grid of the same shape."""
    depth: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        depth = np.asarray(self.depth, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=bool)
        if depth.ndim != 2 or depth.shape != valid.shape:
            raise ShapeError(f"depth {depth.shape} and validity {valid.shape} differ")
        if not np.all(np.isfinite(depth[valid])) or np.any(depth[valid] <= 0):
            raise FormatError("valid depth must be finite and positive")
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "valid", valid)

    @classmethod
    def from_depth(cls, depth):
        """Treat every finite positive value as valid; zero elsewhere."""
        depth = np.asarray(depth, dtype=np.float64)
        valid = np.isfinite(depth) & (depth > 0)
        return cls(np.where(valid, depth, 0.0), valid)

    @property
    def shape(self):
        return self.depth.shape

    @property
    def height(self):
        return self.depth.shape[0]

    @property
    def width(self):
        return self.depth.shape[1]


@dataclass(frozen=True, eq=False)
class NormalMap:
    """Unit normals ``(H, W, 3)`` in camera coordinates; invalid entries are zero."""
    normals: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        normals = np.asarray(self.normals, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=bool)
        if normals.ndim != 3 or normals.shape[2] != 3 or normals.shape[:2] != valid.shape:
            raise ShapeError(f"normals {normals.shape} and validity {valid.shape} differ")
        normals = np.where(valid[..., None], normals, 0.0)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "valid", valid)

    @property
    def shape(self):
        return self.valid.shape

    @property
    def height(self):
        return self.valid.shape[0]

    @property
    def width(self):
        return self.valid.shape[1]


@dataclass(frozen=True, eq=False)
class LabelMap:
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise ShapeError(f"label grid must be 2-D, got {labels.shape}")
        ok = (labels == UNLABELED) | ((labels >= 0) & (labels < NUM_CLASSES))
        if not np.all(ok):
            bad = np.unique(labels[~ok])
            raise LabelError(f"class ids outside 0..13 and 255: {bad[:10].tolist()}")
        object.__setattr__(self, "labels", labels.astype(np.uint8))

    @property
    def shape(self):
        return self.labels.shape


def planar_class_set(ids):
    """Validate and freeze a collection of planar class ids."""
    ids = frozenset(int(i) for i in ids)
    bad = [i for i in ids if not 0 <= i < NUM_CLASSES]
    if bad:
        raise LabelError(f"planar classes must be in 0..13, got {sorted(bad)}")
    return ids


def _as_vec(v):
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (3,):
        raise ShapeError(f"expected a 3-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteVectorError(str(v))
    return v


def angle_between(a, b):
    """Unsigned angle in degrees between two unit vectors.

    Same value as ``acos(a . b)`` but via ``atan2(|a x b|, a . b)``, which is
    exactly 0 for identical inputs and stays accurate near 0 and 180.
    """
    a, b = _as_vec(a), _as_vec(b)
    return math.degrees(math.atan2(float(np.linalg.norm(np.cross(a, b))), float(a @ b)))


def normalize(v):
    v = _as_vec(v)
    norm = float(np.linalg.norm(v))
    if norm <= 1e-12:
        raise DegenerateVectorError(f"norm {norm:g}")
    return v / norm


def angle_map(a, b):
    """Per-pixel angle in degrees between two ``(..., 3)`` arrays of unit vectors."""
    dot = np.einsum("...k,...k->...", a, b)
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    return np.degrees(np.arctan2(cross, dot))
