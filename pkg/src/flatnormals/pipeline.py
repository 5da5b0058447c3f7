"""Depth image in, normals and training mask out."""
from dataclasses import dataclass

import numpy as np

from .core import DepthImage, NormalMap
from .depth import (PreprocessParams, depth_change_map, distance_map, fill_holes,
                    smooth_depth, training_valid_mask)
from .errors import ShapeError
from .normals import (NormalParams, back_project_depth, build_integral_stats,
                      estimate_normals)


@dataclass(frozen=True, eq=False)
class ComputeResult:
    normals: NormalMap
    training_mask: np.ndarray
    filled: np.ndarray
    depth: DepthImage
    distance: np.ndarray


def compute_normals(raw, K, pre=PreprocessParams(), params=NormalParams()):
    """fill -> smooth -> discontinuities -> distance -> integral-image normals."""
    if raw.shape != K.shape:
        raise ShapeError(f"depth {raw.shape} does not match intrinsics {K.shape}")
    filled_depth, filled = fill_holes(raw, pre)
    smoothed = smooth_depth(filled_depth, pre)
    dist = distance_map(depth_change_map(smoothed, pre))
    pg = back_project_depth(smoothed, K)
    nm = estimate_normals(pg, build_integral_stats(pg), dist, params, K)
    mask = training_valid_mask(raw, filled, pre) & nm.valid
    return ComputeResult(nm, mask, filled, smoothed, dist)
