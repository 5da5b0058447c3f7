"""Surface normals from RGB-D: integral-image estimation, semantic smoothing,
masked losses, metrics and dataset mixing."""
from .core import (CameraIntrinsics, DepthImage, LabelMap, NormalMap, angle_between,
                   normalize)
from .depth import PreprocessParams
from .evaluation import angle_error_map, normal_metrics, semantic_accuracy
from .losses import cosine_loss, joint_loss, softmax_cross_entropy
from .mixing import MixSpec, build_mix_plan
from .normals import NormalParams
from .pipeline import compute_normals
from .semantic import GrowParams, semantic_smooth

__version__ = "0.1.0"

__all__ = [
    "CameraIntrinsics", "DepthImage", "LabelMap", "NormalMap", "angle_between", "normalize",
    "PreprocessParams", "NormalParams", "GrowParams", "compute_normals", "semantic_smooth",
    "angle_error_map", "normal_metrics", "semantic_accuracy",
    "cosine_loss", "softmax_cross_entropy", "joint_loss", "MixSpec", "build_mix_plan",
]
