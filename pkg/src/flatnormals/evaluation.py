"""Angle-error and semantic-accuracy metrics over valid pixels."""
from dataclasses import asdict, dataclass
import math

import numpy as np

from .core import NUM_CLASSES, UNLABELED, angle_map
from .errors import EmptyEvaluationError, ShapeError

THRESHOLDS = (11.25, 22.5, 30.0)


@dataclass(frozen=True, eq=False)
class AngleErrors:
    degrees: np.ndarray
    valid: np.ndarray


@dataclass(frozen=True)
class NormalMetrics:
    mean_angle_deg: float
    rmse_angle_deg: float
    pct_below_11_25: float
    pct_below_22_5: float
    pct_below_30: float
    n_pixels: int

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SemanticMetrics:
    pixel_accuracy: float
    per_class_accuracy: tuple  # None for classes absent from the ground truth
    n_pixels: int

    def to_dict(self):
        d = asdict(self)
        d["per_class_accuracy"] = list(self.per_class_accuracy)
        return d


def angle_error_map(pred, gt):
    if pred.shape != gt.shape:
        raise ShapeError(f"prediction {pred.shape} vs ground truth {gt.shape}")
    valid = pred.valid & gt.valid
    err = np.where(valid, angle_map(pred.normals, gt.normals), 0.0)
    return AngleErrors(err, valid)


def normal_metrics(err, valid=None):
    """Mean, RMSE and inclusive threshold accuracies of the valid errors.

    Accepts an ``AngleErrors`` or a raw error array (with optional mask).
    """
    if isinstance(err, AngleErrors):
        err, valid = err.degrees, err.valid
    err = np.asarray(err, dtype=np.float64)
    e = err[valid] if valid is not None else err.ravel()
    n = e.size
    if n == 0:
        raise EmptyEvaluationError("no valid pixels")
    e_list = e.tolist()
    mean = math.fsum(e_list) / n
    rmse = math.sqrt(math.fsum(x * x for x in e_list) / n)
    pcts = [100.0 * np.count_nonzero(e <= t) / n for t in THRESHOLDS]
    return NormalMetrics(mean, rmse, *pcts, n_pixels=int(n))


def accuracy_curve(err, valid, thresholds=None):
    """Percent of valid pixels with error <= t for each threshold t."""
    e = np.sort(np.asarray(err)[valid])
    if e.size == 0:
        raise EmptyEvaluationError("no valid pixels")
    if thresholds is None:
        thresholds = np.arange(0.0, 90.5, 0.5)
    thresholds = np.asarray(thresholds, dtype=np.float64)
    return thresholds, 100.0 * np.searchsorted(e, thresholds, side="right") / e.size


def semantic_accuracy(pred, gt):
    if pred.shape != gt.shape:
        raise ShapeError(f"prediction {pred.shape} vs ground truth {gt.shape}")
    g = gt.labels.astype(np.int64)
    p = pred.labels.astype(np.int64)
    labeled = g != UNLABELED
    n = int(labeled.sum())
    if n == 0:
        raise EmptyEvaluationError("no labeled pixels")
    hit = (p == g) & labeled
    per_class = []
    for c in range(NUM_CLASSES):
        sel = g == c
        total = int(sel.sum())
        per_class.append(100.0 * int(hit[sel].sum()) / total if total else None)
    return SemanticMetrics(100.0 * int(hit.sum()) / n, tuple(per_class), n)
