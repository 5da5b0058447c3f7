"""Masked training losses with analytic gradients.

Shapes: normal predictions ``(H, W, 3)``, logits ``(H, W, 14)``, masks
``(H, W)``. Losses are means over contributing pixels; gradients are zero at
every masked-out pixel.
"""
from dataclasses import dataclass

import numpy as np

from .core import NUM_CLASSES, UNLABELED
from .errors import EmptyLossError, LabelError, ShapeError

COSINE_WEIGHT = 20.0
DEGENERATE_NORM = 1e-8


@dataclass(frozen=True, eq=False)
class LossReport:
    loss_value: float
    gradient: object  # ndarray, or dict of ndarrays for the joint loss
    n_contributing_pixels: int
    n_degenerate: int = 0


def _mask(mask, shape):
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != shape:
        raise ShapeError(f"mask {mask.shape} vs grid {shape}")
    n = int(mask.sum())
    if n == 0:
        raise EmptyLossError("mask selects no pixels")
    return mask, n


def cosine_loss(pred, gt, mask):
    """Mean of ``1 - (p / |p|) . g`` over masked-in pixels.

    ``gt`` may be a NormalMap or an ``(H, W, 3)`` array. Predictions with
    norm below 1e-8 count as loss 1 and get no gradient.
    """
    pred = np.asarray(pred, dtype=np.float64)
    g = np.asarray(getattr(gt, "normals", gt), dtype=np.float64)
    if pred.shape != g.shape or pred.ndim != 3 or pred.shape[2] != 3:
        raise ShapeError(f"prediction {pred.shape} vs ground truth {g.shape}")
    mask, n = _mask(mask, pred.shape[:2])

    norm = np.linalg.norm(pred, axis=-1)
    degenerate = mask & (norm < DEGENERATE_NORM)
    live = mask & ~degenerate
    safe = np.where(live, norm, 1.0)[..., None]
    unit = pred / safe
    cos = np.einsum("...k,...k->...", unit, g)
    per_pixel = np.where(live, 1.0 - cos, 0.0) + degenerate
    loss = per_pixel[mask].sum() / n

    # d/dp (1 - p.g/|p|) = -(g - (u.g) u) / |p|
    grad = -(g - cos[..., None] * unit) / safe / n
    grad = np.where(live[..., None], grad, 0.0)
    return LossReport(float(loss), grad, n, int(degenerate.sum()))


def _log_softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax_cross_entropy(logits, gt, mask):
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(getattr(gt, "labels", gt))
    if logits.ndim != 3 or logits.shape[2] != NUM_CLASSES or logits.shape[:2] != labels.shape:
        raise ShapeError(f"logits {logits.shape} vs labels {labels.shape}")
    mask, n = _mask(mask, labels.shape)
    lab = labels[mask].astype(np.int64)
    if np.any(lab == UNLABELED) or np.any((lab < 0) | (lab >= NUM_CLASSES)):
        raise LabelError("masked-in pixel without a class label")

    logp = _log_softmax(logits[mask])
    picked = logp[np.arange(len(lab)), lab]
    loss = -picked.sum() / n

    g = np.exp(logp)
    g[np.arange(len(lab)), lab] -= 1.0
    grad = np.zeros_like(logits)
    grad[mask] = g / n
    return LossReport(float(loss), grad, n)


def joint_loss(pred_n, gt_n, mask_n, logits, gt_l, mask_l, weight=COSINE_WEIGHT):
    """``weight * cosine + cross-entropy``; gradients keyed "normals" / "logits"."""
    cos = cosine_loss(pred_n, gt_n, mask_n)
    ce = softmax_cross_entropy(logits, gt_l, mask_l)
    return LossReport(
        weight * cos.loss_value + ce.loss_value,
        {"normals": weight * cos.gradient, "logits": ce.gradient},
        cos.n_contributing_pixels + ce.n_contributing_pixels,
        cos.n_degenerate,
    )


def finite_difference_check(lossfn, x, epsilon=1e-5, candidates=None, n_coords=100, rng=None):
    """Max relative error between the analytic gradient and central differences.

    ``lossfn(x)`` returns a LossReport (or ``(value, grad)``) whose gradient
    has the shape of ``x``. Up to ``n_coords`` coordinates are drawn from
    ``candidates`` (a boolean array broadcastable to ``x``; default all); if
    fewer exist, all are checked.
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise ValueError("epsilon must lie in [1e-7, 1e-3]")
    rng = np.random.default_rng(rng)
    x = np.array(x, dtype=np.float64)

    def evaluate(arr):
        out = lossfn(arr)
        if isinstance(out, LossReport):
            return out.loss_value, out.gradient
        return out

    _, grad = evaluate(x)
    grad = np.asarray(grad)
    pool = np.ones(x.shape, bool) if candidates is None else np.broadcast_to(candidates, x.shape)
    flat = np.flatnonzero(pool)
    if len(flat) > n_coords:
        flat = rng.choice(flat, size=n_coords, replace=False)
    worst = 0.0
    for idx in flat:
        pos = np.unravel_index(idx, x.shape)
        orig = x[pos]
        x[pos] = orig + epsilon
        up, _ = evaluate(x)
        x[pos] = orig - epsilon
        down, _ = evaluate(x)
        x[pos] = orig
        fd = (up - down) / (2.0 * epsilon)
        worst = max(worst, abs(grad[pos] - fd) / (abs(fd) + 1e-8))
    return worst
