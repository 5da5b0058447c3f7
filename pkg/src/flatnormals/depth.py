"""Depth cleanup ahead of normal estimation.

Hole filling and smoothing are deliberately simple (grow-and-median fill,
edge-aware median) so they are deterministic and cheap. The discontinuity
map and its Chebyshev distance transform bound the normal window later on.
"""
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import DepthImage
from .errors import ConfigError, ShapeError

DISTANCE_CAP = 10 ** 6

NEIGHBORS_8 = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


@dataclass(frozen=True)
class PreprocessParams:
    fill_max_radius: int = 8
    median_window: int = 5
    depth_change_factor: float = 0.02
    min_depth: float = 0.3
    max_depth: float = 10.0

    def __post_init__(self):
        if self.fill_max_radius < 0:
            raise ConfigError("fill_max_radius must be >= 0")
        if self.median_window < 1 or self.median_window % 2 == 0:
            raise ConfigError("median_window must be odd and >= 1")
        if not self.depth_change_factor > 0:
            raise ConfigError("depth_change_factor must be > 0")
        if not 0 < self.min_depth < self.max_depth:
            raise ConfigError("need 0 < min_depth < max_depth")


def masked_median(values, keep):
    """Median over the last axis, restricted to entries where ``keep`` is set.

    Rows with nothing kept come back as NaN. Even counts average the two
    middle values.
    """
    vals = np.where(keep, values, np.inf)
    vals.sort(axis=-1)
    cnt = keep.sum(axis=-1)
    lo = np.clip((cnt - 1) // 2, 0, None)
    hi = np.clip(cnt // 2, 0, values.shape[-1] - 1)
    lo_v = np.take_along_axis(vals, lo[..., None], axis=-1)[..., 0]
    hi_v = np.take_along_axis(vals, hi[..., None], axis=-1)[..., 0]
    return np.where(cnt > 0, 0.5 * (lo_v + hi_v), np.nan)


def _windows_at(padded, pad, rows, cols, r):
    """(k, (2r+1)**2) windows centred on the given pixels of a padded grid."""
    size = 2 * r + 1
    view = sliding_window_view(padded, (size, size))
    return view[rows + pad - r, cols + pad - r].reshape(len(rows), size * size)


def fill_holes(d, p=PreprocessParams()):
    """Fill invalid pixels from nearby valid depth.

    Returns ``(filled_depth, filled)`` where ``filled`` marks pixels that were
    invalid on input and received a value. Each hole takes the median of the
    original valid depths in the smallest square window holding at least
    three of them; holes whose ``fill_max_radius`` window has only one or
    two valid depths take the median of those.
    """
    R = int(p.fill_max_radius)
    depth = d.depth.copy()
    valid = d.valid.copy()
    filled = np.zeros_like(valid)
    if R == 0 or valid.all() or not valid.any():
        return DepthImage(depth, valid), filled

    src = np.pad(np.where(d.valid, d.depth, 0.0), R)
    src_ok = np.pad(d.valid, R, constant_values=False)
    rows, cols = np.nonzero(~d.valid)
    for r in range(1, R + 1):
        ok = _windows_at(src_ok, R, rows, cols, r)
        cnt = ok.sum(axis=1)
        take = cnt >= 3 if r < R else cnt >= 1
        if take.any():
            med = masked_median(_windows_at(src, R, rows[take], cols[take], r), ok[take])
            depth[rows[take], cols[take]] = med
            valid[rows[take], cols[take]] = True
            filled[rows[take], cols[take]] = True
        rows, cols = rows[~take], cols[~take]
        if len(rows) == 0:
            break
    return DepthImage(depth, valid), filled


def smooth_depth(d, p=PreprocessParams()):
    """Edge-aware median filter over valid pixels.

    Neighbours further than ``depth_change_factor * z`` from the centre depth
    are left out of the median. A pixel with no admissible neighbour at all
    (an isolated spike) takes the plain median of its valid window instead.
    """
    k = p.median_window // 2
    if k == 0:
        return d
    src = np.pad(np.where(d.valid, d.depth, 0.0), k)
    src_ok = np.pad(d.valid, k, constant_values=False)
    rows, cols = np.nonzero(d.valid)
    win = _windows_at(src, k, rows, cols, k)
    ok = _windows_at(src_ok, k, rows, cols, k)
    zc = d.depth[rows, cols][:, None]
    close = ok & (np.abs(win - zc) <= p.depth_change_factor * zc)
    isolated = close.sum(axis=1) <= 1
    keep = np.where(isolated[:, None], ok, close)
    out = d.depth.copy()
    out[rows, cols] = masked_median(win, keep)
    return DepthImage(out, d.valid)


def training_valid_mask(d_raw, filled, p=PreprocessParams()):
    """Pixels with real, in-range sensor depth. Filled pixels never count."""
    if d_raw.shape != np.shape(filled):
        raise ShapeError("depth and filled grids differ in shape")
    z = d_raw.depth
    return d_raw.valid & ~np.asarray(filled, bool) & (z >= p.min_depth) & (z <= p.max_depth)


def _shifted(a, dr, dc, fill):
    """``out[i, j] = a[i + dr, j + dc]``, with ``fill`` outside the image."""
    out = np.full_like(a, fill)
    H, W = a.shape
    out[max(0, -dr):H - max(0, dr), max(0, -dc):W - max(0, dc)] = \
        a[max(0, dr):H - max(0, -dr), max(0, dc):W - max(0, -dc)]
    return out


def depth_change_map(d, p=PreprocessParams()):
    """Flag invalid pixels and pixels next to a depth jump or an invalid pixel."""
    z = np.where(d.valid, d.depth, 0.0)
    flags = ~d.valid
    thresh = p.depth_change_factor * z
    for dr, dc in NEIGHBORS_8:
        zn = _shifted(z, dr, dc, 0.0)
        vn = _shifted(d.valid, dr, dc, True)
        inside = _shifted(np.ones_like(d.valid), dr, dc, False)
        flags |= inside & (~vn | (np.abs(zn - z) > thresh))
    return flags


def distance_map(changes):
    """Exact Chebyshev distance to the nearest flagged pixel.

    Two-pass chamfer with unit weights over the 8-neighbourhood, vectorised
    per row: the in-row recurrence ``d[j] = min(a[j], d[j-1] + 1)`` is
    ``j + cummin(a - j)``. With no flags at all every entry is DISTANCE_CAP.
    """
    changes = np.asarray(changes, dtype=bool)
    H, W = changes.shape
    d = np.where(changes, 0, DISTANCE_CAP).astype(np.int64)
    j = np.arange(W)

    for i in range(H):
        a = d[i]
        if i > 0:
            prev = d[i - 1] + 1
            a = np.minimum(a, prev)
            a[1:] = np.minimum(a[1:], prev[:-1])
            a[:-1] = np.minimum(a[:-1], prev[1:])
        d[i] = j + np.minimum.accumulate(a - j)

    for i in range(H - 1, -1, -1):
        a = d[i]
        if i < H - 1:
            nxt = d[i + 1] + 1
            a = np.minimum(a, nxt)
            a[1:] = np.minimum(a[1:], nxt[:-1])
            a[:-1] = np.minimum(a[:-1], nxt[1:])
        d[i] = np.minimum.accumulate((a + j)[::-1])[::-1] - j

    return np.minimum(d, DISTANCE_CAP)
