"""PNG/JSON readers and writers, plus the two visualization encodings.

All PNGs go through OpenCV, which stores channels as BGR; the functions here
take and return RGB.
"""
import json
from pathlib import Path

import cv2
import numpy as np

from .core import CameraIntrinsics, DepthImage, LabelMap, NormalMap
from .errors import FormatError, InputIOError

ERROR_BLACK_BELOW = 11.25
ERROR_PURPLE_AT = 90.0
YELLOW = np.array([255.0, 255.0, 0.0])
PURPLE = np.array([128.0, 0.0, 128.0])
GRAY = np.array([128, 128, 128], dtype=np.uint8)

_PNG_PARAMS = [cv2.IMWRITE_PNG_COMPRESSION, 6]


def _round_half_up(x):
    return np.floor(np.asarray(x) + 0.5)


def _imread(path):
    path = Path(path)
    if not path.is_file():
        raise InputIOError(f"no such file: {path}")
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise FormatError(f"not a readable image: {path}")
    return img


def _imwrite(path, img):
    path = Path(path)
    if not path.parent.is_dir():
        raise InputIOError(f"directory does not exist: {path.parent}")
    if img.ndim == 3:
        img = np.ascontiguousarray(img[..., ::-1])
    try:
        ok = cv2.imwrite(str(path), img, _PNG_PARAMS)
    except cv2.error as exc:
        raise InputIOError(f"cannot write {path}: {exc}") from exc
    if not ok:
        raise InputIOError(f"cannot write {path}")


def read_depth_png16(path, scale_mm_per_unit=1.0):
    """Read a single-channel 16-bit PNG as metric depth; raw 0 marks a hole."""
    if not scale_mm_per_unit > 0:
        raise FormatError("depth scale must be positive")
    raw = _imread(path)
    if raw.dtype != np.uint16 or raw.ndim != 2:
        raise FormatError(f"{path}: expected 1-channel 16-bit PNG, got {raw.dtype} {raw.shape}")
    depth = raw.astype(np.float64) * scale_mm_per_unit / 1000.0
    valid = raw > 0
    return DepthImage(np.where(valid, depth, 0.0), valid)


def write_depth_png16(d, path, scale_mm_per_unit=1.0):
    raw = _round_half_up(d.depth * 1000.0 / scale_mm_per_unit)
    if np.any(raw[d.valid] > 65535):
        raise FormatError("depth exceeds the 16-bit range at this scale")
    raw = np.where(d.valid, np.clip(raw, 1, 65535), 0).astype(np.uint16)
    _imwrite(path, raw)


def read_labels_png(path):
    raw = _imread(path)
    if raw.dtype != np.uint8 or raw.ndim != 2:
        raise FormatError(f"{path}: expected 1-channel 8-bit PNG")
    return LabelMap(raw)


def write_labels_png(lm, path):
    _imwrite(path, lm.labels.astype(np.uint8))


def read_mask_png(path):
    raw = _imread(path)
    if raw.dtype != np.uint8 or raw.ndim != 2:
        raise FormatError(f"{path}: expected 1-channel 8-bit PNG")
    return raw > 127


def write_mask_png(mask, path):
    _imwrite(path, np.where(mask, 255, 0).astype(np.uint8))


def encode_normals_rgb8(nm):
    """(r, g, b) <- (x, y, z) mapped from [-1, 1] to [0, 255]; invalid pixels black."""
    rgb = _round_half_up((nm.normals + 1.0) / 2.0 * 255.0)
    rgb = np.clip(rgb, 0, 255).astype(np.uint8)
    rgb[~nm.valid] = 0
    return rgb


def write_normal_viz(nm, path):
    _imwrite(path, encode_normals_rgb8(nm))


def encode_error_rgb8(err, valid):
    err = np.asarray(err, dtype=np.float64)
    t = (err - ERROR_BLACK_BELOW) / (ERROR_PURPLE_AT - ERROR_BLACK_BELOW)
    t = np.clip(t, 0.0, 1.0)[..., None]
    rgb = _round_half_up(YELLOW * (1.0 - t) + PURPLE * t)
    rgb = np.clip(rgb, 0, 255).astype(np.uint8)
    rgb[err < ERROR_BLACK_BELOW] = 0
    rgb[~np.asarray(valid, dtype=bool)] = GRAY
    return rgb


def write_error_viz(err, valid, path):
    """Black below 11.25 deg, yellow to purple up to 90 deg, gray where invalid."""
    _imwrite(path, encode_error_rgb8(err, valid))


def validity_path_for(path):
    path = Path(path)
    return path.with_name(path.stem + ".valid.png")


def encode_normals_png48(nm):
    enc = _round_half_up((nm.normals + 1.0) / 2.0 * 65535.0)
    enc = np.clip(enc, 0, 65535).astype(np.uint16)
    enc[~nm.valid] = 0
    return enc


def decode_normals_png48(enc, valid):
    n = enc.astype(np.float64) / 65535.0 * 2.0 - 1.0
    norm = np.linalg.norm(n, axis=-1, keepdims=True)
    valid = valid & (norm[..., 0] > 0.5)
    n = np.where(valid[..., None], n / np.where(norm > 0, norm, 1.0), 0.0)
    return NormalMap(n, valid)


def write_normals_png48(nm, path, valid_path=None):
    """48-bit RGB normals plus an 8-bit validity sidecar (``<stem>.valid.png``)."""
    _imwrite(path, encode_normals_png48(nm))
    write_mask_png(nm.valid, valid_path or validity_path_for(path))


def read_normals_png48(path, valid_path=None):
    enc = _imread(path)
    if enc.dtype != np.uint16 or enc.ndim != 3 or enc.shape[2] != 3:
        raise FormatError(f"{path}: expected 3-channel 16-bit PNG")
    enc = enc[..., ::-1]
    valid = read_mask_png(valid_path or validity_path_for(path))
    if valid.shape != enc.shape[:2]:
        raise FormatError(f"validity {valid.shape} does not match normals {enc.shape[:2]}")
    return decode_normals_png48(enc, valid)


INTRINSICS_KEYS = ("fx", "fy", "cx", "cy", "width", "height")


def intrinsics_from_dict(cfg):
    missing = [k for k in INTRINSICS_KEYS if k not in cfg]
    if missing:
        raise FormatError(f"intrinsics missing keys: {', '.join(missing)}")
    try:
        return CameraIntrinsics(fx=float(cfg["fx"]), fy=float(cfg["fy"]),
                                cx=float(cfg["cx"]), cy=float(cfg["cy"]),
                                width=int(cfg["width"]), height=int(cfg["height"]))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(str(exc)) from exc


def read_intrinsics(path):
    path = Path(path)
    if not path.is_file():
        raise InputIOError(f"no such file: {path}")
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise FormatError(f"{path}: expected a JSON object")
    return intrinsics_from_dict(cfg)


def write_intrinsics(K, path):
    cfg = {k: getattr(K, k) for k in INTRINSICS_KEYS}
    Path(path).write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n", encoding="utf-8")
