"""Integral-image covariance normals with a depth-adaptive window.

Every valid pixel gets the smallest-eigenvalue eigenvector of the covariance
of the valid points in a square window around it. The window half-size grows
linearly with depth and is cut back so it never reaches past the nearest
depth discontinuity. Window sums come from ten summed-area tables, so the
per-pixel cost does not depend on the window size.
"""
from dataclasses import dataclass
import math

import numpy as np

from .core import DepthImage, NormalMap
from .errors import ConfigError, InvalidDepthError, ShapeError

RANK_TOL = 1e-12


@dataclass(frozen=True)
class NormalParams:
    sigma: float = 30.0
    z_ref: float = 1.0
    max_half_window: int = 50
    min_points: int = 9

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError("sigma must be > 0")
        if not self.z_ref > 0:
            raise ConfigError("z_ref must be > 0")
        if self.max_half_window < 1:
            raise ConfigError("max_half_window must be >= 1")
        if self.min_points < 3:
            raise ConfigError("min_points must be >= 3")


@dataclass(frozen=True, eq=False)
class PointGrid:
    points: np.ndarray  # (H, W, 3), meters, camera frame
    valid: np.ndarray

    @property
    def shape(self):
        return self.valid.shape


def back_project(u, v, z, K):
    if not z > 0:
        raise InvalidDepthError(f"z = {z}")
    return np.array([(u - K.cx) * z / K.fx, (v - K.cy) * z / K.fy, float(z)])


def back_project_depth(d, K):
    """Organized point cloud for a whole depth image."""
    if d.shape != K.shape:
        raise ShapeError(f"depth {d.shape} does not match intrinsics {K.shape}")
    v, u = np.mgrid[0:d.height, 0:d.width].astype(np.float64)
    z = np.where(d.valid, d.depth, 0.0)
    pts = np.stack([(u - K.cx) * z / K.fx, (v - K.cy) * z / K.fy, z], axis=-1)
    return PointGrid(pts, d.valid.copy())


# table order inside IntegralStats.tables
MOMENTS = ("x", "y", "z", "xx", "yy", "zz", "xy", "xz", "yz", "count")


@dataclass(frozen=True, eq=False)
class IntegralStats:
    """Summed-area tables of first and second moments over valid points.

    ``tables`` has shape ``(10, H+1, W+1)`` with a zero first row and column.
    Coordinates are taken relative to ``origin`` (the mean valid point) to
    keep the large prefix sums from swamping small window covariances.
    """
    tables: np.ndarray
    origin: np.ndarray

    def rect_sums(self, r0, r1, c0, c1):
        """Sums over rows ``[r0, r1)`` and columns ``[c0, c1)``; shape ``(10, ...)``."""
        S = self.tables
        return S[:, r1, c1] - S[:, r0, c1] - S[:, r1, c0] + S[:, r0, c0]

    def count(self, r0, r1, c0, c1):
        return np.rint(self.rect_sums(r0, r1, c0, c1)[9]).astype(np.int64)


def build_integral_stats(pg):
    valid = pg.valid
    origin = pg.points[valid].mean(axis=0) if valid.any() else np.zeros(3)
    q = np.where(valid[..., None], pg.points - origin, 0.0)
    x, y, z = q[..., 0], q[..., 1], q[..., 2]
    layers = np.stack([x, y, z, x * x, y * y, z * z, x * y, x * z, y * z,
                       valid.astype(np.float64)])
    H, W = valid.shape
    tables = np.zeros((10, H + 1, W + 1))
    np.cumsum(np.cumsum(layers, axis=1), axis=2, out=tables[:, 1:, 1:])
    return IntegralStats(tables, origin)


def adaptive_half_window(z, dist, np_, K=None):
    """Half-size h of the (2h+1)^2 window at depth ``z``.

    ``h = round(sigma / 2 * z / z_ref)`` clamped to ``[1, max_half_window]``,
    then capped at ``dist`` so the window stays clear of discontinuities.
    Works elementwise on arrays too. ``K`` is accepted for interface symmetry;
    the law is expressed in pixels and does not use it.
    """
    z = np.asarray(z, dtype=np.float64)
    if np.any(z <= 0):
        raise InvalidDepthError("window size needs z > 0")
    h = np.floor(np_.sigma / 2.0 * z / np_.z_ref + 0.5)
    h = np.clip(h, 1, np_.max_half_window).astype(np.int64)
    h = np.minimum(h, np.asarray(dist, dtype=np.int64))
    return int(h) if h.ndim == 0 else h


def _check_symmetric(C):
    C = np.asarray(C, dtype=np.float64)
    if C.shape != (3, 3):
        raise ShapeError(f"expected 3x3, got {C.shape}")
    if np.max(np.abs(C - C.T)) > 1e-9:
        raise ShapeError("matrix is not symmetric")
    return 0.5 * (C + C.T)


def _null_vector(M):
    """Unit vector spanning the null space of rank-2 symmetric ``M`` (stacked).

    Uses the largest cross product of two rows. Where M is (numerically) rank
    one or zero, falls back to any vector orthogonal to its largest row.
    """
    crosses = np.stack([np.cross(M[..., 0, :], M[..., 1, :]),
                        np.cross(M[..., 0, :], M[..., 2, :]),
                        np.cross(M[..., 1, :], M[..., 2, :])], axis=-2)
    cn = np.linalg.norm(crosses, axis=-1)
    best = np.argmax(cn, axis=-1)
    vec = np.take_along_axis(crosses, best[..., None, None], axis=-2)[..., 0, :]
    vnorm = np.take_along_axis(cn, best[..., None], axis=-1)[..., 0]
    scale = np.linalg.norm(M, axis=(-2, -1))
    degenerate = vnorm <= 1e-10 * scale ** 2
    if np.any(degenerate):
        alt = _orthogonal_unit(_largest_row(M))
        vec = np.where(degenerate[..., None], alt, vec)
        vnorm = np.where(degenerate, 1.0, vnorm)
    return vec / vnorm[..., None]


def _largest_row(M):
    rn = np.linalg.norm(M, axis=-1)
    return np.take_along_axis(M, np.argmax(rn, axis=-1)[..., None, None], axis=-2)[..., 0, :]


def _orthogonal_unit(w):
    """Some unit vector orthogonal to ``w``; (0, 0, 1) when ``w`` is zero."""
    axis = np.eye(3)[np.argmin(np.abs(w), axis=-1)]
    out = np.cross(w, axis)
    n = np.linalg.norm(out, axis=-1, keepdims=True)
    return np.where(n > 0, out / np.where(n > 0, n, 1.0), np.array([0.0, 0.0, 1.0]))


def eig3_symmetric(C):
    """Eigenvalues (ascending) and smallest-eigenvalue unit eigenvector.

    ``C`` is a stack ``(..., 3, 3)`` of symmetric matrices. Eigenvalues come
    from the trigonometric solution of the characteristic cubic. If the
    smallest eigenvalue is the better separated one its vector is read off
    ``C - lambda I`` directly; otherwise the largest eigenvector is found
    first and the problem shrinks to a 2x2 one on its orthogonal complement,
    which stays accurate when the two smallest eigenvalues nearly coincide.
    """
    C = np.asarray(C, dtype=np.float64)
    a00, a11, a22 = C[..., 0, 0], C[..., 1, 1], C[..., 2, 2]
    a01, a02, a12 = C[..., 0, 1], C[..., 0, 2], C[..., 1, 2]

    q = (a00 + a11 + a22) / 3.0
    p1 = a01 ** 2 + a02 ** 2 + a12 ** 2
    p2 = (a00 - q) ** 2 + (a11 - q) ** 2 + (a22 - q) ** 2 + 2.0 * p1
    p = np.sqrt(p2 / 6.0)
    safe_p = np.where(p > 0, p, 1.0)
    b00, b11, b22 = (a00 - q) / safe_p, (a11 - q) / safe_p, (a22 - q) / safe_p
    b01, b02, b12 = a01 / safe_p, a02 / safe_p, a12 / safe_p
    det_b = (b00 * (b11 * b22 - b12 * b12) - b01 * (b01 * b22 - b12 * b02)
             + b02 * (b01 * b12 - b11 * b02))
    phi = np.arccos(np.clip(det_b / 2.0, -1.0, 1.0)) / 3.0
    hi = q + 2.0 * p * np.cos(phi)
    lo = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    mid = 3.0 * q - hi - lo
    eye = np.eye(3)

    v_lo = _null_vector(C - lo[..., None, None] * eye)

    w = _null_vector(C - hi[..., None, None] * eye)
    e1 = _orthogonal_unit(w)
    e2 = np.cross(w, e1)
    Ce1 = np.einsum("...ij,...j->...i", C, e1)
    Ce2 = np.einsum("...ij,...j->...i", C, e2)
    a = np.einsum("...i,...i->...", e1, Ce1)
    b = np.einsum("...i,...i->...", e1, Ce2)
    c = np.einsum("...i,...i->...", e2, Ce2)
    theta = 0.5 * np.arctan2(2.0 * b, a - c)
    # (cos t, sin t) is the larger eigenvector of [[a, b], [b, c]]
    v_via_hi = -np.sin(theta)[..., None] * e1 + np.cos(theta)[..., None] * e2

    lo_isolated = (mid - lo) >= (hi - mid)
    vec = np.where(lo_isolated[..., None], v_lo, v_via_hi)
    rq = np.einsum("...i,...ij,...j->...", vec, C, vec)
    evals = np.sort(np.stack([rq, mid, hi], axis=-1), axis=-1)
    return evals, vec


def eig3_smallest(C):
    """Smallest eigenvalue and a unit eigenvector of one symmetric 3x3 matrix."""
    C = _check_symmetric(C)
    evals, vec = eig3_symmetric(C)
    return float(evals[0]), vec


def _orient_toward_camera(n, p):
    flip = np.einsum("...k,...k->...", n, p) > 0
    return np.where(flip[..., None], -n, n)


def _check_inputs(pg, dm, K):
    if pg.shape != np.shape(dm):
        raise ShapeError(f"point grid {pg.shape} vs distance map {np.shape(dm)}")
    if K is not None and pg.shape != K.shape:
        raise ShapeError(f"point grid {pg.shape} vs intrinsics {K.shape}")


def estimate_normals(pg, stats, dm, np_=NormalParams(), K=None):
    _check_inputs(pg, dm, K)
    if stats.tables.shape[1:] != (pg.shape[0] + 1, pg.shape[1] + 1):
        raise ShapeError("integral tables do not match the point grid")
    H, W = pg.shape
    rows, cols = np.nonzero(pg.valid)
    normals = np.zeros((H, W, 3))
    out_valid = np.zeros((H, W), dtype=bool)
    if len(rows) == 0:
        return NormalMap(normals, out_valid)

    pts = pg.points[rows, cols]
    h = adaptive_half_window(pts[:, 2], dm[rows, cols], np_, K)
    r0, r1 = np.maximum(rows - h, 0), np.minimum(rows + h + 1, H)
    c0, c1 = np.maximum(cols - h, 0), np.minimum(cols + h + 1, W)
    s = stats.rect_sums(r0, r1, c0, c1)
    n = np.rint(s[9])
    enough = n >= np_.min_points
    n = np.where(enough, n, 1.0)

    mx, my, mz = s[0] / n, s[1] / n, s[2] / n
    cov = np.empty((len(rows), 3, 3))
    cov[:, 0, 0] = s[3] / n - mx * mx
    cov[:, 1, 1] = s[4] / n - my * my
    cov[:, 2, 2] = s[5] / n - mz * mz
    cov[:, 0, 1] = cov[:, 1, 0] = s[6] / n - mx * my
    cov[:, 0, 2] = cov[:, 2, 0] = s[7] / n - mx * mz
    cov[:, 1, 2] = cov[:, 2, 1] = s[8] / n - my * mz

    evals, vec = eig3_symmetric(cov)
    ok = enough & ~((evals[:, 0] < RANK_TOL) & (evals[:, 1] < RANK_TOL))
    vec = _orient_toward_camera(vec, pts)
    normals[rows[ok], cols[ok]] = vec[ok]
    out_valid[rows[ok], cols[ok]] = True
    return NormalMap(normals, out_valid)


def estimate_normals_bruteforce(pg, dm, np_=NormalParams(), K=None):
    """Reference implementation: explicit window loops and ``numpy.linalg.eigh``."""
    _check_inputs(pg, dm, K)
    H, W = pg.shape
    normals = np.zeros((H, W, 3))
    out_valid = np.zeros((H, W), dtype=bool)
    for i in range(H):
        for j in range(W):
            if not pg.valid[i, j]:
                continue
            p = pg.points[i, j]
            h = adaptive_half_window(p[2], dm[i, j], np_, K)
            win = pg.points[max(i - h, 0):i + h + 1, max(j - h, 0):j + h + 1]
            ok = pg.valid[max(i - h, 0):i + h + 1, max(j - h, 0):j + h + 1]
            sel = win[ok]
            if len(sel) < np_.min_points:
                continue
            centered = sel - sel.mean(axis=0)
            cov = centered.T @ centered / len(sel)
            w, v = np.linalg.eigh(cov)
            if w[0] < RANK_TOL and w[1] < RANK_TOL:
                continue
            n = v[:, 0]
            if n @ p > 0:
                n = -n
            normals[i, j] = n
            out_valid[i, j] = True
    return NormalMap(normals, out_valid)


def mean_window_half_size(z, np_):
    """Unbounded half window at depth z; handy for sizing fixtures."""
    return max(1, min(np_.max_half_window, math.floor(np_.sigma / 2.0 * z / np_.z_ref + 0.5)))
