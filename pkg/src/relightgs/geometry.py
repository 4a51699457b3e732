"""Depth and normal geometry: unprojection, normals from position maps,
stereo correlation and convex upsampling.

Images are (H, W, C) arrays indexed [v, u]; masks are (H, W) bool arrays.
Pixel (u, v) sits at image coordinate (u, v) (no half-pixel offset).
"""

import numpy as np

from .scene import Camera


def unproject(u, v, depth, cam: Camera) -> np.ndarray:
    """World point seen at pixel (u, v) with camera-space depth ``depth``."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    depth = np.asarray(depth, dtype=np.float64)
    if np.any(~(depth > 0)):
        raise ValueError("depth must be > 0")
    x = (u - cam.cx) / cam.fx * depth
    y = (v - cam.cy) / cam.fy * depth
    pc = np.stack(np.broadcast_arrays(x, y, depth), axis=-1)
    return (pc - cam.t) @ cam.R


def project(X, cam: Camera):
    """Pixel coordinates and camera-space depth of world point(s) ``X``."""
    pc = np.asarray(X, dtype=np.float64) @ cam.R.T + cam.t
    z = pc[..., 2]
    u = cam.fx * pc[..., 0] / z + cam.cx
    v = cam.fy * pc[..., 1] / z + cam.cy
    return u, v, z


def position_map(depth, cam: Camera, mask=None):
    """Per-pixel unprojection. Returns ``(X (H, W, 3), mask)``; background is zero."""
    d = np.asarray(depth, dtype=np.float64)
    if d.ndim == 3:
        d = d[..., 0]
    m = np.isfinite(d) & (d > 0) if mask is None else np.asarray(mask, dtype=bool).copy()
    if np.any(~(d[m] > 0)):
        raise ValueError("depth must be > 0 on the foreground")
    vv, uu = np.nonzero(m)
    X = np.zeros(d.shape + (3,))
    X[vv, uu] = unproject(uu, vv, d[vv, uu], cam)
    return X, m


def coarse_normals(X, mask, cam: Camera, face_camera: bool = True):
    """Normals from the cross product of horizontal and vertical differences.

    Forward differences where the +u / +v neighbour is valid, backward
    otherwise; pixels with no valid neighbour along an axis or with a
    degenerate cross product are dropped from the returned mask. Normals are
    flipped to face the camera center unless ``face_camera`` is False.
    """
    X = np.asarray(X, dtype=np.float64)
    m = np.asarray(mask, dtype=bool)
    du, ok_u = _axis_diff(X, m, axis=1)
    dv, ok_v = _axis_diff(X, m, axis=0)
    n = np.cross(du, dv)
    length = np.linalg.norm(n, axis=-1)
    valid = m & ok_u & ok_v & (length > 1e-12)
    out = np.zeros_like(X)
    out[valid] = n[valid] / length[valid, None]
    if not face_camera:
        return out, valid
    to_cam = cam.center - X
    flip = valid & (np.einsum("hwc,hwc->hw", out, to_cam) < 0)
    out[flip] *= -1.0
    return out, valid


def _axis_diff(X, m, axis):
    fwd = np.zeros_like(X)
    bwd = np.zeros_like(X)
    ok_f = np.zeros(m.shape, dtype=bool)
    ok_b = np.zeros(m.shape, dtype=bool)
    lo = [slice(None)] * 2
    hi = [slice(None)] * 2
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    lo, hi = tuple(lo), tuple(hi)
    diff = X[hi] - X[lo]
    both = m[hi] & m[lo]
    fwd[lo] = diff
    ok_f[lo] = both
    bwd[hi] = diff
    ok_b[hi] = both
    d = np.where(ok_f[..., None], fwd, bwd)
    return d, ok_f | ok_b


def refine_normals(coarse, delta, mask=None):
    """Normalize coarse + delta per pixel; near-zero sums are invalidated."""
    nc = np.asarray(coarse, dtype=np.float64)
    dn = np.asarray(delta, dtype=np.float64)
    if nc.shape != dn.shape:
        raise ValueError(f"shape mismatch {nc.shape} vs {dn.shape}")
    s = nc + dn
    length = np.linalg.norm(s, axis=-1)
    valid = length >= 1e-8
    if mask is not None:
        valid &= np.asarray(mask, dtype=bool)
    out = np.zeros_like(s)
    out[valid] = s[valid] / length[valid, None]
    return out, valid


def correlation_volume(left, right) -> np.ndarray:
    """All-pairs row correlation M[i, j, k] = <left[i, j], right[i, k]>."""
    a = np.asarray(left, dtype=np.float64)
    b = np.asarray(right, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 3:
        raise ValueError(f"feature shape mismatch {a.shape} vs {b.shape}")
    return np.einsum("ijl,ikl->ijk", a, b)


def stereo_depth_baseline(corr, fx: float, baseline: float):
    """Winner-take-all disparity over k <= j, converted to depth.

    Ties go to the smallest k. Returns ``(depth (H, W), disparity (H, W), valid)``.
    """
    if not baseline > 0:
        raise ValueError("baseline must be > 0")
    M = np.asarray(corr, dtype=np.float64)
    h, w, _ = M.shape
    j = np.arange(w)
    allowed = j[None, :] <= j[:, None]  # [j, k]
    scores = np.where(allowed[None], M, -np.inf)
    best = np.argmax(scores, axis=2)  # first max == smallest k
    disparity = (j[None, :] - best).astype(np.float64)
    valid = disparity > 0
    depth = np.zeros((h, w))
    depth[valid] = fx * baseline / disparity[valid]
    return depth, disparity, valid


def convex_upsample(field, weights, factor: int) -> np.ndarray:
    """Upsample (H, W, C) by ``factor`` with softmax-weighted 3x3 combinations.

    ``weights`` is (H, W, 9*f*f); channel ``k*f*f + dy*f + dx`` is the logit of
    neighbour k (row-major over the 3x3 window, top-left first) for fine pixel
    (f*y + dy, f*x + dx). Borders replicate edge values.
    """
    f = int(factor)
    x = np.asarray(field, dtype=np.float64)
    squeeze = x.ndim == 2
    if squeeze:
        x = x[..., None]
    h, w, c = x.shape
    wt = np.asarray(weights, dtype=np.float64)
    if wt.shape != (h, w, 9 * f * f):
        raise ValueError(f"weights must be {(h, w, 9 * f * f)}, got {wt.shape}")
    if not np.isfinite(wt).all():
        raise ValueError("non-finite weights")
    wt = wt.reshape(h, w, 9, f, f)
    wt = np.exp(wt - wt.max(axis=2, keepdims=True))
    wt /= wt.sum(axis=2, keepdims=True)
    pad = np.pad(x, ((1, 1), (1, 1), (0, 0)), mode="edge")
    neigh = np.stack([pad[ky:ky + h, kx:kx + w] for ky in range(3) for kx in range(3)], axis=2)
    # (h, w, 9, c) x (h, w, 9, f, f) -> (h, f, w, f, c)
    out = np.einsum("hwkc,hwkab->hawbc", neigh, wt).reshape(h * f, w * f, c)
    return out[..., 0] if squeeze else out
