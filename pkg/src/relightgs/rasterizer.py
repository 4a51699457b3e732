"""EWA projection of 3D Gaussians and front-to-back alpha blending of
arbitrary per-Gaussian channels.

Constants follow common splatting practice: +0.3 px^2 on the 2D covariance
diagonal, per-splat alpha clamped to 0.99, contributions below 1/255 skipped,
and a 3-sigma footprint (Mahalanobis distance <= 3). Splats are blended in
ascending view depth, ties broken by scene index.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._backend import njit, pick
from .raycast import quat_to_matrix
from .scene import Camera, GaussianPoint, GaussianScene

COV_BLUR = 0.3
MAX_ALPHA = 0.99
MIN_ALPHA = 1.0 / 255.0
NEAR = 0.01
SIGMA_CUTOFF = 3.0


@dataclass(frozen=True)
class Splat2D:
    mean2d: np.ndarray
    cov2d: np.ndarray
    view_depth: float
    index: int


@dataclass
class Splats:
    """Batch of projected Gaussians (culled ones removed), unsorted."""

    means: np.ndarray
    covs: np.ndarray
    conics: np.ndarray
    depths: np.ndarray
    index: np.ndarray
    bbox: np.ndarray  # (M, 4) int: x0, y0, x1, y1 inclusive, clipped to the viewport

    def __len__(self):
        return len(self.depths)

    def order(self) -> np.ndarray:
        return np.lexsort((self.index, self.depths))


def project_all(scene: GaussianScene, cam: Camera) -> Splats:
    pc = scene.positions @ cam.R.T + cam.t
    z = pc[:, 2]
    front = z > NEAR
    pc, zf = pc[front], z[front]
    idx = np.flatnonzero(front)
    rot = quat_to_matrix(scene.rotations[idx])
    s2 = scene.scales[idx] ** 2
    sigma3 = np.einsum("nij,nj,nkj->nik", rot, s2, rot)
    J = np.zeros((len(idx), 2, 3))
    J[:, 0, 0] = cam.fx / zf
    J[:, 0, 2] = -cam.fx * pc[:, 0] / zf**2
    J[:, 1, 1] = cam.fy / zf
    J[:, 1, 2] = -cam.fy * pc[:, 1] / zf**2
    T = J @ cam.R
    cov = T @ sigma3 @ np.transpose(T, (0, 2, 1))
    cov[:, 0, 0] += COV_BLUR
    cov[:, 1, 1] += COV_BLUR
    means = np.stack([cam.fx * pc[:, 0] / zf + cam.cx, cam.fy * pc[:, 1] / zf + cam.cy], axis=-1)
    det = cov[:, 0, 0] * cov[:, 1, 1] - cov[:, 0, 1] * cov[:, 1, 0]
    conics = np.stack([cov[:, 1, 1], -cov[:, 0, 1], cov[:, 0, 0]], axis=-1) / det[:, None]
    rx = SIGMA_CUTOFF * np.sqrt(cov[:, 0, 0])
    ry = SIGMA_CUTOFF * np.sqrt(cov[:, 1, 1])
    x0 = np.maximum(np.ceil(means[:, 0] - rx), 0)
    x1 = np.minimum(np.floor(means[:, 0] + rx), cam.width - 1)
    y0 = np.maximum(np.ceil(means[:, 1] - ry), 0)
    y1 = np.minimum(np.floor(means[:, 1] + ry), cam.height - 1)
    visible = (x0 <= x1) & (y0 <= y1) & (det > 0)
    bbox = np.stack([x0, y0, x1, y1], axis=-1)[visible].astype(np.int64)
    return Splats(means[visible], cov[visible], conics[visible], zf[visible], idx[visible], bbox)


def project_gaussian(g: GaussianPoint, cam: Camera, index: int = 0) -> Splat2D | None:
    """Screen-space footprint of one Gaussian, or None when culled."""
    scene = GaussianScene(
        positions=g.position[None], rotations=g.rotation[None], scales=g.scale[None],
        opacities=[g.opacity], normals=g.normal[None], albedos=g.albedo[None],
        roughness=[g.roughness], visibility=g.visibility[None], indirect=np.asarray(g.indirect)[None],
    )
    sp = project_all(scene, cam)
    if len(sp) == 0:
        return None
    return Splat2D(sp.means[0], sp.covs[0], float(sp.depths[0]), index)


def _blend_numpy(means, conics, opac, bbox, values, width, height):
    C = values.shape[1]
    img = np.zeros((height, width, C))
    trans = np.ones((height, width))
    cut2 = SIGMA_CUTOFF * SIGMA_CUTOFF
    for i in range(len(means)):
        x0, y0, x1, y1 = bbox[i]
        xs = np.arange(x0, x1 + 1) - means[i, 0]
        ys = np.arange(y0, y1 + 1) - means[i, 1]
        dx, dy = xs[None, :], ys[:, None]
        a, b, c = conics[i]
        m2 = a * dx * dx + 2.0 * b * dx * dy + c * dy * dy
        alpha = np.minimum(MAX_ALPHA, opac[i] * np.exp(-0.5 * m2))
        use = (m2 <= cut2) & (alpha >= MIN_ALPHA)
        alpha = np.where(use, alpha, 0.0)
        T = trans[y0:y1 + 1, x0:x1 + 1]
        w = T * alpha
        img[y0:y1 + 1, x0:x1 + 1] += w[..., None] * values[i]
        trans[y0:y1 + 1, x0:x1 + 1] = T * (1.0 - alpha)
    return img, 1.0 - trans


@njit
def _blend_nb(means, conics, opac, bbox, values, width, height):
    n = means.shape[0]
    C = values.shape[1]
    img = np.zeros((height, width, C))
    trans = np.ones((height, width))
    cut2 = 9.0
    for i in range(n):
        a = conics[i, 0]
        b = conics[i, 1]
        c = conics[i, 2]
        o = opac[i]
        for y in range(bbox[i, 1], bbox[i, 3] + 1):
            dy = y - means[i, 1]
            for x in range(bbox[i, 0], bbox[i, 2] + 1):
                dx = x - means[i, 0]
                m2 = a * dx * dx + 2.0 * b * dx * dy + c * dy * dy
                if m2 > cut2:
                    continue
                alpha = min(0.99, o * math.exp(-0.5 * m2))
                if alpha < 1.0 / 255.0:
                    continue
                T = trans[y, x]
                w = T * alpha
                for ch in range(C):
                    img[y, x, ch] += w * values[i, ch]
                trans[y, x] = T * (1.0 - alpha)
    alpha_img = 1.0 - trans
    return img, alpha_img


def _prepare(scene, cam, values):
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if len(values) != len(scene):
        raise ValueError("need one value row per Gaussian")
    sp = project_all(scene, cam)
    order = sp.order()
    src = sp.index[order]
    return (
        np.ascontiguousarray(sp.means[order]),
        np.ascontiguousarray(sp.conics[order]),
        np.ascontiguousarray(scene.opacities[src]),
        np.ascontiguousarray(sp.bbox[order]),
        np.ascontiguousarray(values[src]),
        int(cam.width),
        int(cam.height),
    )


def rasterize_numpy(scene, cam, values):
    return _blend_numpy(*_prepare(scene, cam, values))


def rasterize_numba(scene, cam, values):
    return _blend_nb(*_prepare(scene, cam, values))


def rasterize(scene: GaussianScene, cam: Camera, values):
    """Blend per-Gaussian ``values`` (N,) or (N, C) into an image.

    Returns ``(image (H, W, C), alpha (H, W))`` with
    C = sum_i alpha_i prod_{j<i} (1 - alpha_j) c_i and alpha = 1 - prod (1 - alpha_j).
    """
    return pick(rasterize_numba, rasterize_numpy)(scene, cam, values)
