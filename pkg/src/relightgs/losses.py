"""Image-space losses and evaluation metrics.

Perceptual terms are not implemented (they need pretrained networks); their
weights are kept below for reference.
"""

from dataclasses import dataclass

import numpy as np

DEPTH_DECAY = 0.9
LAMBDA_NORMAL_PERCEP = 0.2
LAMBDA_ALBEDO_PERCEP = 0.2
LAMBDA_SMOOTH_ALBEDO = 0.1
LAMBDA_SMOOTH_ROUGH = 0.1
LAMBDA_PBR_EXTRA = 0.2
PSNR_CAP = 99.0


def _as_hwc(x):
    x = np.asarray(x, dtype=np.float64)
    return x[..., None] if x.ndim == 2 else x


def _mask_for(shape, mask):
    if mask is None:
        return np.ones(shape[:2], dtype=bool)
    m = np.asarray(mask)
    if m.ndim == 3:
        m = m[..., 0]
    m = m.astype(bool)
    if m.shape != tuple(shape[:2]):
        raise ValueError(f"mask shape {m.shape} does not match image {shape[:2]}")
    return m


def masked_l1(pred, gt, mask=None) -> float:
    """Mean absolute error over foreground pixels and all channels."""
    p, g = _as_hwc(pred), _as_hwc(gt)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {g.shape}")
    m = _mask_for(p.shape, mask)
    if not m.any():
        raise ValueError("empty mask")
    return float(np.abs(p[m] - g[m]).mean())


def depth_loss(preds, gt, mu: float = DEPTH_DECAY, mask=None) -> float:
    """sum_i mu^(N-i) * L1(d_i, gt) over an ordered prediction sequence."""
    preds = list(preds)
    if not preds:
        raise ValueError("need at least one depth prediction")
    n = len(preds)
    return float(sum(mu ** (n - 1 - i) * masked_l1(d, gt, mask) for i, d in enumerate(preds)))


def _grad_l1(x):
    # forward differences on the interior (last row/column excluded)
    gx = np.abs(x[:-1, 1:] - x[:-1, :-1]).sum(axis=-1)
    gy = np.abs(x[1:, :-1] - x[:-1, :-1]).sum(axis=-1)
    return gx + gy


def smoothness_loss(albedo, rough, gt_albedo, lam_albedo=LAMBDA_SMOOTH_ALBEDO, lam_rough=LAMBDA_SMOOTH_ROUGH) -> float:
    """Edge-aware smoothness of albedo and roughness, weighted by exp(-|grad gt|)."""
    a, r, g = _as_hwc(albedo), _as_hwc(rough), _as_hwc(gt_albedo)
    if a.shape[:2] != r.shape[:2] or a.shape != g.shape:
        raise ValueError("albedo, roughness and ground-truth albedo must share H x W")
    if a.shape[0] < 2 or a.shape[1] < 2:
        return 0.0
    edge = np.exp(-_grad_l1(g))
    per_px = lam_albedo * _grad_l1(a) * edge + lam_rough * _grad_l1(r) * edge
    return float(per_px.mean())


@dataclass(frozen=True)
class L1Report:
    albedo: float
    ao: float
    direct: float
    indirect: float
    pbr: float

    @property
    def light_transport(self) -> float:
        return self.ao + self.direct + self.indirect


def l1_losses(pred: dict, gt: dict, mask=None) -> L1Report:
    """Masked L1 for each of the albedo, ao, direct, indirect and pbr maps."""
    keys = ("albedo", "ao", "direct", "indirect", "pbr")
    return L1Report(**{k: masked_l1(pred[k], gt[k], mask) for k in keys})


def psnr(pred, gt, peak: float = 1.0, mask=None) -> float:
    p, g = _as_hwc(pred), _as_hwc(gt)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {g.shape}")
    m = _mask_for(p.shape, mask)
    if not m.any():
        raise ValueError("empty mask")
    mse = float(np.mean((p[m] - g[m]) ** 2))
    if mse < 1e-12:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * np.log10(peak * peak / mse))


def mae_normals(pred, gt, mask=None) -> float:
    """Mean angular error in degrees between unit normal maps."""
    p, g = _as_hwc(pred), _as_hwc(gt)
    if p.shape != g.shape or p.shape[-1] != 3:
        raise ValueError("normal maps must both be (H, W, 3)")
    m = _mask_for(p.shape, mask)
    if not m.any():
        raise ValueError("empty mask")
    cos = np.clip(np.sum(p[m] * g[m], axis=-1), -1.0, 1.0)
    return float(np.degrees(np.arccos(cos)).mean())
