"""Simplified Disney-style BRDF: Lambertian diffuse plus a GGX microfacet lobe.

D is GGX with alpha = roughness**2, F is Schlick with scalar F0 = 0.04 and G is
the height-correlated Smith term. The half vector is normalized. The specular
denominator is (wi.n)(wo.n); ``conventional_specular=True`` uses 4(wi.n)(wo.n).
"""

import math

import numpy as np

from ._backend import njit

F0 = 0.04
MIN_ALPHA = 1e-3


def ggx_ndf(n_dot_h, alpha):
    a2 = alpha * alpha
    d = n_dot_h * n_dot_h * (a2 - 1.0) + 1.0
    return a2 / (np.pi * d * d)


def schlick_fresnel(cos_theta, f0=F0):
    return f0 + (1.0 - f0) * (1.0 - cos_theta) ** 5


def _smith_lambda(cos_theta, alpha):
    c2 = cos_theta * cos_theta
    tan2 = np.maximum(1.0 - c2, 0.0) / c2
    return 0.5 * (np.sqrt(1.0 + alpha * alpha * tan2) - 1.0)


def smith_g2(n_dot_i, n_dot_o, alpha):
    return 1.0 / (1.0 + _smith_lambda(n_dot_i, alpha) + _smith_lambda(n_dot_o, alpha))


def _alpha(roughness):
    return np.maximum(np.asarray(roughness, dtype=np.float64) ** 2, MIN_ALPHA)


def specular_term(wi, wo, n, roughness, conventional_specular=False):
    """Scalar specular lobe f_s for arrays of directions (..., 3)."""
    wi, wo, n = (np.asarray(a, dtype=np.float64) for a in (wi, wo, n))
    h = wi + wo
    h = h / np.linalg.norm(h, axis=-1, keepdims=True)
    ni = np.sum(wi * n, axis=-1)
    no = np.sum(wo * n, axis=-1)
    nh = np.clip(np.sum(n * h, axis=-1), 0.0, 1.0)
    oh = np.clip(np.sum(wo * h, axis=-1), 0.0, 1.0)
    alpha = _alpha(roughness)
    denom = ni * no * (4.0 if conventional_specular else 1.0)
    return ggx_ndf(nh, alpha) * schlick_fresnel(oh) * smith_g2(ni, no, alpha) / denom


def brdf_eval(wi, wo, n, albedo, roughness, diffuse_only=False, conventional_specular=False):
    """RGB reflectance f(wi, wo). Both directions must lie above the surface."""
    wi, wo, n = (np.asarray(a, dtype=np.float64) for a in (wi, wo, n))
    albedo = np.asarray(albedo, dtype=np.float64)
    ni = np.sum(wi * n, axis=-1)
    no = np.sum(wo * n, axis=-1)
    if np.any(ni <= 0) or np.any(no <= 0):
        raise ValueError("backfacing direction: brdf needs wi.n > 0 and wo.n > 0")
    r = np.asarray(roughness, dtype=np.float64)
    if np.any((r < 0) | (r > 1)):
        raise ValueError("roughness must lie in [0, 1]")
    f = albedo / np.pi
    if diffuse_only:
        return np.broadcast_to(f, np.broadcast_shapes(f.shape, ni.shape + (3,))).copy()
    fs = specular_term(wi, wo, n, r, conventional_specular)
    return f + fs[..., None]


def material_albedo(image, residual):
    """Albedo as the logistic of (input color + residual)."""
    x = np.asarray(image, dtype=np.float64) + np.asarray(residual, dtype=np.float64)
    # split by sign to avoid exp overflow
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


@njit
def specular_nb(ix, iy, iz, ox, oy, oz, nx, ny, nz, roughness, conventional):
    """Scalar twin of :func:`specular_term` for numba kernels."""
    hx = ix + ox
    hy = iy + oy
    hz = iz + oz
    hl = math.sqrt(hx * hx + hy * hy + hz * hz)
    hx /= hl
    hy /= hl
    hz /= hl
    ni = ix * nx + iy * ny + iz * nz
    no = ox * nx + oy * ny + oz * nz
    nh = min(max(nx * hx + ny * hy + nz * hz, 0.0), 1.0)
    oh = min(max(ox * hx + oy * hy + oz * hz, 0.0), 1.0)
    alpha = max(roughness * roughness, 1e-3)
    a2 = alpha * alpha
    d = nh * nh * (a2 - 1.0) + 1.0
    D = a2 / (math.pi * d * d)
    F = 0.04 + 0.96 * (1.0 - oh) ** 5
    ci2 = ni * ni
    co2 = no * no
    li = 0.5 * (math.sqrt(1.0 + a2 * max(1.0 - ci2, 0.0) / ci2) - 1.0)
    lo = 0.5 * (math.sqrt(1.0 + a2 * max(1.0 - co2, 0.0) / co2) - 1.0)
    G = 1.0 / (1.0 + li + lo)
    denom = ni * no
    if conventional:
        denom *= 4.0
    return D * F * G / denom
