"""Real spherical harmonics, bands 0-3 (16 coefficients).

Ordering is (l, m) = (0,0), (1,-1), (1,0), (1,1), (2,-2), ..., (3,3). No
Condon-Shortley phase: Y_{1,-1} = c*y, Y_{1,0} = c*z, Y_{1,1} = c*x.
"""

import numpy as np

from ._backend import njit

NUM_COEFFS = 16
UNIT_TOL = 1e-6

C0 = 0.28209479177387814
C1 = 0.4886025119029199
C2 = (1.0925484305920792, 0.31539156525252005, 0.5462742152960396)
C3 = (0.5900435899266435, 2.890611442640554, 0.4570457994644658, 0.3731763325901154, 1.445305721320277)


def _check_unit(dirs):
    norms = np.linalg.norm(dirs, axis=-1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise ValueError("SH basis needs unit directions")


def sh_basis(dirs, check=True) -> np.ndarray:
    """Evaluate all 16 basis functions at unit direction(s); shape (..., 16)."""
    d = np.asarray(dirs, dtype=np.float64)
    if check:
        _check_unit(d)
    x, y, z = d[..., 0], d[..., 1], d[..., 2]
    xx, yy, zz = x * x, y * y, z * z
    out = np.empty(d.shape[:-1] + (NUM_COEFFS,))
    out[..., 0] = C0
    out[..., 1] = C1 * y
    out[..., 2] = C1 * z
    out[..., 3] = C1 * x
    out[..., 4] = C2[0] * x * y
    out[..., 5] = C2[0] * y * z
    out[..., 6] = C2[1] * (3.0 * zz - 1.0)
    out[..., 7] = C2[0] * x * z
    out[..., 8] = C2[2] * (xx - yy)
    out[..., 9] = C3[0] * y * (3.0 * xx - yy)
    out[..., 10] = C3[1] * x * y * z
    out[..., 11] = C3[2] * y * (5.0 * zz - 1.0)
    out[..., 12] = C3[3] * z * (5.0 * zz - 3.0)
    out[..., 13] = C3[2] * x * (5.0 * zz - 1.0)
    out[..., 14] = C3[4] * z * (xx - yy)
    out[..., 15] = C3[0] * x * (xx - 3.0 * yy)
    return out


@njit
def sh_basis_nb(x, y, z, out):
    """Scalar basis into a preallocated length-16 buffer (numba kernels)."""
    xx = x * x
    yy = y * y
    zz = z * z
    out[0] = 0.28209479177387814
    out[1] = 0.4886025119029199 * y
    out[2] = 0.4886025119029199 * z
    out[3] = 0.4886025119029199 * x
    out[4] = 1.0925484305920792 * x * y
    out[5] = 1.0925484305920792 * y * z
    out[6] = 0.31539156525252005 * (3.0 * zz - 1.0)
    out[7] = 1.0925484305920792 * x * z
    out[8] = 0.5462742152960396 * (xx - yy)
    out[9] = 0.5900435899266435 * y * (3.0 * xx - yy)
    out[10] = 2.890611442640554 * x * y * z
    out[11] = 0.4570457994644658 * y * (5.0 * zz - 1.0)
    out[12] = 0.3731763325901154 * z * (5.0 * zz - 3.0)
    out[13] = 0.4570457994644658 * x * (5.0 * zz - 1.0)
    out[14] = 1.445305721320277 * z * (xx - yy)
    out[15] = 0.5900435899266435 * x * (xx - 3.0 * yy)


def equirect_grid(width: int, height: int):
    """Texel-center directions and solid-angle weights of a W x H lat-long grid.

    Polar angle is measured from +Y; see :func:`relightgs.envlight.pixel_to_dir`.
    Returns ``(dirs (H, W, 3), weights (H, W))`` with weight sin(theta)*(pi/H)*(2pi/W).
    """
    v = np.arange(height) + 0.5
    u = np.arange(width) + 0.5
    theta = np.pi * v / height
    phi = 2.0 * np.pi * u / width
    st, ct = np.sin(theta)[:, None], np.cos(theta)[:, None]
    dirs = np.empty((height, width, 3))
    dirs[..., 0] = st * np.cos(phi)[None, :]
    dirs[..., 1] = ct
    dirs[..., 2] = st * np.sin(phi)[None, :]
    # re-normalize: float rounding leaves |d| off by ~1 ulp
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    weights = np.broadcast_to(st * (np.pi / height) * (2.0 * np.pi / width), (height, width)).copy()
    return dirs, weights


def gauss_grid(n_theta: int, n_phi: int):
    """Gauss-Legendre (in cos theta) x uniform (in phi) sphere quadrature.

    Exact for products of SH up to band n_theta*2-1 in theta and n_phi-1 in
    phi. Same layout as :func:`equirect_grid`: polar axis +Y, rows by theta.
    """
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    ct = -x  # north pole first, like the lat-long rows
    st = np.sqrt(1.0 - ct * ct)
    phi = 2.0 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    dirs = np.empty((n_theta, n_phi, 3))
    dirs[..., 0] = st[:, None] * np.cos(phi)[None, :]
    dirs[..., 1] = ct[:, None]
    dirs[..., 2] = st[:, None] * np.sin(phi)[None, :]
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    weights = np.broadcast_to(wx[:, None] * (2.0 * np.pi / n_phi), (n_theta, n_phi)).copy()
    return dirs, weights


def sh_project(f, width: int = 128, height: int = 64, quadrature: str = "equirect") -> np.ndarray:
    """Project a spherical function onto SH: c_k = sum f(d) Y_k(d) dw.

    ``f`` is either a callable mapping (..., 3) unit directions to values of
    shape (...) or (..., C), or an array already sampled on the (H, W) grid.
    The default grid is lat-long with dw = sin(theta)*(pi/H)*(2pi/W);
    ``quadrature="gauss"`` uses :func:`gauss_grid` instead.
    Returns (16,) for scalar functions and (C, 16) for C channels.
    """
    if width < 16 or height < 8:
        raise ValueError("projection grid must be at least 16 x 8")
    if quadrature == "equirect":
        dirs, w = equirect_grid(width, height)
    elif quadrature == "gauss":
        dirs, w = gauss_grid(height, width)
    else:
        raise ValueError(f"unknown quadrature {quadrature!r}")
    samples = f(dirs) if callable(f) else np.asarray(f, dtype=np.float64)
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape[:2] != (height, width):
        raise ValueError(f"samples must have leading shape {(height, width)}, got {samples.shape}")
    if not np.isfinite(samples).all():
        raise ValueError("non-finite samples")
    basis = sh_basis(dirs, check=False) * w[..., None]
    if samples.ndim == 2:
        return np.einsum("hw,hwk->k", samples, basis)
    return np.einsum("hwc,hwk->ck", samples, basis)


def sh_eval(coeffs, dirs, clamp01: bool = False):
    """Reconstruct sum_k c_k Y_k(dir). ``coeffs`` (16,) or (C, 16)."""
    c = np.asarray(coeffs, dtype=np.float64)
    vals = sh_basis(dirs) @ c.T
    if clamp01:
        vals = np.clip(vals, 0.0, 1.0)
    return vals


def constant_coeffs(value: float) -> np.ndarray:
    """Coefficients of the constant function ``value`` (c00 = 2*sqrt(pi)*value)."""
    c = np.zeros(NUM_COEFFS)
    c[0] = value * 2.0 * np.sqrt(np.pi)
    return c
