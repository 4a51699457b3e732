"""Equirectangular environment maps: direction mapping, cosine-power
prefiltering, direct-light scaling and incident-radiance composition.

Maps are float arrays of shape (H, W, 3). Texel (u, v) has polar angle
theta = pi*(v+0.5)/H measured from +Y and azimuth phi = 2*pi*(u+0.5)/W;
its direction is (sin(theta)cos(phi), cos(theta), sin(theta)sin(phi)).
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._backend import njit, pick
from .sh import equirect_grid

DEFAULT_EXPONENT = 16.0
DEFAULT_OUT_SIZE = (64, 32)


@dataclass(frozen=True)
class PrefilterConfig:
    """Cosine-power prefilter settings.

    ``supersample`` splits each input texel into s x s sub-texels when
    accumulating the kernel; ``None`` picks the smallest s that keeps the
    sub-texel spacing below half the lobe width (1 for high-res inputs).

    ``method`` is ``"direct"`` (texel-by-texel sum), ``"fft"`` (per-row
    circular correlation; needs the sampled input width to be a multiple of
    the output width) or ``"auto"`` (fft when possible).
    """

    exponent: float = DEFAULT_EXPONENT
    width: int = DEFAULT_OUT_SIZE[0]
    height: int = DEFAULT_OUT_SIZE[1]
    supersample: int | None = None
    method: str = "auto"

    def __post_init__(self):
        if not self.exponent >= 1:
            raise ValueError("exponent must be >= 1")
        if self.width < 4 or self.height < 2:
            raise ValueError("output must be at least 4 x 2")
        if self.supersample is not None and self.supersample < 1:
            raise ValueError("supersample must be >= 1")
        if self.method not in ("auto", "direct", "fft"):
            raise ValueError(f"unknown prefilter method {self.method!r}")

    def resolve_supersample(self, in_height: int) -> int:
        if self.supersample is not None:
            return self.supersample
        texel = math.pi / in_height
        lobe = 1.0 / math.sqrt(self.exponent)
        return max(1, math.ceil(texel / (0.5 * lobe)))


def check_envmap(env) -> np.ndarray:
    env = np.asarray(env, dtype=np.float64)
    if env.ndim != 3 or env.shape[2] != 3:
        raise ValueError(f"environment map must be (H, W, 3), got {env.shape}")
    if not np.isfinite(env).all():
        raise ValueError("environment map has non-finite values")
    if (env < 0).any():
        raise ValueError("environment map has negative radiance")
    h, w, _ = env.shape
    if w != 2 * h:
        warnings.warn(f"environment map is {w}x{h}; lat-long maps are normally 2:1", stacklevel=2)
    return env


def pixel_to_dir(u, v, width: int, height: int) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if np.any((u < 0) | (u >= width) | (v < 0) | (v >= height)):
        raise ValueError("pixel outside the map")
    theta = np.pi * (v + 0.5) / height
    phi = 2.0 * np.pi * (u + 0.5) / width
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), np.cos(theta), st * np.sin(phi)], axis=-1)


def dir_to_angles(d):
    d = np.asarray(d, dtype=np.float64)
    theta = np.arccos(np.clip(d[..., 1], -1.0, 1.0))
    phi = np.mod(np.arctan2(d[..., 2], d[..., 0]), 2.0 * np.pi)
    return theta, phi


def dir_to_pixel(d, width: int, height: int):
    """Texel containing direction ``d``; inverse of :func:`pixel_to_dir` at centers."""
    theta, phi = dir_to_angles(d)
    u = np.floor(phi * width / (2.0 * np.pi)).astype(np.int64) % width
    v = np.clip(np.floor(theta * height / np.pi).astype(np.int64), 0, height - 1)
    return u, v


def sample_bilinear(env, dirs) -> np.ndarray:
    """Bilinear lookup; wraps in azimuth, clamps at the poles."""
    env = np.asarray(env, dtype=np.float64)
    h, w = env.shape[:2]
    theta, phi = dir_to_angles(dirs)
    x = phi * w / (2.0 * np.pi) - 0.5
    y = np.clip(theta * h / np.pi - 0.5, 0.0, h - 1.0)
    x0 = np.floor(x)
    y0 = np.minimum(np.floor(y), h - 2) if h > 1 else np.zeros_like(y)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]
    x0 = x0.astype(np.int64) % w
    x1 = (x0 + 1) % w
    y0 = y0.astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    top = env[y0, x0] * (1.0 - fx) + env[y0, x1] * fx
    bot = env[y1, x0] * (1.0 - fx) + env[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


@njit
def sample_bilinear_nb(env, dx, dy, dz, out):
    """Scalar twin of :func:`sample_bilinear`; writes RGB into ``out``."""
    h = env.shape[0]
    w = env.shape[1]
    cy = min(1.0, max(-1.0, dy))
    theta = math.acos(cy)
    phi = math.atan2(dz, dx)
    two_pi = 2.0 * math.pi
    phi = phi - two_pi * math.floor(phi / two_pi)
    x = phi * w / two_pi - 0.5
    y = theta * h / math.pi - 0.5
    y = min(max(y, 0.0), h - 1.0)
    x0f = math.floor(x)
    y0f = math.floor(y)
    if h > 1:
        y0f = min(y0f, h - 2.0)
    else:
        y0f = 0.0
    fx = x - x0f
    fy = y - y0f
    x0 = int(x0f) % w
    x1 = (x0 + 1) % w
    y0 = int(y0f)
    y1 = min(y0 + 1, h - 1)
    for c in range(3):
        top = env[y0, x0, c] * (1.0 - fx) + env[y0, x1, c] * fx
        bot = env[y1, x0, c] * (1.0 - fx) + env[y1, x1, c] * fx
        out[c] = top * (1.0 - fy) + bot * fy


def _source_samples(env, ss):
    """Sub-texel directions, solid angles and radiance (nearest texel)."""
    h, w, _ = env.shape
    dirs, weights = equirect_grid(w * ss, h * ss)
    rad = np.repeat(np.repeat(env, ss, axis=0), ss, axis=1)
    return dirs.reshape(-1, 3), weights.reshape(-1), rad.reshape(-1, 3)


def _prefilter_numpy(out_dirs, src_dirs, src_w, src_rad, exponent, chunk=4096):
    weighted = src_rad * src_w[:, None]
    out = np.zeros((len(out_dirs), 3))
    for start in range(0, len(src_dirs), chunk):
        sl = slice(start, start + chunk)
        k = np.maximum(out_dirs @ src_dirs[sl].T, 0.0) ** exponent
        out += k @ weighted[sl]
    return out


@njit
def _prefilter_nb(out_dirs, src_dirs, src_w, src_rad, exponent):
    n_out = out_dirs.shape[0]
    n_src = src_dirs.shape[0]
    out = np.zeros((n_out, 3))
    int_exp = exponent == math.floor(exponent) and exponent <= 64.0
    ie = int(exponent)
    for o in range(n_out):
        ox = out_dirs[o, 0]
        oy = out_dirs[o, 1]
        oz = out_dirs[o, 2]
        r = 0.0
        g = 0.0
        b = 0.0
        for s in range(n_src):
            c = ox * src_dirs[s, 0] + oy * src_dirs[s, 1] + oz * src_dirs[s, 2]
            if c <= 0.0:
                continue
            if int_exp:
                k = 1.0
                base = c
                e = ie
                while e > 0:
                    if e & 1:
                        k *= base
                    base *= base
                    e >>= 1
            else:
                k = c ** exponent
            k *= src_w[s]
            r += k * src_rad[s, 0]
            g += k * src_rad[s, 1]
            b += k * src_rad[s, 2]
        out[o, 0] = r
        out[o, 1] = g
        out[o, 2] = b
    return out


def prefilter_with(kernel, env, cfg: PrefilterConfig = PrefilterConfig()) -> np.ndarray:
    env = check_envmap(env)
    ss = cfg.resolve_supersample(env.shape[0])
    out_dirs, _ = equirect_grid(cfg.width, cfg.height)
    src_dirs, src_w, src_rad = _source_samples(env, ss)
    out = kernel(out_dirs.reshape(-1, 3), src_dirs, src_w, src_rad, float(cfg.exponent))
    return out.reshape(cfg.height, cfg.width, 3)


def prefilter_numpy(env, cfg: PrefilterConfig = PrefilterConfig()) -> np.ndarray:
    return prefilter_with(_prefilter_numpy, env, cfg)


def prefilter_numba(env, cfg: PrefilterConfig = PrefilterConfig()) -> np.ndarray:
    return prefilter_with(_prefilter_nb, env, cfg)


def prefilter_fft(env, cfg: PrefilterConfig = PrefilterConfig()) -> np.ndarray:
    """Same sum as the direct kernels, evaluated row pair by row pair.

    For one output row and one source row the kernel depends only on the
    azimuth difference, so the sum over a source row is a circular
    cross-correlation, read off at every ``ratio``-th lag.
    """
    env = check_envmap(env)
    ss = cfg.resolve_supersample(env.shape[0])
    hs, ws = env.shape[0] * ss, env.shape[1] * ss
    if ws % cfg.width:
        raise ValueError(f"fft prefilter needs input width {ws} to be a multiple of {cfg.width}")
    ratio = ws // cfg.width
    _, src_w, src_rad = _source_samples(env, ss)
    weighted = (src_rad * src_w[:, None]).reshape(hs, ws, 3)
    spec = np.fft.rfft(weighted, axis=1)  # (hs, F, 3)
    th_s = np.pi * (np.arange(hs) + 0.5) / hs
    th_o = np.pi * (np.arange(cfg.height) + 0.5) / cfg.height
    # lag d pairs output column u with source column u*ratio + d
    dphi = 2.0 * np.pi * (0.5 * ratio - 0.5 - np.arange(ws)) / ws
    cos_d = np.cos(dphi)
    out = np.empty((cfg.height, cfg.width, 3))
    for i, t in enumerate(th_o):
        c = np.cos(t) * np.cos(th_s)[:, None] + np.sin(t) * np.sin(th_s)[:, None] * cos_d[None, :]
        k = np.maximum(c, 0.0) ** cfg.exponent
        kf = np.fft.rfft(k, axis=1)  # (hs, F)
        acc = np.einsum("rfc,rf->fc", spec, np.conj(kf))
        out[i] = np.fft.irfft(acc, n=ws, axis=0)[::ratio]
    # cancellation noise can leave tiny negatives where the true sum is ~0
    return np.maximum(out, 0.0)


def _fft_ok(env, cfg):
    return (env.shape[1] * cfg.resolve_supersample(env.shape[0])) % cfg.width == 0


def prefilter(env, cfg: PrefilterConfig = PrefilterConfig()) -> np.ndarray:
    """Convolve ``env`` with the unnormalized clamped kernel max(0, w'.w)^l.

    Each output texel is sum_src max(0, w'.w)^l L(w) dw over the whole input
    sphere. No normalization: a constant unit map yields 2*pi/(l+1).
    """
    env = np.asarray(env, dtype=np.float64)
    if cfg.method == "fft" or (cfg.method == "auto" and env.ndim == 3 and _fft_ok(env, cfg)):
        return prefilter_fft(env, cfg)
    return pick(prefilter_numba, prefilter_numpy)(env, cfg)


def average_scaling(scale_map, mask=None) -> float:
    """Mean of a per-pixel direct-light scaling map over its foreground."""
    s = np.asarray(scale_map, dtype=np.float64)
    if s.ndim == 3:
        s = s[..., 0]
    m = np.ones(s.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool).reshape(s.shape)
    if not m.any():
        raise ValueError("empty foreground: cannot average scaling map")
    return float(s[m].mean())


def compose_incident(visibility, s_d, direct, indirect):
    """Blend scaled direct light and indirect light by visibility."""
    v = np.asarray(visibility, dtype=np.float64)
    if np.any((v < 0) | (v > 1)):
        raise ValueError("visibility must lie in [0, 1]")
    v = v[..., None] if v.ndim else v
    return v * (s_d * np.asarray(direct)) + (1.0 - v) * np.asarray(indirect)
