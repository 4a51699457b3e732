"""Per-Gaussian physically based shading and geometric light-transport bakers.

Outgoing color is the Monte-Carlo estimate (pi/N) * sum_i L(w_i) f(w_i, w_o)
with cosine-weighted w_i, so the cosine and the pdf cancel. Incident light
blends scaled prefiltered environment radiance and SH indirect light by the
SH visibility; see :func:`relightgs.envlight.compose_incident`.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import raycast
from ._backend import njit, pick
from .brdf import specular_nb, specular_term
from .envlight import sample_bilinear, sample_bilinear_nb
from .scene import GaussianPoint, GaussianScene
from .sh import NUM_COEFFS, sh_basis, sh_basis_nb

AO_DIRECTIONS = 256
SELF_OFFSET = 1e-3
# SH reconstruction of v == 1 lands one ulp short of 1; snap so the blend endpoints are exact
VIS_SNAP = 1e-12


@dataclass(frozen=True)
class ShadingConfig:
    sample_count: int = 40
    seed: int = 0
    shadow_mode: str = "soft"  # soft | hard | none
    hard_threshold: float = 0.5
    diffuse_only: bool = False
    conventional_specular: bool = False

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if self.shadow_mode not in ("soft", "hard", "none"):
            raise ValueError(f"unknown shadow mode {self.shadow_mode!r}")


_SHADOW_CODES = {"soft": 0, "hard": 1, "none": 2}


# -- sampling ------------------------------------------------------------------


def radical_inverse(i):
    """Base-2 van der Corput sequence."""
    i = np.asarray(i, dtype=np.uint64)
    bits = np.zeros(i.shape, dtype=np.float64)
    scale = 0.5
    x = i.copy()
    while np.any(x):
        bits += (x & np.uint64(1)).astype(np.float64) * scale
        x >>= np.uint64(1)
        scale *= 0.5
    return bits


def hammersley(count: int) -> np.ndarray:
    i = np.arange(count)
    return np.stack([i / count, radical_inverse(i)], axis=-1)


def sample_offsets(seed: int, count: int = 1) -> np.ndarray:
    """Cranley-Patterson rotations, one (u1, u2) pair per shaded point."""
    return np.random.default_rng(seed).random((count, 2))


def tangent_frame(n):
    """Orthonormal (t, b) completing unit normal(s) ``n`` to a right-handed frame."""
    n = np.asarray(n, dtype=np.float64)
    sign = np.where(n[..., 2] >= 0.0, 1.0, -1.0)
    a = -1.0 / (sign + n[..., 2])
    b = n[..., 0] * n[..., 1] * a
    t = np.stack([1.0 + sign * n[..., 0] ** 2 * a, sign * b, -sign * n[..., 0]], axis=-1)
    bt = np.stack([b, sign + n[..., 1] ** 2 * a, -n[..., 1]], axis=-1)
    return t, bt


def cosine_local(points):
    """Map unit-square points to cosine-weighted local directions (z up)."""
    u1, u2 = points[..., 0], points[..., 1]
    r = np.sqrt(u1)
    phi = 2.0 * np.pi * u2
    z = np.sqrt(1.0 - u1)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


def _local_to_world(local, n):
    t, b = tangent_frame(n)
    return local[..., 0:1] * t + local[..., 1:2] * b + local[..., 2:3] * n


def sample_hemisphere(n, count: int, seed: int = 0, offset=None):
    """Cosine-weighted directions about ``n`` from a rotated Hammersley set.

    Returns ``(dirs (count, 3), pdf (count,))`` with pdf = (dir . n) / pi.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    n = np.asarray(n, dtype=np.float64)
    rot = sample_offsets(seed)[0] if offset is None else np.asarray(offset)
    pts = np.mod(hammersley(count) + rot, 1.0)
    dirs = _local_to_world(cosine_local(pts), n)
    pdf = dirs @ n / np.pi
    return dirs, pdf


# -- shading kernels -----------------------------------------------------------


def _shade_numpy(pos, nrm, alb, rough, vis, ind, eye, env, s_d, offsets, count, shadow, thr, diffuse_only, conventional):
    g = len(pos)
    pbr = np.zeros((g, 3))
    direct = np.zeros((g, 3))
    indirect = np.zeros((g, 3))
    if g == 0:
        return pbr, direct, indirect
    base = hammersley(count)
    chunk = max(1, 65536 // count)
    for s in range(0, g, chunk):
        sl = slice(s, s + chunk)
        n = nrm[sl]
        pts = np.mod(base[None, :, :] + offsets[sl, None, :], 1.0)
        local = cosine_local(pts)
        t, b = tangent_frame(n)
        wi = local[..., 0:1] * t[:, None] + local[..., 1:2] * b[:, None] + local[..., 2:3] * n[:, None]
        Y = sh_basis(wi, check=False)
        V = np.clip(np.einsum("gsk,gk->gs", Y, vis[sl]), 0.0, 1.0)
        V[V >= 1.0 - VIS_SNAP] = 1.0
        V[V <= VIS_SNAP] = 0.0
        if shadow == 1:
            V = np.where(V >= thr, 1.0, 0.0)
        elif shadow == 2:
            V = np.ones_like(V)
        Ld = s_d * sample_bilinear(env, wi)
        Li = np.maximum(np.einsum("gsk,gck->gsc", Y, ind[sl]), 0.0)
        L = V[..., None] * Ld + (1.0 - V[..., None]) * Li
        f = np.broadcast_to(alb[sl, None, :] / np.pi, L.shape)
        if not diffuse_only:
            wo = eye - pos[sl]
            ol = np.linalg.norm(wo, axis=-1, keepdims=True)
            wo = wo / np.where(ol > 0.0, ol, 1.0)
            front = (np.einsum("gc,gc->g", wo, n) > 0.0) & (ol[:, 0] > 0.0)
            spec = np.zeros(wi.shape[:2])
            if front.any():
                spec[front] = specular_term(wi[front], wo[front, None, :], n[front, None, :], rough[sl][front, None], conventional)
            f = f + spec[..., None]
        pbr[sl] = np.pi / count * np.sum(L * f, axis=1)
        direct[sl] = np.sum(V[..., None] * Ld, axis=1) / count
        indirect[sl] = np.sum((1.0 - V[..., None]) * Li, axis=1) / count
    return pbr, direct, indirect


@njit
def _shade_nb(pos, nrm, alb, rough, vis, ind, eye, env, s_d, offsets, count, shadow, thr, diffuse_only, conventional):
    g = pos.shape[0]
    pbr = np.zeros((g, 3))
    direct = np.zeros((g, 3))
    indirect = np.zeros((g, 3))
    Y = np.empty(16)
    rgb = np.empty(3)
    li = np.empty(3)
    for p in range(g):
        nx = nrm[p, 0]
        ny = nrm[p, 1]
        nz = nrm[p, 2]
        sign = 1.0 if nz >= 0.0 else -1.0
        a = -1.0 / (sign + nz)
        b = nx * ny * a
        tx = 1.0 + sign * nx * nx * a
        ty = sign * b
        tz = -sign * nx
        bx = b
        by = sign + ny * ny * a
        bz = -ny
        ox = eye[0] - pos[p, 0]
        oy = eye[1] - pos[p, 1]
        oz = eye[2] - pos[p, 2]
        ol = math.sqrt(ox * ox + oy * oy + oz * oz)
        front = False
        if ol > 0.0:
            ox /= ol
            oy /= ol
            oz /= ol
            front = ox * nx + oy * ny + oz * nz > 0.0
        acc0 = 0.0
        acc1 = 0.0
        acc2 = 0.0
        d0 = 0.0
        d1 = 0.0
        d2 = 0.0
        i0 = 0.0
        i1 = 0.0
        i2 = 0.0
        for s in range(count):
            # Hammersley point, rotated
            u1 = s / count + offsets[p, 0]
            u1 -= math.floor(u1)
            bits = 0.0
            scale = 0.5
            k = s
            while k > 0:
                if k & 1:
                    bits += scale
                k >>= 1
                scale *= 0.5
            u2 = bits + offsets[p, 1]
            u2 -= math.floor(u2)
            r = math.sqrt(u1)
            phi = 2.0 * math.pi * u2
            lx = r * math.cos(phi)
            ly = r * math.sin(phi)
            lz = math.sqrt(1.0 - u1)
            wx = lx * tx + ly * bx + lz * nx
            wy = lx * ty + ly * by + lz * ny
            wz = lx * tz + ly * bz + lz * nz
            sh_basis_nb(wx, wy, wz, Y)
            v = 0.0
            for c in range(16):
                v += Y[c] * vis[p, c]
            v = min(max(v, 0.0), 1.0)
            if v >= 1.0 - VIS_SNAP:
                v = 1.0
            elif v <= VIS_SNAP:
                v = 0.0
            if shadow == 1:
                v = 1.0 if v >= thr else 0.0
            elif shadow == 2:
                v = 1.0
            sample_bilinear_nb(env, wx, wy, wz, rgb)
            for ch in range(3):
                acc = 0.0
                for c in range(16):
                    acc += Y[c] * ind[p, ch, c]
                li[ch] = max(acc, 0.0)
            fs = 0.0
            if not diffuse_only and front:
                fs = specular_nb(wx, wy, wz, ox, oy, oz, nx, ny, nz, rough[p], conventional)
            L0 = v * (s_d * rgb[0]) + (1.0 - v) * li[0]
            L1 = v * (s_d * rgb[1]) + (1.0 - v) * li[1]
            L2 = v * (s_d * rgb[2]) + (1.0 - v) * li[2]
            acc0 += L0 * (alb[p, 0] / math.pi + fs)
            acc1 += L1 * (alb[p, 1] / math.pi + fs)
            acc2 += L2 * (alb[p, 2] / math.pi + fs)
            d0 += v * (s_d * rgb[0])
            d1 += v * (s_d * rgb[1])
            d2 += v * (s_d * rgb[2])
            i0 += (1.0 - v) * li[0]
            i1 += (1.0 - v) * li[1]
            i2 += (1.0 - v) * li[2]
        w = math.pi / count
        pbr[p, 0] = acc0 * w
        pbr[p, 1] = acc1 * w
        pbr[p, 2] = acc2 * w
        direct[p, 0] = d0 / count
        direct[p, 1] = d1 / count
        direct[p, 2] = d2 / count
        indirect[p, 0] = i0 / count
        indirect[p, 1] = i1 / count
        indirect[p, 2] = i2 / count
    return pbr, direct, indirect


def _shade_args(scene: GaussianScene, env, s_d, eye, cfg: ShadingConfig, offsets=None):
    if offsets is None:
        offsets = sample_offsets(cfg.seed, len(scene))
    return (
        np.ascontiguousarray(scene.positions),
        np.ascontiguousarray(scene.normals),
        np.ascontiguousarray(scene.albedos),
        np.ascontiguousarray(scene.roughness),
        np.ascontiguousarray(scene.visibility),
        np.ascontiguousarray(scene.indirect),
        np.asarray(eye, dtype=np.float64).reshape(3),
        np.ascontiguousarray(env, dtype=np.float64),
        float(s_d),
        np.ascontiguousarray(offsets, dtype=np.float64),
        int(cfg.sample_count),
        _SHADOW_CODES[cfg.shadow_mode],
        float(cfg.hard_threshold),
        bool(cfg.diffuse_only),
        bool(cfg.conventional_specular),
    )


def shade_scene_numpy(scene, env, s_d, eye, cfg=ShadingConfig(), offsets=None):
    return _shade_numpy(*_shade_args(scene, env, s_d, eye, cfg, offsets))


def shade_scene_numba(scene, env, s_d, eye, cfg=ShadingConfig(), offsets=None):
    return _shade_nb(*_shade_args(scene, env, s_d, eye, cfg, offsets))


def shade_scene(scene: GaussianScene, env, s_d: float, eye, cfg: ShadingConfig = ShadingConfig(), offsets=None):
    """Shade every Gaussian as seen from ``eye`` under prefiltered map ``env``.

    Returns ``(pbr, direct, indirect)``, each (N, 3). ``direct`` and
    ``indirect`` are the cosine-weighted averages of the two incident-light
    terms, i.e. the shading of a white Lambertian surface split by source.
    Point i uses Cranley-Patterson rotation ``offsets[i]`` (default: drawn
    from ``cfg.seed``). Specular is skipped for points facing away from ``eye``.
    """
    return pick(shade_scene_numba, shade_scene_numpy)(scene, env, s_d, eye, cfg, offsets)


def _single_scene(g: GaussianPoint) -> GaussianScene:
    return GaussianScene(
        positions=g.position[None],
        rotations=g.rotation[None],
        scales=g.scale[None],
        opacities=[g.opacity],
        normals=g.normal[None],
        albedos=g.albedo[None],
        roughness=[g.roughness],
        visibility=g.visibility[None],
        indirect=np.asarray(g.indirect)[None],
    )


def shade_gaussian(g: GaussianPoint, env, s_d: float, eye, cfg: ShadingConfig = ShadingConfig()) -> np.ndarray:
    """RGB outgoing radiance of one Gaussian toward ``eye``."""
    pbr, _, _ = shade_scene(_single_scene(g), env, s_d, eye, cfg)
    return pbr[0]


# -- visibility, AO and indirect bakers ----------------------------------------


def fibonacci_sphere(count: int) -> np.ndarray:
    """Deterministic, near-uniform unit directions."""
    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    d = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def _ray_origins(scene, idx):
    eps = SELF_OFFSET * scene.scales[idx].max(axis=-1)
    return scene.positions[idx] + eps[..., None] * scene.normals[idx]


def bake_visibility_all(scene: GaussianScene, dir_count: int = 256, k_sigma: float = 1.0, indices=None):
    """Binary visibility of every (or selected) point projected to SH; (M, 16)."""
    if dir_count < 64:
        raise ValueError("dir_count must be >= 64")
    idx = np.arange(len(scene)) if indices is None else np.asarray(indices, dtype=np.int64)
    if np.any((idx < 0) | (idx >= len(scene))):
        raise IndexError("point index out of range")
    dirs = fibonacci_sphere(dir_count)
    occ = raycast.Occluders.from_scene(scene, k_sigma)
    origins = np.repeat(_ray_origins(scene, idx), dir_count, axis=0)
    all_dirs = np.tile(dirs, (len(idx), 1))
    exclude = np.repeat(idx, dir_count)
    hit, _ = raycast.cast_rays(origins, all_dirs, exclude, occ, any_hit=True)
    visible = (hit < 0).astype(np.float64).reshape(len(idx), dir_count)
    return visible @ sh_basis(dirs, check=False) * (4.0 * np.pi / dir_count)


def bake_visibility(scene: GaussianScene, idx: int, dir_count: int = 256, k_sigma: float = 1.0) -> np.ndarray:
    """SH visibility of point ``idx``: rays from p + eps*n against opaque cores.

    Occluders are the other points with opacity >= 0.5, as ellipsoids with
    semi-axes ``k_sigma * s``; eps = 1e-3 * max(s).
    """
    return bake_visibility_all(scene, dir_count, k_sigma, indices=[idx])[0]


def ambient_occlusion(vis, normal, count: int = AO_DIRECTIONS) -> np.ndarray:
    """Cosine-weighted hemisphere mean of clamped SH visibility about ``normal``.

    Accepts one point ((16,), (3,)) or a batch ((M, 16), (M, 3)).
    """
    vis = np.asarray(vis, dtype=np.float64)
    normal = np.asarray(normal, dtype=np.float64)
    single = vis.ndim == 1
    vis = np.atleast_2d(vis)
    normal = np.atleast_2d(normal)
    local = cosine_local(hammersley(count))
    out = np.empty(len(vis))
    chunk = max(1, 262144 // count)
    for s in range(0, len(vis), chunk):
        sl = slice(s, s + chunk)
        t, b = tangent_frame(normal[sl])
        wi = local[None, :, 0:1] * t[:, None] + local[None, :, 1:2] * b[:, None] + local[None, :, 2:3] * normal[sl, None]
        V = np.clip(np.einsum("gsk,gk->gs", sh_basis(wi, check=False), vis[sl]), 0.0, 1.0)
        out[sl] = V.mean(axis=1)
    return out[0] if single else out


def direct_shade_all(scene: GaussianScene, env, s_d: float, sample_count: int = 64, seed: int = 0) -> np.ndarray:
    """Direct light reaching each point through its own visibility; (N, 3)."""
    cfg = ShadingConfig(sample_count=sample_count, seed=seed, diffuse_only=True)
    _, direct, _ = shade_scene(scene, env, s_d, np.zeros(3), cfg)
    return direct


def bake_indirect_all(
    scene: GaussianScene,
    env,
    s_d: float = 1.0,
    dir_count: int = 256,
    k_sigma: float = 1.0,
    indices=None,
    shade_samples: int = 64,
):
    """One-bounce indirect light as RGB SH; (M, 3, 16).

    A ray that hits point j carries albedo_j * direct_j, where direct_j uses
    j's already-baked visibility. Misses carry nothing.
    """
    if dir_count < 64:
        raise ValueError("dir_count must be >= 64")
    idx = np.arange(len(scene)) if indices is None else np.asarray(indices, dtype=np.int64)
    if np.any((idx < 0) | (idx >= len(scene))):
        raise IndexError("point index out of range")
    bounce = scene.albedos * direct_shade_all(scene, env, s_d, shade_samples)
    dirs = fibonacci_sphere(dir_count)
    occ = raycast.Occluders.from_scene(scene, k_sigma)
    origins = np.repeat(_ray_origins(scene, idx), dir_count, axis=0)
    hit, _ = raycast.cast_rays(origins, np.tile(dirs, (len(idx), 1)), np.repeat(idx, dir_count), occ)
    rad = np.where((hit >= 0)[:, None], bounce[np.maximum(hit, 0)], 0.0).reshape(len(idx), dir_count, 3)
    Y = sh_basis(dirs, check=False) * (4.0 * np.pi / dir_count)
    return np.einsum("mdc,dk->mck", rad, Y)


def bake_indirect(scene, idx, env, s_d=1.0, dir_count=256, k_sigma=1.0) -> np.ndarray:
    return bake_indirect_all(scene, env, s_d, dir_count, k_sigma, indices=[idx])[0]


def with_visibility(scene: GaussianScene, vis) -> GaussianScene:
    out = scene.copy()
    out.visibility = np.asarray(vis, dtype=np.float64).reshape(len(scene), NUM_COEFFS)
    return out
