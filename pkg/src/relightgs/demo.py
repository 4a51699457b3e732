"""Procedural demo assets: two touching spheres of surface splats, a sky map
and a camera framing them. Everything is deterministic."""

import numpy as np

from .envlight import PrefilterConfig
from .scene import Camera, GaussianScene
from .sh import constant_coeffs
from .shading import fibonacci_sphere

SPHERE_RADIUS = 1.0
SPHERE_GAP = 0.04
POINTS_PER_SPHERE = 2500
TANGENT_SIGMA = 0.05
NORMAL_SIGMA = 0.005


def quat_from_z(n) -> np.ndarray:
    """(w, x, y, z) quaternions rotating +Z onto unit vectors ``n``."""
    n = np.atleast_2d(np.asarray(n, dtype=np.float64))
    q = np.empty((len(n), 4))
    q[:, 0] = 1.0 + n[:, 2]
    q[:, 1] = -n[:, 1]
    q[:, 2] = n[:, 0]
    q[:, 3] = 0.0
    flip = q[:, 0] < 1e-9
    q[flip] = [0.0, 1.0, 0.0, 0.0]
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def sphere_points(center, radius, count, albedo, roughness=0.5, opacity=0.95) -> GaussianScene:
    normals = fibonacci_sphere(count)
    n = len(normals)
    return GaussianScene(
        positions=np.asarray(center) + radius * normals,
        rotations=quat_from_z(normals),
        scales=np.tile([TANGENT_SIGMA * radius, TANGENT_SIGMA * radius, NORMAL_SIGMA * radius], (n, 1)),
        opacities=np.full(n, opacity),
        normals=normals,
        albedos=np.tile(albedo, (n, 1)),
        roughness=np.full(n, roughness),
        visibility=np.tile(constant_coeffs(1.0), (n, 1)),
        indirect=np.zeros((n, 3, 16)),
    )


def concat(*scenes: GaussianScene) -> GaussianScene:
    fields = ("positions", "rotations", "scales", "opacities", "normals", "albedos", "roughness", "visibility", "indirect")
    return GaussianScene(**{f: np.concatenate([getattr(s, f) for s in scenes]) for f in fields})


def two_spheres(points_per_sphere: int = POINTS_PER_SPHERE) -> GaussianScene:
    """Two unit spheres side by side along X, nearly touching at the origin."""
    off = SPHERE_RADIUS + SPHERE_GAP / 2
    return concat(
        sphere_points([-off, 0.0, 0.0], SPHERE_RADIUS, points_per_sphere, [0.8, 0.35, 0.3]),
        sphere_points([off, 0.0, 0.0], SPHERE_RADIUS, points_per_sphere, [0.3, 0.5, 0.8], roughness=0.3),
    )


def contact_and_top_masks(scene: GaussianScene, cos_angle: float = 0.85):
    """Points facing the other sphere vs points facing straight up (+Y)."""
    towards_other = -np.sign(scene.positions[:, 0]) * scene.normals[:, 0]
    contact = towards_other > cos_angle
    top = scene.normals[:, 1] > cos_angle
    return contact, top


def sky_envmap(width: int = 64, height: int = 32) -> np.ndarray:
    """Blue-white sky, warm sun above +X+Z, dim ground; linear HDR radiance."""
    from .envlight import pixel_to_dir

    u, v = np.meshgrid(np.arange(width), np.arange(height))
    d = pixel_to_dir(u, v, width, height)
    up = d[..., 1]
    sky = np.where(up[..., None] > 0, [0.45, 0.6, 0.9] + 0.4 * (1 - up[..., None]), [0.15, 0.12, 0.1])
    sun_dir = np.array([0.4, 0.8, 0.45])
    sun_dir /= np.linalg.norm(sun_dir)
    sun = np.maximum(d @ sun_dir, 0.0) ** 64
    return (sky + 8.0 * sun[..., None] * np.array([1.0, 0.9, 0.75])).astype(np.float64)


def demo_camera(width: int = 512, height: int = 512) -> Camera:
    f = 600.0 * width / 512
    return Camera.look_at([0.0, 1.5, 6.0], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0], f, f, width, height)


def demo_scaling(cfg: PrefilterConfig = PrefilterConfig()) -> float:
    """Direct-light scale that undoes the unnormalized kernel's 2*pi/(l+1) gain."""
    return (cfg.exponent + 1.0) / (2.0 * np.pi)
